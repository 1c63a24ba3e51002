"""Line-of-sight wideband link evaluation.

Per-subcarrier SNR and Shannon-sum throughput for a beamformed OFDM-style
link whose channel is exactly the array steering vector. Transmit power
is split equally across subcarriers, so the per-subcarrier SNR reduces to
``tx_power * gain / (noise_psd * bandwidth)`` regardless of the
subcarrier count. No path loss model: absolute rates are model-relative
and the interesting observable is the improvement of one beamforming
scheme over another.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .design import DesignError, DesignOutcome, DesignSpec, design_beamformer
from .sdp import SolverSettings
from .ula import (ArrayConfig, BandSpec, SteeringVector, fine_beam_weights,
                  steering_matrix, steering_vector)


def dbm_per_hz_to_w(dbm: float) -> float:
    """Convert a power spectral density from dBm/Hz to W/Hz."""
    return 1e-3 * 10.0 ** (dbm / 10.0)


DEFAULT_TX_POWER = 2e-4
"""Total transmit power in watts (0.2 mW)."""

DEFAULT_NOISE_PSD = dbm_per_hz_to_w(-74.0)
"""Background noise density in W/Hz (-74 dBm/Hz)."""


@dataclass(frozen=True)
class LinkParams:
    """Link-level parameters for the throughput evaluation."""

    band: BandSpec
    theta0: float
    tx_power: float = DEFAULT_TX_POWER
    noise_psd: float = DEFAULT_NOISE_PSD
    n_subcarriers: int = 256

    def __post_init__(self):
        if self.tx_power <= 0:
            raise ValueError("tx_power must be positive")
        if self.noise_psd <= 0:
            raise ValueError("noise_psd must be positive")
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be at least 1")
        if not -1.0 <= self.theta0 <= 1.0:
            raise ValueError("theta0 must lie in [-1, 1]")


@dataclass(frozen=True)
class FineBeam:
    """Marker scheme: the classical carrier-matched beam toward ``theta0``."""

    array: ArrayConfig
    theta0: float


@dataclass(frozen=True)
class ThroughputReport:
    """Per-subcarrier SNRs and their Shannon-sum rate."""

    per_subcarrier_snr: np.ndarray
    total_bps: float
    scheme_label: str

    def __post_init__(self):
        snr = np.asarray(self.per_subcarrier_snr, dtype=float)
        snr.setflags(write=False)
        object.__setattr__(self, "per_subcarrier_snr", snr)


def los_channel(cfg: ArrayConfig, freq: float, theta0: float) -> SteeringVector:
    """Line-of-sight channel toward ``theta0`` at ``freq``.

    The channel is exactly the steering vector; this alias exists so link
    code says what it means.
    """
    return steering_vector(cfg, freq, theta0)


def subcarrier_frequencies(band: BandSpec, n: int) -> np.ndarray:
    """Centers of ``n`` equal subchannels spanning the signal band."""
    return band.main_lo + (np.arange(n) + 0.5) * band.bandwidth / n


def _scheme_gains(scheme, freqs: np.ndarray, theta0: float):
    if isinstance(scheme, FineBeam):
        a = steering_matrix(scheme.array, freqs, theta0)
        w = fine_beam_weights(scheme.array, scheme.theta0)
        return np.abs(a @ w.entries.conj()) ** 2, "fine_beam"
    if isinstance(scheme, DesignOutcome):
        a = steering_matrix(scheme.spec.array, freqs, theta0)
        gains = np.zeros(freqs.size)
        for w in scheme.weights:
            gains += np.abs(a @ w.entries.conj()) ** 2
        return gains / len(scheme.weights), scheme.mode
    raise TypeError(f"unsupported scheme type {type(scheme).__name__}")


def throughput(scheme, params: LinkParams) -> ThroughputReport:
    """Shannon-sum throughput of a beamforming scheme over the signal band.

    ``scheme`` is either a :class:`FineBeam` or a
    :class:`~beamsquint.design.DesignOutcome`; a diversity outcome is
    evaluated at its Alamouti-combined per-symbol gain (the code is rate
    one, so no rate penalty applies).
    """
    freqs = subcarrier_frequencies(params.band, params.n_subcarriers)
    gains, label = _scheme_gains(scheme, freqs, params.theta0)
    snr = params.tx_power * gains / (params.noise_psd * params.band.bandwidth)
    total = float(np.sum(params.band.bandwidth / params.n_subcarriers
                         * np.log2(1.0 + snr)))
    return ThroughputReport(snr, total, label)


@dataclass
class SweepRow:
    """One beam-focus point of a throughput sweep."""

    theta0: float
    fine_bps: float
    proposed_bps: float
    improvement_pct: float
    mode: str | None = None
    error: str | None = None


def sweep_focus(theta_grid, spec_template: DesignSpec, params: LinkParams,
                settings: SolverSettings | None = None) -> list[SweepRow]:
    """Design and evaluate at every beam focus in ``theta_grid``.

    Each point runs the full design pipeline and compares its throughput
    against the carrier-matched beam at the same focus. Failed designs are
    recorded in their row (fields NaN) and the sweep continues. The grid
    must stay inside (0, 1): patterns are symmetric in the sign of the
    focus, so the negative half adds nothing.
    """
    thetas = [float(t) for t in theta_grid]
    for t in thetas:
        if not 0.0 < t < 1.0:
            raise ValueError(f"beam focus grid must lie inside (0, 1), got {t}")
    rows = []
    for theta0 in thetas:
        spec = replace(spec_template, beam_focus=theta0)
        row_params = replace(params, theta0=theta0)
        fine = throughput(FineBeam(spec.array, theta0), row_params)
        try:
            outcome = design_beamformer(spec, settings)
        except DesignError as exc:
            rows.append(SweepRow(theta0, float("nan"), float("nan"),
                                 float("nan"), None, str(exc)))
            continue
        prop = throughput(outcome, row_params)
        improvement = 100.0 * (prop.total_bps - fine.total_bps) / fine.total_bps
        rows.append(SweepRow(theta0, fine.total_bps, prop.total_bps,
                             improvement, outcome.mode))
    return rows
