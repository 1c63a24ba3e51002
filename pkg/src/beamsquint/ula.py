"""Uniform linear array mathematics.

Steering vectors, constant-modulus phase-shifter weights, beam patterns,
and the closed-form Dirichlet-kernel profile that describes how a
carrier-matched beam loses gain away from the carrier frequency (beam
squint).

Conventions: elements are indexed m = 0..M-1, the virtual angle
theta = sin(angle-of-departure) lives in [-1, 1], and gains are linear
unless a name says dB.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8
"""Vacuum speed of light in m/s."""

_MODULUS_TOL = 1e-12


def to_db(gain):
    """Convert linear gain (scalar or array) to dB. Zero maps to -inf."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(gain)


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array geometry and the carrier it is driven at.

    Parameters
    ----------
    num_elements : int
        Number of radiating elements M (at least 2).
    element_spacing : float
        Distance between adjacent elements in meters.
    carrier_freq : float
        Carrier frequency in Hz.
    wave_speed : float
        Propagation speed in m/s; defaults to the vacuum speed of light.
    """

    num_elements: int
    element_spacing: float
    carrier_freq: float
    wave_speed: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.num_elements < 2:
            raise ValueError(f"need at least 2 elements, got {self.num_elements}")
        if self.element_spacing <= 0:
            raise ValueError("element_spacing must be positive")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        if self.wave_speed <= 0:
            raise ValueError("wave_speed must be positive")

    @classmethod
    def half_wavelength(cls, num_elements, carrier_freq, wave_speed=SPEED_OF_LIGHT):
        """Array with the standard half-carrier-wavelength element pitch."""
        spacing = 0.5 * wave_speed / carrier_freq
        return cls(num_elements, spacing, carrier_freq, wave_speed)

    @property
    def carrier_wavelength(self) -> float:
        return self.wave_speed / self.carrier_freq


@dataclass(frozen=True)
class BandSpec:
    """Signal band plus the wider frequency range a design must control.

    The signal occupies ``[carrier_freq - bandwidth/2, carrier_freq +
    bandwidth/2]`` (the main-lobe range); the design range extends to
    ``carrier_freq +/- half_extent`` and everything outside the signal
    band counts as side-lobe leakage.
    """

    carrier_freq: float
    bandwidth: float
    half_extent: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if not self.bandwidth < 2.0 * self.half_extent:
            raise ValueError("bandwidth must be smaller than twice the half extent")
        if self.carrier_freq - self.half_extent <= 0:
            raise ValueError("design range must stay at positive frequencies")

    @classmethod
    def with_default_extent(cls, carrier_freq, bandwidth, extent_ratio=2.5):
        """Band whose design range spans ``extent_ratio * bandwidth`` per side."""
        return cls(carrier_freq, bandwidth, extent_ratio * bandwidth)

    @property
    def main_lo(self) -> float:
        return self.carrier_freq - 0.5 * self.bandwidth

    @property
    def main_hi(self) -> float:
        return self.carrier_freq + 0.5 * self.bandwidth

    @property
    def span_lo(self) -> float:
        return self.carrier_freq - self.half_extent

    @property
    def span_hi(self) -> float:
        return self.carrier_freq + self.half_extent

    @property
    def side_width(self) -> float:
        """Total width of the two side-lobe intervals."""
        return 2.0 * self.half_extent - self.bandwidth


@dataclass(frozen=True)
class SteeringVector:
    """Array response at one (frequency, virtual angle) point.

    Every entry is a pure phase (modulus 1) and the first entry is 1.
    """

    entries: np.ndarray
    freq: float
    virtual_angle: float

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 1 or entries.size < 2:
            raise ValueError("steering vector must be a 1-D vector of length >= 2")
        if np.max(np.abs(np.abs(entries) - 1.0)) > _MODULUS_TOL:
            raise ValueError("steering vector entries must have unit modulus")
        if abs(entries[0] - 1.0) > _MODULUS_TOL:
            raise ValueError("steering vector must start at 1+0j")

    def __len__(self) -> int:
        return self.entries.size


@dataclass(frozen=True)
class WeightVector:
    """Constant-modulus beamforming weights: every entry has modulus 1/sqrt(M).

    This is what a bank of phase shifters can realize; only the phases are
    free.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 1 or entries.size < 2:
            raise ValueError("weight vector must be a 1-D vector of length >= 2")
        target = 1.0 / np.sqrt(entries.size)
        if np.max(np.abs(np.abs(entries) - target)) > _MODULUS_TOL:
            raise ValueError("weight entries must all have modulus 1/sqrt(M)")

    def __len__(self) -> int:
        return self.entries.size

    @property
    def phases(self) -> np.ndarray:
        """Per-element phase shifts in radians."""
        return np.angle(self.entries)


def _check_theta(theta: float):
    if not -1.0 <= theta <= 1.0:
        raise ValueError(f"virtual angle must lie in [-1, 1], got {theta}")


def steering_vector(cfg: ArrayConfig, freq: float, theta: float) -> SteeringVector:
    """Array response at frequency ``freq`` toward virtual angle ``theta``.

    Entry m is ``exp(j 2 pi (freq / c) m d theta)``.
    """
    _check_theta(theta)
    if freq <= 0:
        raise ValueError(f"frequency must be positive, got {freq}")
    m = np.arange(cfg.num_elements)
    phases = 2.0 * np.pi * (freq / cfg.wave_speed) * cfg.element_spacing * theta * m
    return SteeringVector(np.exp(1j * phases), freq, theta)


def steering_matrix(cfg: ArrayConfig, freqs, theta: float) -> np.ndarray:
    """Stack of steering vectors, one row per frequency in ``freqs``."""
    _check_theta(theta)
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    if np.any(freqs <= 0):
        raise ValueError("frequencies must be positive")
    m = np.arange(cfg.num_elements)
    phases = (2.0 * np.pi * cfg.element_spacing * theta / cfg.wave_speed) * np.outer(freqs, m)
    return np.exp(1j * phases)


def fine_beam_weights(cfg: ArrayConfig, theta0: float) -> WeightVector:
    """Classical narrowband weights: phases matched to the carrier at ``theta0``.

    This beam attains the maximum possible gain M at (carrier_freq, theta0)
    but squints away from it at other frequencies.
    """
    _check_theta(theta0)
    m = np.arange(cfg.num_elements)
    phases = 2.0 * np.pi * (cfg.carrier_freq / cfg.wave_speed) * cfg.element_spacing * theta0 * m
    return WeightVector(np.exp(1j * phases) / np.sqrt(cfg.num_elements))


def beam_gain(w: WeightVector, a: SteeringVector) -> float:
    """Beam pattern value |w^H a|^2. Lies in [0, M]."""
    if len(w) != len(a):
        raise ValueError(f"dimension mismatch: weights {len(w)} vs steering {len(a)}")
    return float(abs(np.vdot(w.entries, a.entries)) ** 2)


def virtual_beam_gain(w1: WeightVector, w2: WeightVector, a: SteeringVector) -> float:
    """Effective per-symbol gain of two Alamouti-combined beams.

    The orthogonal combining of the two transmit branches averages the two
    individual patterns: (|w1^H a|^2 + |w2^H a|^2) / 2.
    """
    return 0.5 * (beam_gain(w1, a) + beam_gain(w2, a))


def dirichlet_gain(cfg: ArrayConfig, theta0: float, freq: float) -> float:
    """Closed-form gain of the carrier-matched beam at (freq, theta0).

    With delta = (freq - carrier) * d * theta0 / c, the coherent sum of M
    phasors gives sin^2(pi M delta) / (M sin^2(pi delta)), continued with
    the value M whenever delta is an integer. Equals
    ``beam_gain(fine_beam_weights(cfg, theta0), steering_vector(cfg, freq,
    theta0))``, computed through an independent identity, so the two
    routes cross-check each other.
    """
    m_count = cfg.num_elements
    delta = (freq - cfg.carrier_freq) * cfg.element_spacing * theta0 / cfg.wave_speed
    frac = delta - np.round(delta)
    if abs(frac) < 1e-12:
        return float(m_count)
    return float(np.sin(np.pi * m_count * frac) ** 2
                 / np.sin(np.pi * frac) ** 2 / m_count)


def phase_projection(u) -> WeightVector:
    """Nearest constant-modulus weights to ``u``: keep phases, fix moduli.

    Zero entries get phase 0 so the output is deterministic. An all-zero
    input has no meaningful phases and is rejected.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 1:
        raise ValueError("expected a 1-D vector")
    if not np.any(u):
        raise ValueError("cannot project an all-zero vector onto constant modulus")
    return WeightVector(np.exp(1j * np.angle(u)) / np.sqrt(u.size))
