"""Alamouti space-time block coding across two beamforming branches.

Two symbols are spread over two transmit branches and two time slots; the
two branches are steered by two different constant-modulus beamformers.
Because the code is orthogonal, the receiver recovers both symbols with
the same processing gain, which is the average of the two individual beam
patterns. That average is what makes a rank-two beamformer design usable:
neither branch is flat over frequency on its own, but their average is.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .ula import SteeringVector, WeightVector

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class StbcBlock:
    """One Alamouti code block: rows are branches, columns are time slots.

    Column 1 carries (s1, s2)/sqrt(2); column 2 carries (-s2*, s1*)/sqrt(2),
    so the squared Frobenius norm equals |s1|^2 + |s2|^2 and the total
    transmit power is independent of the branch count.
    """

    symbols: np.ndarray

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=complex)
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        if symbols.shape != (2, 2):
            raise ValueError(f"code block must be 2x2, got {symbols.shape}")

    @property
    def power(self) -> float:
        """Total power over the block, |s1|^2 + |s2|^2."""
        return float(np.sum(np.abs(self.symbols) ** 2))


@dataclass(frozen=True)
class EquivalentChannel:
    """The 2x2 linear map from symbols to combined receive samples.

    Orthogonality makes its Gram matrix a multiple of the identity:
    the multiple is the per-symbol processing gain
    (|w1^H a|^2 + |w2^H a|^2) / 2.
    """

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        if matrix.shape != (2, 2):
            raise ValueError(f"equivalent channel must be 2x2, got {matrix.shape}")

    @property
    def processing_gain(self) -> float:
        """Per-symbol gain (|w1^H a|^2 + |w2^H a|^2) / 2."""
        return float(np.sum(np.abs(self.matrix[:, 0]) ** 2))


def encode(s1: complex, s2: complex) -> StbcBlock:
    """Alamouti-encode two symbols into a branch-by-slot block."""
    s1 = complex(s1)
    s2 = complex(s2)
    block = np.array([[s1, -np.conj(s2)],
                      [s2, np.conj(s1)]]) * _INV_SQRT2
    return StbcBlock(block)


def equivalent_channel(w1: WeightVector, w2: WeightVector,
                       a: SteeringVector) -> EquivalentChannel:
    """Channel seen by the symbol pair after beamforming both branches.

    With g_i = w_i^H a, the matrix is (1/sqrt(2)) [[g1, g2], [g2*, -g1*]].
    """
    if len(w1) != len(a) or len(w2) != len(a):
        raise ValueError(
            f"dimension mismatch: weights {len(w1)}/{len(w2)} vs steering {len(a)}")
    g1 = np.vdot(w1.entries, a.entries)
    g2 = np.vdot(w2.entries, a.entries)
    mat = np.array([[g1, g2],
                    [np.conj(g2), -np.conj(g1)]]) * _INV_SQRT2
    return EquivalentChannel(mat)


def combine(channel: EquivalentChannel, received) -> np.ndarray:
    """Matched-filter combining of (y1(t), y2*(t+1)) into symbol estimates.

    For noiseless input Gamma @ s the output is processing_gain * s: both
    symbols decouple with identical gains. A zero-gain channel cannot
    carry symbols at all; the zeros it returns are flagged with a warning
    instead of being rescaled into garbage.
    """
    received = np.asarray(received, dtype=complex)
    if received.shape != (2,):
        raise ValueError(f"expected 2 received samples, got shape {received.shape}")
    if channel.processing_gain < _ORTHO_TOL:
        warnings.warn("zero processing gain: symbols are unrecoverable",
                      RuntimeWarning, stacklevel=2)
    return channel.matrix.conj().T @ received
