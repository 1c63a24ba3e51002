"""Wideband constant-modulus beamformer design via semidefinite relaxation.

The weight vector is lifted to a Hermitian matrix with fixed diagonal, the
rank constraint is dropped, and the relaxation maximizes the average beam
gain over the signal band subject to a bounded ripple inside the band and
an average-leakage cap outside it. The gain floor that anchors the ripple
band is itself an optimization variable, kept linear by carrying it as an
extra diagonal slot of the lifted matrix.

From the optimizer, one or two constant-modulus weight vectors are
recovered by phase-projecting the leading eigenvectors: one vector when
the solution is numerically rank one (direct transmission), two vectors
otherwise (Alamouti transmit diversity, see :mod:`beamsquint.stbc`).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .sdp import (ConeProgram, ConeSolution, SolveStatus, SolverSettings,
                  constraint_violations, solve)
from .ula import (ArrayConfig, BandSpec, WeightVector, beam_gain,
                  phase_projection, steering_matrix, steering_vector, to_db,
                  virtual_beam_gain)


class DesignError(RuntimeError):
    """Raised when the relaxation cannot be solved to optimality."""

    def __init__(self, message, solution: ConeSolution | None = None):
        super().__init__(message)
        self.solution = solution


class GridDensityWarning(UserWarning):
    """The audit grid found violations the design grid did not see."""


@dataclass(frozen=True)
class DesignSpec:
    """Everything that pins down one relaxation instance.

    Parameters
    ----------
    array : ArrayConfig
        Physical array the design runs on.
    band : BandSpec
        Signal band and the wider controlled range.
    beam_focus : float
        Virtual angle the beam is pointed at.
    ripple_db : float
        Allowed in-band gain variation in dB.
    leakage_ratio : float
        Cap on average out-of-band gain as a fraction of the in-band
        gain floor.
    eigen_threshold : float
        Eigenvalue cutoff that decides how many weight vectors the
        solution carries.
    n_main_samples, n_side_samples : int
        Frequency grid densities for the in-band and out-of-band
        constraints (trapezoidal quadrature for the averages).
    """

    array: ArrayConfig
    band: BandSpec
    beam_focus: float
    ripple_db: float = 5.0
    leakage_ratio: float = 0.1
    eigen_threshold: float = 0.1
    n_main_samples: int = 64
    n_side_samples: int = 128

    def __post_init__(self):
        if not -1.0 <= self.beam_focus <= 1.0:
            raise ValueError("beam_focus must lie in [-1, 1]")
        if self.ripple_db <= 0:
            raise ValueError("ripple_db must be positive")
        if not 0.0 < self.leakage_ratio < 1.0:
            raise ValueError("leakage_ratio must lie in (0, 1)")
        if not 0.0 < self.eigen_threshold < 1.0:
            raise ValueError("eigen_threshold must lie in (0, 1)")
        if self.n_main_samples < 8:
            raise ValueError("n_main_samples must be at least 8")
        if self.n_side_samples < 8:
            raise ValueError("n_side_samples must be at least 8")
        if self.array.carrier_freq != self.band.carrier_freq:
            raise ValueError("array and band disagree on the carrier frequency")


def main_frequencies(spec: DesignSpec) -> np.ndarray:
    """In-band constraint grid: uniform, inclusive of both band edges."""
    return np.linspace(spec.band.main_lo, spec.band.main_hi, spec.n_main_samples)


def side_frequencies(spec: DesignSpec) -> tuple[np.ndarray, np.ndarray]:
    """Out-of-band grids (lower arm, upper arm), edges included."""
    n_lower = spec.n_side_samples - spec.n_side_samples // 2
    n_upper = spec.n_side_samples // 2
    lower = np.linspace(spec.band.span_lo, spec.band.main_lo, n_lower)
    upper = np.linspace(spec.band.main_hi, spec.band.span_hi, n_upper)
    return lower, upper


def _trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    if grid.size < 2:
        raise ValueError("quadrature grid needs at least 2 points to bracket its interval")
    w = np.empty_like(grid)
    w[0] = 0.5 * (grid[1] - grid[0])
    w[-1] = 0.5 * (grid[-1] - grid[-2])
    w[1:-1] = 0.5 * (grid[2:] - grid[:-2])
    return w


def _embed_hermitian(A: np.ndarray) -> np.ndarray:
    """Real symmetric image [[Re A, -Im A], [Im A, Re A]] of a Hermitian A."""
    re, im = A.real, A.imag
    return np.block([[re, -im], [im, re]])


def _extract_hermitian(Y: np.ndarray) -> np.ndarray:
    """Average the two real copies of ``Y`` back into one Hermitian matrix."""
    m = Y.shape[0] // 2
    re = 0.5 * (Y[:m, :m] + Y[m:, m:])
    im = 0.5 * (Y[m:, :m] - Y[:m, m:])
    X = re + 1j * im
    return 0.5 * (X + X.conj().T)


def _floor_slot_scale(m_el: int) -> float:
    # the slot stores gain_floor / sqrt(M): a compromise that keeps the slot
    # value near the lifted-matrix entry scale without letting the slot
    # coefficient dominate its constraint rows
    return float(np.sqrt(m_el))


def _gain_matrix(dim: int, a: np.ndarray, floor_coef: float = 0.0) -> np.ndarray:
    """Constraint matrix whose trace against the lifted variable is the
    complex beam gain at steering vector ``a``, plus ``floor_coef`` times
    the gain floor (the slot scaling cancels against its coefficient)."""
    m = a.size
    out = np.zeros((dim, dim))
    out[: 2 * m, : 2 * m] = 0.5 * _embed_hermitian(np.outer(a, a.conj()))
    out[dim - 1, dim - 1] = floor_coef * _floor_slot_scale(m)
    return out


def assemble_problem(spec: DesignSpec) -> ConeProgram:
    """Build the relaxation as a real trace-form SDP.

    The complex Hermitian lifted matrix X (side M) is embedded as the real
    symmetric ``[[Re X, -Im X], [Im X, Re X]]`` of side 2M; constraint
    matrices carry a factor 1/2 so every real trace equals the complex
    trace it stands for. The gain floor rides along as one extra diagonal
    slot (index 2M, storing the floor divided by sqrt(M) to keep the
    variable blocks on comparable scales; the slot's constraint
    coefficients carry the inverse factor, so constraint row values are
    unaffected), which the PSD cone keeps nonnegative, for a variable of
    side ``2M + 1``.

    Row layout (relied on by the audit): M diagonal equalities, then the
    inequalities in the order [in-band lower bounds] [in-band upper
    bounds] [out-of-band nonnegativity] [leakage cap].
    """
    cfg = spec.array
    m_el = cfg.num_elements
    dim = 2 * m_el + 1
    theta0 = spec.beam_focus

    f_main = main_frequencies(spec)
    a_main = steering_matrix(cfg, f_main, theta0)
    w_main = _trapezoid_weights(f_main) / spec.band.bandwidth

    f_lower, f_upper = side_frequencies(spec)
    a_lower = steering_matrix(cfg, f_lower, theta0)
    a_upper = steering_matrix(cfg, f_upper, theta0)
    w_side = np.concatenate([_trapezoid_weights(f_lower), _trapezoid_weights(f_upper)])
    w_side = w_side / spec.band.side_width
    a_side = np.vstack([a_lower, a_upper])

    # objective: quadrature of the in-band average gain
    avg_main = (a_main.T * w_main) @ a_main.conj()
    objective = _gain_matrix(dim, np.zeros(m_el))
    objective[: 2 * m_el, : 2 * m_el] = 0.5 * _embed_hermitian(avg_main)

    eqs = []
    for j in range(m_el):
        mat = np.zeros((dim, dim))
        mat[j, j] = 0.5
        mat[m_el + j, m_el + j] = 0.5
        eqs.append((mat, 1.0 / m_el))

    ripple = 10.0 ** (spec.ripple_db / 10.0)
    ineqs = []
    for a in a_main:
        ineqs.append((_gain_matrix(dim, a, -1.0), 0.0, np.inf))
    for a in a_main:
        ineqs.append((_gain_matrix(dim, a, -ripple), -np.inf, 0.0))
    for a in a_side:
        ineqs.append((_gain_matrix(dim, a, 0.0), 0.0, np.inf))
    avg_side = (a_side.T * w_side) @ a_side.conj()
    leak = _gain_matrix(dim, np.zeros(m_el), -spec.leakage_ratio)
    leak[: 2 * m_el, : 2 * m_el] = 0.5 * _embed_hermitian(avg_side)
    ineqs.append((leak, -np.inf, 0.0))

    return ConeProgram(dim, objective, eq_constraints=eqs, ineq_constraints=ineqs)


@dataclass
class SdrSolution:
    """Solved relaxation in complex form.

    ``lifted_matrix`` is the Hermitian PSD optimizer (unit trace, constant
    diagonal up to solver tolerance), ``gain_floor`` the optimized lower
    gain level anchoring the ripple band, and the eigenpairs are sorted by
    descending eigenvalue with each eigenvector rotated so its first
    significant entry is real positive. ``effective_rank`` counts
    eigenvalues above the spec's threshold.
    """

    lifted_matrix: np.ndarray
    gain_floor: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    effective_rank: int
    solver: ConeSolution


def extract_solution(cone_sol: ConeSolution, spec: DesignSpec) -> SdrSolution:
    """Pull the complex solution out of the real embedding and factor it."""
    m_el = spec.array.num_elements
    S = cone_sol.X
    lifted = _extract_hermitian(S[: 2 * m_el, : 2 * m_el])
    gain_floor = float(S[2 * m_el, 2 * m_el]) * _floor_slot_scale(m_el)
    eigvals, eigvecs = np.linalg.eigh(lifted)
    eigvals = eigvals[::-1].copy()
    eigvecs = eigvecs[:, ::-1].copy()
    for i in range(eigvecs.shape[1]):
        col = eigvecs[:, i]
        sig = np.flatnonzero(np.abs(col) > 1e-9)
        if sig.size:
            eigvecs[:, i] = col * np.exp(-1j * np.angle(col[sig[0]]))
    rank = int(np.count_nonzero(eigvals > spec.eigen_threshold))
    return SdrSolution(lifted, gain_floor, eigvals, eigvecs, rank, cone_sol)


@dataclass
class ConstraintAudit:
    """Re-check of the solved relaxation on a finer frequency grid.

    Violations are in the solver's row-normalized metric; anything beyond
    ``10 * tol`` triggers a :class:`GridDensityWarning` because it means
    the design grid was too coarse to see it.
    """

    grid_factor: int
    tol: float
    diag_max: float
    main_lower_max: float
    main_upper_max: float
    side_max: float
    leakage: float
    min_eigenvalue: float
    flagged: tuple = ()

    @property
    def max_violation(self) -> float:
        return max(self.diag_max, self.main_lower_max, self.main_upper_max,
                   self.side_max, self.leakage)


def audit_constraints(spec: DesignSpec, sdr: SdrSolution, tol: float = 1e-6,
                      grid_factor: int = 4) -> ConstraintAudit:
    """Re-evaluate every design constraint on a ``grid_factor`` x finer grid."""
    fine_spec = replace(spec,
                        n_main_samples=grid_factor * spec.n_main_samples,
                        n_side_samples=grid_factor * spec.n_side_samples)
    fine_prog = assemble_problem(fine_spec)
    m_el = spec.array.num_elements
    dim = 2 * m_el + 1
    S = np.zeros((dim, dim))
    S[: 2 * m_el, : 2 * m_el] = _embed_hermitian(sdr.lifted_matrix)
    S[dim - 1, dim - 1] = sdr.gain_floor / _floor_slot_scale(m_el)
    viol = constraint_violations(fine_prog, S)

    n_main = fine_spec.n_main_samples
    n_side = fine_spec.n_side_samples
    i0 = m_el
    audit = ConstraintAudit(
        grid_factor=grid_factor,
        tol=tol,
        diag_max=float(np.max(viol[:m_el])),
        main_lower_max=float(np.max(viol[i0:i0 + n_main])),
        main_upper_max=float(np.max(viol[i0 + n_main:i0 + 2 * n_main])),
        side_max=float(np.max(viol[i0 + 2 * n_main:i0 + 2 * n_main + n_side])),
        leakage=float(viol[-1]),
        min_eigenvalue=float(sdr.eigenvalues[-1]),
    )
    flagged = []
    for name in ("diag_max", "main_lower_max", "main_upper_max", "side_max", "leakage"):
        if getattr(audit, name) > 10.0 * tol:
            flagged.append(name)
    if flagged:
        audit.flagged = tuple(flagged)
        warnings.warn(
            f"design grid too coarse: {', '.join(flagged)} exceed 10*tol on a "
            f"{grid_factor}x finer grid (worst {audit.max_violation:.3e})",
            GridDensityWarning, stacklevel=2)
    return audit


@dataclass
class DesignOutcome:
    """Final design: one weight vector (direct) or two (diversity).

    ``achieved_main_gain_db`` is the realized gain of the projected
    weights on the in-band design grid, so any degradation from the
    constant-modulus projection is visible rather than assumed away.
    """

    mode: str
    weights: tuple[WeightVector, ...]
    achieved_main_gain_db: np.ndarray
    solution: SdrSolution
    spec: DesignSpec
    audit: ConstraintAudit | None = None

    @property
    def is_direct(self) -> bool:
        return self.mode == "direct"


def _grid_gains(spec: DesignSpec, w: WeightVector) -> np.ndarray:
    a = steering_matrix(spec.array, main_frequencies(spec), spec.beam_focus)
    return np.abs(a @ w.entries.conj()) ** 2


def extract_outcome(sdr: SdrSolution, spec: DesignSpec) -> DesignOutcome:
    """Turn a solved relaxation into realizable constant-modulus weights.

    Rank one: phase-project the leading eigenvector. Higher rank: phase-
    project every eigenvector above the threshold and keep the pair whose
    diversity-combined gain, averaged over the in-band grid, is largest
    (ties go to the lexicographically first index pair). Deterministic
    function of the solution and the spec.
    """
    r = sdr.effective_rank
    if r < 1:
        raise DesignError(
            "internal: no eigenvalue above the threshold, impossible for a "
            "unit-trace solution with a threshold below 1", sdr.solver)
    if r == 1:
        weights = (phase_projection(sdr.eigenvectors[:, 0]),)
        mode = "direct"
        gains = _grid_gains(spec, weights[0])
    else:
        cands = [phase_projection(sdr.eigenvectors[:, i]) for i in range(r)]
        cand_gains = [_grid_gains(spec, w) for w in cands]
        best_pair, best_score = None, -np.inf
        for i in range(r):
            for j in range(i + 1, r):
                score = float(np.mean(0.5 * (cand_gains[i] + cand_gains[j])))
                if score > best_score:
                    best_pair, best_score = (i, j), score
        i, j = best_pair
        weights = (cands[i], cands[j])
        mode = "diversity"
        gains = 0.5 * (cand_gains[i] + cand_gains[j])
    return DesignOutcome(mode, weights, to_db(gains), sdr, spec)


def design_beamformer(spec: DesignSpec,
                      settings: SolverSettings | None = None) -> DesignOutcome:
    """Full pipeline: assemble, solve, factor, project, audit.

    Raises :class:`DesignError` (carrying the solver report) when the
    relaxation does not reach optimal status.
    """
    st = settings or SolverSettings()
    prog = assemble_problem(spec)
    cone_sol = solve(prog, st)
    if cone_sol.status is not SolveStatus.OPTIMAL:
        raise DesignError(
            f"relaxation solve failed with status {cone_sol.status.value}: "
            f"{cone_sol.message}", cone_sol)
    sdr = extract_solution(cone_sol, spec)
    outcome = extract_outcome(sdr, spec)
    outcome.audit = audit_constraints(spec, sdr, tol=st.tol)
    return outcome
