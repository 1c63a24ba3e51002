"""First-order solver for real symmetric semidefinite programs in trace form.

The problem shape is

    maximize    tr(C X)
    subject to  tr(A_k X)  = b_k              (equalities)
                lo_l <= tr(G_l X) <= hi_l     (interval inequalities)
                X positive semidefinite.

The algorithm is operator splitting: every constraint row carries a slack
variable, one half-step projects (matrix, slacks) onto the affine set
``{tr(M_i X) = s_i}`` through a cached Cholesky factor of the constraint
Gram matrix, the other half-step projects onto the product of the PSD cone
and the slack boxes, and a scaled dual variable coordinates the two. The
penalty rebalances itself from the residual ratio and restarts (one
aggressive rebalance) when progress stagnates; on top of the global
penalty, individual rows whose violation dominates earn a larger per-row
penalty weight, which is what lets single high-shadow-price constraints
(whose dual would otherwise take ~1/k forever to accumulate) converge.

All constraint rows are normalized to unit Frobenius norm before
iterating, so residual tolerances are absolute in the scaled metric:
the violation of row i is measured as distance-to-interval divided by
``||M_i||_F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve

_SQRT2 = math.sqrt(2.0)
_SYM_TOL = 1e-12


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


@dataclass
class SolverSettings:
    """Knobs for :func:`solve`.

    ``step`` is the initial penalty (step size) of the splitting; it is
    adapted during the run and only sets the starting point.
    """

    tol: float = 1e-6
    max_iters: int = 50000
    step: float = 1.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.step <= 0:
            raise ValueError("step must be positive")


def _as_symmetric(mat, dim, what):
    mat = np.asarray(mat, dtype=float)
    if mat.shape != (dim, dim):
        raise ValueError(f"{what} must be {dim}x{dim}, got {mat.shape}")
    scale = max(1.0, float(np.max(np.abs(mat))))
    if float(np.max(np.abs(mat - mat.T))) > _SYM_TOL * scale:
        raise ValueError(f"{what} is not symmetric")
    return 0.5 * (mat + mat.T)


@dataclass(frozen=True)
class ConeProgram:
    """A trace-form SDP instance (see module docstring for the shape).

    ``eq_constraints`` holds ``(A_k, b_k)`` pairs; ``ineq_constraints``
    holds ``(G_l, lo_l, hi_l)`` triples where either bound may be
    infinite.
    """

    dim: int
    objective: np.ndarray
    eq_constraints: tuple = ()
    ineq_constraints: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        object.__setattr__(self, "objective",
                           _as_symmetric(self.objective, self.dim, "objective"))
        eqs = []
        for k, (mat, rhs) in enumerate(self.eq_constraints):
            eqs.append((_as_symmetric(mat, self.dim, f"equality matrix {k}"), float(rhs)))
        object.__setattr__(self, "eq_constraints", tuple(eqs))
        ineqs = []
        for k, (mat, lo, hi) in enumerate(self.ineq_constraints):
            lo, hi = float(lo), float(hi)
            if not lo <= hi:
                raise ValueError(f"inequality {k} has lo > hi ({lo} > {hi})")
            ineqs.append((_as_symmetric(mat, self.dim, f"inequality matrix {k}"), lo, hi))
        object.__setattr__(self, "ineq_constraints", tuple(ineqs))

    @property
    def num_constraints(self) -> int:
        return len(self.eq_constraints) + len(self.ineq_constraints)


@dataclass
class ConeSolution:
    """Solver output: the PSD iterate, its objective, and quality metrics.

    ``primal_residual`` is the worst normalized constraint violation of
    ``X`` (recomputable from the program and ``X`` alone, see
    :func:`worst_violation`); ``dual_residual`` measures stationarity of
    the final iterate. ``diagnostics`` carries the raw quantities behind
    the residuals plus any infeasibility certificate message.
    """

    X: np.ndarray
    objective_value: float
    status: SolveStatus
    primal_residual: float
    dual_residual: float
    iterations: int
    message: str = ""
    diagnostics: dict = field(default_factory=dict)


def project_psd(S: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues to zero."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S))) if S.size else 1.0)
    if float(np.max(np.abs(S - S.T))) > 1e-8 * scale:
        raise ValueError("matrix is not symmetric")
    sym = 0.5 * (S + S.T)
    try:
        eigvals, eigvecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(
            f"eigendecomposition failed on a {S.shape[0]}x{S.shape[0]} matrix "
            f"with max |entry| {np.max(np.abs(sym)):.3e} and "
            f"{np.count_nonzero(~np.isfinite(sym))} non-finite entries"
        ) from exc
    clipped = np.maximum(eigvals, 0.0)
    out = (eigvecs * clipped) @ eigvecs.T
    return 0.5 * (out + out.T)


def constraint_violations(prog: ConeProgram, X: np.ndarray) -> np.ndarray:
    """Normalized violation of every constraint at ``X``.

    Equality rows come first, then inequality rows, both in declaration
    order. Row i reports ``dist(tr(M_i X), interval_i) / ||M_i||_F``.
    """
    X = np.asarray(X, dtype=float)
    out = np.empty(prog.num_constraints)
    i = 0
    for mat, rhs in prog.eq_constraints:
        norm = np.linalg.norm(mat)
        out[i] = abs(float(np.sum(mat * X)) - rhs) / norm
        i += 1
    for mat, lo, hi in prog.ineq_constraints:
        norm = np.linalg.norm(mat)
        val = float(np.sum(mat * X))
        out[i] = max(val - hi, lo - val, 0.0) / norm
        i += 1
    return out


def worst_violation(prog: ConeProgram, X: np.ndarray) -> float:
    """Largest normalized constraint violation at ``X`` (0 if unconstrained)."""
    if prog.num_constraints == 0:
        return 0.0
    return float(np.max(constraint_violations(prog, X)))


def _svec_indices(n):
    iu = np.triu_indices(n)
    off = iu[0] != iu[1]
    return iu, off


def _svec(S, iu, off):
    v = S[iu].copy()
    v[off] *= _SQRT2
    return v


def _smat(v, n, iu, off):
    vals = v.copy()
    vals[off] /= _SQRT2
    S = np.zeros((n, n))
    S[iu] = vals
    S[(iu[1], iu[0])] = vals
    return S


def _trivial_certificate(prog: ConeProgram) -> str | None:
    """Cheap infeasibility certificates for definiteness-contradicted rows.

    Only attempted on small programs; returns a message or None.
    """
    if prog.dim * prog.dim * prog.num_constraints > 5_000_000:
        return None
    rows = [(mat, rhs, rhs) for mat, rhs in prog.eq_constraints]
    rows += list(prog.ineq_constraints)
    for i, (mat, lo, hi) in enumerate(rows):
        eigvals = np.linalg.eigvalsh(mat)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(eigvals))))
        if eigvals[0] >= -tol and hi < -tol:
            return (f"constraint {i}: tr(M X) is nonnegative for every PSD X "
                    f"because M is PSD, but the upper bound is {hi:.6g}")
        if eigvals[-1] <= tol and lo > tol:
            return (f"constraint {i}: tr(M X) is nonpositive for every PSD X "
                    f"because M is NSD, but the lower bound is {lo:.6g}")
    return None


def solve(prog: ConeProgram, settings: SolverSettings | None = None) -> ConeSolution:
    """Solve a trace-form SDP by operator splitting.

    Returns a :class:`ConeSolution` whose ``X`` is the PSD half-iterate:
    it is positive semidefinite up to eigensolver rounding, and on
    ``OPTIMAL`` exit every constraint holds within ``settings.tol`` in the
    row-normalized metric. On ``MAX_ITERATIONS`` the best iterate seen is
    returned. Structural infeasibility is reported with a certificate
    message when the alternating projections stall at a nonzero gap.
    """
    st = settings or SolverSettings()
    n = prog.dim
    iu, off = _svec_indices(n)

    mats = [m for m, _ in prog.eq_constraints] + [m for m, _, _ in prog.ineq_constraints]
    m_rows = len(mats)
    if m_rows == 0:
        raise ValueError("program has no constraints; the objective is unbounded on the cone")
    lo = np.empty(m_rows)
    hi = np.empty(m_rows)
    rows = np.empty((m_rows, iu[0].size))
    for i, mat in enumerate(mats):
        norm = float(np.linalg.norm(mat))
        if norm == 0.0:
            raise ValueError(f"constraint {i} has a zero matrix")
        rows[i] = _svec(mat, iu, off) / norm
        if i < len(prog.eq_constraints):
            lo[i] = hi[i] = prog.eq_constraints[i][1] / norm
        else:
            _, l, h = prog.ineq_constraints[i - len(prog.eq_constraints)]
            lo[i] = l / norm
            hi[i] = h / norm

    cert = _trivial_certificate(prog)
    if cert is not None:
        X = np.zeros((n, n))
        return ConeSolution(X, 0.0, SolveStatus.INFEASIBLE,
                            worst_violation(prog, X), np.inf, 0,
                            message="infeasible: " + cert,
                            diagnostics={"certificate": cert})

    c_vec = _svec(prog.objective, iu, off)
    obj_scale = max(1.0, float(np.linalg.norm(c_vec)))
    c_hat = c_vec / obj_scale

    gram = rows @ rows.T
    row_weights = np.ones(m_rows)

    def factor():
        q = gram.copy()
        q[np.diag_indices_from(q)] += 1.0 / row_weights
        return cho_factor(q, lower=True, check_finite=False)

    cho = factor()

    rho = st.step
    alpha = 1.6                      # over-relaxation
    check_every = 25
    adapt_every = 100
    weight_every = 500
    stall_window = 3000

    z_mat = np.zeros(iu[0].size)
    z_slack = np.zeros(m_rows)
    u_mat = np.zeros(iu[0].size)
    u_slack = np.zeros(m_rows)

    best_gap = np.inf
    best_mat = z_mat.copy()
    stagnation_ref = np.inf
    stagnation_iter = 0
    restarts = 0
    refactors = 0
    displacement_prev = None
    stall_count = 0
    last_adapt = 0
    pri = gap = dua = np.inf
    iters_done = 0

    for k in range(st.max_iters):
        iters_done = k + 1
        # affine half-step: project (z - u) shifted by the objective
        w_mat = z_mat - u_mat + c_hat / rho
        w_slack = z_slack - u_slack
        lam = cho_solve(cho, rows @ w_mat - w_slack, check_finite=False)
        v_mat = w_mat - rows.T @ lam
        v_slack = w_slack + lam / row_weights
        # over-relaxation mixes the previous cone iterate back in
        v_mat_r = alpha * v_mat + (1.0 - alpha) * z_mat
        v_slack_r = alpha * v_slack + (1.0 - alpha) * z_slack

        z_mat_prev = z_mat
        z_slack_prev = z_slack
        t_full = _smat(v_mat_r + u_mat, n, iu, off)
        eigvals, eigvecs = np.linalg.eigh(t_full)
        np.maximum(eigvals, 0.0, out=eigvals)
        z_mat = _svec((eigvecs * eigvals) @ eigvecs.T, iu, off)
        z_slack = np.clip(v_slack_r + u_slack, lo, hi)
        u_mat = u_mat + v_mat_r - z_mat
        u_slack = u_slack + v_slack_r - z_slack

        if (k + 1) % check_every != 0 and k + 1 != st.max_iters:
            continue

        vals = rows @ z_mat
        viol = np.maximum(vals - hi, 0.0) + np.maximum(lo - vals, 0.0)
        pri = float(np.max(viol))
        z_norm = math.sqrt(float(z_mat @ z_mat) + float(z_slack @ z_slack))
        scale = max(1.0, z_norm)
        gap_vec_mat = v_mat - z_mat
        gap_vec_slack = v_slack - z_slack
        gap = math.sqrt(float(gap_vec_mat @ gap_vec_mat)
                        + float(gap_vec_slack @ gap_vec_slack)) / scale
        d_mat = z_mat - z_mat_prev
        d_slack = (z_slack - z_slack_prev) * row_weights
        dua = rho * math.sqrt(float(d_mat @ d_mat) + float(d_slack @ d_slack)) / scale

        worst = max(pri, gap, dua)
        if worst < best_gap:
            best_gap = worst
            best_mat = z_mat.copy()

        if pri <= st.tol and gap <= st.tol and dua <= st.tol:
            X = _smat(z_mat, n, iu, off)
            return ConeSolution(
                X, float(np.sum(prog.objective * X)), SolveStatus.OPTIMAL,
                worst_violation(prog, X), dua, iters_done,
                message=f"converged in {iters_done} iterations",
                diagnostics={"rho": rho, "consensus_gap": gap,
                             "restarts": restarts, "refactors": refactors})

        # infeasibility: the consensus displacement stalls at a nonzero value
        disp = math.sqrt(float(gap_vec_mat @ gap_vec_mat)
                         + float(gap_vec_slack @ gap_vec_slack))
        if k + 1 >= 500 and k + 1 - last_adapt >= 3 * check_every:
            if displacement_prev is not None and disp > max(1e-3, 50.0 * st.tol):
                if abs(disp - displacement_prev) <= 1e-6 * disp:
                    stall_count += 1
                else:
                    stall_count = 0
                if stall_count >= 5:
                    X = _smat(z_mat, n, iu, off)
                    msg = (f"infeasible: alternating projections stalled at a "
                           f"consensus displacement of {disp:.3e} after "
                           f"{iters_done} iterations; the affine constraint set "
                           f"and the PSD cone appear disjoint")
                    return ConeSolution(
                        X, float(np.sum(prog.objective * X)),
                        SolveStatus.INFEASIBLE, worst_violation(prog, X), dua,
                        iters_done, message=msg,
                        diagnostics={"rho": rho, "displacement": disp,
                                     "restarts": restarts})
            displacement_prev = disp
        else:
            displacement_prev = disp
            stall_count = 0

        # rows whose violation dominates get a heavier penalty weight; their
        # duals then move in usefully large steps
        if (k + 1) % weight_every == 0 and pri > st.tol:
            needy = viol > np.maximum(0.25 * pri, 2.0 * st.tol)
            if np.any(needy & (row_weights < 1e6)):
                old = row_weights.copy()
                row_weights[needy] = np.minimum(row_weights[needy] * 10.0, 1e6)
                u_slack *= old / row_weights
                cho = factor()
                refactors += 1
                last_adapt = k + 1

        # global penalty rebalancing from the residual ratio, dual rescaled
        if (k + 1) % adapt_every == 0:
            ratio = (pri + gap) / max(dua, 1e-16)
            new_rho = rho
            if ratio > 10.0:
                new_rho = rho * min(math.sqrt(ratio), 5.0)
            elif ratio < 0.1:
                new_rho = rho / min(math.sqrt(1.0 / ratio), 5.0)
            elif max(pri, gap) <= 0.5 * st.tol < dua:
                # endgame: only the dual is above tolerance
                new_rho = rho * 0.5
            elif dua <= 0.5 * st.tol < max(pri, gap):
                new_rho = rho * 2.0
            if worst > 0.99 * stagnation_ref and k + 1 - stagnation_iter >= stall_window:
                # restart to break the plateau: when only the dual is stuck
                # the iterate is orbiting, so damp the over-relaxation and
                # soften the penalty; otherwise rebalance without the clip
                if max(pri, gap) <= 0.5 * st.tol:
                    alpha = 1.0
                    new_rho = rho * 0.25
                else:
                    new_rho = rho * math.sqrt(max(ratio, 1e-8))
                restarts += 1
                stagnation_iter = k + 1
                stagnation_ref = worst
            if worst < 0.99 * stagnation_ref:
                stagnation_ref = worst
                stagnation_iter = k + 1
            new_rho = min(max(new_rho, 1e-6), 1e8)
            if new_rho != rho:
                u_mat *= rho / new_rho
                u_slack *= rho / new_rho
                rho = new_rho
                last_adapt = k + 1

    X = _smat(best_mat, n, iu, off)
    return ConeSolution(
        X, float(np.sum(prog.objective * X)), SolveStatus.MAX_ITERATIONS,
        worst_violation(prog, X), dua, iters_done,
        message=(f"stopped after {iters_done} iterations with residuals "
                 f"pri={pri:.3e} gap={gap:.3e} dual={dua:.3e}"),
        diagnostics={"rho": rho, "restarts": restarts, "refactors": refactors})
