"""Independent reference computations used for self-validation.

Each check here deliberately reaches its answer by a different route than
the code it validates: the squint profile through the closed-form kernel
identity, code orthogonality through direct matrix arithmetic on random
draws, and small SDP objectives through a brute-force search over an
explicit parameterization of the feasible set. The test suite and the
``selftest`` command both run these.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from . import stbc
from .sdp import ConeProgram, SolveStatus, SolverSettings, solve
from .ula import (ArrayConfig, beam_gain, dirichlet_gain, fine_beam_weights,
                  phase_projection, steering_vector)


def dirichlet_agreement(rng: np.random.Generator, samples: int = 1000,
                        num_elements: int = 64) -> tuple[int, float]:
    """Compare sampled fine-beam gains against the closed-form kernel.

    Draws random (focus, frequency) pairs and evaluates the beam pattern
    both ways. A disagreement is anything outside rtol=1e-9 / atol=1e-12;
    the absolute floor covers pattern nulls where both routes lose
    relative precision. Returns (number of disagreements, worst
    error-to-tolerance ratio); agreement means the ratio stays <= 1.
    """
    cfg = ArrayConfig.half_wavelength(num_elements, 28e9)
    failures = 0
    worst = 0.0
    for _ in range(samples):
        theta0 = rng.uniform(-1.0, 1.0)
        freq = rng.uniform(0.5, 1.5) * cfg.carrier_freq
        direct = beam_gain(fine_beam_weights(cfg, theta0),
                           steering_vector(cfg, freq, theta0))
        closed = dirichlet_gain(cfg, theta0, freq)
        err = abs(direct - closed)
        tol = 1e-9 * abs(closed) + 1e-12
        worst = max(worst, err / tol)
        if err > tol:
            failures += 1
    return failures, worst


def stbc_orthogonality(rng: np.random.Generator, samples: int = 10000,
                       num_elements: int = 16) -> tuple[float, float]:
    """Exercise the Alamouti equivalent channel on random draws.

    Returns the worst off-diagonal modulus of the channel Gram matrix and
    the worst relative symbol-recovery error of a noiseless decode,
    skipping draws whose processing gain is below 1e-9 (unrecoverable by
    construction).
    """
    cfg = ArrayConfig.half_wavelength(num_elements, 28e9)
    worst_offdiag = 0.0
    worst_recovery = 0.0
    for _ in range(samples):
        w1 = phase_projection(np.exp(1j * rng.uniform(0, 2 * np.pi, num_elements)))
        w2 = phase_projection(np.exp(1j * rng.uniform(0, 2 * np.pi, num_elements)))
        a = steering_vector(cfg, rng.uniform(0.5, 1.5) * cfg.carrier_freq,
                            rng.uniform(-1.0, 1.0))
        channel = stbc.equivalent_channel(w1, w2, a)
        gram = channel.matrix.conj().T @ channel.matrix
        worst_offdiag = max(worst_offdiag, abs(gram[0, 1]), abs(gram[1, 0]))
        gain = channel.processing_gain
        if gain <= 1e-9:
            continue
        s = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        estimate = stbc.combine(channel, channel.matrix @ s) / gain
        worst_recovery = max(worst_recovery,
                             float(np.max(np.abs(estimate - s) / np.abs(s))))
    return worst_offdiag, worst_recovery


def elliptope_brute_force(C: np.ndarray, grid: int = 61) -> float:
    """Max of tr(C X) over 3x3 PSD matrices with unit diagonal, by search.

    Parameterizes the feasible set as the Gram matrix of three unit
    vectors (two angles fix the third vector, one fixes the second), scans
    a dense angle grid, and polishes the best cells with a local
    optimizer. Every evaluated point is feasible by construction, so the
    returned value is a valid lower bound that is tight to well below
    1e-4 at this grid density.
    """
    C = np.asarray(C, dtype=float)
    if C.shape != (3, 3):
        raise ValueError("brute force oracle only handles 3x3 objectives")
    base = float(np.trace(C))
    c12, c13, c23 = 2.0 * C[0, 1], 2.0 * C[0, 2], 2.0 * C[1, 2]

    def off_objective(a, b, g):
        x = np.cos(a)
        y = np.cos(b)
        z = np.cos(a) * np.cos(b) + np.sin(a) * np.sin(b) * np.cos(g)
        return c12 * x + c13 * y + c23 * z

    ang = np.linspace(0.0, np.pi, grid)
    aa, bb, gg = np.meshgrid(ang, ang, ang, indexing="ij")
    vals = off_objective(aa, bb, gg)
    top = np.argsort(vals, axis=None)[-4:]

    best = -np.inf
    for flat_idx in top:
        i, j, k = np.unravel_index(flat_idx, vals.shape)
        res = minimize(lambda p: -off_objective(*p), [ang[i], ang[j], ang[k]],
                       method="Nelder-Mead",
                       options=dict(xatol=1e-12, fatol=1e-14, maxiter=4000))
        best = max(best, -float(res.fun))
    return base + best


def random_elliptope_objective(rng: np.random.Generator) -> np.ndarray:
    raw = rng.standard_normal((3, 3))
    return 0.5 * (raw + raw.T)


def elliptope_program(C: np.ndarray) -> ConeProgram:
    """The 3x3 unit-diagonal instance as a trace-form program."""
    eqs = []
    for i in range(3):
        basis = np.zeros((3, 3))
        basis[i, i] = 1.0
        eqs.append((basis, 1.0))
    return ConeProgram(3, np.asarray(C, dtype=float), eq_constraints=eqs)


def solver_oracle_check(rng: np.random.Generator, instances: int = 5,
                        settings: SolverSettings | None = None) -> list[str]:
    """Solver-vs-oracle spot checks; returns a list of failure messages.

    Covers the analytic 2x2 instance (optimum exactly 2), random 3x3
    unit-diagonal instances against the brute-force search, and one
    structurally infeasible program that must be recognized as such.
    """
    st = settings or SolverSettings()
    failures = []

    two = ConeProgram(2, np.array([[0.0, 1.0], [1.0, 0.0]]),
                      eq_constraints=[(np.diag([1.0, 0.0]), 1.0),
                                      (np.diag([0.0, 1.0]), 1.0)])
    sol = solve(two, st)
    if sol.status is not SolveStatus.OPTIMAL or abs(sol.objective_value - 2.0) > 1e-5:
        failures.append(
            f"2x2 analytic instance: status {sol.status.value}, "
            f"objective {sol.objective_value:.8f} (expected 2 within 1e-5)")

    for i in range(instances):
        C = random_elliptope_objective(rng)
        sol = solve(elliptope_program(C), st)
        reference = elliptope_brute_force(C)
        if sol.status is not SolveStatus.OPTIMAL or abs(sol.objective_value - reference) > 1e-3:
            failures.append(
                f"3x3 instance {i}: status {sol.status.value}, objective "
                f"{sol.objective_value:.6f} vs brute force {reference:.6f}")

    bad = ConeProgram(2, np.eye(2), eq_constraints=[(np.eye(2), -1.0)])
    sol = solve(bad, st)
    if sol.status is not SolveStatus.INFEASIBLE:
        failures.append(
            f"infeasible trace program was reported as {sol.status.value}")
    return failures
