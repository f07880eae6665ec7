"""Weighted 1-norm allocation problem and the equilibrium optimality
certificate.

The reference problem: minimize sum_i gamma_i |x_i| over the steady
states reachable with box-bounded inputs,

    min ||diag(gamma) x||_1   s.t.  -diag(a) x + b v + w = 0,  -1 <= v <= 1.

When diag(gamma) A^-1 B is a strictly column-dominant M-matrix, the
saturated closed-loop equilibrium attains this optimum; the certificate
below recomputes both sides independently and compares.  The LP is
solved on the x-eliminated epigraph form by a dense two-phase simplex
with Bland's rule, so no external solver is involved and runs are
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import equilibrium, matrixlab, model, sector
from .errors import (ConditionViolated, DimensionMismatch, DimensionTooLarge,
                     SolverFailure, UnsupportedVariant)

_PIVOT_EPS = 1e-9
_MAX_PIVOTS = 10_000


@dataclass(frozen=True, eq=False)
class AllocationSolution:
    """Optimal steady state x_star with the input v_star achieving it."""

    x_star: np.ndarray
    v_star: np.ndarray
    cost: float
    status: str


@dataclass(frozen=True, eq=False)
class OptimalityCertificate:
    """Comparison of the closed-loop equilibrium against the LP optimum."""

    passed: bool
    equilibrium_cost: float
    lp_cost: float
    cost_gap: float
    sign_structure_error: float
    tolerance: float
    eq: equilibrium.EquilibriumResult
    lp: AllocationSolution


def _gamma_vector(gamma, n: int) -> np.ndarray:
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if g.ndim != 1 or g.size != n:
        raise DimensionMismatch(f"gamma must be a vector of length {n}")
    if np.any(g <= 0.0) or not np.all(np.isfinite(g)):
        raise ValueError("gamma must be positive and finite")
    return g


def check_gamma_condition(gamma, plant: model.PlantModel) -> bool:
    """True iff diag(gamma) A^-1 B is a strictly column-dominant M-matrix."""
    g = _gamma_vector(gamma, plant.n)
    m = (g / plant.a)[:, None] * plant.b
    return matrixlab.is_m_matrix(m) and matrixlab.is_strictly_column_dominant(m)


def admissible_gamma(plant: model.PlantModel) -> np.ndarray:
    """A weight vector that satisfies the certificate condition.

    Taken from the column dominance scaling of A^-1 B and normalized so
    the largest weight is one.
    """
    d = matrixlab.column_dominance_scaling(plant.b / plant.a[:, None])
    return d / float(np.max(d))


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and tab[i, col] != 0.0:
            tab[i] -= tab[i, col] * tab[row]


def _run_simplex(tab: np.ndarray, basis: list[int], cost: np.ndarray,
                 ncols: int, pivots_left: int) -> int:
    """Optimize min cost @ y on the tableau in place (Bland's rule)."""
    while True:
        cb = cost[basis]
        reduced = cost[:ncols] - cb @ tab[:, :ncols]
        entering = -1
        for j in range(ncols):
            if reduced[j] < -_PIVOT_EPS:
                entering = j
                break
        if entering < 0:
            return pivots_left
        col = tab[:, entering]
        rhs = tab[:, -1]
        best_ratio = np.inf
        leave = -1
        for i in range(tab.shape[0]):
            if col[i] > _PIVOT_EPS:
                ratio = rhs[i] / col[i]
                if ratio < best_ratio - _PIVOT_EPS or (
                        abs(ratio - best_ratio) <= _PIVOT_EPS
                        and (leave < 0 or basis[i] < basis[leave])):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            raise SolverFailure("objective unbounded on the tableau")
        _pivot(tab, leave, entering)
        basis[leave] = entering
        pivots_left -= 1
        if pivots_left <= 0:
            raise SolverFailure("pivot guard exceeded")


def _simplex(c: np.ndarray, a_eq: np.ndarray, b_eq: np.ndarray) -> np.ndarray:
    """Two-phase dense simplex for min c @ y s.t. a_eq y = b_eq, y >= 0."""
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    m, ncols = a.shape
    neg = b < 0.0
    a[neg] *= -1.0
    b[neg] *= -1.0

    tab = np.hstack([a, np.eye(m), b[:, None]])
    basis = list(range(ncols, ncols + m))
    phase1 = np.concatenate([np.zeros(ncols), np.ones(m)])
    budget = _run_simplex(tab, basis, phase1, ncols + m, _MAX_PIVOTS)
    if float(phase1[basis] @ tab[:, -1]) > 1e-7 * (1.0 + float(np.max(np.abs(b)))):
        raise SolverFailure("phase one failed to reach feasibility")

    # drive leftover artificial variables out of the basis
    drop_rows = []
    for i in range(m):
        if basis[i] >= ncols:
            row = tab[i, :ncols]
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > _PIVOT_EPS:
                _pivot(tab, i, j)
                basis[i] = j
            else:
                drop_rows.append(i)
    if drop_rows:
        keep = [i for i in range(m) if i not in drop_rows]
        tab = tab[keep]
        basis = [basis[i] for i in keep]

    tab = np.hstack([tab[:, :ncols], tab[:, -1:]])
    cost = np.concatenate([c, [0.0]])
    _run_simplex(tab, basis, cost, ncols, budget)

    y = np.zeros(ncols)
    y[basis] = tab[:, -1]
    return y


def solve_weighted_l1_lp(gamma, plant: model.PlantModel, w) -> AllocationSolution:
    """Solve the weighted 1-norm steady-state allocation problem.

    The state is eliminated through x = A^-1 (B v + w) and |x| is lifted
    into epigraph variables t, giving a standard-form LP in (v, t) that
    is always feasible (v = 0).  Deterministic for fixed inputs.
    """
    g = _gamma_vector(gamma, plant.n)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.size != plant.n:
        raise DimensionMismatch("disturbance width disagrees with plant")
    n = plant.n
    gm = (g / plant.a)[:, None] * plant.b       # diag(gamma) A^-1 B
    gw = g / plant.a * w
    eye = np.eye(n)
    zero = np.zeros((n, n))
    # variables y = [v + 1, t, slack1, slack2, slack3] >= 0
    a_eq = np.block([
        [gm, -eye, eye, zero, zero],
        [-gm, -eye, zero, eye, zero],
        [eye, zero, zero, zero, eye],
    ])
    ones = np.ones(n)
    b_eq = np.concatenate([gm @ ones - gw, gw - gm @ ones, 2.0 * ones])
    c = np.concatenate([np.zeros(n), np.ones(n), np.zeros(3 * n)])
    y = _simplex(c, a_eq, b_eq)
    v = y[:n] - 1.0
    if np.max(np.abs(v) - 1.0) > 1e-9:
        raise SolverFailure("recovered input violates its box bound")
    v = np.clip(v, -1.0, 1.0)
    x = (plant.b @ v + w) / plant.a
    cost = float(np.sum(g * np.abs(x)))
    return AllocationSolution(x, v, cost, "optimal")


def brute_force_oracle(gamma, plant: model.PlantModel, w,
                       grid: int = 41) -> AllocationSolution:
    """Grid search reference for the allocation problem (n <= 4).

    Scans a uniform grid over the input box and refines twice around the
    incumbent, shrinking the span to the previous grid spacing each
    time.  Accuracy is of the order of the final spacing.
    """
    if plant.n > 4:
        raise DimensionTooLarge("brute force restricted to n <= 4")
    if grid < 3:
        raise ValueError("grid must have at least 3 points per axis")
    g = _gamma_vector(gamma, plant.n)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    n = plant.n
    center = np.zeros(n)
    half = 1.0
    best_v = center
    best_cost = np.inf
    for _ in range(3):
        axes = [np.linspace(max(-1.0, c - half), min(1.0, c + half), grid)
                for c in center]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        x = (pts @ plant.b.T + w) / plant.a
        costs = np.sum(g * np.abs(x), axis=1)
        idx = int(np.argmin(costs))
        best_v = pts[idx]
        best_cost = float(costs[idx])
        spacing = max(float(ax[1] - ax[0]) for ax in axes)
        center = best_v
        half = spacing
    x_best = (plant.b @ best_v + w) / plant.a
    return AllocationSolution(x_best, best_v, best_cost, "optimal")


def certify_equilibrium_optimality(gamma, plant: model.PlantModel,
                                   ctrl: model.ControllerSpec, w,
                                   tol: float = 1e-7) -> OptimalityCertificate:
    """Check that the closed-loop equilibrium solves the allocation LP.

    Requires the saturation pair, the decentralized variant, and the
    weight condition on diag(gamma) A^-1 B (ConditionViolated otherwise,
    meaning the certificate is not applicable).  Also verifies the sign
    structure x0_i = -s_i dz(u0_i).
    """
    if plant.pair.kind != sector.KIND_SATURATION:
        raise UnsupportedVariant("certificate requires the saturation pair")
    if ctrl.variant != model.VARIANT_DECENTRALIZED:
        raise UnsupportedVariant("certificate requires the decentralized variant")
    g = _gamma_vector(gamma, plant.n)
    if not check_gamma_condition(g, plant):
        raise ConditionViolated(
            "diag(gamma) A^-1 B is not a strictly column-dominant M-matrix")
    w = np.atleast_1d(np.asarray(w, dtype=float))
    eq = equilibrium.solve_equilibrium(plant, ctrl, w,
                                       tol=min(1e-3 * tol, 1e-10))
    lp = solve_weighted_l1_lp(g, plant, w)
    eq_cost = float(np.sum(g * np.abs(eq.x0)))
    gap = abs(eq_cost - lp.cost)
    deadzone = eq.u0 - np.clip(eq.u0, -1.0, 1.0)
    sign_err = float(np.max(np.abs(eq.x0 + ctrl.s * deadzone)))
    passed = gap <= tol and sign_err <= tol and lp.status == "optimal"
    return OptimalityCertificate(passed, eq_cost, lp.cost, gap, sign_err,
                                 tol, eq, lp)
