"""Closed-loop equilibrium computation by contraction iteration.

For the decentralized PI anti-windup loop under a constant disturbance,
the stationary input u0 solves

    0 = h(u0) + S^-1 A^-1 B f(u0) + S^-1 A^-1 w.

After a diagonal change of variables that makes the coupling strictly
column-dominant, this becomes a fixed point of a map that contracts in
the 1-norm with an explicitly computable bound below one, so plain
iteration converges from any start to the unique equilibrium, and the
distance to it is controlled by the last step size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matrixlab, model, sector
from .errors import DimensionMismatch, MaxIterationsExceeded, UnsupportedVariant

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10 ** 6


@dataclass(frozen=True, eq=False)
class ContractionMap:
    """The scaled fixed-point map together with its contraction data.

    Iterates act on zeta = d * u.  ``contraction_bound`` is the 1-norm
    Lipschitz constant max(lam, max_i mu_i), always below one.
    """

    b_hat: np.ndarray
    w_hat: np.ndarray
    k: float
    lam: float
    mu: np.ndarray
    contraction_bound: float
    scaling_d: np.ndarray
    scaled_pair: sector.SectorPair

    def __post_init__(self):
        bkt = (self.b_hat - self.k * np.eye(self.b_hat.shape[0])).T
        object.__setattr__(self, "_bkt", bkt)

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        f = sector.eval_f(self.scaled_pair, zeta)
        h = zeta - f
        return -((1.0 - self.k) * h + f @ self._bkt + self.w_hat) / self.k

    @property
    def n(self) -> int:
        return self.w_hat.size


@dataclass(frozen=True, eq=False)
class FixedPointResult:
    zeta: np.ndarray
    iterations: int
    deltas: np.ndarray


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Unique closed-loop equilibrium and solver diagnostics."""

    x0: np.ndarray
    z0: np.ndarray
    u0: np.ndarray
    residual_stationary: float
    iterations: int
    contraction_bound: float
    scaling_d: np.ndarray
    k: float


def build_contraction(plant: model.PlantModel, ctrl: model.ControllerSpec,
                      w) -> ContractionMap:
    """Assemble the contraction map for the stationary input equation.

    The diagonal scaling d comes from the column dominance scaling of
    S^-1 A^-1 B; the offset constant k exceeds max(1, 2 max_i b_hat_ii),
    which makes every per-coordinate Lipschitz factor strictly less
    than one.
    """
    if ctrl.variant != model.VARIANT_DECENTRALIZED:
        raise UnsupportedVariant("equilibrium solving covers the decentralized "
                                 "variant only")
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.size != plant.n:
        raise DimensionMismatch("disturbance width disagrees with plant")
    sa = ctrl.s * plant.a
    m = plant.b / sa[:, None]
    d = matrixlab.column_dominance_scaling(m)
    b_hat = d[:, None] * m / d[None, :]
    w_hat = d * (w / sa)
    k = max(1.0, 2.0 * float(np.max(np.diag(b_hat)))) + 1.0
    lam = (k - 1.0) / k
    col_off = np.sum(np.abs(b_hat), axis=0) - np.abs(np.diag(b_hat))
    mu = (k - (np.diag(b_hat) - col_off)) / k
    bound = max(lam, float(np.max(mu)))
    scaled = sector.scale_pair(plant.pair, d)
    return ContractionMap(b_hat, w_hat, k, lam, mu, bound, d, scaled)


def iterate_fixed_point(cmap: ContractionMap, zeta0,
                        tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER) -> FixedPointResult:
    """Iterate zeta <- T(zeta) until the step is small enough.

    Stops once the 1-norm step is at most tol (1 - g) / g with g the
    contraction bound; by the a-posteriori contraction estimate the
    final iterate is then within tol of the fixed point in the 1-norm.
    ``zeta0`` may be a single vector or a stack of start points (rows),
    in which case the stop criterion applies to the worst row.
    """
    zeta = np.array(zeta0, dtype=float)
    if zeta.shape[-1:] != (cmap.n,):
        raise DimensionMismatch("start point width disagrees with the map")
    g = cmap.contraction_bound
    thresh = tol * (1.0 - g) / g
    deltas = []
    for it in range(1, max_iter + 1):
        nxt = cmap(zeta)
        delta = float(np.max(np.sum(np.abs(nxt - zeta), axis=-1)))
        deltas.append(delta)
        zeta = nxt
        if delta <= thresh:
            return FixedPointResult(zeta, it, np.asarray(deltas))
    raise MaxIterationsExceeded(
        f"no convergence in {max_iter} iterations, last step {deltas[-1]:.3e}")


def stationary_residual(plant: model.PlantModel, ctrl: model.ControllerSpec,
                        u, w) -> float:
    """Max-norm residual of the stationary input equation at u."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    f = sector.eval_f(plant.pair, u)
    sa = ctrl.s * plant.a
    return float(np.max(np.abs((u - f) + (f @ plant.b.T) / sa + w / sa)))


def solve_equilibrium(plant: model.PlantModel, ctrl: model.ControllerSpec, w,
                      tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> EquilibriumResult:
    """Compute the unique equilibrium of the decentralized loop.

    Runs the contraction iteration from zeta0 = -w_hat / k, tightens the
    internal tolerance if needed until the reported stationary residual
    is at most ``tol``, and back-substitutes the plant and integrator
    states.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    cmap = build_contraction(plant, ctrl, w)
    zeta = -cmap.w_hat / cmap.k
    budget = max_iter
    total = 0
    ztol = tol
    for _ in range(6):
        fp = iterate_fixed_point(cmap, zeta, ztol, budget - total)
        total += fp.iterations
        zeta = fp.zeta
        u0 = zeta / cmap.scaling_d
        residual = stationary_residual(plant, ctrl, u0, w)
        if residual <= tol:
            break
        ztol *= 1e-2
    else:
        raise MaxIterationsExceeded(
            f"stationary residual {residual:.3e} stuck above tol {tol:.3e}")
    f0 = sector.eval_f(plant.pair, u0)
    x0 = (plant.b @ f0 + w) / plant.a
    z0 = (-ctrl.p * x0 - u0) / ctrl.r
    return EquilibriumResult(x0, z0, u0, residual, total,
                             cmap.contraction_bound, cmap.scaling_d, cmap.k)


def measure_contraction(cmap: ContractionMap, trials: int,
                        rng: np.random.Generator | None = None) -> float:
    """Empirical 1-norm Lipschitz ratio of the fixed-point map.

    Samples random point pairs at small and large scale (relative to the
    knots of the scaled pair) and adds axis-aligned probes, so for
    diagonal linear maps the exact operator norm is attained.  The
    returned maximum never exceeds the contraction bound.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if rng is None:
        rng = np.random.default_rng(0)
    n = cmap.n
    base = max(1.0, max(float(np.max(np.abs(c.knots))) for c in
                        cmap.scaled_pair.components))
    half = trials // 2 + 1
    pts_a = np.vstack([rng.normal(0.0, 0.3 * base, (half, n)),
                       rng.normal(0.0, 3.0 * base, (trials - half + 1, n))])
    pts_b = np.vstack([rng.normal(0.0, 0.3 * base, (half, n)),
                       rng.normal(0.0, 3.0 * base, (trials - half + 1, n))])
    eye = np.eye(n)
    for c in (0.25 * base, 4.0 * base):
        pts_a = np.vstack([pts_a, c * eye])
        pts_b = np.vstack([pts_b, np.zeros((n, n))])
    diff = np.sum(np.abs(pts_a - pts_b), axis=1)
    keep = diff > 0.0
    out = np.sum(np.abs(cmap(pts_a) - cmap(pts_b)), axis=1)
    return float(np.max(out[keep] / diff[keep]))


def probe_uniqueness(plant: model.PlantModel, ctrl: model.ControllerSpec, w,
                     restarts: int = 50, u_tol: float = 1e-8,
                     rng: np.random.Generator | None = None,
                     max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Re-solve from many random starts and report the disagreement.

    Returns the sum over coordinates of the spread of the recovered
    stationary inputs, an upper bound on the pairwise 1-norm distance
    between any two restarts.  Small values support uniqueness.
    """
    if restarts < 2:
        raise ValueError("need at least two restarts")
    if rng is None:
        rng = np.random.default_rng(0)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    cmap = build_contraction(plant, ctrl, w)
    radius = 10.0 * (1.0 + float(np.max(np.abs(cmap.w_hat))))
    zeta0 = rng.uniform(-radius, radius, size=(restarts, cmap.n))
    ztol = u_tol * float(np.min(cmap.scaling_d))
    fp = iterate_fixed_point(cmap, zeta0, ztol, max_iter)
    u = fp.zeta / cmap.scaling_d
    return float(np.sum(u.max(axis=0) - u.min(axis=0)))
