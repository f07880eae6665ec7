"""Fixed-step simulation of the closed loop, trajectory costs, and the
Lyapunov decrease monitor.

Integration uses the classic fourth-order Runge-Kutta scheme on a fixed
grid; time-varying disturbances are interpolated linearly.  Costs are
time averages computed with trapezoidal quadrature on the recorded
grid.  The monitor evaluates a piecewise-quadratic storage function in
closed form along a trajectory together with its analytic derivative,
and flags any step where the stored value increases beyond tolerance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import matrixlab, model, sector
from .errors import (CertificateFailure, DimensionMismatch, EpsilonTooLarge,
                     NonFiniteState, ParseError, UnsupportedVariant)

BLOWUP_LIMIT = 1e12
# classic RK4 keeps the whole negative real axis stable up to ~2.785/|eig|;
# warn a little earlier
_RK4_STABILITY = 2.5


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded closed-loop run: states, inputs, and saturated inputs.

    ``z`` is None for static feedback.  Rows index time, columns agents.
    """

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray | None
    u: np.ndarray
    v: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def state_at(self, k: int) -> model.ClosedLoopState:
        return model.ClosedLoopState(self.x[k],
                                     None if self.z is None else self.z[k])

    def final_state(self) -> model.ClosedLoopState:
        return self.state_at(-1)


def stability_dt_bound(plant: model.PlantModel, ctrl: model.ControllerSpec) -> float:
    """Step-size bound from the linear-regime closed-loop spectrum."""
    a = np.diag(plant.a)
    if ctrl.variant == model.VARIANT_STATIC:
        j = -a - plant.b @ ctrl.k_static
    else:
        n = plant.n
        j = np.zeros((2 * n, 2 * n))
        j[:n, :n] = -a - plant.b * ctrl.p[None, :]
        j[:n, n:] = -plant.b * ctrl.r[None, :]
        j[n:, :n] = np.eye(n)
    rho = float(np.max(np.abs(np.linalg.eigvals(j))))
    return _RK4_STABILITY / rho if rho > 0.0 else math.inf


def _as_signal(w, n: int) -> model.DisturbanceSignal:
    if isinstance(w, model.DisturbanceSignal):
        if w.n != n:
            raise DimensionMismatch("disturbance width disagrees with plant")
        return w
    return model.DisturbanceSignal.constant(np.broadcast_to(
        np.asarray(w, dtype=float), (n,)))


def integrate(plant: model.PlantModel, ctrl: model.ControllerSpec, w,
              x_init, z_init, t_span: tuple[float, float], dt: float,
              blowup_limit: float = BLOWUP_LIMIT,
              stability_check: bool = True) -> Trajectory:
    """Integrate the closed loop over ``t_span`` with fixed step ``dt``.

    ``w`` may be a DisturbanceSignal or a constant vector.  ``z_init``
    must be None for static feedback.  Every step is recorded.  A rough
    spectral pre-check warns when dt looks too coarse for the linear
    regime; exceeding ``blowup_limit`` in any state raises
    NonFiniteState.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (t1 > t0 and dt > 0.0):
        raise ValueError("need t1 > t0 and dt > 0")
    wsig = _as_signal(w, plant.n)
    x = np.array(x_init, dtype=float).reshape(plant.n)
    if ctrl.variant == model.VARIANT_STATIC:
        if z_init is not None:
            raise DimensionMismatch("static feedback carries no integral state")
        z = None
    else:
        if z_init is None:
            raise DimensionMismatch("PI variants require an initial integral state")
        z = np.array(z_init, dtype=float).reshape(plant.n)
    if stability_check:
        bound = stability_dt_bound(plant, ctrl)
        if dt > bound:
            warnings.warn(f"dt={dt:g} exceeds the linear-regime stability "
                          f"estimate {bound:.3g}; expect inaccuracy or blow-up",
                          stacklevel=2)

    span = t1 - t0
    full = int(math.floor(span / dt + 1e-9))
    rem = span - full * dt
    has_partial = rem > 1e-12 * max(dt, 1.0)
    steps = full + (1 if has_partial else 0)

    ts = np.empty(steps + 1)
    xs = np.empty((steps + 1, plant.n))
    zs = None if z is None else np.empty((steps + 1, plant.n))
    ts[0] = t0
    xs[0] = x
    if zs is not None:
        zs[0] = z

    for k in range(steps):
        t = t0 + k * dt
        h = dt if k < full else rem
        x, z = _rk4_step(plant, ctrl, wsig, t, x, z, h)
        tk = t0 + (k + 1) * dt if k + 1 <= full else t1
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > blowup_limit or (
                z is not None and (not np.all(np.isfinite(z))
                                   or np.max(np.abs(z)) > blowup_limit)):
            raise NonFiniteState(f"state left +-{blowup_limit:g} near t={tk:.6g} "
                                 f"(step {k + 1})")
        ts[k + 1] = tk
        xs[k + 1] = x
        if zs is not None:
            zs[k + 1] = z

    us = model.control_input(ctrl, xs, zs)
    vs = sector.eval_f(plant.pair, us)
    return Trajectory(ts, xs, zs, us, vs)


def _rk4_step(plant, ctrl, wsig, t, x, z, h):
    w0 = wsig(t)
    wm = wsig(t + 0.5 * h)
    w1 = wsig(t + h)

    def deriv(xx, zz, ww):
        dx, dz, _ = model.closed_loop_derivative(plant, ctrl, xx, zz, ww)
        return dx, dz

    k1x, k1z = deriv(x, z, w0)
    k2x, k2z = deriv(x + 0.5 * h * k1x, _step(z, 0.5 * h, k1z), wm)
    k3x, k3z = deriv(x + 0.5 * h * k2x, _step(z, 0.5 * h, k2z), wm)
    k4x, k4z = deriv(x + h * k3x, _step(z, h, k3z), w1)
    xn = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    if z is None:
        return xn, None
    zn = z + (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
    return xn, zn


def _step(z, h, dz):
    return None if z is None else z + h * dz


@dataclass(frozen=True, eq=False)
class CostReport:
    """Time-averaged trajectory costs over the recorded horizon."""

    j1: float
    jinf: float
    j2: float
    horizon: float
    l_diag: np.ndarray


def evaluate_costs(traj: Trajectory, l_diag) -> CostReport:
    """Evaluate the three running costs on a recorded trajectory.

    j1 and jinf average the 1-norm and the max-norm of the state; j2
    averages x^T diag(l) x plus the squared saturated input.
    """
    l = np.atleast_1d(np.asarray(l_diag, dtype=float))
    if l.size != traj.n:
        raise DimensionMismatch("state weight width disagrees with trajectory")
    t = traj.t
    horizon = float(t[-1] - t[0])
    if horizon <= 0.0 or t.size < 2:
        raise ValueError("trajectory must span a positive horizon")

    def avg(f: np.ndarray) -> float:
        dt = np.diff(t)
        return float(np.sum(0.5 * dt * (f[1:] + f[:-1])) / horizon)

    j1 = avg(np.sum(np.abs(traj.x), axis=1))
    jinf = avg(np.max(np.abs(traj.x), axis=1))
    j2 = avg(np.sum(l * traj.x ** 2, axis=1) + np.sum(traj.v ** 2, axis=1))
    return CostReport(j1, jinf, j2, horizon, l)


@dataclass(frozen=True, eq=False)
class LyapunovParameters:
    """Certified weights of the storage function.

    q makes diag(q) P B + (P B)^T diag(q) positive definite (alpha is
    half its smallest eigenvalue), beta_min is the weakest anti-windup
    damping, gain_norm the spectral norm of diag(q) P B, and epsilon the
    chosen mixing weight, strictly below epsilon_bound.
    """

    q: np.ndarray
    alpha: float
    beta_min: float
    gain_norm: float
    epsilon_bound: float
    epsilon: float


def lyapunov_parameters(plant: model.PlantModel, ctrl: model.ControllerSpec,
                        epsilon: float | None = None) -> LyapunovParameters:
    """Derive the storage-function weights for the decentralized loop.

    The admissible range for epsilon keeps a 2x2 comparison form negative
    definite; the default picks half the bound (or 1 when unbounded).
    EpsilonTooLarge reports the bound when the request exceeds it.
    """
    if ctrl.variant != model.VARIANT_DECENTRALIZED:
        raise UnsupportedVariant("storage function covers the decentralized "
                                 "variant only")
    pb = ctrl.p[:, None] * plant.b
    q = matrixlab.diagonal_lyapunov_scaling(pb)
    qpb = q[:, None] * pb
    alpha = 0.5 * float(np.min(np.linalg.eigvalsh(qpb + qpb.T)))
    beta_min = float(np.min(q * ctrl.r * ctrl.s))
    gain_norm = float(np.linalg.norm(qpb, 2))
    quad = gain_norm ** 2 - 4.0 * alpha * beta_min
    bound = math.inf if quad <= 0.0 else 4.0 * alpha * beta_min / quad
    if epsilon is None:
        epsilon = 0.5 * bound if math.isfinite(bound) else 1.0
    else:
        epsilon = float(epsilon)
        if epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if epsilon >= bound:
            raise EpsilonTooLarge(f"epsilon {epsilon:g} is not below the "
                                  f"admissible bound {bound:g}")
    return LyapunovParameters(q, alpha, beta_min, gain_norm, bound, epsilon)


@dataclass(frozen=True, eq=False)
class LyapunovTrace:
    """Storage function along a trajectory with decrease diagnostics."""

    t: np.ndarray
    value: np.ndarray
    vdot_analytic: np.ndarray
    vdot_fd: np.ndarray
    params: LyapunovParameters
    increase_tol: float
    increase_steps: np.ndarray
    passed: bool


def lyapunov_trace(plant: model.PlantModel, ctrl: model.ControllerSpec, eq,
                   traj: Trajectory, epsilon: float | None = None,
                   increase_tol: float = 1e-9) -> LyapunovTrace:
    """Evaluate the storage function along a recorded trajectory.

    Valid for the decentralized variant under the constant disturbance
    used to compute ``eq``.  The value is integrated segmentwise in
    closed form; the analytic derivative is cross-checkable against the
    finite-difference column.  Steps with
    V(t_{k+1}) > V(t_k) + tol max(1, V(t_k)) are flagged.
    """
    if traj.z is None:
        raise UnsupportedVariant("trajectory has no integral state")
    params = lyapunov_parameters(plant, ctrl, epsilon)
    eps = params.epsilon
    q = params.q
    coeff_z = q * (plant.a * ctrl.p / ctrl.r - 1.0)
    if np.any(coeff_z <= 0.0):
        raise CertificateFailure("storage function needs a_i p_i > r_i "
                                 "for every agent")
    pair_t = model.error_coordinate_pair(plant, eq)
    z_t = -ctrl.r * (traj.z - eq.z0)
    u_t = traj.u - eq.u0

    value = np.zeros(traj.t.size)
    for i, comp in enumerate(pair_t.components):
        value += coeff_z[i] * (comp.integral_from_zero(z_t[:, i])
                               + 0.5 * eps * z_t[:, i] ** 2)
        value += q[i] * (comp.integral_from_zero(u_t[:, i])
                         + 0.5 * eps * u_t[:, i] ** 2)

    fz = sector.eval_f(pair_t, z_t)
    fu = sector.eval_f(pair_t, u_t)
    hu = u_t - fu
    gz = fz + eps * z_t
    gu = fu + eps * u_t
    d_t = q * (plant.a - ctrl.r / ctrl.p)
    vdot = -(np.sum((gz - gu) * d_t * (z_t - u_t), axis=1)
             + np.sum(gz * (d_t * ctrl.p * ctrl.s) * hu, axis=1)
             + np.sum(gu * (q * ctrl.r * ctrl.s) * hu, axis=1)
             + np.sum(gu * (q * ctrl.p) * (fu @ plant.b.T), axis=1))
    vdot_fd = np.gradient(value, traj.t, edge_order=2)

    slack = increase_tol * np.maximum(1.0, value[:-1])
    bad = np.nonzero(value[1:] > value[:-1] + slack)[0]
    return LyapunovTrace(traj.t, value, vdot, vdot_fd, params, increase_tol,
                         bad, bad.size == 0)


_CSV_PREFIXES = ("x", "z", "u", "v")


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write the trajectory as CSV with full double precision.

    Header: t,x1..xn,z1..zn,u1..un,v1..vn.  For static feedback the z
    columns are written as zeros.
    """
    n = traj.n
    z = traj.z if traj.z is not None else np.zeros_like(traj.x)
    header = "t," + ",".join(f"{p}{i + 1}" for p in _CSV_PREFIXES
                             for i in range(n))
    blocks = np.hstack([traj.t[:, None], traj.x, z, traj.u, traj.v])
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for row in blocks:
            fh.write(",".join(repr(float(c)) for c in row) + "\n")


def read_trajectory_csv(path) -> Trajectory:
    """Parse a trajectory CSV produced by :func:`write_trajectory_csv`."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty file")
    cols = lines[0].split(",")
    if cols[0] != "t" or (len(cols) - 1) % 4 != 0:
        raise ParseError(f"{path}: unexpected header")
    n = (len(cols) - 1) // 4
    expect = "t," + ",".join(f"{p}{i + 1}" for p in _CSV_PREFIXES
                             for i in range(n))
    if lines[0] != expect:
        raise ParseError(f"{path}: unexpected header")
    try:
        data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != 1 + 4 * n:
        raise ParseError(f"{path}: ragged rows")
    t = data[:, 0]
    x = data[:, 1:n + 1]
    z = data[:, n + 1:2 * n + 1]
    u = data[:, 2 * n + 1:3 * n + 1]
    v = data[:, 3 * n + 1:]
    return Trajectory(t, x, z, u, v)
