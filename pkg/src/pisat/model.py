"""Plant and controller descriptions and the assembled closed-loop
vector fields.

The plant is a network of first-order agents with diagonal decay, an
M-matrix input coupling, and an elementwise sector nonlinearity acting
on the input:

    dx = -diag(a) x + b f(u) + w

Three controller variants are supported: per-agent PI with local
anti-windup, the same PI loops sharing a rank-one anti-windup signal,
and pure static state feedback.  Evaluation functions broadcast over
leading axes of the state arrays, so a stack of states integrates as
cheaply as a single one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import matrixlab, sector
from .errors import DimensionMismatch, NotMMatrix, UnsupportedVariant

VARIANT_DECENTRALIZED = "decentralized"
VARIANT_COORDINATING = "coordinating"
VARIANT_STATIC = "static"

PI_VARIANTS = (VARIANT_DECENTRALIZED, VARIANT_COORDINATING)
ALL_VARIANTS = PI_VARIANTS + (VARIANT_STATIC,)


def _positive_vector(v, name: str, n: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector")
    if n is not None and arr.size != n:
        raise DimensionMismatch(f"{name} has size {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"{name} must be positive and finite")
    return arr


class ClosedLoopState(NamedTuple):
    """State of the loop: plant state x and integral state z (z is None
    for static feedback)."""

    x: np.ndarray
    z: np.ndarray | None


@dataclass(frozen=True, eq=False)
class PlantModel:
    """First-order agent network dx = -diag(a) x + b f(u) + w.

    a is the per-agent decay (positive, units 1/time), b the input
    coupling (must be an M-matrix), and pair the sector nonlinearity
    applied to the input coordinatewise.
    """

    a: np.ndarray
    b: np.ndarray
    pair: sector.SectorPair

    def __post_init__(self):
        a = _positive_vector(self.a, "a")
        b = matrixlab.as_square_matrix(self.b)
        if b.shape[0] != a.size:
            raise DimensionMismatch("a and b sizes disagree")
        if not matrixlab.is_m_matrix(b):
            raise NotMMatrix("input coupling must be an M-matrix")
        if self.pair.n != a.size:
            raise DimensionMismatch("sector pair width disagrees with a")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.size


@dataclass(frozen=True, eq=False)
class ControllerSpec:
    """Gains and variant of the feedback law.

    PI variants use u = -p x - r z with anti-windup feedback into the
    integrator; the coordinating variant replaces the local anti-windup
    channel by a shared one weighted beta.  Static feedback is
    u = -k_static x with no integral state.
    """

    variant: str
    p: np.ndarray | None = None
    r: np.ndarray | None = None
    s: np.ndarray | None = None
    beta: float | None = None
    k_static: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in ALL_VARIANTS:
            raise UnsupportedVariant(f"unknown variant {self.variant!r}")
        if self.variant in PI_VARIANTS:
            p = _positive_vector(self.p, "p")
            r = _positive_vector(self.r, "r", p.size)
            s = _positive_vector(self.s, "s", p.size)
            object.__setattr__(self, "p", p)
            object.__setattr__(self, "r", r)
            object.__setattr__(self, "s", s)
            if self.variant == VARIANT_COORDINATING:
                beta = float(self.beta) if self.beta is not None else 1.0 / p.size
                if not beta > 0.0:
                    raise ValueError("beta must be positive")
                object.__setattr__(self, "beta", beta)
        else:
            if self.k_static is None:
                raise DimensionMismatch("static feedback requires a gain matrix")
            k = matrixlab.as_square_matrix(self.k_static)
            object.__setattr__(self, "k_static", k)

    @classmethod
    def decentralized(cls, p, r, s) -> "ControllerSpec":
        return cls(VARIANT_DECENTRALIZED, p=p, r=r, s=s)

    @classmethod
    def coordinating(cls, p, r, s, beta: float | None = None) -> "ControllerSpec":
        """Shared anti-windup variant; beta defaults to 1/n."""
        return cls(VARIANT_COORDINATING, p=p, r=r, s=s, beta=beta)

    @classmethod
    def static(cls, k) -> "ControllerSpec":
        return cls(VARIANT_STATIC, k_static=k)

    @property
    def is_pi(self) -> bool:
        return self.variant in PI_VARIANTS

    @property
    def n(self) -> int:
        return self.p.size if self.is_pi else self.k_static.shape[0]


def default_static_gain(plant: PlantModel) -> np.ndarray:
    """Default static gain: the transpose of the input coupling."""
    return plant.b.T.copy()


class DisturbanceSignal:
    """Constant or piecewise-linear-in-time disturbance w(t).

    Sampled signals interpolate linearly between samples and hold the end
    values outside the sampled window.
    """

    def __init__(self, times: np.ndarray | None, values: np.ndarray):
        self._times = times
        self._values = values

    @classmethod
    def constant(cls, w) -> "DisturbanceSignal":
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if w.ndim != 1 or not np.all(np.isfinite(w)):
            raise DimensionMismatch("constant disturbance must be a finite vector")
        return cls(None, w)

    @classmethod
    def sampled(cls, times, values) -> "DisturbanceSignal":
        t = np.atleast_1d(np.asarray(times, dtype=float))
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or v.ndim != 2 or v.shape[0] != t.size or t.size == 0:
            raise DimensionMismatch("times (k,) and values (k, n) expected")
        if t.size > 1 and np.any(np.diff(t) <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("samples must be finite")
        return cls(t, v)

    @property
    def n(self) -> int:
        return self._values.shape[-1] if self._times is not None else self._values.size

    @property
    def is_constant(self) -> bool:
        return self._times is None

    def constant_value(self) -> np.ndarray:
        if not self.is_constant:
            raise ValueError("signal is time-varying")
        return self._values.copy()

    def componentwise_min(self) -> np.ndarray:
        """Per-coordinate minimum over time (the worst sampled value)."""
        if self.is_constant:
            return self._values.copy()
        return self._values.min(axis=0)

    def __call__(self, t):
        if self.is_constant:
            t = np.asarray(t, dtype=float)
            if t.ndim == 0:
                return self._values.copy()
            return np.broadcast_to(self._values, t.shape + self._values.shape).copy()
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t)
        out = np.empty((tt.size, self.n))
        for j in range(self.n):
            out[:, j] = np.interp(tt, self._times, self._values[:, j])
        return out[0] if scalar else out.reshape(t.shape + (self.n,))


def control_input(ctrl: ControllerSpec, x, z=None) -> np.ndarray:
    """Evaluate the feedback law at the given state (broadcasts)."""
    x = np.asarray(x, dtype=float)
    if ctrl.variant == VARIANT_STATIC:
        if z is not None:
            raise DimensionMismatch("static feedback carries no integral state")
        return -(x @ ctrl.k_static.T)
    if z is None:
        raise DimensionMismatch("PI variants require the integral state z")
    z = np.asarray(z, dtype=float)
    return -ctrl.p * x - ctrl.r * z


def closed_loop_derivative(plant: PlantModel, ctrl: ControllerSpec,
                           x, z, w) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
    """Closed-loop vector field at state (x, z) under disturbance value w.

    Returns (dx, dz, u); dz is None for static feedback.  All arguments
    broadcast over leading axes, with agent coordinates on the last axis.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape[-1:] != (plant.n,) or w.shape[-1:] != (plant.n,):
        raise DimensionMismatch("state and disturbance must have n coordinates")
    u = control_input(ctrl, x, z)
    fu = sector.eval_f(plant.pair, u)
    dx = -plant.a * x + fu @ plant.b.T + w
    if ctrl.variant == VARIANT_STATIC:
        return dx, None, u
    hu = u - fu
    if ctrl.variant == VARIANT_DECENTRALIZED:
        dz = x + ctrl.s * hu
    else:
        dz = x + ctrl.beta * np.sum(hu, axis=-1, keepdims=True)
    return dx, dz, u


@dataclass(frozen=True, eq=False)
class TuningReport:
    """Margins of the two gain rules, positive entries are compliant."""

    integral_margin: np.ndarray      # a * p - r
    antiwindup_margin: np.ndarray    # 1 - p * s
    passed: bool


def check_tuning(plant: PlantModel, ctrl: ControllerSpec) -> TuningReport:
    """Check the per-agent gain rules a_i p_i > r_i and p_i s_i < 1.

    These are sufficient conditions for the stability certificate; a
    violation is a warning, not an error, and simulation stays available.
    """
    if not ctrl.is_pi:
        raise UnsupportedVariant("tuning rules apply to PI variants only")
    if ctrl.n != plant.n:
        raise DimensionMismatch("controller width disagrees with plant")
    integral = plant.a * ctrl.p - ctrl.r
    antiwindup = 1.0 - ctrl.p * ctrl.s
    passed = bool(np.all(integral > 0.0) and np.all(antiwindup > 0.0))
    return TuningReport(integral, antiwindup, passed)


def transform_to_error_coords(plant: PlantModel, ctrl: ControllerSpec, eq,
                              x, z) -> tuple[np.ndarray, np.ndarray]:
    """Map a state to equilibrium-relative coordinates.

    Returns (z_t, u_t) with z_t = -r (z - z0) and u_t = u - u0, where
    (x0, z0, u0) come from an equilibrium result ``eq``.  Decentralized
    variant only.
    """
    if ctrl.variant != VARIANT_DECENTRALIZED:
        raise UnsupportedVariant("error coordinates are defined for the "
                                 "decentralized variant")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    u = control_input(ctrl, x, z)
    return -ctrl.r * (z - eq.z0), u - eq.u0


def error_coordinate_pair(plant: PlantModel, eq) -> sector.SectorPair:
    """The sector pair recentered at the equilibrium input u0."""
    return sector.shift_pair(plant.pair, eq.u0)


def error_coords_derivative(plant: PlantModel, ctrl: ControllerSpec, eq,
                            z_t, u_t,
                            pair_t: sector.SectorPair | None = None
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Closed-loop vector field in equilibrium-relative coordinates.

    Evaluates the transformed two-block system driven by the recentered
    pair (f~, h~); it agrees with pushing closed_loop_derivative through
    transform_to_error_coords.
    """
    if ctrl.variant != VARIANT_DECENTRALIZED:
        raise UnsupportedVariant("error coordinates are defined for the "
                                 "decentralized variant")
    z_t = np.asarray(z_t, dtype=float)
    u_t = np.asarray(u_t, dtype=float)
    if pair_t is None:
        pair_t = error_coordinate_pair(plant, eq)
    fu = sector.eval_f(pair_t, u_t)
    hu = u_t - fu
    rp = ctrl.r / ctrl.p
    rs = ctrl.r * ctrl.s
    dz_t = -rp * z_t + rp * u_t - rs * hu
    du_t = (plant.a - rp) * (z_t - u_t) - ctrl.p * (fu @ plant.b.T) - rs * hu
    return dz_t, du_t
