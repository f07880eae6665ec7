"""Elementwise sector-bounded nonlinearity pairs.

A pair couples a componentwise map f, with f(0) = 0 and all incremental
slopes inside [0, 1], to its complement h(u) = u - f(u).  The canonical
instance is saturation paired with the deadzone.  Shifting a pair around
an operating point and rescaling it coordinatewise both stay inside the
class; the transforms here act exactly on the underlying piecewise-linear
description instead of resampling it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidSectorPair

KIND_SATURATION = "saturation_deadzone"
KIND_IDENTITY = "identity_zero"
KIND_CUSTOM = "custom_pwl"

_SLOPE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PwlFunction:
    """Continuous piecewise-linear scalar function.

    Defined by knot/value pairs plus extension slopes to the left of the
    first knot and to the right of the last one.  A single knot is
    allowed (two half lines meeting at a point).
    """

    knots: np.ndarray
    values: np.ndarray
    slope_left: float
    slope_right: float

    def __post_init__(self):
        knots = np.atleast_1d(np.asarray(self.knots, dtype=float))
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if knots.ndim != 1 or knots.shape != values.shape or knots.size == 0:
            raise InvalidSectorPair("knots and values must be matching 1-d arrays")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise InvalidSectorPair("knots and values must be finite")
        if knots.size > 1 and np.any(np.diff(knots) <= 0.0):
            raise InvalidSectorPair("knots must be strictly increasing")
        if not (np.isfinite(self.slope_left) and np.isfinite(self.slope_right)):
            raise InvalidSectorPair("extension slopes must be finite")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = np.interp(x, self.knots, self.values)
        k0, km = self.knots[0], self.knots[-1]
        y = np.where(x < k0, self.values[0] + self.slope_left * (x - k0), y)
        y = np.where(x > km, self.values[-1] + self.slope_right * (x - km), y)
        return y

    def segment_slopes(self) -> np.ndarray:
        """All slopes, extensions included, left to right."""
        if self.knots.size > 1:
            inner = np.diff(self.values) / np.diff(self.knots)
        else:
            inner = np.empty(0)
        return np.concatenate(([self.slope_left], inner, [self.slope_right]))

    def shifted(self, x0: float) -> "PwlFunction":
        """The recentered function x -> f(x + x0) - f(x0)."""
        f_x0 = float(self(x0))
        return PwlFunction(self.knots - x0, self.values - f_x0,
                           self.slope_left, self.slope_right)

    def scaled(self, d: float) -> "PwlFunction":
        """The conjugated function x -> d f(x / d) for d > 0 (slopes kept)."""
        if not d > 0.0:
            raise InvalidSectorPair("scaling factors must be positive")
        return PwlFunction(d * self.knots, d * self.values,
                           self.slope_left, self.slope_right)

    def _antiderivative(self, x: np.ndarray) -> np.ndarray:
        """Integral from knots[0] to x, exact on every segment."""
        k, v = self.knots, self.values
        m = k.size
        if m > 1:
            seg = np.diff(k)
            cum = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * seg)))
            inner = np.diff(v) / seg
        else:
            cum = np.zeros(1)
            inner = np.empty(0)
        # slope lookup indexed by segment: left extension, inner, right extension
        slopes = np.concatenate(([self.slope_left], inner, [self.slope_right]))
        idx = np.searchsorted(k, x, side="right") - 1
        base = np.clip(idx, 0, m - 1)
        dx = x - k[base]
        sl = slopes[idx + 1]
        return cum[base] + v[base] * dx + 0.5 * sl * dx * dx

    def integral_from_zero(self, b):
        """Exact integral of the function from 0 to b, vectorized in b."""
        b = np.asarray(b, dtype=float)
        shift = self._antiderivative(np.zeros(1))[0]
        return self._antiderivative(b) - shift


@dataclass(frozen=True, eq=False)
class SectorPair:
    """A componentwise sector nonlinearity f with its complement h = id - f."""

    kind: str
    components: tuple[PwlFunction, ...]

    @property
    def n(self) -> int:
        return len(self.components)


def saturation_deadzone(n: int) -> SectorPair:
    """The clip-to-[-1, 1] pair: f = sat, h = deadzone."""
    comp = PwlFunction(np.array([-1.0, 1.0]), np.array([-1.0, 1.0]), 0.0, 0.0)
    return SectorPair(KIND_SATURATION, (comp,) * int(n))


def identity_zero(n: int) -> SectorPair:
    """The unconstrained pair: f = id, h = 0."""
    comp = PwlFunction(np.zeros(1), np.zeros(1), 1.0, 1.0)
    return SectorPair(KIND_IDENTITY, (comp,) * int(n))


def pwl_from_breakpoints(points, slope_left: float = 0.0,
                         slope_right: float = 0.0) -> PwlFunction:
    """Build a component from (x, f(x)) breakpoints sorted by x."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise InvalidSectorPair("breakpoints must be a nonempty sequence of (x, y)")
    return PwlFunction(pts[:, 0], pts[:, 1], slope_left, slope_right)


def custom_pwl(components: Sequence[PwlFunction], validate: bool = True) -> SectorPair:
    """Assemble a pair from per-coordinate piecewise-linear components.

    With ``validate`` (the default) every component must satisfy
    f(0) = 0 and keep all slopes inside [0, 1]; pass ``validate=False``
    only to build deliberately nonconforming pairs for auditing.
    """
    comps = tuple(components)
    if not comps:
        raise InvalidSectorPair("at least one component required")
    if validate:
        for i, comp in enumerate(comps):
            _validate_component(i, comp)
    return SectorPair(KIND_CUSTOM, comps)


def _validate_component(i: int, comp: PwlFunction) -> None:
    slopes = comp.segment_slopes()
    if np.any(slopes < -_SLOPE_TOL) or np.any(slopes > 1.0 + _SLOPE_TOL):
        raise InvalidSectorPair(f"component {i}: slopes must lie in [0, 1]")
    scale = max(1.0, float(np.max(np.abs(comp.values))))
    if abs(float(comp(0.0))) > _SLOPE_TOL * scale:
        raise InvalidSectorPair(f"component {i}: f(0) must be 0")


def _check_width(pair: SectorPair, u: np.ndarray) -> None:
    if u.shape[-1:] != (pair.n,):
        raise DimensionMismatch(
            f"last axis of input has size {u.shape[-1] if u.ndim else 0}, "
            f"pair has {pair.n} coordinates")


def eval_f(pair: SectorPair, u) -> np.ndarray:
    """Apply f along the last axis of ``u`` (any number of leading axes)."""
    u = np.asarray(u, dtype=float)
    _check_width(pair, u)
    if pair.kind == KIND_SATURATION:
        return np.clip(u, -1.0, 1.0)
    if pair.kind == KIND_IDENTITY:
        return u + 0.0
    flat = u.reshape(-1, pair.n)
    out = np.empty_like(flat)
    for i, comp in enumerate(pair.components):
        out[:, i] = comp(flat[:, i])
    return out.reshape(u.shape)


def eval_h(pair: SectorPair, u) -> np.ndarray:
    """Apply the complement h(u) = u - f(u) along the last axis."""
    u = np.asarray(u, dtype=float)
    return u - eval_f(pair, u)


def shift_pair(pair: SectorPair, x0) -> SectorPair:
    """Recenter the pair at the operating point x0 (componentwise).

    The result represents f~(x) = f(x + x0) - f(x0), which stays in the
    sector class with f~(0) = 0; the complement shifts consistently.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    _check_width(pair, x0)
    comps = tuple(comp.shifted(float(x0[i])) for i, comp in enumerate(pair.components))
    return SectorPair(KIND_CUSTOM, comps)


def scale_pair(pair: SectorPair, d) -> SectorPair:
    """Conjugate the pair by a positive diagonal: f~(x) = d f(x / d).

    Incremental slopes are unchanged, so the sector class is preserved.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    _check_width(pair, d)
    if np.any(d <= 0.0) or not np.all(np.isfinite(d)):
        raise InvalidSectorPair("scaling vector must be positive and finite")
    comps = tuple(comp.scaled(float(d[i])) for i, comp in enumerate(pair.components))
    return SectorPair(KIND_CUSTOM, comps)


@dataclass(frozen=True)
class AuditReport:
    """Sampled slope bounds for f and h plus the f(0) check."""

    f_slope_min: float
    f_slope_max: float
    h_slope_min: float
    h_slope_max: float
    f_zero_error: float
    samples: int
    sample_range: tuple[float, float]
    tolerance: float
    passed: bool


def sector_audit(pair: SectorPair, samples: int,
                 sample_range: tuple[float, float] = (-5.0, 5.0),
                 rng: np.random.Generator | None = None,
                 tolerance: float = _SLOPE_TOL) -> AuditReport:
    """Randomized conformance check of the sector class.

    Draws ``samples`` point pairs per coordinate inside ``sample_range``,
    measures incremental slopes of f and of h, and checks f(0) = 0.
    Passes iff every observed slope lies in [-tolerance, 1 + tolerance]
    and the f(0) error is negligible.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    if rng is None:
        rng = np.random.default_rng(0)
    lo, hi = float(sample_range[0]), float(sample_range[1])
    if not hi > lo:
        raise ValueError("empty sample range")
    x = rng.uniform(lo, hi, size=(samples, pair.n))
    y = rng.uniform(lo, hi, size=(samples, pair.n))
    keep = np.abs(y - x) > 1e-9 * (hi - lo)
    fx, fy = eval_f(pair, x), eval_f(pair, y)
    du = (y - x)[keep]
    slopes_f = (fy - fx)[keep] / du
    slopes_h = ((y - fy) - (x - fx))[keep] / du

    def _bounds(s: np.ndarray) -> tuple[float, float]:
        if s.size == 0:
            return 0.0, 0.0
        return float(s.min()), float(s.max())

    f_lo, f_hi = _bounds(slopes_f)
    h_lo, h_hi = _bounds(slopes_h)
    scale = max(1.0, max(float(np.max(np.abs(c.values))) for c in pair.components))
    f_zero = float(np.max(np.abs(eval_f(pair, np.zeros(pair.n)))))
    ok = (min(f_lo, h_lo) >= -tolerance and max(f_hi, h_hi) <= 1.0 + tolerance
          and f_zero <= tolerance * scale)
    return AuditReport(f_lo, f_hi, h_lo, h_hi, f_zero, samples, (lo, hi),
                       tolerance, ok)
