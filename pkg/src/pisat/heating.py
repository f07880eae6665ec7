"""District heating benchmark: a ten-building network under a shared
heat source, expressed in physical units and convertible to the
standard saturated-loop form.

Buildings exchange heat with outdoor air (loss coefficient a, thermal
capacity c) and receive heat through valves whose interaction is
captured by a static gain matrix b_heat.  States are temperature
deviations from a comfort setpoint; the disturbance is the outdoor
temperature trace.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import matrixlab, model
from .errors import (ConfigError, DimensionMismatch, GapTooLarge, NotMMatrix,
                     ParseError)

BENCHMARK_SIZE = 10
COMFORT_DEGC = 20.0
MAX_GAP_HOURS = 3.0
_GAP_FACTOR = 1.5


@dataclass(frozen=True, eq=False)
class TemperatureSeries:
    """Sampled outdoor temperature in degC on an hour axis."""

    time_h: np.ndarray
    temp_degc: np.ndarray
    gap_fills: tuple[float, ...] = ()

    def __post_init__(self):
        t = np.asarray(self.time_h, dtype=float)
        y = np.asarray(self.temp_degc, dtype=float)
        if t.ndim != 1 or t.shape != y.shape or t.size < 2:
            raise DimensionMismatch("temperature series needs matching 1-d "
                                    "axes with at least two samples")
        if np.any(np.diff(t) <= 0.0):
            raise ParseError("time axis must be strictly increasing")
        object.__setattr__(self, "time_h", t)
        object.__setattr__(self, "temp_degc", y)

    def __call__(self, hours):
        return np.interp(hours, self.time_h, self.temp_degc)

    @property
    def span_h(self) -> tuple[float, float]:
        return float(self.time_h[0]), float(self.time_h[-1])

    def min_degc(self) -> float:
        return float(np.min(self.temp_degc))


@dataclass(frozen=True, eq=False)
class HeatingScenario:
    """Physical network description plus the controller to run on it.

    a: heat loss kW/degC per building, c: capacity kWh/degC, b_heat:
    input gains kW, x_c: comfort setpoint degC, t_ext: outdoor
    temperature (series or a constant).
    """

    a: np.ndarray
    c: np.ndarray
    b_heat: np.ndarray
    x_c: float
    t_ext: TemperatureSeries | float
    controller: model.ControllerSpec
    name: str = "custom"

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        b = np.asarray(self.b_heat, dtype=float)
        n = a.size
        if c.size != n or b.shape != (n, n):
            raise DimensionMismatch("scenario arrays disagree on network size")
        if np.any(a <= 0.0) or np.any(c <= 0.0):
            raise ConfigError("loss and capacity coefficients must be positive")
        if not matrixlab.is_m_matrix(b):
            raise NotMMatrix("heat allocation matrix must be an M-matrix")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b_heat", b)
        object.__setattr__(self, "x_c", float(self.x_c))
        if not isinstance(self.t_ext, TemperatureSeries):
            object.__setattr__(self, "t_ext", float(self.t_ext))

    @property
    def n(self) -> int:
        return self.a.size


def benchmark_scenario(t_ext: TemperatureSeries | float = -10.0,
                       controller: str = "decentralized") -> HeatingScenario:
    """The ten-building reference network with its published gains.

    Valve gains are 12 kW on the diagonal with coupling
    -0.15 min(i, j) kW off it (1-based indices).  ``controller`` picks
    one of decentralized, coordinating, static.
    """
    n = BENCHMARK_SIZE
    a = np.full(n, 0.167)
    c = np.full(n, 2.0)
    idx = np.arange(1, n + 1, dtype=float)
    b_heat = -0.15 * np.minimum(idx[:, None], idx[None, :])
    np.fill_diagonal(b_heat, 12.0)
    p = np.full(n, 2.5)
    r = np.full(n, 0.2)
    s = np.full(n, 2.0)
    if controller == model.VARIANT_DECENTRALIZED:
        ctrl = model.ControllerSpec.decentralized(p, r, s)
    elif controller == model.VARIANT_COORDINATING:
        ctrl = model.ControllerSpec.coordinating(p, r, s)
    elif controller == model.VARIANT_STATIC:
        cap = c[:, None]
        ctrl = model.ControllerSpec.static((b_heat / cap).T)
    else:
        raise ConfigError(f"unknown controller variant {controller!r}")
    return HeatingScenario(a, c, b_heat, COMFORT_DEGC, t_ext, ctrl,
                           name="benchmark10")


def to_standard_form(scn: HeatingScenario) -> tuple[model.PlantModel,
                                                    model.DisturbanceSignal]:
    """Convert a scenario to the normalized saturated-loop form.

    Temperature deviations x = T - x_c evolve with decay a/c, input
    matrix b_heat/c, and disturbance (a/c)(t_ext - x_c).
    """
    from . import sector

    decay = scn.a / scn.c
    b_std = scn.b_heat / scn.c[:, None]
    plant = model.PlantModel(decay, b_std,
                             sector.saturation_deadzone(scn.n))
    if isinstance(scn.t_ext, TemperatureSeries):
        temps = scn.t_ext.temp_degc[:, None] - scn.x_c
        w = model.DisturbanceSignal.sampled(scn.t_ext.time_h,
                                            temps * decay[None, :])
    else:
        w = model.DisturbanceSignal.constant(decay * (scn.t_ext - scn.x_c))
    return plant, w


def default_cost_weights(scn: HeatingScenario) -> np.ndarray:
    """Quadratic state weights proportional to each building's loss rate."""
    return scn.a / scn.c


def synthetic_cold_snap(hours: int = 336, base_degc: float = 0.0,
                        swing_degc: float = 3.0, dip_degc: float = 17.0,
                        dip_center_h: float = 100.0, ramp_h: float = 12.0,
                        hold_h: float = 48.0) -> TemperatureSeries:
    """Hourly outdoor trace: a daily swing plus a trapezoidal cold dip.

    Defaults reach -20 degC at the bottom of the dip, deep enough to
    saturate the benchmark heat sources.
    """
    t = np.arange(0.0, float(hours) + 0.5, 1.0)
    daily = swing_degc * np.sin(2.0 * math.pi * t / 24.0)
    half = 0.5 * hold_h
    dist = np.abs(t - dip_center_h)
    dip = np.clip((ramp_h + half - dist) / ramp_h, 0.0, 1.0)
    return TemperatureSeries(t, base_degc + daily - dip_degc * dip)


def load_temperature_csv(path, time_column: int = 0,
                         temp_column: int = 1) -> TemperatureSeries:
    """Read an outdoor temperature trace from CSV.

    The time column holds either ISO-8601 timestamps (converted to hours
    from the first sample) or plain hour floats.  A header row is
    skipped when the time cell does not parse.  Gaps wider than 1.5x the
    median cadence are filled by linear interpolation and reported in
    ``gap_fills``; gaps beyond 3 hours raise GapTooLarge.
    """
    rows: list[tuple[str, str, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            hi = max(time_column, temp_column)
            if len(parts) <= hi:
                raise ParseError(f"{path}:{lineno}: expected at least "
                                 f"{hi + 1} columns")
            rows.append((parts[time_column], parts[temp_column], lineno))
    if rows and _parse_time_cell(rows[0][0]) is None:
        rows = rows[1:]
    if len(rows) < 2:
        raise ParseError(f"{path}: need at least two samples")

    times: list[float] = []
    temps: list[float] = []
    iso_origin: _dt.datetime | None = None
    for cell, tcell, lineno in rows:
        parsed = _parse_time_cell(cell)
        if parsed is None:
            raise ParseError(f"{path}:{lineno}: cannot parse time {cell!r}")
        if isinstance(parsed, _dt.datetime):
            if iso_origin is None:
                if times:
                    raise ParseError(f"{path}:{lineno}: mixed time formats")
                iso_origin = parsed
            hours = (parsed - iso_origin).total_seconds() / 3600.0
        else:
            if iso_origin is not None:
                raise ParseError(f"{path}:{lineno}: mixed time formats")
            hours = parsed
        try:
            temps.append(float(tcell))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad temperature "
                             f"{tcell!r}") from exc
        if times and hours <= times[-1]:
            raise ParseError(f"{path}:{lineno}: time axis not increasing")
        times.append(hours)

    t = np.array(times)
    y = np.array(temps)
    steps = np.diff(t)
    cadence = float(np.median(steps))
    fills: list[float] = []
    wide = np.nonzero(steps > _GAP_FACTOR * cadence)[0]
    for i in wide:
        if steps[i] > MAX_GAP_HOURS:
            raise GapTooLarge(f"{path}: gap of {steps[i]:.3g} h after "
                              f"t={t[i]:.6g} h exceeds {MAX_GAP_HOURS:g} h")
    if wide.size:
        # insert cadence-spaced points inside each wide gap
        t_parts = [t[:wide[0] + 1]]
        y_parts = [y[:wide[0] + 1]]
        for j, i in enumerate(wide):
            extra = np.arange(t[i] + cadence, t[i + 1] - 0.25 * cadence,
                              cadence)
            fills.extend(float(v) for v in extra)
            nxt = wide[j + 1] + 1 if j + 1 < wide.size else t.size
            t_parts.extend([extra, t[i + 1:nxt]])
            y_parts.extend([np.interp(extra, t, y), y[i + 1:nxt]])
        t = np.concatenate(t_parts)
        y = np.concatenate(y_parts)
    return TemperatureSeries(t, y, tuple(fills))


def _parse_time_cell(cell: str):
    try:
        return float(cell)
    except ValueError:
        pass
    try:
        return _dt.datetime.fromisoformat(cell.replace("Z", "+00:00"))
    except ValueError:
        return None


def scenario_to_json(scn: HeatingScenario) -> dict:
    """Serialize a scenario to a JSON-compatible dict with unit-named keys."""
    ctrl = scn.controller
    cd: dict = {"variant": ctrl.variant}
    if ctrl.is_pi:
        cd["p_per_degc"] = [float(v) for v in ctrl.p]
        cd["r_per_degc_h"] = [float(v) for v in ctrl.r]
        cd["s_degc"] = [float(v) for v in ctrl.s]
        if ctrl.variant == model.VARIANT_COORDINATING:
            cd["beta"] = float(ctrl.beta)
    else:
        cd["k_static"] = [[float(v) for v in row] for row in ctrl.k_static]
    out = {
        "name": scn.name,
        "a_kw_per_degc": [float(v) for v in scn.a],
        "c_kwh_per_degc": [float(v) for v in scn.c],
        "b_heat_kw": [[float(v) for v in row] for row in scn.b_heat],
        "x_c_degc": scn.x_c,
        "controller": cd,
    }
    if isinstance(scn.t_ext, TemperatureSeries):
        out["t_ext"] = {
            "time_h": [float(v) for v in scn.t_ext.time_h],
            "temp_degc": [float(v) for v in scn.t_ext.temp_degc],
        }
    else:
        out["t_ext"] = {"constant_degc": float(scn.t_ext)}
    return out


def scenario_from_json(data: dict) -> HeatingScenario:
    """Rebuild a scenario from :func:`scenario_to_json` output."""
    try:
        a = np.asarray(data["a_kw_per_degc"], dtype=float)
        c = np.asarray(data["c_kwh_per_degc"], dtype=float)
        b = np.asarray(data["b_heat_kw"], dtype=float)
        x_c = float(data["x_c_degc"])
        text = data["t_ext"]
        cd = data["controller"]
        variant = cd["variant"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"scenario json missing or malformed field: {exc}") \
            from exc
    if "constant_degc" in text:
        t_ext: TemperatureSeries | float = float(text["constant_degc"])
    else:
        t_ext = TemperatureSeries(np.asarray(text["time_h"], dtype=float),
                                  np.asarray(text["temp_degc"], dtype=float))
    if variant == model.VARIANT_STATIC:
        ctrl = model.ControllerSpec.static(np.asarray(cd["k_static"],
                                                      dtype=float))
    elif variant in model.PI_VARIANTS:
        p = np.asarray(cd["p_per_degc"], dtype=float)
        r = np.asarray(cd["r_per_degc_h"], dtype=float)
        s = np.asarray(cd["s_degc"], dtype=float)
        if variant == model.VARIANT_DECENTRALIZED:
            ctrl = model.ControllerSpec.decentralized(p, r, s)
        else:
            ctrl = model.ControllerSpec.coordinating(p, r, s,
                                                     cd.get("beta"))
    else:
        raise ConfigError(f"unknown controller variant {variant!r}")
    return HeatingScenario(a, c, b, x_c, t_ext, ctrl,
                           name=str(data.get("name", "custom")))


def save_scenario(scn: HeatingScenario, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(scenario_to_json(scn), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(path) -> HeatingScenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return scenario_from_json(data)
