"""DVS processor power models and trace energy accounting.

Two kinds of model: a discrete frequency/voltage table (speeds normalized
to the top frequency, power normalized to percent of full-speed draw) and
an analytic curve p(s) = c0 + c1 * s**gamma with gamma >= 2.

Power values are kept as exact rationals so energy totals, and therefore
cross-method energy comparisons, are exact.  Published table entries are
decimal numbers and convert exactly; analytic curves are exact whenever
gamma is an integer, otherwise the float power value is frozen into a
rational so results stay deterministic.

Two built-in tables, selectable by name:

    tm5400  six levels, 700 MHz down to 200 MHz
    sa1100  eleven levels, 206 MHz down to 59.0 MHz equivalent
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional, Sequence

from .rationals import Rat, rat_str, to_rat


@dataclass(frozen=True)
class SpeedLevel:
    """One row of a DVS table.  Frequency and voltage are informational."""

    speed: Rat
    power: Rat
    frequency_mhz: Optional[float] = None
    voltage: Optional[float] = None


@dataclass(frozen=True)
class PowerModel:
    name: str
    levels: Optional[tuple] = None
    c0: Optional[Rat] = None
    c1: Optional[Rat] = None
    gamma: Optional[Rat] = None

    def __post_init__(self):
        if (self.levels is None) == (self.c0 is None):
            raise ValueError("model must be either a table or an analytic curve")
        if self.levels is not None:
            levels = tuple(sorted(self.levels, key=lambda lv: lv.speed))
            object.__setattr__(self, "levels", levels)
            if not levels:
                raise ValueError("empty speed table")
            for lo, hi in zip(levels, levels[1:]):
                if lo.speed == hi.speed:
                    raise ValueError(f"duplicate table speed {lo.speed}")
                if lo.power >= hi.power:
                    raise ValueError(
                        f"power must increase with speed "
                        f"({lo.power} at {lo.speed} vs {hi.power} at {hi.speed})"
                    )
            if levels[0].speed <= 0 or levels[-1].speed != 1:
                raise ValueError("table speeds must lie in (0, 1] and include 1")
            if any(lv.power <= 0 for lv in levels):
                raise ValueError("table powers must be positive")
        else:
            if self.c0 < 0 or self.c1 <= 0 or self.gamma < 2:
                raise ValueError("analytic model needs c0 >= 0, c1 > 0, gamma >= 2")

    @property
    def is_table(self) -> bool:
        return self.levels is not None

    @property
    def min_speed(self) -> Rat:
        if self.is_table:
            return self.levels[0].speed
        raise ValueError("analytic models have no intrinsic minimum speed")

    @property
    def speeds(self) -> tuple:
        return tuple(lv.speed for lv in self.levels) if self.is_table else ()


def table_model(name: str, rows: Sequence) -> PowerModel:
    """Build a table model from (frequency, voltage, power, speed) rows."""
    levels = tuple(
        SpeedLevel(
            speed=to_rat(speed),
            power=to_rat(power),
            frequency_mhz=float(freq) if freq is not None else None,
            voltage=float(volt) if volt is not None else None,
        )
        for freq, volt, power, speed in rows
    )
    return PowerModel(name=name, levels=levels)


def analytic_model(c0, c1, gamma, name: str = "analytic") -> PowerModel:
    return PowerModel(name=name, c0=to_rat(c0), c1=to_rat(c1), gamma=to_rat(gamma))


_TM5400_ROWS = (
    (700, 1.65, "100", "1"),
    (600, 1.60, "80.59", "0.857"),
    (500, 1.50, "59.03", "0.714"),
    (400, 1.40, "41.14", "0.571"),
    (300, 1.25, "24.60", "0.429"),
    (200, 1.10, "12.70", "0.286"),
)

_SA1100_ROWS = (
    (206, 1.50, "100", "1"),
    (195, 1.42, "78.9", "0.947"),
    (180, 1.30, "63.2", "0.874"),
    (165, 1.20, "50.0", "0.801"),
    (150, 1.15, "39.9", "0.728"),
    (135, 1.10, "33.6", "0.655"),
    (120, 1.08, "33.0", "0.583"),
    (105, 0.95, "19.8", "0.510"),
    (90, 0.90, "15.0", "0.437"),
    (75, 0.82, "11.8", "0.364"),
    (60, 0.80, "9.44", "0.291"),
)

_PRESETS = {"tm5400": _TM5400_ROWS, "sa1100": _SA1100_ROWS}


def preset_model(name: str) -> PowerModel:
    """Named built-in table, "tm5400" or "sa1100"."""
    key = name.lower()
    if key not in _PRESETS:
        raise ValueError(f"unknown power model {name!r}; presets: {sorted(_PRESETS)}")
    return table_model(key, _PRESETS[key])


def quantize_speed(model: PowerModel, s_req) -> Rat:
    """Smallest table speed at or above s_req.

    s_req must lie in (0, 1]; a request above 1 cannot be served by any
    level and raises ValueError.
    """
    if not model.is_table:
        raise ValueError("quantization requires a table model")
    s_req = to_rat(s_req)
    if s_req <= 0:
        raise ValueError(f"requested speed must be positive, got {s_req}")
    if s_req > 1:
        raise ValueError(f"requested speed {s_req} exceeds the top level")
    for lv in model.levels:
        if lv.speed >= s_req:
            return lv.speed
    raise AssertionError("unreachable: table includes speed 1")


def power_at(model: PowerModel, s) -> Rat:
    """Power draw at speed s, exact.

    Table models require s to be one of the table speeds; the simulator
    only ever runs at quantized levels, so anything else is a bug.
    """
    s = to_rat(s)
    if model.is_table:
        for lv in model.levels:
            if lv.speed == s:
                return lv.power
        raise ValueError(f"speed {s} is not a level of table {model.name!r}")
    g = model.gamma
    if g.denominator == 1:
        return model.c0 + model.c1 * s ** int(g)
    # non-integer exponent: freeze the float result into a rational
    return model.c0 + model.c1 * to_rat(float(s) ** float(g))


IDLE_AT_MIN = "s_min"
IDLE_ZERO = "zero"


def energy_of_trace(trace, model: PowerModel, idle: str = IDLE_AT_MIN, s_min=None) -> Rat:
    """Exact energy of a schedule trace under a power model.

    Busy segments contribute power_at(speed) * duration.  Idle time on
    each CPU over the span [0, max(horizon, last completion)] contributes
    power_at(s_min) per unit under the "s_min" policy (the platform never
    gates below its floor) or nothing under "zero".

    Raises ValueError if two busy segments overlap on one CPU.
    """
    if idle not in (IDLE_AT_MIN, IDLE_ZERO):
        raise ValueError(f"unknown idle policy {idle!r}")
    if idle == IDLE_AT_MIN:
        if s_min is None:
            s_min = model.min_speed
        s_min = to_rat(s_min)
        idle_power = power_at(model, s_min)
    else:
        idle_power = Rat(0)

    span = trace.horizon
    per_cpu = {}
    for seg in trace.segments:
        per_cpu.setdefault(seg.cpu, []).append(seg)
        if seg.end > span:
            span = seg.end

    busy_energy = Rat(0)
    busy_time = Rat(0)
    for cpu, segs in per_cpu.items():
        segs.sort(key=lambda s: s.start)
        prev_end = None
        for seg in segs:
            if prev_end is not None and seg.start < prev_end:
                raise ValueError(
                    f"overlapping busy segments on cpu {cpu} at {seg.start}"
                )
            prev_end = seg.end
            dur = seg.end - seg.start
            busy_energy += power_at(model, seg.speed) * dur
            busy_time += dur

    idle_time = trace.m * span - busy_time
    return busy_energy + idle_power * idle_time


def model_from_json(text: str) -> PowerModel:
    """Parse a power model JSON document.

    Either {"name": ..., "rows": [{"freq", "volt", "power", "speed"}]}
    or {"name": ..., "analytic": {"c0", "c1", "gamma"}}.
    """
    data = json.loads(text, parse_float=Decimal)
    if not isinstance(data, dict):
        raise ValueError("power model file must contain a JSON object")
    name = data.get("name", "custom")
    if "rows" in data:
        rows = [
            (r.get("freq"), r.get("volt"), r["power"], r["speed"])
            for r in data["rows"]
        ]
        return table_model(name, rows)
    if "analytic" in data:
        a = data["analytic"]
        return analytic_model(a["c0"], a["c1"], a["gamma"], name=name)
    raise ValueError("power model needs either 'rows' or 'analytic'")


def model_to_json(model: PowerModel) -> str:
    if model.is_table:
        payload = {
            "name": model.name,
            "rows": [
                {
                    "freq": lv.frequency_mhz,
                    "volt": lv.voltage,
                    "power": rat_str(lv.power),
                    "speed": rat_str(lv.speed),
                }
                for lv in model.levels
            ],
        }
    else:
        payload = {
            "name": model.name,
            "analytic": {
                "c0": rat_str(model.c0),
                "c1": rat_str(model.c1),
                "gamma": rat_str(model.gamma),
            },
        }
    return json.dumps(payload, indent=2)
