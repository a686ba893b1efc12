import random
from dataclasses import dataclass

import pytest

from dvsched.power import (
    IDLE_ZERO,
    analytic_model,
    energy_of_trace,
    model_from_json,
    model_to_json,
    power_at,
    preset_model,
    quantize_speed,
    table_model,
)
from dvsched.rationals import Rat, to_rat


@dataclass
class Seg:
    cpu: int
    start: Rat
    end: Rat
    speed: Rat


@dataclass
class FakeTrace:
    m: int
    horizon: Rat
    segments: list


TM = preset_model("tm5400")
SA = preset_model("sa1100")
CUBE = analytic_model(0, 100, 3)


def test_presets_shape():
    assert len(TM.levels) == 6
    assert len(SA.levels) == 11
    assert TM.levels[-1].speed == 1 and TM.levels[-1].power == 100
    assert SA.levels[-1].speed == 1 and SA.levels[-1].power == 100
    assert TM.min_speed == to_rat("0.286")
    assert SA.min_speed == to_rat("0.291")


def test_preset_rows_are_exact_decimals():
    assert power_at(TM, to_rat("0.714")) == to_rat("59.03")
    assert power_at(TM, to_rat("0.857")) == to_rat("80.59")
    assert power_at(SA, to_rat("0.291")) == to_rat("9.44")
    assert power_at(SA, to_rat("0.583")) == to_rat("33.0")


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown power model"):
        preset_model("tm9999")


def test_quantize_examples():
    assert quantize_speed(TM, to_rat("0.6")) == to_rat("0.714")
    assert quantize_speed(SA, to_rat("0.947")) == to_rat("0.947")
    assert quantize_speed(TM, 1) == Rat(1)
    assert quantize_speed(TM, Rat(1, 100)) == to_rat("0.286")


def test_quantize_rejects_bad_requests():
    with pytest.raises(ValueError, match="exceeds"):
        quantize_speed(TM, to_rat("1.001"))
    with pytest.raises(ValueError, match="positive"):
        quantize_speed(TM, 0)


def test_quantize_properties():
    rng = random.Random(5)
    for model in (TM, SA):
        for _ in range(200):
            s = Rat(rng.randint(1, 1000), 1000)
            q = quantize_speed(model, s)
            assert q >= s
            assert q in model.speeds
            assert quantize_speed(model, q) == q  # idempotent
            # no smaller level would do
            below = [lv for lv in model.speeds if s <= lv < q]
            assert not below


def test_power_at_requires_table_level():
    with pytest.raises(ValueError, match="not a level"):
        power_at(TM, Rat(1, 2))


def test_power_at_analytic():
    assert power_at(CUBE, Rat(1, 2)) == Rat(100, 8)
    assert power_at(CUBE, 1) == Rat(100)
    shifted = analytic_model(5, 10, 2)
    assert power_at(shifted, Rat(1, 2)) == Rat(5) + Rat(10, 4)


def test_analytic_validation():
    with pytest.raises(ValueError):
        analytic_model(0, 100, 1)  # gamma < 2
    with pytest.raises(ValueError):
        analytic_model(-1, 100, 3)
    with pytest.raises(ValueError):
        analytic_model(0, 0, 3)


def test_table_validation():
    with pytest.raises(ValueError, match="include 1"):
        table_model("t", [(100, 1.0, "50", "0.5")])
    with pytest.raises(ValueError, match="increase"):
        table_model("t", [(100, 1.0, "100", "1"), (50, 1.0, "100", "0.5")])
    with pytest.raises(ValueError, match="duplicate"):
        table_model("t", [(100, 1.0, "100", "1"), (99, 1.0, "90", "1")])


def test_energy_full_speed_window():
    tr = FakeTrace(m=1, horizon=Rat(10), segments=[Seg(1, Rat(0), Rat(10), Rat(1))])
    assert energy_of_trace(tr, TM) == Rat(1000)


def test_energy_reference_example():
    # one CPU busy 4 time units at level 0.714, idle 6, idle at floor
    tr = FakeTrace(m=1, horizon=Rat(10), segments=[Seg(1, Rat(0), Rat(4), to_rat("0.714"))])
    assert energy_of_trace(tr, TM) == to_rat("312.32")


def test_energy_idle_zero():
    tr = FakeTrace(m=2, horizon=Rat(10), segments=[Seg(1, Rat(0), Rat(4), Rat(1))])
    assert energy_of_trace(tr, TM, idle=IDLE_ZERO) == Rat(400)


def test_energy_empty_trace():
    tr = FakeTrace(m=3, horizon=Rat(5), segments=[])
    assert energy_of_trace(tr, TM, idle=IDLE_ZERO) == Rat(0)
    assert energy_of_trace(tr, TM) == 3 * 5 * to_rat("12.70")


def test_energy_rejects_overlap():
    tr = FakeTrace(
        m=1,
        horizon=Rat(10),
        segments=[Seg(1, Rat(0), Rat(5), Rat(1)), Seg(1, Rat(4), Rat(6), Rat(1))],
    )
    with pytest.raises(ValueError, match="overlapping"):
        energy_of_trace(tr, TM)


def test_energy_segment_split_additivity():
    rng = random.Random(9)
    for _ in range(50):
        a = Rat(rng.randint(0, 50), 10)
        b = a + Rat(rng.randint(1, 50), 10)
        cut = a + (b - a) * Rat(rng.randint(1, 9), 10)
        speed = to_rat("0.857")
        whole = FakeTrace(1, b, [Seg(1, a, b, speed)])
        split = FakeTrace(1, b, [Seg(1, a, cut, speed), Seg(1, cut, b, speed)])
        assert energy_of_trace(whole, TM) == energy_of_trace(split, TM)


def test_energy_analytic_busy_identity():
    # with c0 = 0, energy of work w run at speed s is c1 * w * s**(gamma-1)
    rng = random.Random(31)
    for _ in range(50):
        w = Rat(rng.randint(1, 40), 4)
        s = Rat(rng.randint(1, 16), 16)
        tr = FakeTrace(1, w / s, [Seg(1, Rat(0), w / s, s)])
        assert energy_of_trace(tr, CUBE, idle=IDLE_ZERO) == 100 * w * s ** 2


def test_model_json_round_trip():
    for model in (TM, SA, CUBE, analytic_model(2, 50, Rat(5, 2), name="complicated")):
        again = model_from_json(model_to_json(model))
        assert again.name == model.name
        if model.is_table:
            assert again.speeds == model.speeds
            assert [lv.power for lv in again.levels] == [lv.power for lv in model.levels]
        else:
            assert (again.c0, again.c1, again.gamma) == (model.c0, model.c1, model.gamma)


def test_model_json_analytic_literal():
    m = model_from_json('{"name": "cube", "analytic": {"c0": 0, "c1": 100, "gamma": 3}}')
    assert power_at(m, Rat(3, 5)) == Rat(100) * Rat(27, 125)


def test_noninteger_gamma_is_deterministic():
    m = analytic_model(0, 1, Rat(5, 2))
    assert power_at(m, Rat(1, 2)) == power_at(m, Rat(1, 2))
    assert 0 < power_at(m, Rat(1, 2)) < 1
