import random

import pytest

from dvsched.analysis import (
    InfeasibleError,
    edf_min_speed,
    edfk_speed,
    offline_speed,
    required_processors,
)
from dvsched.rationals import Rat
from dvsched.tasks import TaskSpec, normalize


def system_from_densities(densities, scale=10):
    # deadline = period = scale, wcet = density * scale
    return normalize(
        [TaskSpec(i, d * scale, scale, scale) for i, d in enumerate(densities, start=1)]
    )


def random_system(rng, n_max=10):
    n = rng.randint(1, n_max)
    tasks = []
    for i in range(n):
        den = rng.randint(2, 40)
        num = rng.randint(1, den - 1)  # density < 1
        tasks.append(TaskSpec(i, Rat(num, den) * 20, 20, 20))
    return normalize(tasks)


REF = system_from_densities([Rat(6, 10), Rat(5, 10), Rat(1, 10)])


def test_edf_min_speed_reference():
    assert edf_min_speed(REF, 2) == Rat(9, 10)


def test_edf_min_speed_single_task():
    ts = system_from_densities([Rat(3, 5)])
    assert edf_min_speed(ts, 1) == Rat(3, 5)
    assert edf_min_speed(ts, 4) == Rat(3, 5)


def test_edf_min_speed_exactly_one():
    ts = system_from_densities([Rat(1, 2)] * 4)
    assert edf_min_speed(ts, 3) == Rat(1)


def test_edf_min_speed_not_clamped():
    ts = system_from_densities([Rat(9, 10), Rat(9, 10)])
    assert edf_min_speed(ts, 1) == Rat(9, 5)


def test_edfk_speed_values():
    assert edfk_speed(REF, 2, 1) == Rat(9, 10)
    assert edfk_speed(REF, 2, 2) == Rat(3, 5)


def test_edfk_speed_k1_is_plain_edf():
    rng = random.Random(3)
    for _ in range(100):
        ts = random_system(rng)
        for m in (1, 2, 4):
            assert edfk_speed(ts, m, 1) == max(ts.max_density, edf_min_speed(ts, m))


def test_edfk_speed_k_equals_n_is_max_density():
    ts = system_from_densities([Rat(7, 10), Rat(2, 10), Rat(1, 10)])
    assert edfk_speed(ts, 5, 3) == Rat(7, 10)


def test_edfk_speed_rejects_bad_k():
    with pytest.raises(ValueError):
        edfk_speed(REF, 2, 0)
    with pytest.raises(ValueError):
        edfk_speed(REF, 2, 3)  # k > m
    with pytest.raises(ValueError):
        edfk_speed(REF, 5, 4)  # k > n


def test_offline_speed_reference():
    res = offline_speed(REF, 2, Rat(291, 1000))
    assert res.speed == Rat(3, 5)
    assert res.k == 2
    assert res.privileged == (1,)
    assert res.sweep_min == Rat(3, 5)


def test_offline_speed_single_task_clamps_to_s_min():
    ts = system_from_densities([Rat(3, 5)])
    res = offline_speed(ts, 1, Rat(7, 10))
    assert res.speed == Rat(7, 10)
    assert res.k == 1
    assert res.privileged == ()
    assert res.sweep_min == Rat(3, 5)


def test_offline_speed_first_k_on_tie():
    ts = system_from_densities([Rat(6, 10), Rat(3, 10), Rat(3, 10)])
    # bounds: k=1: 0.8, k=2: 0.6, k=3: 0.6; first minimizer is k=2
    res = offline_speed(ts, 3, Rat(1, 100))
    assert res.speed == Rat(3, 5)
    assert res.k == 2


def test_offline_speed_infeasible():
    ts = system_from_densities([Rat(9, 10), Rat(9, 10)])
    with pytest.raises(InfeasibleError, match="1 processors"):
        offline_speed(ts, 1, Rat(1, 10))


def test_offline_speed_unit_density_single_task():
    ts = normalize([TaskSpec(1, 5, 5, 5)])
    res = offline_speed(ts, 1, Rat(1, 2))
    assert res.speed == Rat(1)
    assert res.k == 1


def test_offline_speed_dominance_random():
    # never above the plain EDF bound when that bound is feasible,
    # never below the densest task's density
    rng = random.Random(17)
    for _ in range(300):
        ts = random_system(rng)
        m = required_processors(ts)
        res = offline_speed(ts, m, Rat(1, 1000))
        plain = edf_min_speed(ts, m)
        if plain <= 1:
            assert res.speed <= max(plain, ts.max_density)
        assert res.speed >= ts.max_density
        assert res.sweep_min <= res.speed


def test_required_processors_reference():
    assert required_processors(REF) == 2


def test_required_processors_unit_density_falls_back_to_n():
    ts = system_from_densities([Rat(1), Rat(1, 2), Rat(1, 2)])
    assert required_processors(ts) == 3


def test_required_processors_single_task():
    assert required_processors(system_from_densities([Rat(2, 5)])) == 1


def test_required_processors_always_admits_some_split():
    # the plain bound can stay above 1 when the count is capped at n,
    # but the k sweep always finds a feasible split at the recommendation
    rng = random.Random(23)
    for _ in range(300):
        ts = random_system(rng)
        m = required_processors(ts)
        assert 1 <= m <= ts.n
        res = offline_speed(ts, m, Rat(1, 1000))
        assert res.speed <= 1
        from math import ceil
        d1 = ts.max_density
        if ceil((ts.total_density - d1) / (1 - d1)) <= ts.n:
            assert edf_min_speed(ts, m) <= 1
