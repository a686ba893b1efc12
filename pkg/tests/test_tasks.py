import random

import pytest

from dvsched.rationals import Rat, rat_lcm, rat_str, to_rat
from dvsched.tasks import TaskSpec, TaskSystem, normalize, tasks_from_json, tasks_to_json


def brute_hyperperiod(periods):
    # independent oracle: smallest positive multiple of the largest period
    # that is an integer multiple of every period
    base = max(periods)
    k = 1
    while True:
        cand = base * k
        if all((cand / p).denominator == 1 for p in periods):
            return cand
        k += 1


def test_to_rat_forms():
    assert to_rat("3/2") == Rat(3, 2)
    assert to_rat("0.1") == Rat(1, 10)
    assert to_rat(0.1) == Rat(1, 10)
    assert to_rat(7) == Rat(7)
    assert to_rat("  5/10 ") == Rat(1, 2)
    with pytest.raises(TypeError):
        to_rat(True)


def test_rat_str_always_has_denominator():
    assert rat_str(Rat(3, 2)) == "3/2"
    assert rat_str(Rat(4, 2)) == "2/1"


def test_density_values():
    assert TaskSpec(1, 3, 5, 5).density == Rat(3, 5)
    assert TaskSpec(2, 4, 4, 8).density == Rat(1)
    assert TaskSpec(3, 1, 10, 10).density == Rat(1, 10)


def test_task_invariants_name_the_task():
    with pytest.raises(ValueError, match="task 9"):
        TaskSpec(9, 0, 5, 5)
    with pytest.raises(ValueError, match="task 4"):
        TaskSpec(4, 6, 5, 5)
    with pytest.raises(ValueError, match="task 2"):
        TaskSpec(2, 1, 8, 5)


def test_normalize_orders_by_density_then_id():
    tasks = [
        TaskSpec(7, 1, 2, 2),   # density 1/2
        TaskSpec(5, 3, 4, 4),   # density 3/4
        TaskSpec(2, 3, 4, 4),   # density 3/4
    ]
    ts = normalize(tasks)
    assert [t.task_id for t in ts.tasks] == [2, 5, 7]
    assert ts.max_density == Rat(3, 4)
    assert ts.density(3) == Rat(1, 2)


def test_normalize_rejects_duplicate_ids():
    with pytest.raises(ValueError, match="duplicate task id 3"):
        normalize([TaskSpec(3, 1, 2, 2), TaskSpec(3, 1, 4, 4)])


def test_suffix_density_sum():
    ts = normalize([
        TaskSpec(1, 3, 5, 5),
        TaskSpec(2, 5, 10, 10),
        TaskSpec(3, 1, 10, 10),
    ])
    assert ts.densities == (Rat(3, 5), Rat(1, 2), Rat(1, 10))
    assert ts.suffix_density_sum(1) == Rat(6, 5)
    assert ts.suffix_density_sum(2) == Rat(3, 5)
    assert ts.suffix_density_sum(4) == Rat(0)
    with pytest.raises(IndexError):
        ts.suffix_density_sum(5)
    with pytest.raises(IndexError):
        ts.suffix_density_sum(0)


def test_suffix_recurrence_random():
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randint(1, 12)
        tasks = []
        for i in range(n):
            d = Rat(rng.randint(2, 30))
            c = Rat(rng.randint(1, int(d)))
            tasks.append(TaskSpec(i, c, d, d + rng.randint(0, 10)))
        ts = normalize(tasks)
        for rank in range(1, ts.n + 1):
            assert ts.suffix_density_sum(rank) == ts.density(rank) + ts.suffix_density_sum(rank + 1)
        assert ts.suffix_density_sum(1) == ts.total_density


def test_hyperperiod_integers():
    ts = normalize([
        TaskSpec(1, 1, 5, 5),
        TaskSpec(2, 1, 8, 8),
        TaskSpec(3, 1, 10, 10),
    ])
    assert ts.hyperperiod() == Rat(40)


def test_hyperperiod_single_task():
    ts = normalize([TaskSpec(1, 2, 6, 6)])
    assert ts.hyperperiod() == Rat(6)


def test_hyperperiod_rational_periods():
    ts = normalize([
        TaskSpec(1, 1, Rat(3, 2), Rat(3, 2)),
        TaskSpec(2, 1, 2, 2),
    ])
    assert ts.hyperperiod() == Rat(6)
    assert ts.hyperperiod() == brute_hyperperiod([Rat(3, 2), Rat(2)])


def test_hyperperiod_matches_brute_oracle_random():
    rng = random.Random(11)
    for _ in range(40):
        periods = [
            Rat(rng.randint(1, 12), rng.randint(1, 6)) for _ in range(rng.randint(1, 5))
        ]
        assert rat_lcm(periods) == brute_hyperperiod(periods)


def test_hyperperiod_is_integer_multiple_of_each_period():
    rng = random.Random(13)
    for _ in range(40):
        periods = [Rat(rng.randint(1, 40), rng.randint(1, 8)) for _ in range(rng.randint(1, 6))]
        h = rat_lcm(periods)
        for p in periods:
            assert (h / p).denominator == 1


def test_tasks_json_round_trip():
    text = """
    [
      {"id": 1, "wcet": "3/2", "deadline": 2, "period": 2},
      {"id": 2, "wcet": 0.1, "deadline": "1/1", "period": 1.5}
    ]
    """
    specs = tasks_from_json(text)
    assert specs[0].wcet == Rat(3, 2)
    assert specs[1].wcet == Rat(1, 10)
    assert specs[1].period == Rat(3, 2)
    again = tasks_from_json(tasks_to_json(specs))
    assert again == specs


def test_tasks_json_errors():
    with pytest.raises(ValueError, match="missing field"):
        tasks_from_json('[{"id": 1, "wcet": 1, "deadline": 2}]')
    with pytest.raises(ValueError, match="JSON array"):
        tasks_from_json('{"id": 1}')
    with pytest.raises(ValueError, match="task id"):
        tasks_from_json('[{"id": "a", "wcet": 1, "deadline": 2, "period": 2}]')
