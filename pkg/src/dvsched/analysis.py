"""Uniform-speed schedulability bounds for global EDF on identical CPUs.

For a task system with densities d_1 >= d_2 >= ... >= d_n on m identical
processors running at a common speed s, global preemptive EDF meets every
deadline provided

    s >= d_1 + (sum_i d_i - d_1) / m.

The hybrid variant EDF(k) pins the k-1 densest tasks at top priority and
schedules the rest by EDF.  Its sufficient speed is

    s_k = max(d_1, d_k + (sum_{i>k} d_i) / (m - k + 1)),

which for k = 1 reduces to the plain EDF bound.  The offline operating
speed sweeps k, keeps the first k attaining the smallest bound and clamps
the result from below by the platform minimum speed and by d_1 (a job of
the densest task can never run slower than its own density).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

from .rationals import Rat, to_rat
from .tasks import TaskSystem


class InfeasibleError(Exception):
    """The task system cannot be guaranteed on the given processor count."""


def edf_min_speed(ts: TaskSystem, m: int) -> Rat:
    """Minimum uniform speed for plain global EDF on m processors.

    Returns the bound itself, deliberately not clamped to 1; the caller
    decides whether a value above 1 means infeasibility.
    """
    if m < 1:
        raise ValueError(f"processor count must be >= 1, got {m}")
    if ts.n == 0:
        raise ValueError("empty task system")
    d1 = ts.max_density
    return d1 + (ts.total_density - d1) / m


def edfk_speed(ts: TaskSystem, m: int, k: int) -> Rat:
    """Sufficient uniform speed for EDF(k) on m processors.

    Valid for 1 <= k <= min(m, n).  EDF(1) is plain EDF.
    """
    if m < 1:
        raise ValueError(f"processor count must be >= 1, got {m}")
    if not 1 <= k <= min(m, ts.n):
        raise ValueError(f"k must be in 1..min(m, n) = 1..{min(m, ts.n)}, got {k}")
    tail = ts.density(k) + ts.suffix_density_sum(k + 1) / (m - k + 1)
    return max(ts.max_density, tail)


@dataclass(frozen=True)
class OfflineSpeed:
    """Result of the offline speed selection.

    Attributes:
        speed: operating speed, clamped into [max(s_min, d_1), 1].
        k: chosen priority split; ranks 1..k-1 run at top priority.
        privileged: those top-priority ranks, possibly empty.
        sweep_min: smallest unclamped bound seen during the sweep.
    """

    speed: Rat
    k: int
    privileged: tuple
    sweep_min: Rat


def offline_speed(ts: TaskSystem, m: int, s_min) -> OfflineSpeed:
    """Pick the operating speed and priority split for m processors.

    Sweeps k upward, keeping the first k that attains the running
    minimum of edfk_speed, and stops early once the running minimum
    reaches the clamp floor max(s_min, d_1) since no later k could do
    better than the floor.  Raises InfeasibleError when even the best
    bound exceeds speed 1.
    """
    s_min = to_rat(s_min)
    if not 0 < s_min <= 1:
        raise ValueError(f"s_min must be in (0, 1], got {s_min}")
    if ts.n == 0:
        raise ValueError("empty task system")
    floor = max(s_min, ts.max_density)
    best = None
    best_k = 1
    for k in range(1, min(m, ts.n) + 1):
        s = edfk_speed(ts, m, k)
        if best is None or s < best:
            best, best_k = s, k
        if best <= floor:
            break
    if best > 1:
        raise InfeasibleError(
            f"no EDF(k) bound at or below speed 1 on {m} processors "
            f"(best is {best} at k={best_k})"
        )
    return OfflineSpeed(
        speed=max(best, floor),
        k=best_k,
        privileged=tuple(range(1, best_k)),
        sweep_min=best,
    )


def required_processors(ts: TaskSystem) -> int:
    """Smallest sensible processor count for the system.

    Uses ceil((sum_i d_i - d_1) / (1 - d_1)) capped at n, the count that
    brings the plain EDF bound down to 1.  A system containing a task of
    density 1 falls back to one processor per task.  Always at least 1.
    """
    if ts.n == 0:
        raise ValueError("empty task system")
    d1 = ts.max_density
    if d1 >= 1:
        return ts.n
    # math.ceil hands back a gmpy2 integer for mpq inputs
    m = min(ts.n, int(ceil((ts.total_density - d1) / (1 - d1))))
    return max(1, m)
