"""Online one-shot slowdown on top of global EDF(k).

When a job is picked for execution at time t the scheduler asks: up to
which future instant t' is this job guaranteed to keep its processor,
no matter what the other tasks do?  With sporadic releases the platform
state is only partially known, so the guarantee is a counting bound.

For the subject task u at instant t, with B_i the latest release of
task i (or -period_i before any release):

  may_arrive(i, t')    = 1  iff  t' >= B_i + period_i
                         (a new job of i may exist by t'),
  busy_elsewhere(i, t') = 1 iff  i != u, the latest job of i still has
                         worst-case work left and t <= t' < B_i + deadline_i
                         (that job may occupy a CPU at t').

  free_cpus(t') = m - sum_i busy_elsewhere(i, t') - sum_i may_arrive(i, t')

free_cpus is a pessimistic count of processors with nothing to run but
the subject.  While it stays positive no other job can be forced onto
the subject's CPU, so the subject may stretch its remaining worst-case
work until the earliest instant where the count can reach zero (or its
own deadline, whichever is first).  The stretch is applied at most once
per dispatch and never drops below the platform floor speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analysis import OfflineSpeed
from .rationals import Rat, to_rat
from .tasks import TaskSystem


@dataclass(frozen=True)
class TaskView:
    """Per-task state snapshot used by the contention bound.

    last_release is the release instant of the most recent job, or
    -period when the task has not released yet (so a first job may
    arrive at any instant from 0 on).  pending_work is the remaining
    worst-case execution of that job at unit speed, 0 once it finished.
    """

    rank: int
    period: Rat
    deadline: Rat
    last_release: Rat
    pending_work: Rat


@dataclass(frozen=True)
class ContentionView:
    """Platform snapshot at a dispatch instant, for one subject task."""

    m: int
    subject: int
    at: Rat
    tasks: tuple

    def __post_init__(self):
        ranks = [tv.rank for tv in self.tasks]
        if len(set(ranks)) != len(ranks):
            raise ValueError("duplicate task ranks in view")
        if self.subject not in ranks:
            raise ValueError(f"subject rank {self.subject} not in view")


def free_cpu_bound(view: ContentionView, t_prime) -> int:
    """Evaluate the free-CPU count bound at one instant t' >= t."""
    t = view.at
    if t_prime < t:
        raise ValueError(f"bound queried at {t_prime} before snapshot time {t}")
    count = view.m
    for tv in view.tasks:
        if t_prime >= tv.last_release + tv.period:
            count -= 1
        if (
            tv.rank != view.subject
            and tv.pending_work > 0
            and t_prime < tv.last_release + tv.deadline
        ):
            count -= 1
    return count


def next_contention(view: ContentionView):
    """Earliest t' >= t where the free-CPU bound can reach zero.

    Returns math.inf when there are more processors than tasks (the
    bound never drops to zero).  Otherwise scans the instants where the
    bound steps: deadlines of other unfinished jobs raise it by one,
    potential arrivals lower it by one.  All steps at one instant apply
    before the test, matching the boundary semantics above (an arrival
    counts at its instant, a deadline stops counting at its instant).
    O(n log n) in the number of tasks.
    """
    n = len(view.tasks)
    if view.m > n:
        return math.inf
    t = view.at
    value = view.m
    deltas = {}
    for tv in view.tasks:
        arrival = tv.last_release + tv.period
        if arrival <= t:
            value -= 1
        else:
            deltas[arrival] = deltas.get(arrival, 0) - 1
        if tv.rank != view.subject and tv.pending_work > 0:
            dl = tv.last_release + tv.deadline
            if dl > t:
                value -= 1
                deltas[dl] = deltas.get(dl, 0) + 1
    if value <= 0:
        return t
    for boundary in sorted(deltas):
        value += deltas[boundary]
        if value <= 0:
            return boundary
    raise AssertionError(
        "free-CPU bound never reached zero with m <= n; broken task view"
    )


def initial_speed(ts: TaskSystem, m: int, k: int, rank: int) -> Rat:
    """Per-task starting speed under the EDF(k) split, before clamping.

    Privileged ranks (below k) start at their own density; the others
    share the tail bound d_k + (sum of densities past k) / (m - k + 1).
    """
    if not 1 <= k <= min(m, ts.n):
        raise ValueError(f"k must be in 1..min(m, n), got {k}")
    if not 1 <= rank <= ts.n:
        raise IndexError(f"rank {rank} out of range 1..{ts.n}")
    if rank < k:
        return ts.density(rank)
    return ts.density(k) + ts.suffix_density_sum(k + 1) / (m - k + 1)


def initial_speeds(ts: TaskSystem, m: int, offline: OfflineSpeed, s_min, model=None) -> tuple:
    """Starting speeds for every rank, clamped to s_min and optionally
    quantized up to table levels."""
    from .power import quantize_speed

    s_min = to_rat(s_min)
    out = []
    for rank in range(1, ts.n + 1):
        s = max(s_min, initial_speed(ts, m, offline.k, rank))
        if model is not None and model.is_table:
            s = quantize_speed(model, s)
        out.append(s)
    return tuple(out)


def reduce_speed(current, pending_work, abs_deadline, now, t_next, s_min) -> Rat:
    """One-shot slowdown for a job dispatched at `now`.

    Stretches the remaining worst-case work across the window ending at
    the earlier of the job deadline and t_next, never exceeding the
    current speed and never dropping below s_min.
    """
    current = to_rat(current)
    pending_work = to_rat(pending_work)
    s_min = to_rat(s_min)
    end = min(abs_deadline, t_next)
    window = end - now
    if window <= 0:
        raise ValueError(f"empty stretch window at {now} (ends {end})")
    if pending_work <= 0:
        raise ValueError("no pending work to stretch")
    return max(s_min, min(current, pending_work / window))
