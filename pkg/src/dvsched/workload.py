"""Seeded random task-system generation for energy experiments.

Density vectors are drawn uniformly from the exact-sum simplex
{ d_1..d_n : sum d_i = S, 0 < d_i < 1 } on a fine integer lattice, via
sorted cut points.  When S > n/2 the acceptance rate of plain rejection
collapses, so the draw switches to the mirrored simplex (sample slacks
u_i summing to n - S and set d_i = 1 - u_i; the map is an affine
isometry, so uniformity is preserved).  Sums land exactly on a
denominator-1000 grid and every density is an exact rational.

Periods come from a finite pool so hyperperiods stay small; deadlines
are a rational fraction of the period; WCETs follow from the densities.
Actual execution times are a uniform grid fraction of the WCET, drawn
per job.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .rationals import Rat, to_rat
from .tasks import TaskSpec, TaskSystem, normalize

_LATTICE = 10**6  # density lattice denominator; divisible by the sum grid
_GRID = 1000


class GenerationError(ValueError):
    """The requested parameter ranges cannot produce a task system."""


@dataclass(frozen=True)
class GenParams:
    seed: int
    n_range: tuple = (5, 40)
    density_sum_range: tuple = (Rat(1), Rat(10))
    period_pool: tuple = (5, 10, 20, 25, 50, 100)
    deadline_ratio_range: tuple = (Rat(1), Rat(1))
    acet_ratio_range: tuple = (Rat(1, 4), Rat(1))

    def __post_init__(self):
        lo, hi = self.n_range
        if not (isinstance(lo, int) and isinstance(hi, int) and 1 <= lo <= hi):
            raise ValueError(f"bad task count range {self.n_range}")
        object.__setattr__(
            self, "density_sum_range", tuple(to_rat(x) for x in self.density_sum_range)
        )
        slo, shi = self.density_sum_range
        if not 0 < slo <= shi:
            raise ValueError(f"bad density sum range {self.density_sum_range}")
        object.__setattr__(
            self, "period_pool", tuple(to_rat(p) for p in self.period_pool)
        )
        if not self.period_pool or any(p <= 0 for p in self.period_pool):
            raise ValueError("period pool must be non-empty and positive")
        object.__setattr__(
            self,
            "deadline_ratio_range",
            tuple(to_rat(x) for x in self.deadline_ratio_range),
        )
        rlo, rhi = self.deadline_ratio_range
        if not 0 < rlo <= rhi <= 1:
            raise ValueError(f"deadline ratio range must sit in (0, 1], got {self.deadline_ratio_range}")
        object.__setattr__(
            self, "acet_ratio_range", tuple(to_rat(x) for x in self.acet_ratio_range)
        )
        alo, ahi = self.acet_ratio_range
        if not 0 <= alo <= ahi <= 1 or ahi == 0:
            raise ValueError(f"acet ratio range must sit in (0, 1], got {self.acet_ratio_range}")
        if slo >= hi:
            raise GenerationError(
                f"density sum at least {slo} is unattainable with at most "
                f"{hi} tasks of density below 1"
            )


def _grid_draw(rng: random.Random, lo: Rat, hi: Rat, minimum: int = 0) -> Rat:
    """Uniform draw from the denominator-1000 grid inside [lo, hi]."""
    num, den = (lo * _GRID).numerator, (lo * _GRID).denominator
    k_lo = max(minimum, -((-num) // den))  # ceil without float detours
    num, den = (hi * _GRID).numerator, (hi * _GRID).denominator
    k_hi = num // den
    if k_lo > k_hi:
        raise GenerationError(f"grid range [{lo}, {hi}] contains no draw")
    return Rat(rng.randint(k_lo, k_hi), _GRID)


def _split_units(rng: random.Random, total: int, n: int, cap: int) -> Optional[list]:
    """n integers in [1, cap-1] summing to total, uniform; None on reject."""
    if n == 1:
        parts = [total]
    else:
        cuts = sorted(rng.randint(0, total) for _ in range(n - 1))
        parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    if any(p < 1 or p >= cap for p in parts):
        return None
    return parts


def _draw_densities(rng: random.Random, n: int, total_sum: Rat) -> Optional[list]:
    units = total_sum * _LATTICE
    assert units.denominator == 1
    units = int(units)
    if 2 * total_sum <= n:
        parts = _split_units(rng, units, n, _LATTICE)
        if parts is None:
            return None
        return [Rat(p, _LATTICE) for p in parts]
    mirror_units = n * _LATTICE - units
    parts = _split_units(rng, mirror_units, n, _LATTICE)
    if parts is None:
        return None
    return [Rat(_LATTICE - p, _LATTICE) for p in parts]


def generate(params: GenParams) -> TaskSystem:
    """Draw one task system; a fixed seed gives a fixed system.

    Draws the task count and the density sum from their ranges, redraws
    when the pair is incompatible (the sum needs more tasks than drawn),
    then splits, assigns periods from the pool and deadlines from the
    ratio range.  Ids follow draw order; the returned system is in
    canonical density order.
    """
    rng = random.Random(params.seed)
    n_lo, n_hi = params.n_range
    s_lo, s_hi = params.density_sum_range
    for _ in range(100_000):
        n = rng.randint(n_lo, n_hi)
        total = _grid_draw(rng, s_lo, s_hi, minimum=1)
        if total >= n:
            continue
        densities = _draw_densities(rng, n, total)
        if densities is None:
            continue
        tasks = []
        for i, d in enumerate(densities, start=1):
            period = params.period_pool[rng.randrange(len(params.period_pool))]
            ratio = _grid_draw(rng, *params.deadline_ratio_range, minimum=1)
            deadline = ratio * period
            tasks.append(TaskSpec(i, d * deadline, deadline, period))
        return normalize(tasks)
    raise GenerationError(
        f"could not draw a valid density split for {params}; ranges too tight"
    )


def sample_acet(wcet, ratio_range, rng: random.Random) -> Rat:
    """One actual execution time: a grid-uniform fraction of the WCET."""
    lo, hi = (to_rat(x) for x in ratio_range)
    ratio = _grid_draw(rng, lo, hi, minimum=1)
    return to_rat(wcet) * ratio


def acet_table(ts: TaskSystem, horizon, ratio_range, rng: random.Random) -> dict:
    """Fixed-order ACET draws for every synchronous periodic job.

    The (rank, job) -> acet table is drawn rank by rank, job by job, so
    the same rng state yields identical actual demands no matter which
    scheduling method later consumes them.
    """
    horizon = to_rat(horizon)
    out = {}
    for rank in range(1, ts.n + 1):
        spec = ts.task(rank)
        count = horizon / spec.period
        jobs = int(count) if count.denominator == 1 else int(count) + 1
        for j in range(1, jobs + 1):
            out[(rank, j)] = sample_acet(spec.wcet, ratio_range, rng)
    return out
