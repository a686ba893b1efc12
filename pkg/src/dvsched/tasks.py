"""Sporadic constrained-deadline task model with exact parameters.

A task releases a potentially infinite sequence of jobs.  Two releases of
the same task are separated by at least the task period, every job needs
at most the task worst-case execution time (WCET, expressed at unit
processor speed) and must finish within the relative deadline of its
release.  Constrained deadline means wcet <= deadline <= period.

The density of a task is wcet / deadline.  Task systems are kept in a
canonical order, by decreasing density with ties broken by increasing
task id, because the speed analysis assigns meaning to density ranks.
All parameters are exact rationals (see :mod:`dvsched.rationals`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Sequence

from .rationals import Rat, rat_lcm, rat_str, to_rat


@dataclass(frozen=True)
class TaskSpec:
    """One sporadic task.

    Attributes:
        task_id: external identifier, unique within a system.
        wcet: worst-case execution time at speed 1, > 0.
        deadline: relative deadline, wcet <= deadline <= period.
        period: minimum separation between releases.
    """

    task_id: int
    wcet: Rat
    deadline: Rat
    period: Rat

    def __post_init__(self):
        object.__setattr__(self, "wcet", to_rat(self.wcet))
        object.__setattr__(self, "deadline", to_rat(self.deadline))
        object.__setattr__(self, "period", to_rat(self.period))
        name = f"task {self.task_id}"
        if self.wcet <= 0:
            raise ValueError(f"{name}: wcet must be positive, got {self.wcet}")
        if self.wcet > self.deadline:
            raise ValueError(
                f"{name}: wcet {self.wcet} exceeds deadline {self.deadline}"
            )
        if self.deadline > self.period:
            raise ValueError(
                f"{name}: deadline {self.deadline} exceeds period {self.period}"
            )

    @property
    def density(self) -> Rat:
        """wcet / deadline, the worst-case demand rate of one job."""
        return self.wcet / self.deadline


@dataclass(frozen=True)
class TaskSystem:
    """A task set in canonical density order.  Build via :func:`normalize`.

    Ranks are 1-based: rank 1 is the densest task.
    """

    tasks: tuple

    @property
    def n(self) -> int:
        return len(self.tasks)

    def task(self, rank: int) -> TaskSpec:
        if not 1 <= rank <= self.n:
            raise IndexError(f"task rank {rank} out of range 1..{self.n}")
        return self.tasks[rank - 1]

    def density(self, rank: int) -> Rat:
        return self.task(rank).density

    @property
    def densities(self) -> tuple:
        return tuple(t.density for t in self.tasks)

    @property
    def total_density(self) -> Rat:
        return sum((t.density for t in self.tasks), Rat(0))

    @property
    def max_density(self) -> Rat:
        if not self.tasks:
            raise ValueError("empty task system has no max density")
        return self.tasks[0].density

    def suffix_density_sum(self, rank: int) -> Rat:
        """Sum of densities of ranks rank..n; rank n+1 gives 0."""
        if not 1 <= rank <= self.n + 1:
            raise IndexError(f"suffix start {rank} out of range 1..{self.n + 1}")
        return sum((t.density for t in self.tasks[rank - 1:]), Rat(0))

    def hyperperiod(self) -> Rat:
        """Least common multiple of the task periods."""
        if not self.tasks:
            raise ValueError("empty task system has no hyperperiod")
        return rat_lcm(t.period for t in self.tasks)


def normalize(tasks: Iterable[TaskSpec]) -> TaskSystem:
    """Canonicalize a task collection into a :class:`TaskSystem`.

    Sorts by decreasing density, breaking ties by increasing task id, and
    rejects duplicate ids.
    """
    items = list(tasks)
    seen = set()
    for t in items:
        if t.task_id in seen:
            raise ValueError(f"duplicate task id {t.task_id}")
        seen.add(t.task_id)
    items.sort(key=lambda t: (-t.density, t.task_id))
    return TaskSystem(tuple(items))


def tasks_from_json(text: str) -> list:
    """Parse a JSON array of tasks.

    Each entry is an object with keys id, wcet, deadline and period.
    Numeric fields accept "p/q" strings or decimal numbers; decimals are
    converted exactly (0.1 becomes 1/10).
    """
    data = json.loads(text, parse_float=Decimal)
    if not isinstance(data, list):
        raise ValueError("task file must contain a JSON array")
    specs = []
    for entry in data:
        if not isinstance(entry, dict):
            raise ValueError("each task must be a JSON object")
        try:
            task_id = entry["id"]
            spec = TaskSpec(
                task_id=task_id,
                wcet=to_rat(entry["wcet"]),
                deadline=to_rat(entry["deadline"]),
                period=to_rat(entry["period"]),
            )
        except KeyError as exc:
            raise ValueError(f"task entry missing field {exc}") from exc
        if not isinstance(task_id, int) or isinstance(task_id, bool):
            raise ValueError(f"task id must be an integer, got {task_id!r}")
        specs.append(spec)
    return specs


def tasks_to_json(tasks) -> str:
    """Serialize a TaskSystem or TaskSpec sequence to the JSON array format."""
    if isinstance(tasks, TaskSystem):
        tasks = tasks.tasks
    payload = [
        {
            "id": t.task_id,
            "wcet": rat_str(t.wcet),
            "deadline": rat_str(t.deadline),
            "period": rat_str(t.period),
        }
        for t in tasks
    ]
    return json.dumps(payload, indent=2)
