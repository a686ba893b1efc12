"""Event-driven simulation of global EDF(k) scheduling with DVS speeds.

The scheduler keeps at most m jobs running, one per CPU.  Priorities are
total and fixed per job: jobs of the k-1 densest tasks form a top class
ordered by density rank, everything else is EDF on absolute deadlines
with ties broken by density rank and then job index.  Dispatch fills the
lowest-indexed free CPU with the highest-priority pending job; when no
CPU is free, the globally lowest-priority running job is preempted if a
pending job outranks it (the victim with the highest CPU index loses on
priority ties).

Four speed policies share this engine:

    smax          every job at full speed
    offline_edf   one uniform speed from the plain EDF bound, k = 1
    offline_edfk  one uniform speed from the swept EDF(k) bound
    mote          per-task starting speeds plus the online one-shot
                  slowdown applied each time a job is dispatched

Execution amounts are exact rationals; a job dispatched at time t with
remaining actual work w at speed s completes exactly at t + w/s unless
preempted.  Deadline misses are recorded as events and never abort the
run.  Releases are synchronous periodic by default (every task releases
at 0 and then every period, strictly before the horizon) or an explicit
sporadic arrival sequence per task.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from typing import Callable, Optional

from .analysis import InfeasibleError, edf_min_speed, offline_speed
from .mote import ContentionView, TaskView, initial_speed, next_contention, reduce_speed
from .power import IDLE_AT_MIN, IDLE_ZERO, PowerModel, quantize_speed
from .rationals import Rat, rat_str, to_rat
from .tasks import TaskSystem


class Method(str, Enum):
    SMAX = "smax"
    OFFLINE_EDF = "offline_edf"
    OFFLINE_EDFK = "offline_edfk"
    MOTE = "mote"


@dataclass(frozen=True)
class Platform:
    """Identical-multiprocessor platform description.

    discrete platforms run only at table speeds (requests are quantized
    up); continuous platforms run at any speed in [s_min, 1].  The idle
    policy says what a CPU draws when it has nothing to run.
    """

    m: int
    model: PowerModel
    discrete: bool = True
    s_min: Optional[Rat] = None
    idle: str = IDLE_AT_MIN

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"need at least one processor, got {self.m}")
        if self.discrete and not self.model.is_table:
            raise ValueError("discrete mode needs a table model")
        if self.idle not in (IDLE_AT_MIN, IDLE_ZERO):
            raise ValueError(f"unknown idle policy {self.idle!r}")
        s_min = self.s_min
        if s_min is None:
            if not self.model.is_table:
                raise ValueError("continuous analytic platforms need an explicit s_min")
            s_min = self.model.min_speed
        s_min = to_rat(s_min)
        if not 0 < s_min <= 1:
            raise ValueError(f"s_min must be in (0, 1], got {s_min}")
        object.__setattr__(self, "s_min", s_min)

    def effective_speed(self, s_req) -> Rat:
        """Clamp a requested speed to the floor, then quantize if discrete."""
        s = max(self.s_min, to_rat(s_req))
        if self.discrete:
            s = quantize_speed(self.model, s)
        return s


def priority_key(k: int, rank: int, job_index: int, abs_deadline) -> tuple:
    """Total priority order for a job; smaller sorts first (runs first)."""
    if rank < k:
        return (0, Rat(0), rank, job_index)
    return (1, to_rat(abs_deadline), rank, job_index)


@dataclass(frozen=True)
class TraceEvent:
    time: Rat
    kind: str  # release | dispatch | preempt | complete | speed-set | deadline-miss
    rank: int
    job_index: int
    cpu: Optional[int] = None
    speed: Optional[Rat] = None


@dataclass(frozen=True)
class Segment:
    cpu: int
    start: Rat
    end: Rat
    rank: int
    job_index: int
    speed: Rat


@dataclass(frozen=True)
class MoteWindow:
    """One application of the online slowdown step at a dispatch."""

    time: Rat
    rank: int
    job_index: int
    cpu: int
    t_next: object  # Rat or math.inf
    before: Rat
    after: Rat


@dataclass(frozen=True)
class JobRecord:
    rank: int
    job_index: int
    release: Rat
    abs_deadline: Rat
    wcet: Rat
    acet: Rat
    completion: Optional[Rat]
    speed_changes: int


@dataclass(frozen=True)
class Trace:
    method: Method
    m: int
    k: int
    horizon: Rat
    s_min: Rat
    discrete: bool
    levels: tuple  # allowed speeds, empty for continuous platforms
    events: tuple
    segments: tuple
    jobs: tuple
    windows: tuple

    @property
    def misses(self) -> tuple:
        return tuple(
            (j.rank, j.job_index, j.abs_deadline)
            for j in self.jobs
            if j.completion is None or j.completion > j.abs_deadline
        )


class _Job:
    __slots__ = (
        "rank", "job_index", "release", "abs_deadline", "wcet", "acet",
        "executed", "speed", "cpu", "seg_start", "epoch", "done",
        "completion", "speed_changes", "key", "stretched",
    )

    def __init__(self, rank, job_index, release, abs_deadline, wcet, acet, key):
        self.rank = rank
        self.job_index = job_index
        self.release = release
        self.abs_deadline = abs_deadline
        self.wcet = wcet
        self.acet = acet
        self.executed = Rat(0)
        self.speed = None
        self.cpu = None
        self.seg_start = None
        self.epoch = 0
        self.done = False
        self.completion = None
        self.speed_changes = 0
        self.key = key
        self.stretched = False  # a strict online reduction happened


def _periodic_arrivals(ts: TaskSystem, horizon) -> dict:
    out = {}
    for rank in range(1, ts.n + 1):
        period = ts.task(rank).period
        times = []
        t = Rat(0)
        while t < horizon:
            times.append(t)
            t = t + period
        out[rank] = times
    return out


def _check_arrivals(ts: TaskSystem, arrivals: dict, horizon) -> dict:
    out = {}
    for rank in range(1, ts.n + 1):
        times = [to_rat(x) for x in arrivals.get(rank, [])]
        period = ts.task(rank).period
        prev = None
        for x in times:
            if x < 0:
                raise ValueError(f"rank {rank}: release at negative time {x}")
            if x >= horizon:
                raise ValueError(f"rank {rank}: release {x} at or past horizon {horizon}")
            if prev is not None and x - prev < period:
                raise ValueError(
                    f"rank {rank}: releases {prev} and {x} violate the minimum "
                    f"separation {period}"
                )
            prev = x
        out[rank] = times
    return out


def simulate(
    ts: TaskSystem,
    platform: Platform,
    method: Method,
    acets: Optional[Callable] = None,
    horizon=None,
    arrivals: Optional[dict] = None,
    mote_all_ranks: bool = True,
    k_override: Optional[int] = None,
    uniform_speed=None,
) -> Trace:
    """Run one schedule and return its trace.

    acets maps (rank, job_index) to the actual execution time of that
    job at unit speed; None means every job consumes its full WCET.
    horizon defaults to the hyperperiod.  arrivals is a rank -> sorted
    release times dict for sporadic runs; omitted ranks release nothing.
    Releases stop at the horizon but every released job runs to
    completion, so traces of infeasible systems remain well formed.

    k_override and uniform_speed bypass the per-method analysis; they
    exist for feasibility probing and tests.
    """
    method = Method(method)
    if ts.n == 0:
        raise ValueError("cannot simulate an empty task system")
    m = platform.m
    s_min = platform.s_min

    horizon = ts.hyperperiod() if horizon is None else to_rat(horizon)
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")

    # speed policy
    per_rank_init = None
    mote = method is Method.MOTE
    if k_override is not None or uniform_speed is not None:
        if k_override is None or uniform_speed is None:
            raise ValueError("k_override and uniform_speed go together")
        k = k_override
        uniform = platform.effective_speed(uniform_speed)
    elif method is Method.SMAX:
        k, uniform = 1, Rat(1)
    elif method is Method.OFFLINE_EDF:
        k = 1
        bound = edf_min_speed(ts, m)
        if bound > 1:
            raise InfeasibleError(
                f"plain EDF bound {bound} exceeds speed 1 on {m} processors"
            )
        uniform = platform.effective_speed(bound)
    elif method is Method.OFFLINE_EDFK:
        off = offline_speed(ts, m, s_min)
        k, uniform = off.k, platform.effective_speed(off.speed)
    else:  # MOTE
        off = offline_speed(ts, m, s_min)
        k, uniform = off.k, None
        per_rank_init = tuple(
            platform.effective_speed(initial_speed(ts, m, off.k, rank))
            for rank in range(1, ts.n + 1)
        )

    if arrivals is None:
        release_times = _periodic_arrivals(ts, horizon)
    else:
        release_times = _check_arrivals(ts, arrivals, horizon)

    release_seq = sorted(
        (t, rank, j + 1)
        for rank, times in release_times.items()
        for j, t in enumerate(times)
    )

    if acets is None:
        acet_of = lambda rank, j: ts.task(rank).wcet
    elif callable(acets):
        acet_of = acets
    else:
        table = dict(acets)
        acet_of = lambda rank, j: table[(rank, j)]

    jobs = {}
    events = []
    segments = []
    windows = []
    pending = []  # heap of (key, job)
    running = {}  # cpu -> job
    free = list(range(1, m + 1))
    heapq.heapify(free)
    completion_heap = []  # (time, cpu, epoch, job)
    deadline_heap = []  # (deadline, rank, job_index)
    epoch_counter = 0

    # per-rank state for the contention view
    last_release = {r: -ts.task(r).period for r in range(1, ts.n + 1)}
    last_job = {r: None for r in range(1, ts.n + 1)}

    def close_segment(job, t):
        if job.seg_start is not None and t > job.seg_start:
            segments.append(
                Segment(job.cpu, job.seg_start, t, job.rank, job.job_index, job.speed)
            )
        job.executed += (t - job.seg_start) * job.speed
        job.seg_start = None

    def contention_view(subject_rank, t) -> ContentionView:
        tvs = []
        for r in range(1, ts.n + 1):
            spec = ts.task(r)
            lj = last_job[r]
            pending_work = Rat(0)
            if lj is not None and not lj.done:
                pending_work = lj.wcet - lj.executed
                if lj.seg_start is not None:
                    pending_work -= (t - lj.seg_start) * lj.speed
                if pending_work < 0:
                    pending_work = Rat(0)
            tvs.append(
                TaskView(r, spec.period, spec.deadline, last_release[r], pending_work)
            )
        return ContentionView(m=m, subject=subject_rank, at=t, tasks=tuple(tvs))

    def dispatch(job, cpu, t):
        nonlocal epoch_counter
        new_speed = job.speed
        if new_speed is None:
            new_speed = uniform if per_rank_init is None else per_rank_init[job.rank - 1]
        if mote and (mote_all_ranks or job.rank > k):
            view = contention_view(job.rank, t)
            t_next = next_contention(view)
            applied = new_speed
            window_end = min(job.abs_deadline, t_next)
            if t_next > t and window_end > t:
                raw = reduce_speed(
                    new_speed, job.wcet - job.executed, job.abs_deadline, t, t_next, s_min
                )
                applied = platform.effective_speed(raw)
                if applied > new_speed:  # quantization may undo the stretch
                    applied = new_speed
            windows.append(
                MoteWindow(t, job.rank, job.job_index, cpu, t_next, new_speed, applied)
            )
            if applied < new_speed:
                job.stretched = True
            new_speed = applied
        if job.speed != new_speed:
            job.speed = new_speed
            job.speed_changes += 1
            events.append(
                TraceEvent(t, "speed-set", job.rank, job.job_index, cpu, new_speed)
            )
        job.cpu = cpu
        job.seg_start = t
        epoch_counter += 1
        job.epoch = epoch_counter
        running[cpu] = job
        remaining = job.acet - job.executed
        heapq.heappush(completion_heap, (t + remaining / job.speed, cpu, job.epoch, job))
        events.append(TraceEvent(t, "dispatch", job.rank, job.job_index, cpu, job.speed))

    def dispatch_pass(t):
        while free and pending:
            _, job = heapq.heappop(pending)
            cpu = heapq.heappop(free)
            dispatch(job, cpu, t)
        while pending:
            top_key = pending[0][0]
            victim_cpu = None
            victim = None
            for cpu, job in running.items():
                if victim is None or (job.key, cpu) > (victim.key, victim_cpu):
                    victim, victim_cpu = job, cpu
            if victim is None or victim.key <= top_key:
                break
            close_segment(victim, t)
            del running[victim_cpu]
            events.append(
                TraceEvent(t, "preempt", victim.rank, victim.job_index, victim_cpu, None)
            )
            heapq.heappush(pending, (victim.key, victim))
            _, challenger = heapq.heappop(pending)
            dispatch(challenger, victim_cpu, t)

    idx = 0
    total = len(release_seq)
    while True:
        # earliest next instant across releases, completions and deadlines
        t = release_seq[idx][0] if idx < total else None
        while completion_heap:
            ct, cpu, ep, job = completion_heap[0]
            if job.done or running.get(cpu) is not job or job.epoch != ep:
                heapq.heappop(completion_heap)
                continue
            if t is None or ct < t:
                t = ct
            break
        while deadline_heap:
            dt, dr, dj = deadline_heap[0]
            if jobs[(dr, dj)].done:
                heapq.heappop(deadline_heap)
                continue
            if t is None or dt < t:
                t = dt
            break
        if t is None:
            break

        # completions first
        while completion_heap:
            ct, cpu, ep, job = completion_heap[0]
            if job.done or running.get(cpu) is not job or job.epoch != ep:
                heapq.heappop(completion_heap)
                continue
            if ct != t:
                break
            heapq.heappop(completion_heap)
            close_segment(job, t)
            assert job.executed == job.acet
            job.done = True
            job.completion = t
            del running[cpu]
            heapq.heappush(free, cpu)
            events.append(TraceEvent(t, "complete", job.rank, job.job_index, cpu, None))

        # deadline checks
        while deadline_heap and deadline_heap[0][0] == t:
            _, dr, dj = heapq.heappop(deadline_heap)
            job = jobs[(dr, dj)]
            if not job.done:
                events.append(TraceEvent(t, "deadline-miss", dr, dj, None, None))

        # releases
        while idx < total and release_seq[idx][0] == t:
            _, rank, j = release_seq[idx]
            idx += 1
            spec = ts.task(rank)
            acet = to_rat(acet_of(rank, j))
            if not 0 < acet <= spec.wcet:
                raise ValueError(
                    f"acet {acet} for rank {rank} job {j} outside (0, wcet]"
                )
            job = _Job(
                rank, j, t, t + spec.deadline, spec.wcet, acet,
                priority_key(k, rank, j, t + spec.deadline),
            )
            jobs[(rank, j)] = job
            last_release[rank] = t
            last_job[rank] = job
            heapq.heappush(pending, (job.key, job))
            heapq.heappush(deadline_heap, (job.abs_deadline, rank, j))
            events.append(TraceEvent(t, "release", rank, j, None, None))

        dispatch_pass(t)

    job_records = tuple(
        JobRecord(
            j.rank, j.job_index, j.release, j.abs_deadline, j.wcet, j.acet,
            j.completion, j.speed_changes,
        )
        for j in sorted(jobs.values(), key=lambda x: (x.rank, x.job_index))
    )
    return Trace(
        method=method,
        m=m,
        k=k,
        horizon=horizon,
        s_min=s_min,
        discrete=platform.discrete,
        levels=platform.model.speeds if platform.discrete else (),
        events=tuple(events),
        segments=tuple(segments),
        jobs=job_records,
        windows=tuple(windows),
    )


def _num(value) -> str:
    return rat_str(value)


def trace_to_json(trace: Trace) -> str:
    def t_next_str(x):
        return "inf" if x == math.inf else _num(x)

    payload = {
        "method": trace.method.value,
        "m": trace.m,
        "k": trace.k,
        "horizon": _num(trace.horizon),
        "s_min": _num(trace.s_min),
        "discrete": trace.discrete,
        "levels": [_num(s) for s in trace.levels],
        "jobs": [
            {
                "task": j.rank,
                "job": j.job_index,
                "release": _num(j.release),
                "deadline": _num(j.abs_deadline),
                "wcet": _num(j.wcet),
                "acet": _num(j.acet),
                "completion": None if j.completion is None else _num(j.completion),
                "speed_changes": j.speed_changes,
            }
            for j in trace.jobs
        ],
        "events": [
            {
                "time": _num(e.time),
                "kind": e.kind,
                "task": e.rank,
                "job": e.job_index,
                "cpu": e.cpu,
                "speed": None if e.speed is None else _num(e.speed),
            }
            for e in trace.events
        ],
        "segments": [
            {
                "cpu": s.cpu,
                "start": _num(s.start),
                "end": _num(s.end),
                "task": s.rank,
                "job": s.job_index,
                "speed": _num(s.speed),
            }
            for s in trace.segments
        ],
        "windows": [
            {
                "time": _num(w.time),
                "task": w.rank,
                "job": w.job_index,
                "cpu": w.cpu,
                "t_next": t_next_str(w.t_next),
                "before": _num(w.before),
                "after": _num(w.after),
            }
            for w in trace.windows
        ],
    }
    return json.dumps(payload, indent=2)


def trace_from_json(text: str) -> Trace:
    data = json.loads(text, parse_float=Decimal)

    def rq(x):
        return to_rat(x)

    def t_next_val(x):
        return math.inf if x == "inf" else to_rat(x)

    return Trace(
        method=Method(data["method"]),
        m=data["m"],
        k=data["k"],
        horizon=rq(data["horizon"]),
        s_min=rq(data["s_min"]),
        discrete=data["discrete"],
        levels=tuple(rq(s) for s in data["levels"]),
        events=tuple(
            TraceEvent(
                rq(e["time"]), e["kind"], e["task"], e["job"], e["cpu"],
                None if e["speed"] is None else rq(e["speed"]),
            )
            for e in data["events"]
        ),
        segments=tuple(
            Segment(
                s["cpu"], rq(s["start"]), rq(s["end"]), s["task"], s["job"], rq(s["speed"])
            )
            for s in data["segments"]
        ),
        jobs=tuple(
            JobRecord(
                j["task"], j["job"], rq(j["release"]), rq(j["deadline"]),
                rq(j["wcet"]), rq(j["acet"]),
                None if j["completion"] is None else rq(j["completion"]),
                j["speed_changes"],
            )
            for j in data["jobs"]
        ),
        windows=tuple(
            MoteWindow(
                rq(w["time"]), w["task"], w["job"], w["cpu"],
                t_next_val(w["t_next"]), rq(w["before"]), rq(w["after"]),
            )
            for w in data["windows"]
        ),
    )


TRACE_CSV_COLUMNS = "time,time_exact,kind,task,job,cpu,speed,speed_exact"


def trace_to_csv(trace: Trace) -> str:
    """Flat event log, one row per event, stable column order."""
    lines = [TRACE_CSV_COLUMNS]
    for e in trace.events:
        speed = "" if e.speed is None else repr(float(e.speed))
        speed_exact = "" if e.speed is None else _num(e.speed)
        cpu = "" if e.cpu is None else str(e.cpu)
        lines.append(
            f"{float(e.time)!r},{_num(e.time)},{e.kind},{e.rank},{e.job_index},"
            f"{cpu},{speed},{speed_exact}"
        )
    return "\n".join(lines) + "\n"
