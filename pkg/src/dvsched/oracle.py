"""Independent trace validation and brute-force cross-checks.

Everything here re-derives scheduler guarantees from first principles,
deliberately not reusing the scheduler's own helper code, so that a bug
in the engine cannot hide itself.  validate_trace replays a trace event
by event and checks structural sanity, work accounting, priority
compliance, speed legality and the online-slowdown guarantees.
brute_force_tnext re-evaluates the contention bound definition at every
candidate instant with its own counting code.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .rationals import Rat, rat_str, to_rat
from .tasks import TaskSystem


@dataclass
class ValidationReport:
    misses: list = field(default_factory=list)
    malformed: list = field(default_factory=list)
    priority_violations: list = field(default_factory=list)
    overlap_violations: list = field(default_factory=list)
    speed_violations: list = field(default_factory=list)
    non_interference_violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """True when the trace is well formed, feasible and compliant."""
        return not (
            self.misses
            or self.malformed
            or self.priority_violations
            or self.overlap_violations
            or self.speed_violations
            or self.non_interference_violations
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "ok": self.ok,
                "misses": [
                    {"task": r, "job": j, "deadline": rat_str(d)}
                    for r, j, d in self.misses
                ],
                "malformed": self.malformed,
                "priority_violations": self.priority_violations,
                "overlap_violations": self.overlap_violations,
                "speed_violations": self.speed_violations,
                "non_interference_violations": self.non_interference_violations,
            },
            indent=2,
        )


def _key(k, rank, job_index, abs_deadline):
    # deliberate re-statement of the priority order, kept local so the
    # validator does not lean on the scheduler's own implementation
    if rank < k:
        return (0, Rat(0), rank, job_index)
    return (1, abs_deadline, rank, job_index)


def validate_trace(trace, ts: TaskSystem) -> ValidationReport:
    """Replay a trace against its task system and report every problem."""
    rep = ValidationReport()
    m, k = trace.m, trace.k
    mote = str(getattr(trace.method, "value", trace.method)) == "mote"

    records = {}
    for j in trace.jobs:
        if (j.rank, j.job_index) in records:
            rep.malformed.append(f"duplicate job record {j.rank},{j.job_index}")
        records[(j.rank, j.job_index)] = j
        if not 1 <= j.rank <= ts.n:
            rep.malformed.append(f"job {j.rank},{j.job_index}: unknown task rank")
            continue
        spec = ts.task(j.rank)
        if j.wcet != spec.wcet:
            rep.malformed.append(f"job {j.rank},{j.job_index}: wcet mismatch")
        if j.abs_deadline != j.release + spec.deadline:
            rep.malformed.append(f"job {j.rank},{j.job_index}: deadline mismatch")
        if not 0 < j.acet <= j.wcet:
            rep.malformed.append(f"job {j.rank},{j.job_index}: acet out of range")
        if j.release < 0 or j.release >= trace.horizon:
            rep.malformed.append(f"job {j.rank},{j.job_index}: release outside window")

    # release separation per task
    by_rank = {}
    for (rank, j), rec in records.items():
        by_rank.setdefault(rank, []).append(rec)
    for rank, recs in by_rank.items():
        recs.sort(key=lambda r: r.job_index)
        period = ts.task(rank).period
        if [r.job_index for r in recs] != list(range(1, len(recs) + 1)):
            rep.malformed.append(f"task {rank}: job indices not contiguous")
        for a, b in zip(recs, recs[1:]):
            if b.release - a.release < period:
                rep.malformed.append(
                    f"task {rank}: jobs {a.job_index},{b.job_index} released "
                    f"{b.release - a.release} apart, below the period"
                )

    # event replay
    state = {}  # (rank, job) -> pending | running | done
    on_cpu = {}  # cpu -> (rank, job)
    open_seg = {}  # (rank, job) -> (cpu, start, speed)
    rebuilt_segments = []
    dispatch_speeds = {}  # (rank, job) -> [speed, ...]
    speed_set_counts = {}
    completions = {}
    miss_events = set()
    prev_time = None
    pending_now = set()

    def close(key, t):
        cpu, start, speed = open_seg.pop(key)
        if t < start:
            rep.malformed.append(f"job {key}: segment closing before it opened")
            return
        if t > start:
            rebuilt_segments.append((cpu, start, t, key[0], key[1], speed))

    def check_instant(t):
        # after all events at one instant: the running set must be the
        # highest-priority slice of the active set
        active_keys = []
        for key in pending_now:
            rec = records[key]
            active_keys.append(_key(k, key[0], key[1], rec.abs_deadline))
        running_keys = []
        for key in on_cpu.values():
            rec = records[key]
            running_keys.append(_key(k, key[0], key[1], rec.abs_deadline))
        want = min(m, len(active_keys) + len(running_keys))
        if len(running_keys) != want:
            rep.priority_violations.append(
                f"t={t}: {len(running_keys)} running but {want} expected"
            )
            return
        if running_keys and active_keys and max(running_keys) > min(active_keys):
            rep.priority_violations.append(
                f"t={t}: a pending job outranks a running one"
            )

    events_by_time = []
    for e in trace.events:
        if prev_time is not None and e.time < prev_time:
            rep.malformed.append(f"events out of order at {e.time}")
        prev_time = e.time
        events_by_time.append(e)

    i = 0
    n_events = len(events_by_time)
    free_cpus = set(range(1, m + 1))
    while i < n_events:
        t = events_by_time[i].time
        while i < n_events and events_by_time[i].time == t:
            e = events_by_time[i]
            key = (e.rank, e.job_index)
            if key not in records:
                rep.malformed.append(f"event for unknown job {key}")
                i += 1
                continue
            if e.kind == "release":
                if key in state:
                    rep.malformed.append(f"job {key}: double release")
                if records[key].release != t:
                    rep.malformed.append(f"job {key}: release event at wrong time")
                state[key] = "pending"
                pending_now.add(key)
            elif e.kind == "dispatch":
                if state.get(key) != "pending":
                    rep.malformed.append(f"job {key}: dispatch while {state.get(key)}")
                elif e.cpu not in free_cpus:
                    rep.malformed.append(f"job {key}: dispatch onto busy cpu {e.cpu}")
                else:
                    if e.cpu != min(free_cpus):
                        rep.priority_violations.append(
                            f"t={t}: job {key} placed on cpu {e.cpu}, "
                            f"lowest free was {min(free_cpus)}"
                        )
                    free_cpus.discard(e.cpu)
                    on_cpu[e.cpu] = key
                    pending_now.discard(key)
                    state[key] = "running"
                    speed = e.speed if e.speed is not None else Rat(0)
                    open_seg[key] = (e.cpu, t, speed)
                    dispatch_speeds.setdefault(key, []).append(speed)
                    if e.speed is None:
                        rep.malformed.append(f"job {key}: dispatch without speed")
            elif e.kind == "preempt":
                if state.get(key) != "running" or on_cpu.get(e.cpu) != key:
                    rep.malformed.append(f"job {key}: preempt while not on cpu {e.cpu}")
                else:
                    close(key, t)
                    del on_cpu[e.cpu]
                    free_cpus.add(e.cpu)
                    state[key] = "pending"
                    pending_now.add(key)
            elif e.kind == "complete":
                if state.get(key) != "running" or on_cpu.get(e.cpu) != key:
                    rep.malformed.append(f"job {key}: complete while not on cpu {e.cpu}")
                else:
                    close(key, t)
                    del on_cpu[e.cpu]
                    free_cpus.add(e.cpu)
                    state[key] = "done"
                    completions[key] = t
            elif e.kind == "speed-set":
                speed_set_counts[key] = speed_set_counts.get(key, 0) + 1
            elif e.kind == "deadline-miss":
                if records[key].abs_deadline != t:
                    rep.malformed.append(f"job {key}: miss event off its deadline")
                if state.get(key) == "done":
                    rep.malformed.append(f"job {key}: miss event after completion")
                miss_events.add(key)
            else:
                rep.malformed.append(f"unknown event kind {e.kind!r}")
            i += 1
        check_instant(t)

    if open_seg:
        rep.malformed.append(f"trace ends with jobs still running: {sorted(open_seg)}")

    # segments must match the replay exactly
    got = sorted(
        (s.cpu, s.start, s.end, s.rank, s.job_index, s.speed) for s in trace.segments
    )
    if got != sorted(rebuilt_segments):
        rep.malformed.append("segment list does not match the event log")

    # work accounting per job
    done_work = {}
    for s in trace.segments:
        key = (s.rank, s.job_index)
        if s.end <= s.start:
            rep.malformed.append(f"job {key}: empty or reversed segment")
            continue
        done_work[key] = done_work.get(key, Rat(0)) + (s.end - s.start) * s.speed
    for key, rec in records.items():
        work = done_work.get(key, Rat(0))
        comp = completions.get(key)
        if rec.completion != comp:
            rep.malformed.append(f"job {key}: recorded completion disagrees with events")
        if comp is not None and work != rec.acet:
            rep.malformed.append(
                f"job {key}: executed {work} at completion, acet is {rec.acet}"
            )
        if comp is None and work >= rec.acet:
            rep.malformed.append(f"job {key}: enough work executed but no completion")
        if state.get(key) is None:
            rep.malformed.append(f"job {key}: recorded but never released")

    # deadline misses, recomputed
    for key, rec in sorted(records.items()):
        comp = completions.get(key)
        if comp is None or comp > rec.abs_deadline:
            rep.misses.append((rec.rank, rec.job_index, rec.abs_deadline))
    computed = {(r, j) for r, j, _ in rep.misses}
    if computed != miss_events:
        rep.malformed.append(
            f"miss events {sorted(miss_events)} disagree with completions "
            f"{sorted(computed)}"
        )

    # busy overlap per cpu
    per_cpu = {}
    for s in trace.segments:
        per_cpu.setdefault(s.cpu, []).append(s)
    for cpu, segs in per_cpu.items():
        segs.sort(key=lambda s: s.start)
        for a, b in zip(segs, segs[1:]):
            if b.start < a.end:
                rep.overlap_violations.append(
                    f"cpu {cpu}: segments overlap at {b.start}"
                )

    # speed legality
    levels = set(trace.levels)
    for s in trace.segments:
        if not trace.s_min <= s.speed <= 1:
            rep.speed_violations.append(
                f"job {s.rank},{s.job_index}: speed {s.speed} outside "
                f"[{trace.s_min}, 1]"
            )
        if trace.discrete and s.speed not in levels:
            rep.speed_violations.append(
                f"job {s.rank},{s.job_index}: speed {s.speed} not a platform level"
            )
    for key, speeds in dispatch_speeds.items():
        for a, b in zip(speeds, speeds[1:]):
            if b > a:
                rep.speed_violations.append(f"job {key}: speed rose from {a} to {b}")
    for key, rec in records.items():
        changes = speed_set_counts.get(key, 0)
        if rec.speed_changes != changes:
            rep.malformed.append(
                f"job {key}: {changes} speed-set events but record says "
                f"{rec.speed_changes}"
            )
        if changes > 2:
            rep.speed_violations.append(
                f"job {key}: {changes} speed transitions, at most 2 expected"
            )

    # online-slowdown guarantees
    if trace.windows and not mote:
        rep.malformed.append("slowdown windows recorded outside the online method")
    preempts = {}
    for e in trace.events:
        if e.kind == "preempt":
            preempts.setdefault((e.rank, e.job_index), []).append(e.time)
    strict = {}
    for w in trace.windows:
        key = (w.rank, w.job_index)
        if key not in records:
            rep.malformed.append(f"window for unknown job {key}")
            continue
        if w.after > w.before:
            rep.speed_violations.append(
                f"job {key}: slowdown raised speed {w.before} -> {w.after}"
            )
        for p in preempts.get(key, ()):
            if w.time < p < w.t_next:
                rep.non_interference_violations.append(
                    f"job {key}: preempted at {p} inside guarantee window "
                    f"({w.time}, {rat_str(w.t_next) if w.t_next != math.inf else 'inf'})"
                )
        if w.after < w.before:
            strict[key] = strict.get(key, 0) + 1
            rec = records[key]
            comp = completions.get(key)
            limit = min(rec.abs_deadline, w.t_next)
            if comp is None or comp > limit:
                rep.non_interference_violations.append(
                    f"job {key}: stretched at {w.time} but not done by {limit}"
                )
    for key, count in strict.items():
        if count > 1:
            rep.non_interference_violations.append(
                f"job {key}: speed strictly reduced {count} times, once allowed"
            )
    return rep


def brute_force_tnext(view):
    """First instant where the free-CPU bound can reach zero, recomputed
    from the definitions at every candidate instant.

    Candidates are the snapshot instant itself, every possible next
    arrival and every lingering-job deadline; the bound is piecewise
    constant between them.  Quadratic and proud of it; this exists to
    cross-check the production sweep.
    """
    n = len(view.tasks)
    if view.m > n:
        return math.inf
    t = view.at
    cands = {t}
    for tv in view.tasks:
        cands.add(max(t, tv.last_release + tv.period))
        dl = tv.last_release + tv.deadline
        if dl > t:
            cands.add(dl)
    for c in sorted(cands):
        free = view.m
        for tv in view.tasks:
            if c >= tv.last_release + tv.period:
                free -= 1
            if (
                tv.rank != view.subject
                and tv.pending_work > 0
                and t <= c < tv.last_release + tv.deadline
            ):
                free -= 1
        if free <= 0:
            return c
    raise AssertionError("bound never reached zero despite m <= n")


def worst_case_feasibility(ts: TaskSystem, m: int, speed, k: int) -> bool:
    """Simulate one hyperperiod at a uniform speed with every job at its
    WCET and report whether all deadlines hold."""
    from .power import analytic_model
    from .sim import Method, Platform, simulate

    speed = to_rat(speed)
    if not 0 < speed <= 1:
        raise ValueError(f"speed must be in (0, 1], got {speed}")
    platform = Platform(
        m=m, model=analytic_model(0, 1, 2), discrete=False, s_min=speed
    )
    trace = simulate(
        ts, platform, Method.OFFLINE_EDFK, k_override=k, uniform_speed=speed
    )
    return not trace.misses
