import dataclasses
import math
import random

import pytest

from dvsched.mote import ContentionView, TaskView, next_contention
from dvsched.oracle import ValidationReport, brute_force_tnext, validate_trace, worst_case_feasibility
from dvsched.power import analytic_model, preset_model
from dvsched.rationals import Rat, to_rat
from dvsched.sim import JobRecord, Method, MoteWindow, Platform, Segment, Trace, TraceEvent, simulate
from dvsched.tasks import TaskSpec, normalize

CUBE = analytic_model(0, 100, 3)
TM = preset_model("tm5400")

REF = normalize([
    TaskSpec(1, 3, 5, 5),
    TaskSpec(2, 5, 10, 10),
    TaskSpec(3, 1, 10, 10),
])


def cont(m):
    return Platform(m=m, model=CUBE, discrete=False, s_min=to_rat("0.291"))


def test_validator_accepts_real_traces():
    for method in Method:
        tr = simulate(REF, cont(2), method)
        rep = validate_trace(tr, REF)
        assert rep.ok, rep.to_json()
        tr = simulate(REF, Platform(m=2, model=TM, discrete=True), method)
        rep = validate_trace(tr, REF)
        assert rep.ok, rep.to_json()


def test_validator_reports_misses_without_malformed():
    ts = normalize([TaskSpec(1, 4, 4, 8)])
    tr = simulate(ts, cont(1), Method.SMAX, k_override=1, uniform_speed=Rat(1, 2))
    rep = validate_trace(tr, ts)
    assert not rep.ok
    assert rep.misses == [(1, 1, Rat(4))]
    assert not rep.malformed
    assert not rep.priority_violations


def test_validator_flags_tampered_segments():
    tr = simulate(REF, cont(2), Method.OFFLINE_EDFK)
    seg = tr.segments[0]
    bad = dataclasses.replace(seg, start=seg.start - Rat(1, 2))
    tampered = dataclasses.replace(tr, segments=(bad,) + tr.segments[1:])
    rep = validate_trace(tampered, REF)
    assert rep.malformed


def test_validator_flags_overlap():
    tr = simulate(REF, cont(2), Method.OFFLINE_EDFK)
    # stretch the first segment on cpu 1 into the second one's window
    segs = sorted((s for s in tr.segments if s.cpu == 1), key=lambda s: s.start)
    bad = dataclasses.replace(segs[0], end=segs[1].start + Rat(1))
    others = tuple(s for s in tr.segments if s is not segs[0])
    rep = validate_trace(dataclasses.replace(tr, segments=(bad,) + others), REF)
    assert rep.overlap_violations
    assert rep.malformed  # no longer matches the event log either


def test_validator_flags_speed_outside_range():
    tr = simulate(REF, cont(2), Method.OFFLINE_EDFK)
    bad = tuple(dataclasses.replace(s, speed=Rat(1, 100)) for s in tr.segments)
    rep = validate_trace(dataclasses.replace(tr, segments=bad), REF)
    assert rep.speed_violations


def make_priority_inversion_trace():
    # one cpu, two jobs; the later-deadline job runs first
    a = JobRecord(1, 1, Rat(0), Rat(5), Rat(2), Rat(2), Rat(4), 1)
    b = JobRecord(2, 1, Rat(0), Rat(9), Rat(2), Rat(2), Rat(2), 1)
    events = (
        TraceEvent(Rat(0), "release", 1, 1),
        TraceEvent(Rat(0), "release", 2, 1),
        TraceEvent(Rat(0), "speed-set", 2, 1, 1, Rat(1)),
        TraceEvent(Rat(0), "dispatch", 2, 1, 1, Rat(1)),
        TraceEvent(Rat(2), "complete", 2, 1, 1),
        TraceEvent(Rat(2), "speed-set", 1, 1, 1, Rat(1)),
        TraceEvent(Rat(2), "dispatch", 1, 1, 1, Rat(1)),
        TraceEvent(Rat(4), "complete", 1, 1, 1),
    )
    segments = (
        Segment(1, Rat(0), Rat(2), 2, 1, Rat(1)),
        Segment(1, Rat(2), Rat(4), 1, 1, Rat(1)),
    )
    return Trace(
        method=Method.SMAX, m=1, k=1, horizon=Rat(10), s_min=Rat(1, 2),
        discrete=False, levels=(), events=events, segments=segments,
        jobs=(a, b), windows=(),
    )


def test_validator_flags_priority_inversion():
    ts = normalize([TaskSpec(1, 2, 5, 10), TaskSpec(2, 2, 9, 10)])
    rep = validate_trace(make_priority_inversion_trace(), ts)
    assert rep.priority_violations
    assert not rep.malformed
    assert not rep.misses
    assert not rep.ok


def make_broken_window_trace():
    # the online method promised the cpu to job (1,1) until 5 but a
    # later release preempts it at 1
    a = JobRecord(1, 1, Rat(0), Rat(8), Rat(2), Rat(2), Rat(5), 1)
    b = JobRecord(2, 1, Rat(1), Rat(4), Rat(1), Rat(1), Rat(2), 1)
    events = (
        TraceEvent(Rat(0), "release", 1, 1),
        TraceEvent(Rat(0), "speed-set", 1, 1, 1, Rat(1, 2)),
        TraceEvent(Rat(0), "dispatch", 1, 1, 1, Rat(1, 2)),
        TraceEvent(Rat(1), "release", 2, 1),
        TraceEvent(Rat(1), "preempt", 1, 1, 1),
        TraceEvent(Rat(1), "speed-set", 2, 1, 1, Rat(1)),
        TraceEvent(Rat(1), "dispatch", 2, 1, 1, Rat(1)),
        TraceEvent(Rat(2), "complete", 2, 1, 1),
        TraceEvent(Rat(2), "dispatch", 1, 1, 1, Rat(1, 2)),
        TraceEvent(Rat(5), "complete", 1, 1, 1),
    )
    segments = (
        Segment(1, Rat(0), Rat(1), 1, 1, Rat(1, 2)),
        Segment(1, Rat(1), Rat(2), 2, 1, Rat(1)),
        Segment(1, Rat(2), Rat(5), 1, 1, Rat(1, 2)),
    )
    windows = (MoteWindow(Rat(0), 1, 1, 1, Rat(5), Rat(1), Rat(1, 2)),)
    return Trace(
        method=Method.MOTE, m=1, k=1, horizon=Rat(10), s_min=Rat(1, 2),
        discrete=False, levels=(), events=events, segments=segments,
        jobs=(a, b), windows=windows,
    )


def test_validator_flags_interference_in_window():
    ts = normalize([TaskSpec(1, 2, 8, 10), TaskSpec(2, 1, 3, 10)])
    rep = validate_trace(make_broken_window_trace(), ts)
    assert rep.non_interference_violations
    assert not rep.misses


def test_report_json_shape():
    tr = simulate(REF, cont(2), Method.MOTE)
    rep = validate_trace(tr, REF)
    import json

    data = json.loads(rep.to_json())
    assert data["ok"] is True
    assert data["misses"] == []
    assert set(data) == {
        "ok", "misses", "malformed", "priority_violations",
        "overlap_violations", "speed_violations", "non_interference_violations",
    }


def test_brute_force_tnext_matches_sweep():
    rng = random.Random(303)
    for _ in range(500):
        n = rng.randint(1, 9)
        m = rng.randint(1, 9)
        t = Rat(rng.randint(0, 60), rng.choice([1, 2, 3]))
        tvs = []
        for rank in range(1, n + 1):
            period = Rat(rng.randint(2, 40), rng.choice([1, 2]))
            deadline = period - Rat(rng.randint(0, int(period) * 2), 4)
            if deadline <= 0:
                deadline = period
            last = t - Rat(rng.randint(0, int(3 * period)), 3)
            work = Rat(rng.choice([0, 0, 1, 3, 7]), 4)
            tvs.append(TaskView(rank, period, deadline, last, work))
        view = ContentionView(m=m, subject=rng.randint(1, n), at=t, tasks=tuple(tvs))
        assert brute_force_tnext(view) == next_contention(view)


def test_brute_force_tnext_more_cpus():
    view = ContentionView(
        m=3, subject=1, at=Rat(0),
        tasks=(TaskView(1, Rat(5), Rat(5), Rat(0), Rat(1)),),
    )
    assert brute_force_tnext(view) == math.inf


def test_worst_case_feasibility_reference():
    assert worst_case_feasibility(REF, 2, Rat(3, 5), 2)
    assert not worst_case_feasibility(REF, 2, Rat(1, 2), 2)
    assert worst_case_feasibility(REF, 2, Rat(1), 1)


def test_worst_case_feasibility_exact_fit():
    ts = normalize([TaskSpec(1, 2, 4, 4)])
    assert worst_case_feasibility(ts, 1, Rat(1, 2), 1)
    assert not worst_case_feasibility(ts, 1, Rat(49, 100), 1)


def test_validator_flags_windows_on_offline_trace():
    tr = simulate(REF, cont(2), Method.OFFLINE_EDFK)
    w = MoteWindow(Rat(0), 1, 1, 1, Rat(5), Rat(1), Rat(1))
    rep = validate_trace(dataclasses.replace(tr, windows=(w,)), REF)
    assert rep.malformed
