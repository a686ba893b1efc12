"""Command-line front end.

Verbs: analyze (sizing and speed bounds for a task file), simulate (one
schedule, optional trace/figure outputs), experiment (batch comparison
with report outputs), validate (check a trace file).

Exit codes: 0 ok, 1 validation failure, 2 infeasible configuration,
3 I/O or config error.
"""

import argparse
import json
import random
import sys

from .analysis import InfeasibleError, edf_min_speed, offline_speed, required_processors
from .harness import (
    ExperimentConfig,
    config_from_dict,
    export,
    inflate_wcets,
    plot_data_csv,
    resolve_model,
    run_comparison,
)
from .oracle import validate_trace
from .power import energy_of_trace
from .rationals import Rat, to_rat
from .sim import Method, Platform, simulate, trace_from_json
from .tasks import normalize, tasks_from_json
from .workload import GenParams, GenerationError, acet_table

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; 2 means infeasible here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_tasks(path: str, inflation):
    ts = normalize(tasks_from_json(_read(path)))
    return inflate_wcets(ts, inflation)


def _ratio_pair(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected LO,HI, got {text!r}")
    return (to_rat(parts[0]), to_rat(parts[1]))


def _fmt(q) -> str:
    return f"{q} ({float(q):.6g})"


# -- analyze ------------------------------------------------------------

def _cmd_analyze(args) -> int:
    ts = _load_tasks(args.tasks, args.transition_inflation)
    m = args.processors or required_processors(ts)
    bound = edf_min_speed(ts, m)
    s_min = to_rat(args.s_min) if args.s_min else min(ts.max_density, Rat(1))
    off = offline_speed(ts, m, s_min)
    if args.json:
        print(json.dumps({
            "n": ts.n,
            "m": m,
            "total_density": str(ts.total_density),
            "max_density": str(ts.max_density),
            "edf_bound": str(bound),
            "s_ol": str(off.speed),
            "k_opt": off.k,
            "privileged_ranks": list(off.privileged),
        }, indent=1))
        return EXIT_OK
    print(f"tasks: {ts.n}, total density {_fmt(ts.total_density)}, "
          f"max density {_fmt(ts.max_density)}")
    print(f"processors: {m}" + ("" if args.processors else " (auto)"))
    print(f"plain EDF speed bound: {_fmt(bound)}"
          + ("  [exceeds 1: plain EDF cannot be guaranteed]" if bound > 1 else ""))
    print(f"operating speed: {_fmt(off.speed)} at k={off.k} "
          f"({off.k - 1} privileged task(s))")
    return EXIT_OK


# -- simulate -----------------------------------------------------------

def _cmd_simulate(args) -> int:
    ts = _load_tasks(args.tasks, args.transition_inflation)
    m = args.processors or required_processors(ts)
    model = resolve_model(args.model)
    discrete = args.speed_mode == "discrete"
    platform = Platform(
        m=m,
        model=model,
        discrete=discrete,
        s_min=to_rat(args.s_min) if args.s_min else None,
        idle=args.idle,
    )
    horizon = to_rat(args.horizon) if args.horizon else None
    acets = None
    if args.acet_seed is not None:
        rng = random.Random(args.acet_seed)
        h = horizon if horizon is not None else ts.hyperperiod()
        acets = acet_table(ts, h, _ratio_pair(args.acet_ratio), rng)
    trace = simulate(
        ts,
        platform,
        Method(args.method),
        acets=acets,
        horizon=horizon,
        mote_all_ranks=args.mote_privileged == "on",
    )
    energy = energy_of_trace(trace, model, idle=args.idle, s_min=platform.s_min)
    print(f"method {trace.method.value}: m={trace.m}, k={trace.k}, "
          f"horizon {_fmt(trace.horizon)}")
    print(f"jobs {len(trace.jobs)}, events {len(trace.events)}, "
          f"segments {len(trace.segments)}, misses {len(trace.misses)}")
    print(f"energy: {_fmt(energy)}")
    if args.out:
        export(trace, "json", args.out)
        print(f"trace json -> {args.out}")
    if args.csv:
        export(trace, "csv", args.csv)
        print(f"trace csv -> {args.csv}")
    if args.gantt:
        from .plots import gantt_figure

        gantt_figure(trace, args.gantt)
        print(f"gantt figure -> {args.gantt}")
    report = validate_trace(trace, ts)
    if not report.ok:
        for rank, job, t in report.misses:
            print(f"deadline miss: task {rank} job {job} at {_fmt(t)}", file=sys.stderr)
        for field in ("malformed", "priority_violations", "overlap_violations",
                      "speed_violations", "non_interference_violations"):
            for item in getattr(report, field):
                print(f"{field}: {item}", file=sys.stderr)
        return EXIT_VALIDATION
    print("validation: ok")
    return EXIT_OK


# -- experiment ---------------------------------------------------------

def _experiment_config(args) -> ExperimentConfig:
    data = json.loads(_read(args.config)) if args.config else {}
    overrides = {
        "seed": args.seed,
        "systems": args.systems,
        "power_models": args.models.split(",") if args.models else None,
        "methods": args.methods.split(",") if args.methods else None,
        "idle_policy": args.idle,
        "speed_mode": args.speed_mode,
        "mote_privileged": (
            None if args.mote_privileged is None else args.mote_privileged == "on"
        ),
        "transition_inflation": args.transition_inflation,
        "s_min": args.s_min,
        "workers": args.workers,
        "n_range": [int(x) for x in args.n_range.split(",")] if args.n_range else None,
        "density_sum_range": list(_ratio_pair(args.density_sum)) if args.density_sum else None,
        "period_pool": args.periods.split(",") if args.periods else None,
        "acet_ratio_range": list(_ratio_pair(args.acet_ratio)) if args.acet_ratio else None,
        "report_path": args.out,
        "csv_path": args.csv,
        "plot_data_path": args.emit_plot_data,
        "figure_path": args.figure,
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if "seed" not in data:
        data["seed"] = 0
    # config-file rationals arrive as strings; flags may pass Rats through
    for key in ("density_sum_range", "acet_ratio_range", "deadline_ratio_range"):
        if data.get(key) is not None:
            data[key] = [str(x) for x in data[key]]
    return config_from_dict(data)


def _cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    report = run_comparison(cfg)
    print(f"{len(report.rows)} systems, {len(report.failures)} failed rows")
    print(f"{'model':<10} {'method':<14} {'mean savings %':>14} {'std':>8}")
    for name in report.models:
        for mv in report.methods:
            mean = float(report.mean_savings[name][mv])
            std = report.std_savings[name][mv]
            print(f"{name:<10} {mv:<14} {mean:>14.2f} {std:>8.2f}")
    if cfg.report_path:
        export(report, "json", cfg.report_path)
        print(f"report json -> {cfg.report_path}")
    if cfg.csv_path:
        export(report, "csv", cfg.csv_path)
        print(f"report csv -> {cfg.csv_path}")
    if cfg.plot_data_path:
        with open(cfg.plot_data_path, "w", encoding="utf-8") as fh:
            fh.write(plot_data_csv(report))
        print(f"plot data -> {cfg.plot_data_path}")
    if cfg.figure_path:
        from .plots import savings_figure

        savings_figure(report, cfg.figure_path)
        print(f"figure -> {cfg.figure_path}")
    if report.failures:
        for failure in report.failures:
            print(failure.diagnostic, file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# -- validate -----------------------------------------------------------

def _cmd_validate(args) -> int:
    trace = trace_from_json(_read(args.trace))
    ts = normalize(tasks_from_json(_read(args.tasks)))
    report = validate_trace(trace, ts)
    if args.json:
        print(report.to_json())
    else:
        if report.ok:
            print("ok")
        else:
            for field in ("misses", "malformed", "priority_violations",
                          "overlap_violations", "speed_violations",
                          "non_interference_violations"):
                for item in getattr(report, field):
                    print(f"{field}: {item}")
    return EXIT_OK if report.ok else EXIT_VALIDATION


# -- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dvsched",
                     description="Multiprocessor DVS scheduling toolkit")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--transition-inflation", default="0", metavar="DT",
                       help="add DT to every execution budget before analysis")

    p = sub.add_parser("analyze", parents=[], help="sizing and speed bounds")
    p.add_argument("tasks", help="task file (json)")
    p.add_argument("--processors", type=int, default=None)
    p.add_argument("--s-min", default=None, help="clamp floor for the operating speed")
    p.add_argument("--json", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("simulate", help="run one schedule")
    p.add_argument("tasks", help="task file (json)")
    p.add_argument("--method", required=True,
                   choices=[m.value for m in Method])
    p.add_argument("--model", default="sa1100",
                   help="preset name, analytic:c0,c1,gamma, or model json path")
    p.add_argument("--speed-mode", choices=["discrete", "continuous"],
                   default="discrete")
    p.add_argument("--processors", type=int, default=None)
    p.add_argument("--s-min", default=None)
    p.add_argument("--idle", choices=["s_min", "zero"], default="s_min")
    p.add_argument("--horizon", default=None)
    p.add_argument("--acet-seed", type=int, default=None,
                   help="draw random actual demands (default: demands equal budgets)")
    p.add_argument("--acet-ratio", default="1/4,1", metavar="LO,HI")
    p.add_argument("--mote-privileged", choices=["on", "off"], default="on")
    p.add_argument("--out", default=None, help="write trace json here")
    p.add_argument("--csv", default=None, help="write trace csv here")
    p.add_argument("--gantt", default=None, help="write a gantt png here")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="batch energy comparison")
    p.add_argument("--config", default=None, help="config json; flags override")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--systems", type=int, default=None)
    p.add_argument("--models", default=None, help="comma list")
    p.add_argument("--methods", default=None, help="comma list")
    p.add_argument("--idle", choices=["s_min", "zero"], default=None)
    p.add_argument("--speed-mode", choices=["discrete", "continuous"], default=None)
    p.add_argument("--s-min", default=None)
    p.add_argument("--mote-privileged", choices=["on", "off"], default=None)
    p.add_argument("--transition-inflation", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--n-range", default=None, metavar="LO,HI")
    p.add_argument("--density-sum", default=None, metavar="LO,HI")
    p.add_argument("--periods", default=None, help="comma list")
    p.add_argument("--acet-ratio", default=None, metavar="LO,HI")
    p.add_argument("--out", default=None, help="write report json here")
    p.add_argument("--csv", default=None, help="write report csv here")
    p.add_argument("--emit-plot-data", default=None,
                   help="write tidy per-system savings csv here")
    p.add_argument("--figure", default=None, help="write savings bar chart here")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("validate", help="check a trace file")
    p.add_argument("trace", help="trace file (json)")
    p.add_argument("--tasks", required=True, help="task file (json)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (GenerationError, ValueError, TypeError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
