"""Batch experiment runner: paired energy comparisons across methods.

One generated system is simulated once per (power model, method) with a
single shared demand table, every trace is checked by the validator, and
energies are reduced to per-model mean/std savings against the full-speed
baseline.  All per-system numbers stay exact rationals; only standard
deviations are floats.
"""

import concurrent.futures
import dataclasses
import json
import os
import random
import statistics
from dataclasses import dataclass
from typing import Optional

from .analysis import InfeasibleError, edf_min_speed, offline_speed, required_processors
from .oracle import validate_trace
from .power import (
    IDLE_AT_MIN,
    IDLE_ZERO,
    PowerModel,
    analytic_model,
    energy_of_trace,
    model_from_json,
    preset_model,
)
from .rationals import Rat, to_rat
from .sim import Method, Platform, Trace, simulate, trace_to_csv, trace_to_json
from .tasks import TaskSpec, TaskSystem, normalize
from .workload import GenParams, acet_table, generate

WORKERS_ENV = "DVSCHED_WORKERS"

SPEED_DISCRETE = "discrete"
SPEED_CONTINUOUS = "continuous"

# offsets the demand-draw stream from the layout-draw stream so the two
# never alias even when system seeds are consecutive integers
_ACET_SEED_SALT = 0x9E3779B97F4A7C15

METHOD_ORDER = (Method.SMAX, Method.OFFLINE_EDF, Method.OFFLINE_EDFK, Method.MOTE)


def resolve_model(name: str) -> PowerModel:
    """Turn a model descriptor into a PowerModel.

    Accepts a built-in preset name ("tm5400", "sa1100"), an inline
    analytic descriptor "analytic:c0,c1,gamma", or a path to a model JSON
    file.
    """
    if name.startswith("analytic:"):
        parts = name[len("analytic:"):].split(",")
        if len(parts) != 3:
            raise ValueError(f"analytic model descriptor needs c0,c1,gamma: {name!r}")
        c0, c1, gamma = (to_rat(p.strip()) for p in parts)
        return analytic_model(c0, c1, gamma, name=name)
    try:
        return preset_model(name)
    except ValueError:
        pass
    if os.path.exists(name):
        with open(name, "r", encoding="utf-8") as fh:
            return model_from_json(fh.read())
    raise ValueError(
        f"unknown power model {name!r}: not a preset, not analytic:c0,c1,gamma, "
        "and no such file"
    )


def inflate_wcets(ts: TaskSystem, delta) -> TaskSystem:
    """Add a fixed speed-switch allowance to every execution budget."""
    delta = to_rat(delta)
    if delta < 0:
        raise ValueError(f"transition inflation must be >= 0, got {delta}")
    if delta == 0:
        return ts
    try:
        return normalize(
            [
                TaskSpec(t.task_id, t.wcet + delta, t.deadline, t.period)
                for t in ts.tasks
            ]
        )
    except ValueError as exc:
        raise InfeasibleError(
            f"transition inflation {delta} makes the system invalid: {exc}"
        ) from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one batch run needs, serializable to JSON."""

    gen: GenParams
    systems: int = 1000
    power_models: tuple = ("sa1100", "tm5400")
    methods: tuple = METHOD_ORDER
    idle_policy: str = IDLE_AT_MIN
    speed_mode: str = SPEED_DISCRETE
    mote_privileged: bool = True
    transition_inflation: Rat = Rat(0)
    s_min: Optional[Rat] = None
    workers: Optional[int] = None
    report_path: Optional[str] = None
    csv_path: Optional[str] = None
    plot_data_path: Optional[str] = None
    figure_path: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.gen, GenParams):
            raise ValueError("gen must be a GenParams")
        if self.systems < 1:
            raise ValueError(f"need at least one system, got {self.systems}")
        models = tuple(self.power_models)
        if not models or len(set(models)) != len(models):
            raise ValueError("power_models must be non-empty and unique")
        object.__setattr__(self, "power_models", models)
        methods = tuple(Method(x) for x in self.methods)
        if not methods or len(set(methods)) != len(methods):
            raise ValueError("methods must be non-empty and unique")
        # every savings number divides by the full-speed run
        if Method.SMAX not in methods:
            raise ValueError("methods must include smax, the savings baseline")
        object.__setattr__(self, "methods", methods)
        if self.idle_policy not in (IDLE_AT_MIN, IDLE_ZERO):
            raise ValueError(f"unknown idle policy {self.idle_policy!r}")
        if self.speed_mode not in (SPEED_DISCRETE, SPEED_CONTINUOUS):
            raise ValueError(f"unknown speed mode {self.speed_mode!r}")
        object.__setattr__(
            self, "transition_inflation", to_rat(self.transition_inflation)
        )
        if self.transition_inflation < 0:
            raise ValueError("transition_inflation must be >= 0")
        if self.s_min is not None:
            s = to_rat(self.s_min)
            if not 0 < s <= 1:
                raise ValueError(f"s_min must be in (0, 1], got {s}")
            object.__setattr__(self, "s_min", s)
        if self.workers is not None and self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class SystemResult:
    """One generated system's analysis facts and per-cell energies."""

    index: int
    seed: int
    n: int
    m: int
    edf_bound: Rat
    s_ol: Rat
    k_opt: int
    energies: dict  # model name -> method value -> Rat
    savings: dict  # model name -> method value -> Rat (percent)


@dataclass(frozen=True)
class RowFailure:
    index: int
    seed: int
    diagnostic: str


@dataclass(frozen=True)
class EnergyReport:
    models: tuple
    methods: tuple
    rows: tuple  # SystemResult, ordered by index
    failures: tuple  # RowFailure, ordered by index
    mean_savings: dict  # model -> method value -> Rat (percent)
    std_savings: dict  # model -> method value -> float


def _resolve_workers(cfg: ExperimentConfig) -> int:
    if cfg.workers is not None:
        return cfg.workers
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if raw:
        count = int(raw)
        if count < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {raw}")
        return count
    return 1


def _acet_seed(system_seed: int) -> int:
    return (system_seed * 0x100000001 + _ACET_SEED_SALT) % (1 << 64)


def _summarize_validation(rep) -> str:
    parts = []
    for field in (
        "misses",
        "malformed",
        "priority_violations",
        "overlap_violations",
        "speed_violations",
        "non_interference_violations",
    ):
        items = getattr(rep, field)
        if items:
            parts.append(f"{field}={len(items)} (first: {items[0]})")
    return "; ".join(parts) if parts else "ok"


def _check_models(cfg: ExperimentConfig) -> dict:
    models = {}
    for name in cfg.power_models:
        model = resolve_model(name)
        if cfg.speed_mode == SPEED_DISCRETE and not model.is_table:
            raise ValueError(f"model {name!r} has no level table; use continuous mode")
        if cfg.speed_mode == SPEED_CONTINUOUS:
            # continuous runs hit speeds between levels, which a table
            # cannot price; an analytic model is the right tool
            if model.is_table:
                raise ValueError(
                    f"model {name!r} is a level table; continuous mode needs an analytic model"
                )
            if cfg.s_min is None:
                raise ValueError("continuous mode needs an explicit s_min")
        models[name] = model
    return models


def run_system(cfg: ExperimentConfig, index: int):
    """Generate and evaluate the index-th system of a batch."""
    params = dataclasses.replace(cfg.gen, seed=cfg.gen.seed + index)
    ts = generate(params)
    ts = inflate_wcets(ts, cfg.transition_inflation)
    return evaluate_system(ts, cfg, index=index, seed=params.seed)


def evaluate_system(ts: TaskSystem, cfg: ExperimentConfig, index: int = 0,
                    seed: Optional[int] = None):
    """Simulate one task system across all (model, method) cells.

    seed drives the actual-demand draw; None means every job consumes
    its full budget.  Returns a SystemResult, or a RowFailure when any
    trace fails validation: a bad trace must surface, never enter an
    average.
    """
    m = required_processors(ts)
    bound = edf_min_speed(ts, m)
    pure = offline_speed(ts, m, min(ts.max_density, Rat(1)))

    horizon = ts.hyperperiod()
    if seed is None:
        acets = None
    else:
        acet_rng = random.Random(_acet_seed(seed))
        acets = acet_table(ts, horizon, cfg.gen.acet_ratio_range, acet_rng)

    models = _check_models(cfg)
    energies = {}
    savings = {}
    for name in cfg.power_models:
        platform = Platform(
            m=m,
            model=models[name],
            discrete=cfg.speed_mode == SPEED_DISCRETE,
            s_min=cfg.s_min,
            idle=cfg.idle_policy,
        )
        per_method = {}
        for method in cfg.methods:
            extra = {}
            if method is Method.OFFLINE_EDF and bound > 1:
                # the processor cap at n can leave the plain bound above 1;
                # with one CPU per task, full speed is still miss-free, so
                # the cell degenerates to the baseline (zero savings)
                assert m == ts.n
                extra = {"k_override": 1, "uniform_speed": Rat(1)}
            trace = simulate(
                ts,
                platform,
                method,
                acets=acets,
                mote_all_ranks=cfg.mote_privileged,
                **extra,
            )
            rep = validate_trace(trace, ts)
            if not rep.ok:
                return RowFailure(
                    index=index,
                    seed=seed if seed is not None else 0,
                    diagnostic=(
                        f"system {index} (seed {seed}) {name}/{method.value}: "
                        + _summarize_validation(rep)
                    ),
                )
            per_method[method.value] = energy_of_trace(
                trace, models[name], idle=cfg.idle_policy, s_min=platform.s_min
            )
        base = per_method[Method.SMAX.value]
        if base <= 0:
            return RowFailure(
                index=index,
                seed=seed if seed is not None else 0,
                diagnostic=f"system {index} (seed {seed}) {name}: "
                f"full-speed energy {base} cannot anchor savings",
            )
        energies[name] = per_method
        savings[name] = {
            mv: 100 * (1 - e / base) for mv, e in per_method.items()
        }
    return SystemResult(
        index=index,
        seed=seed if seed is not None else 0,
        n=ts.n,
        m=m,
        edf_bound=bound,
        s_ol=pure.speed,
        k_opt=pure.k,
        energies=energies,
        savings=savings,
    )


def run_comparison(cfg: ExperimentConfig) -> EnergyReport:
    """Run the whole batch and aggregate savings per (model, method)."""
    _check_models(cfg)  # fail fast before any simulation
    workers = _resolve_workers(cfg)
    indices = range(cfg.systems)
    if workers == 1:
        outcomes = [run_system(cfg, i) for i in indices]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_system, [cfg] * cfg.systems, indices))

    rows = tuple(o for o in outcomes if isinstance(o, SystemResult))
    failures = tuple(o for o in outcomes if isinstance(o, RowFailure))

    mean_savings = {}
    std_savings = {}
    for name in cfg.power_models:
        mean_savings[name] = {}
        std_savings[name] = {}
        for method in cfg.methods:
            values = [row.savings[name][method.value] for row in rows]
            if values:
                mean_savings[name][method.value] = sum(values, Rat(0)) / len(values)
            else:
                mean_savings[name][method.value] = Rat(0)
            if len(values) >= 2:
                std_savings[name][method.value] = statistics.stdev(
                    float(v) for v in values
                )
            else:
                std_savings[name][method.value] = 0.0
    return EnergyReport(
        models=tuple(cfg.power_models),
        methods=tuple(m.value for m in cfg.methods),
        rows=rows,
        failures=failures,
        mean_savings=mean_savings,
        std_savings=std_savings,
    )


# -- serialization ------------------------------------------------------

REPORT_CSV_COLUMNS = (
    "system,seed,n,m,edf_bound_exact,edf_bound,s_ol_exact,s_ol,k_opt,"
    "model,method,energy_exact,energy,savings_exact,savings"
)

PLOT_CSV_COLUMNS = "system,method,model,savings"


def _dec(q) -> str:
    return repr(float(q))


def report_to_csv(report: EnergyReport) -> str:
    lines = [REPORT_CSV_COLUMNS]
    for row in report.rows:
        for name in report.models:
            for mv in report.methods:
                e = row.energies[name][mv]
                s = row.savings[name][mv]
                lines.append(
                    f"{row.index},{row.seed},{row.n},{row.m},"
                    f"{row.edf_bound},{_dec(row.edf_bound)},"
                    f"{row.s_ol},{_dec(row.s_ol)},{row.k_opt},"
                    f"{name},{mv},{e},{_dec(e)},{s},{_dec(s)}"
                )
    return "\n".join(lines) + "\n"


def plot_data_csv(report: EnergyReport) -> str:
    """Tidy per-cell savings table for external plotting."""
    lines = [PLOT_CSV_COLUMNS]
    for row in report.rows:
        for mv in report.methods:
            for name in report.models:
                lines.append(f"{row.index},{mv},{name},{_dec(row.savings[name][mv])}")
    return "\n".join(lines) + "\n"


def report_to_json(report: EnergyReport) -> str:
    def qmap(d):
        return {name: {mv: str(q) for mv, q in inner.items()} for name, inner in d.items()}

    data = {
        "kind": "energy-report",
        "models": list(report.models),
        "methods": list(report.methods),
        "mean_savings": qmap(report.mean_savings),
        "std_savings": report.std_savings,
        "failures": [
            {"system": f.index, "seed": f.seed, "diagnostic": f.diagnostic}
            for f in report.failures
        ],
        "rows": [
            {
                "system": row.index,
                "seed": row.seed,
                "n": row.n,
                "m": row.m,
                "edf_bound": str(row.edf_bound),
                "s_ol": str(row.s_ol),
                "k_opt": row.k_opt,
                "energies": qmap(row.energies),
                "savings": qmap(row.savings),
            }
            for row in report.rows
        ],
    }
    return json.dumps(data, indent=1)


def report_from_json(text: str) -> EnergyReport:
    data = json.loads(text)
    if data.get("kind") != "energy-report":
        raise ValueError("not an energy report")

    def unq(d):
        return {name: {mv: to_rat(s) for mv, s in inner.items()} for name, inner in d.items()}

    rows = tuple(
        SystemResult(
            index=r["system"],
            seed=r["seed"],
            n=r["n"],
            m=r["m"],
            edf_bound=to_rat(r["edf_bound"]),
            s_ol=to_rat(r["s_ol"]),
            k_opt=r["k_opt"],
            energies=unq(r["energies"]),
            savings=unq(r["savings"]),
        )
        for r in data["rows"]
    )
    failures = tuple(
        RowFailure(index=f["system"], seed=f["seed"], diagnostic=f["diagnostic"])
        for f in data["failures"]
    )
    return EnergyReport(
        models=tuple(data["models"]),
        methods=tuple(data["methods"]),
        rows=rows,
        failures=failures,
        mean_savings=unq(data["mean_savings"]),
        std_savings={
            name: {mv: float(v) for mv, v in inner.items()}
            for name, inner in data["std_savings"].items()
        },
    )


def export(obj, fmt: str, path: str) -> None:
    """Write a report or trace to path as csv or json."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown export format {fmt!r}")
    if isinstance(obj, EnergyReport):
        text = report_to_csv(obj) if fmt == "csv" else report_to_json(obj)
    elif isinstance(obj, Trace):
        text = trace_to_csv(obj) if fmt == "csv" else trace_to_json(obj)
    else:
        raise TypeError(f"cannot export {type(obj).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# -- config file --------------------------------------------------------

def config_to_json(cfg: ExperimentConfig) -> str:
    g = cfg.gen
    data = {
        "seed": g.seed,
        "n_range": list(g.n_range),
        "density_sum_range": [str(x) for x in g.density_sum_range],
        "period_pool": [str(x) for x in g.period_pool],
        "deadline_ratio_range": [str(x) for x in g.deadline_ratio_range],
        "acet_ratio_range": [str(x) for x in g.acet_ratio_range],
        "systems": cfg.systems,
        "power_models": list(cfg.power_models),
        "methods": [m.value for m in cfg.methods],
        "idle_policy": cfg.idle_policy,
        "speed_mode": cfg.speed_mode,
        "mote_privileged": cfg.mote_privileged,
        "transition_inflation": str(cfg.transition_inflation),
        "s_min": None if cfg.s_min is None else str(cfg.s_min),
        "workers": cfg.workers,
        "report_path": cfg.report_path,
        "csv_path": cfg.csv_path,
        "plot_data_path": cfg.plot_data_path,
        "figure_path": cfg.figure_path,
    }
    return json.dumps(data, indent=1)


def config_from_json(text: str) -> ExperimentConfig:
    data = json.loads(text)
    return config_from_dict(data)


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {
        "seed", "n_range", "density_sum_range", "period_pool",
        "deadline_ratio_range", "acet_ratio_range", "systems",
        "power_models", "methods", "idle_policy", "speed_mode",
        "mote_privileged", "transition_inflation", "s_min", "workers",
        "report_path", "csv_path", "plot_data_path", "figure_path",
    }
    extra = set(data) - known
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    gen_kwargs = {}
    if "seed" not in data:
        raise ValueError("config needs a seed")
    gen_kwargs["seed"] = data["seed"]
    for key in ("n_range", "density_sum_range", "period_pool",
                "deadline_ratio_range", "acet_ratio_range"):
        if key in data and data[key] is not None:
            gen_kwargs[key] = tuple(data[key])
    gen = GenParams(**gen_kwargs)
    kwargs = {"gen": gen}
    for key in ("systems", "power_models", "methods", "idle_policy",
                "speed_mode", "mote_privileged", "transition_inflation",
                "s_min", "workers", "report_path", "csv_path",
                "plot_data_path", "figure_path"):
        if key in data and data[key] is not None:
            value = data[key]
            if key in ("power_models", "methods"):
                value = tuple(value)
            kwargs[key] = value
    return ExperimentConfig(**kwargs)
