"""Power-aware global EDF scheduling on identical multiprocessors.

Speed-bound analysis, exact event-driven simulation, an online one-shot
slowdown policy, workload generation and an energy comparison harness.
"""

from .analysis import (
    InfeasibleError,
    OfflineSpeed,
    edf_min_speed,
    edfk_speed,
    offline_speed,
    required_processors,
)
from .harness import (
    EnergyReport,
    ExperimentConfig,
    RowFailure,
    SystemResult,
    export,
    inflate_wcets,
    report_from_json,
    report_to_csv,
    report_to_json,
    resolve_model,
    run_comparison,
)
from .mote import (
    ContentionView,
    TaskView,
    free_cpu_bound,
    initial_speed,
    initial_speeds,
    next_contention,
    reduce_speed,
)
from .oracle import ValidationReport, brute_force_tnext, validate_trace, worst_case_feasibility
from .power import (
    IDLE_AT_MIN,
    IDLE_ZERO,
    PowerModel,
    SpeedLevel,
    analytic_model,
    energy_of_trace,
    model_from_json,
    model_to_json,
    power_at,
    preset_model,
    quantize_speed,
    table_model,
)
from .rationals import Rat, rat_lcm, rat_str, to_rat
from .sim import (
    JobRecord,
    Method,
    MoteWindow,
    Platform,
    Segment,
    Trace,
    TraceEvent,
    priority_key,
    simulate,
    trace_from_json,
    trace_to_csv,
    trace_to_json,
)
from .tasks import TaskSpec, TaskSystem, normalize, tasks_from_json, tasks_to_json
from .workload import GenParams, GenerationError, acet_table, generate, sample_acet

__all__ = [
    "ContentionView",
    "EnergyReport",
    "ExperimentConfig",
    "GenParams",
    "GenerationError",
    "IDLE_AT_MIN",
    "IDLE_ZERO",
    "InfeasibleError",
    "JobRecord",
    "Method",
    "MoteWindow",
    "OfflineSpeed",
    "Platform",
    "PowerModel",
    "Rat",
    "RowFailure",
    "Segment",
    "SpeedLevel",
    "SystemResult",
    "TaskSpec",
    "TaskSystem",
    "TaskView",
    "Trace",
    "TraceEvent",
    "ValidationReport",
    "acet_table",
    "analytic_model",
    "brute_force_tnext",
    "edf_min_speed",
    "edfk_speed",
    "energy_of_trace",
    "export",
    "free_cpu_bound",
    "generate",
    "inflate_wcets",
    "initial_speed",
    "initial_speeds",
    "model_from_json",
    "model_to_json",
    "next_contention",
    "normalize",
    "offline_speed",
    "power_at",
    "preset_model",
    "priority_key",
    "quantize_speed",
    "rat_lcm",
    "rat_str",
    "reduce_speed",
    "report_from_json",
    "report_to_csv",
    "report_to_json",
    "required_processors",
    "resolve_model",
    "run_comparison",
    "sample_acet",
    "simulate",
    "table_model",
    "tasks_from_json",
    "tasks_to_json",
    "to_rat",
    "trace_from_json",
    "trace_to_csv",
    "trace_to_json",
    "validate_trace",
    "worst_case_feasibility",
]
