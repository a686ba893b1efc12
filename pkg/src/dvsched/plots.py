"""File-output figures for reports and traces.

Rendering is headless (Agg); every function writes an image file and
returns the path.  Figures are a convenience view of the same numbers
the CSV/JSON exports carry.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .sim import Trace

_METHOD_LABELS = {
    "smax": "full speed",
    "offline_edf": "offline EDF",
    "offline_edfk": "offline EDF(k)",
    "mote": "online reclaim",
}


def savings_figure(report, path: str) -> str:
    """Grouped bar chart of mean savings per method, one group per model."""
    methods = [m for m in report.methods if m != "smax"]
    if not methods:
        methods = list(report.methods)
    models = list(report.models)
    width = 0.8 / max(len(models), 1)
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(methods), 4.2))
    for j, name in enumerate(models):
        xs = [i + j * width for i in range(len(methods))]
        ys = [float(report.mean_savings[name][mv]) for mv in methods]
        errs = [report.std_savings[name][mv] for mv in methods]
        ax.bar(xs, ys, width=width, yerr=errs, capsize=3, label=name)
    ax.set_xticks([i + width * (len(models) - 1) / 2 for i in range(len(methods))])
    ax.set_xticklabels([_METHOD_LABELS.get(mv, mv) for mv in methods])
    ax.set_ylabel("mean energy savings vs full speed (%)")
    ax.set_title(f"{len(report.rows)} systems")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def gantt_figure(trace: Trace, path: str) -> str:
    """Per-CPU execution lanes; bar height tracks the running speed."""
    fig, ax = plt.subplots(figsize=(9, 1.2 + 0.9 * trace.m))
    cmap = plt.get_cmap("tab10")
    seen = set()
    for seg in trace.segments:
        color = cmap((seg.rank - 1) % 10)
        label = f"task {seg.rank}"
        height = 0.25 + 0.55 * float(seg.speed)
        ax.broken_barh(
            [(float(seg.start), float(seg.end - seg.start))],
            (seg.cpu - height / 2, height),
            facecolors=color,
            edgecolor="black",
            linewidth=0.4,
            label=None if label in seen else label,
        )
        seen.add(label)
    for rank, job, t in trace.misses:
        ax.axvline(float(t), color="red", linestyle="--", linewidth=1)
        ax.text(float(t), trace.m + 0.45, f"miss {rank}.{job}", color="red",
                ha="center", fontsize=8)
    ax.set_yticks(range(1, trace.m + 1))
    ax.set_yticklabels([f"cpu {c}" for c in range(1, trace.m + 1)])
    ax.set_ylim(0.3, trace.m + 0.7)
    ax.set_xlim(0, float(trace.horizon))
    ax.set_xlabel("time")
    ax.set_title(f"{trace.method.value}, m={trace.m}, k={trace.k}")
    if seen:
        ax.legend(loc="upper right", fontsize=8, ncols=min(len(seen), 4))
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
