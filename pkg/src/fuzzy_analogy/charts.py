"""Static SVG charts for evaluation output. Imported lazily; needs matplotlib."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .evaluation import EvaluationReport


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "fuzzy-analogy"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def actual_vs_estimated_chart(report: EvaluationReport, path: Path) -> list[Path]:
    """One line chart per stratum (or one overall), actual vs estimated by project id."""
    plt = _pyplot()
    groups = report.strata or {"all": report}
    written = []
    for label, sub in groups.items():
        ids = [str(r.id) for r in sub.per_project]
        fig, ax = plt.subplots(figsize=(max(6, len(ids) * 0.25), 4))
        ax.plot(ids, [r.actual for r in sub.per_project], marker="o", label="actual")
        ax.plot(ids, [r.estimated for r in sub.per_project], marker="s", label="estimated")
        ax.set_xlabel("project id")
        ax.set_ylabel("effort (person-months)")
        ax.set_title(f"{report.method}: {label} projects")
        ax.tick_params(axis="x", labelrotation=90, labelsize=7)
        ax.legend()
        fig.tight_layout()
        out = path.with_name(f"{path.stem}_{label}.svg")
        _save(fig, out)
        plt.close(fig)
        written.append(out)
    return written


def pred_chart(reports: Sequence[EvaluationReport], path: Path, p: float = 0.25) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([r.method for r in reports], [r.pred_at(p) for r in reports])
    ax.set_ylim(0, 1)
    ax.set_ylabel(f"PRED({p:g})")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
    return path
