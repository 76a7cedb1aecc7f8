"""Accuracy metrics, leave-one-out evaluation and method comparison."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .config import RunConfig
from .dataset import Dataset, OutlierPolicy, flag_outliers, stratify
from .errors import DataError, DatasetTooSmall, EmptyList, NonPositiveActual
from .estimation import EstimateRecord, EstimationContext, estimate_pipeline


def mre(actual: float, estimated: float) -> float:
    if not actual > 0:
        raise NonPositiveActual(f"actual effort must be positive, got {actual}")
    return abs(actual - estimated) / actual


def pred(mres: Sequence[float], p: float = 0.25) -> float:
    """Fraction of observations with MRE <= p."""
    if len(mres) == 0:
        raise EmptyList("PRED of an empty list is undefined")
    if p < 0:
        raise ValueError(f"p must be nonnegative, got {p}")
    return sum(1 for m in mres if m <= p) / len(mres)


def mmre(mres: Sequence[float]) -> float:
    if len(mres) == 0:
        raise EmptyList("MMRE of an empty list is undefined")
    return math.fsum(mres) / len(mres)


@dataclass(frozen=True)
class ProjectResult:
    id: int
    actual: float
    estimated: float
    mre: float


@dataclass(frozen=True)
class EvaluationReport:
    method: str
    per_project: tuple[ProjectResult, ...]
    mmre: float
    pred: dict[float, float]
    n: int
    strata: dict[str, "EvaluationReport"] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_results(
        cls,
        method: str,
        results: Iterable[ProjectResult],
        pred_levels: Sequence[float] = (0.25,),
        metadata: Mapping | None = None,
    ) -> "EvaluationReport":
        results = tuple(results)
        mres = [r.mre for r in results]
        levels = sorted(set(float(p) for p in pred_levels) | {0.25})
        return cls(
            method=method,
            per_project=results,
            mmre=mmre(mres),
            pred={p: pred(mres, p) for p in levels},
            n=len(results),
            metadata=dict(metadata or {}),
        )

    def pred_at(self, p: float = 0.25) -> float:
        if p in self.pred:
            return self.pred[p]
        return pred([r.mre for r in self.per_project], p)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "mmre": self.mmre,
            "pred": {_level_key(p): v for p, v in sorted(self.pred.items())},
            "per_project": [
                {"id": r.id, "actual": r.actual, "estimated": r.estimated, "mre": r.mre} for r in self.per_project
            ],
            "strata": {label: sub.to_dict() for label, sub in self.strata.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "EvaluationReport":
        try:
            results = tuple(
                ProjectResult(int(r["id"]), float(r["actual"]), float(r["estimated"]), float(r["mre"]))
                for r in payload["per_project"]
            )
            return cls(
                method=str(payload["method"]),
                per_project=results,
                mmre=float(payload["mmre"]),
                pred={float(p): float(v) for p, v in payload["pred"].items()},
                n=int(payload["n"]),
                strata={k: cls.from_dict(v) for k, v in payload.get("strata", {}).items()},
                metadata=dict(payload.get("metadata", {})),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise DataError(f"malformed evaluation report: {exc!r}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def per_project_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "actual", "estimated", "mre"])
        for r in self.per_project:
            writer.writerow([r.id, repr(r.actual), repr(r.estimated), repr(r.mre)])
        return buf.getvalue()


def _level_key(p: float) -> str:
    return repr(float(p))


def _stratified(report: EvaluationReport, dataset: Dataset, bounds, pred_levels) -> EvaluationReport:
    strata = {}
    by_id = {r.id: r for r in report.per_project}
    for stratum in stratify(dataset.subset(by_id), bounds):
        members = [by_id[i] for i in stratum.member_ids]
        if members:
            strata[stratum.label] = EvaluationReport.from_results(report.method, members, pred_levels)
    return EvaluationReport(
        report.method, report.per_project, report.mmre, report.pred, report.n, strata, report.metadata
    )


# Per-process state for parallel folds.
_worker: tuple[Dataset, RunConfig, EstimationContext] | None = None


def _init_worker(dataset: Dataset, config: RunConfig) -> None:
    global _worker
    _worker = (dataset, config, EstimationContext(config))


def _fold(dataset: Dataset, target_id: int, config: RunConfig, ctx: EstimationContext) -> EstimateRecord:
    target = dataset.get(target_id)
    casebase = dataset.without([target_id])
    assert target_id not in casebase, "a project leaked into its own casebase"
    return estimate_pipeline(target, casebase, config, ctx)


def _fold_in_worker(target_id: int) -> EstimateRecord:
    dataset, config, ctx = _worker
    return _fold(dataset, target_id, config, ctx)


def loocv(
    dataset: Dataset,
    config: RunConfig,
    context: EstimationContext | None = None,
    ids: Sequence[int] | None = None,
    stratified: bool = False,
    jobs: int = 1,
) -> EvaluationReport:
    """Leave-one-out: estimate each project with itself withheld from the casebase.

    ``ids`` restricts which projects are estimated; the casebase is always the
    rest of ``dataset``. With ``config.drop_outliers`` the flagged projects are
    removed before anything else happens.
    """
    outliers: list[int] = []
    if config.drop_outliers:
        outliers = flag_outliers(dataset, OutlierPolicy(config.outlier_whisker))
        dataset = dataset.without(outliers)
    if len(dataset) < 2:
        raise DatasetTooSmall(f"leave-one-out needs at least 2 projects, got {len(dataset)}")
    targets = list(dataset.ids if ids is None else ids)
    for pid in targets:
        dataset.get(pid)
    if not targets:
        raise EmptyList("no projects selected for evaluation")

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(dataset, config)) as pool:
            records = list(pool.map(_fold_in_worker, targets))
    else:
        ctx = context or EstimationContext(config)
        records = [_fold(dataset, pid, config, ctx) for pid in targets]

    results = [
        ProjectResult(rec.target_id, dataset.get(rec.target_id).actual_effort, rec.estimated_effort,
                      mre(dataset.get(rec.target_id).actual_effort, rec.estimated_effort))
        for rec in records
    ]
    metadata = {"config": config.to_dict(), "dataset": dataset.name, "outliers_removed": outliers}
    report = EvaluationReport.from_results(config.method, results, config.pred_levels, metadata)
    if stratified:
        report = _stratified(report, dataset, config.strata_bounds, config.pred_levels)
    return report


def evaluate_pairs(method: str, pairs: Iterable[tuple[int, float, float]], pred_levels=(0.25,)) -> EvaluationReport:
    """Report over externally produced (id, actual, estimated) triples."""
    return EvaluationReport.from_results(
        method, [ProjectResult(int(i), float(a), float(e), mre(a, e)) for i, a, e in pairs], pred_levels
    )


# ---------------------------------------------------------------------------
# comparison

@dataclass(frozen=True)
class ComparisonTable:
    levels: tuple[float, ...]
    rows: tuple[tuple[str, float, tuple[float, ...]], ...]  # (method, mmre, preds)

    @property
    def methods(self) -> list[str]:
        return [row[0] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", "mmre", *(f"pred({p:g})" for p in self.levels)])
        for method, mm, preds in self.rows:
            writer.writerow([method, f"{mm:.6f}", *(f"{v:.6f}" for v in preds)])
        return buf.getvalue()

    def to_text(self) -> str:
        header = ["method", "MMRE", *(f"PRED({p:g})" for p in self.levels)]
        body = [[m, f"{mm:.4f}", *(f"{v:.4f}" for v in preds)] for m, mm, preds in self.rows]
        widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(r, widths)))
                 for r in [header, *body]]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def compare(reports: Sequence[EvaluationReport]) -> ComparisonTable:
    """Rows sorted by PRED(0.25) descending, ties by method label."""
    levels = sorted({p for r in reports for p in r.pred} | {0.25})
    rows = [(r.method, r.mmre, tuple(r.pred_at(p) for p in levels)) for r in reports]
    idx = levels.index(0.25)
    rows.sort(key=lambda row: (-row[2][idx], row[0]))
    return ComparisonTable(tuple(levels), tuple(rows))


# ---------------------------------------------------------------------------
# plot-ready series

def actual_vs_estimated_series(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["stratum", "id", "actual", "estimated"])
    if report.strata:
        for label, sub in report.strata.items():
            for r in sub.per_project:
                writer.writerow([label, r.id, repr(r.actual), repr(r.estimated)])
    else:
        for r in report.per_project:
            writer.writerow(["all", r.id, repr(r.actual), repr(r.estimated)])
    return buf.getvalue()


def pred_series(reports: Sequence[EvaluationReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "p", "pred", "mmre"])
    for r in reports:
        for p, v in sorted(r.pred.items()):
            writer.writerow([r.method, repr(p), repr(v), repr(r.mmre)])
    return buf.getvalue()
