"""Case retrieval, case adaptation and the COCOMO-style effort formula."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .config import (
    CoefficientPresets,
    RunConfig,
    load_coefficients,
    load_em_table,
    load_variable_config,
)
from .dataset import DRIVERS, Dataset, ProjectRecord, RatingLevel
from .errors import ConfigError, EmptyAnalogySet, EmptyCasebase, InvalidParams, UnknownRating
from .fis import MultiplierInference
from .fuzzy import LinguisticVariable, build_variables
from .similarity import AggregationScheme, SimilarityReport, crisp_similarity, overall_similarity

STRATEGIES = ("similarity_weighted_mean", "mean", "median")


@dataclass(frozen=True)
class AnalogySet:
    target_id: int | None
    neighbors: tuple[tuple[int, float], ...]  # (project id, similarity), best first

    def __len__(self) -> int:
        return len(self.neighbors)

    def top(self, k: int) -> "AnalogySet":
        return AnalogySet(self.target_id, self.neighbors[:k])


def retrieve(
    target: ProjectRecord,
    casebase: Dataset,
    variables: Sequence[LinguisticVariable],
    scheme: AggregationScheme | str = AggregationScheme.MAX_MIN,
    combiner: str = "weighted_mean",
    weights: Mapping[str, float] | None = None,
    crisp: bool = False,
) -> AnalogySet:
    """Rank every casebase project (other than the target's id) by similarity."""
    candidates = [r for r in casebase.records if r.id != target.id]
    if not candidates:
        raise EmptyCasebase("no candidate analogs in the casebase")
    if crisp:
        score: Callable[[ProjectRecord], SimilarityReport] = lambda r: crisp_similarity(
            target, r, variables, weights, combiner
        )
    else:
        score = lambda r: overall_similarity(target, r, variables, weights, scheme, combiner)
    ranked = sorted(((r.id, score(r).overall) for r in candidates), key=lambda t: (-t[1], t[0]))
    return AnalogySet(target.id, tuple(ranked))


def select_analogs(analogs: AnalogySet, k: int | None = 2, threshold: float | None = None) -> AnalogySet:
    if len(analogs) == 0:
        raise EmptyAnalogySet("no analogs to adapt")
    if threshold is not None:
        if not 0 < threshold <= 1:
            raise ConfigError(f"threshold must lie in (0, 1], got {threshold}")
        chosen = tuple(n for n in analogs.neighbors if n[1] >= threshold)
        return AnalogySet(analogs.target_id, chosen or analogs.neighbors[:1])
    if k is None or k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    return analogs.top(k)


def adapt(
    analogs: AnalogySet,
    casebase: Dataset,
    k: int | None = 2,
    threshold: float | None = None,
    strategy: str = "similarity_weighted_mean",
) -> float:
    """Combine the efforts of the selected analogs into one estimate."""
    selected = select_analogs(analogs, k, threshold)
    efforts = [casebase.get(pid).actual_effort for pid, _ in selected.neighbors]
    sims = [s for _, s in selected.neighbors]
    if strategy == "similarity_weighted_mean":
        top = max(sims)
        if top > 0:
            # scale by the largest similarity so denormal grades keep full precision
            weights = [s / top for s in sims]
            return math.fsum(w * e for w, e in zip(weights, efforts)) / math.fsum(weights)
        return statistics.fmean(efforts)
    if strategy == "mean":
        return statistics.fmean(efforts)
    if strategy == "median":
        return float(statistics.median(efforts))
    raise ConfigError(f"unknown adaptation strategy {strategy!r}; expected one of {STRATEGIES}")


@dataclass(frozen=True)
class EffortModelParams:
    A: float
    B: float
    em_table: Mapping[str, Mapping[RatingLevel, float]]
    exponent_terms: tuple[float, ...] = ()
    sf_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not (self.A > 0 and self.B > 0):
            raise InvalidParams(f"A and B must be positive, got A={self.A}, B={self.B}")
        if any(not t >= 0 for t in self.exponent_terms):
            raise InvalidParams("exponent terms must be nonnegative")
        for driver, row in self.em_table.items():
            if any(not v > 0 for v in row.values()):
                raise InvalidParams(f"{driver}: effort multipliers must be positive")
            if row.get(RatingLevel.NOMINAL) != 1.0:
                raise InvalidParams(f"{driver}: nominal multiplier must be 1.0")


def cocomo_effort(size: float, A: float, exponent: float, multipliers: Sequence[float]) -> float:
    return A * size**exponent * math.prod(multipliers)


def effort_exponent(params: EffortModelParams, exponent_mode: str = "fixed_b") -> float:
    if exponent_mode == "fixed_b":
        return params.B
    if exponent_mode == "as_written":
        return params.B + 0.01 * sum(params.exponent_terms)
    raise ConfigError(f"unknown exponent mode {exponent_mode!r}")


def effort_multipliers(
    project: ProjectRecord,
    params: EffortModelParams,
    inference: MultiplierInference | None = None,
) -> dict[str, float]:
    """Per-driver multipliers, inferred when ``inference`` is given, else looked up."""
    out = {}
    for driver in DRIVERS:
        level = project.ratings[driver]
        if inference is not None:
            out[driver] = inference(driver, level)
        else:
            try:
                out[driver] = params.em_table[driver][level]
            except KeyError:
                raise UnknownRating(f"no multiplier for {driver}={level.token}") from None
    return out


def estimate_effort(
    project: ProjectRecord,
    params: EffortModelParams,
    exponent_mode: str = "fixed_b",
    inference: MultiplierInference | None = None,
) -> float:
    """A * KLOC ** exponent * product of the 15 effort multipliers."""
    if not project.kloc > 0:
        raise InvalidParams(f"project {project.id}: size must be positive")
    ems = effort_multipliers(project, params, inference)
    return cocomo_effort(project.kloc, params.A, effort_exponent(params, exponent_mode), ems.values())


@dataclass(frozen=True)
class EstimateRecord:
    target_id: int | None
    estimated_effort: float
    method: str
    analogs_used: tuple[tuple[int, float], ...]
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "target_id": self.target_id,
            "estimated_effort": self.estimated_effort,
            "method": self.method,
            "analogs_used": [{"id": pid, "similarity": s} for pid, s in self.analogs_used],
            "diagnostics": self.diagnostics,
        }


class EstimationContext:
    """Everything a run configuration resolves to: variables, tables and FIS."""

    def __init__(
        self,
        config: RunConfig,
        variables: Sequence[LinguisticVariable] | None = None,
        em_table: Mapping[str, Mapping[RatingLevel, float]] | None = None,
        coefficients: CoefficientPresets | None = None,
    ):
        self.config = config
        self.variables = list(variables) if variables is not None else build_variables(
            load_variable_config(config.variables_path)
        )
        self.em_table = em_table if em_table is not None else load_em_table(config.em_table_path)
        self.coefficients = coefficients if coefficients is not None else load_coefficients(config.coefficients_path)
        if config.preset not in self.coefficients.presets:
            raise ConfigError(f"unknown coefficient preset {config.preset!r}")
        self.inference = MultiplierInference(self.variables, self.em_table, config.fis_resolution)

    def params_for(self, project: ProjectRecord) -> EffortModelParams:
        pair = self.coefficients.resolve(self.config.preset, project.mode)
        return EffortModelParams(
            pair.A, pair.B, self.em_table, tuple(self.config.exponent_terms), self.coefficients.scale_factors
        )


def estimate_pipeline(
    target: ProjectRecord,
    casebase: Dataset,
    config: RunConfig,
    context: EstimationContext | None = None,
) -> EstimateRecord:
    ctx = context or EstimationContext(config)
    params = ctx.params_for(target)
    fuzzy_ems = effort_multipliers(target, params, ctx.inference)
    exponent = effort_exponent(params, config.exponent_mode)
    diagnostics = {
        "effort_multipliers": fuzzy_ems,
        "exponent": exponent,
        "A": params.A,
        "B": params.B,
    }

    method = config.method
    analogs_used: tuple[tuple[int, float], ...] = ()
    if method in ("fuzzy_analogy", "plain_cbr"):
        analogs = retrieve(
            target,
            casebase,
            ctx.variables,
            scheme=config.scheme,
            combiner=config.combiner,
            weights=config.weights,
            crisp=method == "plain_cbr",
        )
        selected = select_analogs(analogs, config.k, config.threshold)
        estimate = adapt(selected, casebase, k=len(selected), strategy=config.strategy)
        analogs_used = selected.neighbors
    elif method == "fuzzified_cocomo":
        estimate = cocomo_effort(target.kloc, params.A, exponent, fuzzy_ems.values())
    elif method == "plain_cocomo":
        table_ems = effort_multipliers(target, params)
        diagnostics["effort_multipliers"] = table_ems
        estimate = cocomo_effort(target.kloc, params.A, exponent, table_ems.values())
    else:
        raise ConfigError(f"unknown method {method!r}")
    return EstimateRecord(target.id, estimate, method, analogs_used, diagnostics)
