"""Per-variable and overall project similarity.

Similarity semantics throughout: 1 means identical, 0 means no overlap.
"""

from __future__ import annotations

import csv
import io
import operator
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .dataset import DRIVERS, Dataset, ProjectRecord
from .errors import ConfigError, TermMismatch, ZeroWeightVector
from .fuzzy import FuzzifiedValue, LinguisticVariable, fuzzify_project


class AggregationScheme(str, Enum):
    MAX_MIN = "max_min"
    SUM_PRODUCT = "sum_product"


COMBINERS = ("weighted_mean", "min")


@dataclass(frozen=True)
class SimilarityReport:
    pair: tuple[int, int]
    per_variable: dict[str, float]
    overall: float
    scheme: str
    combiner: str
    weights: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "per_variable": dict(self.per_variable),
            "overall": self.overall,
            "scheme": self.scheme,
            "combiner": self.combiner,
            "weights": dict(self.weights),
        }


def _check_aligned(var: LinguisticVariable, v1: FuzzifiedValue, v2: FuzzifiedValue) -> None:
    n = len(var.terms)
    if len(v1.degrees) != n or len(v2.degrees) != n:
        raise TermMismatch(f"{var.name}: expected {n} degrees, got {len(v1.degrees)} and {len(v2.degrees)}")
    if v1.variable != var.name or v2.variable != var.name:
        raise TermMismatch(f"values for {v1.variable!r}/{v2.variable!r} compared under {var.name!r}")


def _grade(a: Sequence[float], b: Sequence[float], max_min: bool) -> float:
    if max_min:
        return max(map(min, a, b))
    # rounding can push a sum of products a hair past 1
    return min(1.0, sum(map(operator.mul, a, b)))


def individual_similarity(
    var: LinguisticVariable,
    v1: FuzzifiedValue,
    v2: FuzzifiedValue,
    scheme: AggregationScheme | str = AggregationScheme.MAX_MIN,
) -> float:
    _check_aligned(var, v1, v2)
    return _grade(v1.degrees, v2.degrees, AggregationScheme(scheme) is AggregationScheme.MAX_MIN)


def variable_similarity(
    var: LinguisticVariable,
    v1: FuzzifiedValue,
    v2: FuzzifiedValue,
    scheme: AggregationScheme | str = AggregationScheme.MAX_MIN,
) -> float:
    """Per-variable grade used when comparing projects.

    The raw grade is divided by the larger of the two self-similarities. For
    indicator vectors (every categorical rating under the default partitions)
    that divisor is 1 and nothing changes; for a crisp size lying between two
    term peaks it restores d(P, P) = 1, which the raw measures only reach at
    the peaks. Max-min stays bounded because min(a_k, b_k) <= max(a); sum-product
    because sum(a_k * b_k) <= max(|a|^2, |b|^2) by Cauchy-Schwarz.
    """
    _check_aligned(var, v1, v2)
    return _rescaled(v1.degrees, v2.degrees, AggregationScheme(scheme) is AggregationScheme.MAX_MIN)


def _rescaled(a: Sequence[float], b: Sequence[float], max_min: bool) -> float:
    raw = _grade(a, b, max_min)
    if raw == 0.0:
        return 0.0
    return min(1.0, raw / max(_grade(a, a, max_min), _grade(b, b, max_min)))


def resolve_weights(variables: Sequence[LinguisticVariable], weights: Mapping[str, float] | None) -> dict[str, float]:
    """Per-variable weights; variables not mentioned get weight 1."""
    weights = dict(weights or {})
    unknown = set(weights) - {v.name for v in variables}
    if unknown:
        raise ConfigError(f"weights for unknown variables: {sorted(unknown)}")
    resolved = {v.name: float(weights.get(v.name, 1.0)) for v in variables}
    if any(w < 0 for w in resolved.values()):
        raise ConfigError("similarity weights must be nonnegative")
    if not any(w > 0 for w in resolved.values()):
        raise ZeroWeightVector("at least one similarity weight must be positive")
    return resolved


def combine(grades: Mapping[str, float], weights: Mapping[str, float], combiner: str = "weighted_mean") -> float:
    if combiner == "weighted_mean":
        total = sum(weights[name] for name in grades)
        if not total > 0:
            raise ZeroWeightVector("at least one similarity weight must be positive")
        return sum(weights[name] * g for name, g in grades.items()) / total
    if combiner == "min":
        active = [g for name, g in grades.items() if weights[name] > 0]
        if not active:
            raise ZeroWeightVector("at least one similarity weight must be positive")
        return min(active)
    raise ConfigError(f"unknown combiner {combiner!r}; expected one of {COMBINERS}")


def overall_similarity(
    p1: ProjectRecord,
    p2: ProjectRecord,
    variables: Sequence[LinguisticVariable],
    weights: Mapping[str, float] | None = None,
    scheme: AggregationScheme | str = AggregationScheme.MAX_MIN,
    combiner: str = "weighted_mean",
) -> SimilarityReport:
    w = resolve_weights(variables, weights)
    scheme = AggregationScheme(scheme)
    max_min = scheme is AggregationScheme.MAX_MIN
    f1 = fuzzify_project(p1, variables)
    f2 = fuzzify_project(p2, variables)
    grades = {}
    for var in variables:
        a, b = f1[var.name], f2[var.name]
        _check_aligned(var, a, b)
        grades[var.name] = _rescaled(a.degrees, b.degrees, max_min)
    return SimilarityReport((p1.id, p2.id), grades, combine(grades, w, combiner), scheme.value, combiner, w)


def crisp_similarity(
    p1: ProjectRecord,
    p2: ProjectRecord,
    variables: Sequence[LinguisticVariable],
    weights: Mapping[str, float] | None = None,
    combiner: str = "weighted_mean",
) -> SimilarityReport:
    """Plain CBR baseline: a variable scores 1 when the raw values are equal, else 0."""
    w = resolve_weights(variables, weights)
    grades = {}
    for var in variables:
        if var.name in DRIVERS:
            grades[var.name] = 1.0 if p1.ratings[var.name] == p2.ratings[var.name] else 0.0
        else:
            grades[var.name] = 1.0 if p1.kloc == p2.kloc else 0.0
    return SimilarityReport((p1.id, p2.id), grades, combine(grades, w, combiner), "crisp", combiner, w)


def similarity_matrix(
    dataset: Dataset,
    variables: Sequence[LinguisticVariable],
    weights: Mapping[str, float] | None = None,
    scheme: AggregationScheme | str = AggregationScheme.MAX_MIN,
    combiner: str = "weighted_mean",
) -> np.ndarray:
    records = dataset.records
    n = len(records)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            s = overall_similarity(records[i], records[j], variables, weights, scheme, combiner).overall
            out[i, j] = out[j, i] = s
    return out


def matrix_to_csv(ids: Sequence[int], matrix: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", *ids])
    for pid, row in zip(ids, matrix):
        writer.writerow([pid, *(repr(float(v)) for v in row)])
    return buf.getvalue()
