"""Single-antecedent Mamdani systems mapping a driver rating to its effort multiplier.

One system per driver. Rule k reads "if driver is term_k then EM is about
em_table[driver][term_k]"; consequents are symmetric triangles of a common
half-width (half the smallest gap between the driver's distinct multipliers),
so neighbouring consequents touch but never overlap. Firing clips each
consequent at its antecedent degree, clipped sets are max-aggregated and the
result is defuzzified by centroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import DRIVERS, RatingLevel
from .errors import AllZeroCurve, UnknownDriver, UnknownRating
from .fuzzy import (
    DEFAULT_RESOLUTION,
    LinguisticVariable,
    Triangular,
    defuzzify_centroid,
    fuzzify_categorical,
    fuzzify_crisp,
)

# Fallback consequent half-width when a driver has a single distinct multiplier.
_LONE_HALF_WIDTH = 0.05


def _common_step(offsets: Sequence[float], max_decimals: int = 6) -> float | None:
    """Largest step dividing every offset, if all are short decimals."""
    for decimals in range(max_decimals + 1):
        scale = 10.0**decimals
        if all(abs(v * scale - round(v * scale)) < 1e-9 for v in offsets):
            g = 0
            for v in offsets:
                g = math.gcd(g, round(v * scale))
            return g / scale if g else None
    return None


def output_grid(centers: Sequence[float], half_width: float, resolution: int) -> np.ndarray:
    """Uniform grid covering every consequent, with each center on a sample.

    Centers on nodes make the sampled centroid of a lone symmetric consequent
    reproduce its center to rounding error; a naive linspace is off by ~1e-6.
    """
    lo = min(centers) - half_width
    span = max(centers) + half_width - lo
    quantum = _common_step([c - lo for c in centers] + [span])
    if quantum is not None:
        steps = math.floor(quantum * (resolution - 1) / span)
        if steps >= 1:
            step = quantum / steps
            return lo + step * np.arange(resolution)
    return np.linspace(lo, lo + span, resolution)


@dataclass(frozen=True)
class MultiplierSystem:
    driver: str
    variable: LinguisticVariable
    table: Mapping[RatingLevel, float]
    resolution: int = DEFAULT_RESOLUTION
    xs: np.ndarray = field(init=False, repr=False, compare=False)
    consequents: np.ndarray = field(init=False, repr=False, compare=False)
    half_width: float = field(init=False)

    def __post_init__(self):
        values = [self.table[RatingLevel.parse(label)] for label in self.variable.labels]
        distinct = sorted(set(values))
        gaps = np.diff(distinct)
        half = float(gaps.min()) / 2 if len(gaps) else _LONE_HALF_WIDTH
        xs = output_grid(values, half, self.resolution)
        curves = np.stack([Triangular(v - half, v, v + half)(xs) for v in values])
        object.__setattr__(self, "half_width", half)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "consequents", curves)

    def infer_degrees(self, degrees: Sequence[float]) -> float:
        degrees = np.asarray(degrees, dtype=float)
        if degrees.shape != (self.consequents.shape[0],):
            raise UnknownRating(f"{self.driver}: expected {self.consequents.shape[0]} antecedent degrees")
        aggregate = np.max(np.minimum(self.consequents, degrees[:, None]), axis=0)
        try:
            return defuzzify_centroid(self.xs, aggregate)
        except AllZeroCurve:
            raise AllZeroCurve(f"{self.driver}: no rule fired") from None

    def infer(self, rating: RatingLevel | str) -> float:
        label = rating.token if isinstance(rating, RatingLevel) else RatingLevel.parse(rating).token
        if label not in self.variable.labels:
            raise UnknownRating(f"{self.driver} has no rating {label!r}")
        return self.infer_degrees(fuzzify_categorical(self.variable, label).degrees)

    def infer_crisp(self, x: float) -> float:
        """Multiplier for a point on the driver's rating scale (e.g. 2.5)."""
        return self.infer_degrees(fuzzify_crisp(self.variable, x).degrees)


class MultiplierInference:
    """The 15 driver systems, with results memoised per (driver, rating)."""

    def __init__(
        self,
        variables: Sequence[LinguisticVariable],
        em_table: Mapping[str, Mapping[RatingLevel, float]],
        resolution: int = DEFAULT_RESOLUTION,
    ):
        by_name = {v.name: v for v in variables}
        self.systems = {
            d: MultiplierSystem(d, by_name[d], em_table[d], resolution) for d in DRIVERS if d in by_name and d in em_table
        }
        self._cache: dict[tuple[str, RatingLevel], float] = {}

    def system(self, driver: str) -> MultiplierSystem:
        try:
            return self.systems[driver]
        except KeyError:
            raise UnknownDriver(f"no inference system for driver {driver!r}") from None

    def __call__(self, driver: str, rating: RatingLevel | str) -> float:
        level = rating if isinstance(rating, RatingLevel) else RatingLevel.parse(rating)
        key = (driver, level)
        if key not in self._cache:
            self._cache[key] = self.system(driver).infer(level)
        return self._cache[key]


_default_inference: MultiplierInference | None = None


def default_inference() -> MultiplierInference:
    global _default_inference
    if _default_inference is None:
        from .config import load_em_table
        from .fuzzy import build_default_variables

        _default_inference = MultiplierInference(build_default_variables(), load_em_table())
    return _default_inference


def infer_effort_multiplier(
    driver: str, rating: RatingLevel | str, inference: MultiplierInference | None = None
) -> float:
    if driver not in DRIVERS:
        raise UnknownDriver(f"unknown driver {driver!r}")
    try:
        level = rating if isinstance(rating, RatingLevel) else RatingLevel.parse(rating)
    except Exception:
        raise UnknownRating(f"unknown rating {rating!r}") from None
    return (inference or default_inference())(driver, level)
