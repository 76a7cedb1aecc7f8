"""Membership functions, linguistic variables, fuzzification and defuzzification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Mapping, Sequence, Union

import numpy as np

from .dataset import DRIVERS, ProjectRecord, RatingLevel
from .errors import AllZeroCurve, BadConfig, InvalidParameters, UnknownTerm

DEFAULT_RESOLUTION = 1001


def _evaluate(x, fn):
    arr = np.asarray(x, dtype=float)
    out = fn(arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Trapezoidal:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d)
        if not all(math.isfinite(v) for v in vals) or not self.a <= self.b <= self.c <= self.d:
            raise InvalidParameters(f"trapezoid needs finite a <= b <= c <= d, got {vals}")

    @property
    def peak(self) -> float:
        return (self.b + self.c) / 2.0

    def _mu(self, x: np.ndarray) -> np.ndarray:
        a, b, c, d = self.a, self.b, self.c, self.d
        mu = np.zeros_like(x)
        rising = (x > a) & (x < b)
        falling = (x > c) & (x < d)
        if b > a:
            mu = np.where(rising, (x - a) / (b - a), mu)
        if d > c:
            mu = np.where(falling, (d - x) / (d - c), mu)
        return np.where((x >= b) & (x <= c), 1.0, mu)

    def __call__(self, x):
        return _evaluate(x, self._mu)

    def to_dict(self) -> dict:
        return {"kind": "trapezoidal", "params": [self.a, self.b, self.c, self.d]}


@dataclass(frozen=True)
class Triangular:
    a: float
    b: float
    c: float

    def __post_init__(self):
        vals = (self.a, self.b, self.c)
        if not all(math.isfinite(v) for v in vals) or not self.a <= self.b <= self.c:
            raise InvalidParameters(f"triangle needs finite a <= b <= c, got {vals}")

    @property
    def peak(self) -> float:
        return self.b

    def __call__(self, x):
        return Trapezoidal(self.a, self.b, self.b, self.c)(x)

    def to_dict(self) -> dict:
        return {"kind": "triangular", "params": [self.a, self.b, self.c]}


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or not self.sigma > 0:
            raise InvalidParameters(f"gaussian needs finite mu and sigma > 0, got ({self.mu}, {self.sigma})")

    @property
    def peak(self) -> float:
        return self.mu

    def __call__(self, x):
        return _evaluate(x, lambda v: np.exp(-((v - self.mu) ** 2) / (2.0 * self.sigma**2)))

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "params": [self.mu, self.sigma]}


@dataclass(frozen=True)
class Singleton:
    x0: float

    def __post_init__(self):
        if not math.isfinite(self.x0):
            raise InvalidParameters(f"singleton needs a finite point, got {self.x0}")

    @property
    def peak(self) -> float:
        return self.x0

    def __call__(self, x):
        return _evaluate(x, lambda v: (v == self.x0).astype(float))

    def to_dict(self) -> dict:
        return {"kind": "singleton", "params": [self.x0]}


MembershipFunction = Union[Trapezoidal, Triangular, Gaussian, Singleton]

_KINDS = {
    "trapezoidal": Trapezoidal,
    "triangular": Triangular,
    "gaussian": Gaussian,
    "singleton": Singleton,
}


def membership(mf: MembershipFunction, x):
    """Grade of ``x`` in ``mf``; accepts scalars or arrays."""
    return mf(x)


def mf_from_dict(spec: Mapping[str, Any]) -> MembershipFunction:
    try:
        cls = _KINDS[str(spec["kind"]).lower()]
        params = [float(p) for p in spec["params"]]
        return cls(*params)
    except KeyError as exc:
        raise BadConfig(f"bad membership function spec {dict(spec)!r}: missing/unknown {exc}") from None
    except TypeError:
        raise BadConfig(f"wrong parameter count in membership function spec {dict(spec)!r}") from None


def fuzzify_numeric(x0: float) -> Singleton:
    return Singleton(float(x0))


@dataclass(frozen=True)
class FuzzifiedValue:
    variable: str
    degrees: tuple[float, ...]


@dataclass(frozen=True)
class LinguisticVariable:
    """A named attribute with ordered fuzzy terms over ``universe``.

    ``transform`` maps raw attribute values onto the universe (``"log10"`` for
    size). Inputs outside the universe are clamped, so the end terms behave as
    shoulders. ``anchors`` overrides the point used to fuzzify a term label;
    otherwise the term's peak is used.
    """

    name: str
    universe: tuple[float, float]
    terms: tuple[tuple[str, MembershipFunction], ...]
    transform: str | None = None
    anchors: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        lo, hi = self.universe
        if not lo < hi:
            raise BadConfig(f"{self.name}: empty universe {self.universe}")
        labels = self.labels
        if not labels:
            raise BadConfig(f"{self.name}: no terms")
        if len(set(labels)) != len(labels):
            raise BadConfig(f"{self.name}: duplicate term labels")
        if self.transform not in (None, "log10"):
            raise BadConfig(f"{self.name}: unknown transform {self.transform!r}")
        # variables key the fuzzification caches; hashing the nested terms on
        # every lookup dominated retrieval time
        object.__setattr__(self, "_hash", hash((self.name, self.universe, self.terms, self.transform, self.anchors)))

    def __hash__(self) -> int:
        return self._hash

    def __getstate__(self) -> dict:
        # string hashes are salted per process; recompute after unpickling
        return {k: v for k, v in self.__dict__.items() if k != "_hash"}

    def __setstate__(self, state: dict) -> None:
        self.__dict__.update(state)
        self.__post_init__()

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.terms)

    def anchor(self, label: str) -> float:
        for name, point in self.anchors:
            if name == label:
                return point
        for name, mf in self.terms:
            if name == label:
                return mf.peak
        raise UnknownTerm(f"{self.name} has no term {label!r}")

    def to_universe(self, value: float) -> float:
        x = math.log10(value) if self.transform == "log10" else float(value)
        lo, hi = self.universe
        return min(max(x, lo), hi)

    def degrees_at(self, x: float) -> tuple[float, ...]:
        """Memberships of a universe point in every term (no transform)."""
        lo, hi = self.universe
        x = min(max(float(x), lo), hi)
        return tuple(float(mf(x)) for _, mf in self.terms)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "name": self.name,
            "universe": list(self.universe),
            "terms": [{"label": label, **mf.to_dict()} for label, mf in self.terms],
        }
        if self.transform:
            out["transform"] = self.transform
        for label, point in self.anchors:
            for term in out["terms"]:
                if term["label"] == label:
                    term["anchor"] = point
        return out


def fuzzify_crisp(var: LinguisticVariable, value: float) -> FuzzifiedValue:
    """Fuzzify a numeric attribute value against ``var``'s terms.

    The value becomes a singleton and each term's degree is the height of its
    intersection with that singleton, sup_x min(singleton(x), mu_k(x)), which
    is mu_k at the (transformed, clamped) point.
    """
    point = fuzzify_numeric(var.to_universe(value))
    return FuzzifiedValue(var.name, tuple(float(min(point(point.x0), mf(point.x0))) for _, mf in var.terms))


def fuzzify_categorical(var: LinguisticVariable, level: RatingLevel | str) -> FuzzifiedValue:
    label = level.token if isinstance(level, RatingLevel) else str(level)
    if label not in var.labels:
        raise UnknownTerm(f"{var.name} has no term {label!r}")
    return FuzzifiedValue(var.name, var.degrees_at(var.anchor(label)))


@lru_cache(maxsize=4096)
def _categorical_cached(var: LinguisticVariable, label: str) -> FuzzifiedValue:
    return fuzzify_categorical(var, label)


@lru_cache(maxsize=8192)
def _crisp_cached(var: LinguisticVariable, value: float) -> FuzzifiedValue:
    return fuzzify_crisp(var, value)


def fuzzify_project(record: ProjectRecord, variables: Sequence[LinguisticVariable]) -> dict[str, FuzzifiedValue]:
    """Fuzzify every attribute of ``record`` that has a variable."""
    out = {}
    for var in variables:
        if var.name in DRIVERS:
            out[var.name] = _categorical_cached(var, record.ratings[var.name].token)
        elif var.name == "size":
            out[var.name] = _crisp_cached(var, float(record.kloc))
        else:
            raise UnknownTerm(f"no project attribute feeds variable {var.name!r}")
    return out


def defuzzify_centroid(xs, mus) -> float:
    """Centroid sum(x * mu) / sum(mu) of a sampled membership curve."""
    xs = np.asarray(xs, dtype=float)
    mus = np.asarray(mus, dtype=float)
    if xs.shape != mus.shape or xs.ndim != 1:
        raise ValueError("xs and mus must be 1-D arrays of equal length")
    if len(xs) < 2:
        raise ValueError("need at least two samples")
    if np.any(mus < 0):
        raise ValueError("membership grades must be nonnegative")
    total = mus.sum()
    if not total > 0:
        raise AllZeroCurve("curve is zero everywhere")
    return float(np.dot(xs, mus) / total)


def sample(mf, universe: tuple[float, float], resolution: int = DEFAULT_RESOLUTION) -> tuple[np.ndarray, np.ndarray]:
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    xs = np.linspace(universe[0], universe[1], resolution)
    return xs, np.asarray(mf(xs), dtype=float)


def centroid(mf, universe: tuple[float, float], resolution: int = DEFAULT_RESOLUTION) -> float:
    return defuzzify_centroid(*sample(mf, universe, resolution))


# ---------------------------------------------------------------------------
# variable configuration

def variable_from_dict(spec: Mapping[str, Any]) -> LinguisticVariable:
    try:
        name = str(spec["name"])
        lo, hi = (float(v) for v in spec["universe"])
        raw_terms = spec["terms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise BadConfig(f"malformed variable spec: {exc}") from None
    terms = []
    anchors = []
    for term in raw_terms:
        if "label" not in term:
            raise BadConfig(f"{name}: term without label")
        label = str(term["label"])
        try:
            mf = mf_from_dict(term)
        except InvalidParameters as exc:
            raise BadConfig(f"{name}/{label}: {exc}") from None
        terms.append((label, mf))
        if "anchor" in term:
            anchors.append((label, float(term["anchor"])))
    var = LinguisticVariable(name, (lo, hi), tuple(terms), spec.get("transform"), tuple(anchors))
    if name in DRIVERS:
        for label in var.labels:
            try:
                level = RatingLevel.parse(label)
            except Exception:
                raise BadConfig(f"{name}: term label {label!r} is not a rating level") from None
            if level.token != label:
                raise BadConfig(f"{name}: use canonical token {level.token!r} instead of {label!r}")
    return var


def build_variables(config: Mapping[str, Any]) -> list[LinguisticVariable]:
    """Build the variable set described by a fuzzy-variable configuration."""
    if not isinstance(config, Mapping) or "variables" not in config:
        raise BadConfig("fuzzy-variable config must be an object with a 'variables' list")
    variables = [variable_from_dict(v) for v in config["variables"]]
    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        raise BadConfig("duplicate variable names")
    unknown = [n for n in names if n not in DRIVERS and n != "size"]
    if unknown:
        raise BadConfig(f"variables with no project attribute: {unknown}")
    return variables


def build_default_variables(config: Mapping[str, Any] | None = None) -> list[LinguisticVariable]:
    if config is None:
        from .config import load_variable_config

        config = load_variable_config()
    return build_variables(config)


def ruspini_terms(labels: Sequence[str], peaks: Sequence[float]) -> tuple[tuple[str, MembershipFunction], ...]:
    """Triangles peaked at ``peaks`` whose feet sit on the neighbouring peaks,
    with shouldered end terms; memberships sum to one between the end peaks."""
    if len(labels) != len(peaks) or len(peaks) < 2:
        raise BadConfig("need at least two labels with matching peaks")
    terms: list[tuple[str, MembershipFunction]] = []
    last = len(peaks) - 1
    for i, (label, p) in enumerate(zip(labels, peaks)):
        if i == 0:
            mf: MembershipFunction = Trapezoidal(p, p, p, peaks[1])
        elif i == last:
            mf = Trapezoidal(peaks[i - 1], p, p, p)
        else:
            mf = Triangular(peaks[i - 1], p, peaks[i + 1])
        terms.append((label, mf))
    return tuple(terms)
