"""Configuration files: shipped defaults, overrides and the run configuration.

Lookup order for each data file: explicit path, then the directory named by
``FUZZY_ANALOGY_CONFIG_DIR`` (if it holds a file of the same name), then the
copy shipped inside the package.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .dataset import DRIVERS, MODES, RatingLevel
from .errors import BadConfig, ConfigError

CONFIG_DIR_ENV = "FUZZY_ANALOGY_CONFIG_DIR"

VARIABLES_FILE = "fuzzy_variables.json"
EM_TABLE_FILE = "em_table.json"
COEFFICIENTS_FILE = "coefficients.json"
RUN_CONFIG_FILE = "run_config.json"

METHODS = ("fuzzy_analogy", "fuzzified_cocomo", "plain_cocomo", "plain_cbr")
SCHEMES = ("max_min", "sum_product")
COMBINERS = ("weighted_mean", "min")
STRATEGIES = ("similarity_weighted_mean", "mean", "median")
EXPONENT_MODES = ("as_written", "fixed_b")


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def load_config_file(filename: str, path: str | Path | None = None) -> Any:
    if path is not None:
        return _read_json(Path(path))
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir:
        candidate = Path(env_dir) / filename
        if candidate.is_file():
            return _read_json(candidate)
    text = resources.files("fuzzy_analogy").joinpath("data").joinpath(filename).read_text(encoding="utf-8")
    return json.loads(text)


def load_variable_config(path: str | Path | None = None) -> dict:
    return load_config_file(VARIABLES_FILE, path)


def load_em_table(path: str | Path | None = None) -> dict[str, dict[RatingLevel, float]]:
    """Load the effort-multiplier table as a complete driver x rating grid."""
    return em_table_from_dict(load_config_file(EM_TABLE_FILE, path))


def em_table_from_dict(payload: Mapping[str, Any]) -> dict[str, dict[RatingLevel, float]]:
    try:
        raw = payload["drivers"]
    except (KeyError, TypeError):
        raise BadConfig("EM table needs a 'drivers' object") from None
    fill = payload.get("fill", "nearest")
    if fill != "nearest":
        raise BadConfig(f"unsupported EM fill rule {fill!r}")
    missing = [d for d in DRIVERS if d not in raw]
    if missing:
        raise BadConfig(f"EM table missing drivers: {missing}")
    table: dict[str, dict[RatingLevel, float]] = {}
    for driver in DRIVERS:
        defined: dict[RatingLevel, float] = {}
        for token, value in raw[driver].items():
            try:
                level = RatingLevel.parse(token)
                value = float(value)
            except Exception:
                raise BadConfig(f"EM table {driver}: bad entry {token!r}: {value!r}") from None
            if not value > 0:
                raise BadConfig(f"EM table {driver}/{token}: multipliers must be positive")
            defined[level] = value
        if defined.get(RatingLevel.NOMINAL) != 1.0:
            raise BadConfig(f"EM table {driver}: nominal multiplier must be 1.0")
        table[driver] = {
            level: defined[min(defined, key=lambda d: (abs(d - level), d))] for level in RatingLevel
        }
    return table


@dataclass(frozen=True)
class Coefficients:
    A: float
    B: float


@dataclass(frozen=True)
class CoefficientPresets:
    presets: dict[str, dict[str, Coefficients]]  # preset -> mode (or "*") -> pair
    default_mode: str
    scale_factors: tuple[str, ...] = ()

    def resolve(self, preset: str, mode: str | None) -> Coefficients:
        try:
            table = self.presets[preset]
        except KeyError:
            raise ConfigError(f"unknown coefficient preset {preset!r}; have {sorted(self.presets)}") from None
        if "*" in table:
            return table["*"]
        return table[mode if mode in table else self.default_mode]


def coefficients_from_dict(payload: Mapping[str, Any]) -> CoefficientPresets:
    try:
        raw = payload["presets"]
        default_mode = payload.get("default_mode", "semidetached")
        presets: dict[str, dict[str, Coefficients]] = {}
        for name, spec in raw.items():
            if "A" in spec:
                presets[name] = {"*": Coefficients(float(spec["A"]), float(spec["B"]))}
            else:
                presets[name] = {
                    mode: Coefficients(float(v["A"]), float(v["B"])) for mode, v in spec.items()
                }
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise BadConfig(f"malformed coefficient presets: {exc}") from None
    if default_mode not in MODES:
        raise BadConfig(f"default_mode must be one of {MODES}")
    for name, table in presets.items():
        if "*" not in table and default_mode not in table:
            raise BadConfig(f"preset {name!r} has no entry for default mode {default_mode!r}")
        for pair in table.values():
            if not (pair.A > 0 and pair.B > 0):
                raise BadConfig(f"preset {name!r}: A and B must be positive")
    return CoefficientPresets(presets, default_mode, tuple(payload.get("scale_factors", ())))


def load_coefficients(path: str | Path | None = None) -> CoefficientPresets:
    return coefficients_from_dict(load_config_file(COEFFICIENTS_FILE, path))


@dataclass(frozen=True)
class RunConfig:
    method: str = "fuzzy_analogy"
    scheme: str = "max_min"
    combiner: str = "weighted_mean"
    weights: dict[str, float] = field(default_factory=dict)
    k: int | None = 2
    threshold: float | None = None
    strategy: str = "similarity_weighted_mean"
    exponent_mode: str = "fixed_b"
    exponent_terms: tuple[float, ...] = ()
    preset: str = "cocomo81"
    fis_resolution: int = 1001
    pred_levels: tuple[float, ...] = (0.25,)
    strata_bounds: tuple[float, float] | None = None
    drop_outliers: bool = False
    outlier_whisker: float = 1.5
    variables_path: str | None = None
    em_table_path: str | None = None
    coefficients_path: str | None = None

    def __post_init__(self):
        for name, allowed in (
            ("method", METHODS),
            ("scheme", SCHEMES),
            ("combiner", COMBINERS),
            ("strategy", STRATEGIES),
            ("exponent_mode", EXPONENT_MODES),
        ):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.threshold is None:
            if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 1:
                raise ConfigError(f"k must be a positive integer, got {self.k!r}")
        elif not 0 < self.threshold <= 1:
            raise ConfigError(f"threshold must lie in (0, 1], got {self.threshold!r}")
        if any(w < 0 for w in self.weights.values()):
            raise ConfigError("similarity weights must be nonnegative")
        if any(t < 0 for t in self.exponent_terms):
            raise ConfigError("exponent terms must be nonnegative")
        if not isinstance(self.fis_resolution, int) or self.fis_resolution < 2:
            raise ConfigError("fis_resolution must be an integer >= 2")
        if not self.pred_levels or any(p < 0 for p in self.pred_levels):
            raise ConfigError("pred_levels must be a non-empty list of nonnegative thresholds")
        if self.strata_bounds is not None and not self.strata_bounds[0] < self.strata_bounds[1]:
            raise ConfigError("strata_bounds must satisfy t1 < t2")
        if not self.outlier_whisker >= 0:
            raise ConfigError("outlier_whisker must be nonnegative")
        for path in (self.variables_path, self.em_table_path, self.coefficients_path):
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"config file not found: {path}")

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ConfigError(f"unknown run-config keys: {unknown}")
        values = dict(payload)
        try:
            for key in ("exponent_terms", "pred_levels"):
                if key in values and values[key] is not None:
                    values[key] = tuple(float(v) for v in values[key])
            if values.get("strata_bounds") is not None:
                t1, t2 = values["strata_bounds"]
                values["strata_bounds"] = (float(t1), float(t2))
            if "weights" in values:
                values["weights"] = {str(k): float(v) for k, v in (values["weights"] or {}).items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed run config: {exc}") from None
        return cls(**values)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("exponent_terms", "pred_levels", "strata_bounds"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out

    def updated(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def load_run_config(path: str | Path | None = None) -> RunConfig:
    payload = load_config_file(RUN_CONFIG_FILE, path)
    if not isinstance(payload, Mapping):
        raise ConfigError("run config must be a JSON object")
    return RunConfig.from_dict(payload)
