"""COCOMO81-format effort datasets: ARFF ingestion, validation and preparation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    ArffError,
    AttributeMismatch,
    EmptyDataset,
    InvalidBounds,
    MissingSection,
    NonPositiveNumeric,
    UnknownProject,
    UnknownToken,
)

# Standard COCOMO81 effort-driver layout, in file order.
DRIVERS: tuple[str, ...] = (
    "rely", "data", "cplx", "time", "stor", "virt", "turn",
    "acap", "aexp", "pcap", "vexp", "lexp", "modp", "tool", "sced",
)

MODES: tuple[str, ...] = ("organic", "semidetached", "embedded")

ID_ATTRIBUTES = frozenset({"id", "recordnumber", "record_number", "project_id", "projectid"})
SIZE_ATTRIBUTES = frozenset({"kloc", "loc", "ksloc", "equivphyskloc", "size"})
EFFORT_ATTRIBUTES = frozenset({"actual_effort", "act_effort", "actual", "effort", "months"})
MODE_ATTRIBUTES = frozenset({"mode", "dev_mode"})


class RatingLevel(IntEnum):
    VERY_LOW = 0
    LOW = 1
    NOMINAL = 2
    HIGH = 3
    VERY_HIGH = 4
    EXTRA_HIGH = 5

    @property
    def token(self) -> str:
        return _CANONICAL_TOKENS[self]

    @classmethod
    def parse(cls, token: str) -> "RatingLevel":
        key = token.strip().strip("'\"").lower().replace("-", "_").replace(" ", "_")
        try:
            return _TOKEN_ALIASES[key]
        except KeyError:
            raise UnknownToken(f"unrecognised rating token {token!r}") from None


_CANONICAL_TOKENS = {
    RatingLevel.VERY_LOW: "vl",
    RatingLevel.LOW: "l",
    RatingLevel.NOMINAL: "n",
    RatingLevel.HIGH: "h",
    RatingLevel.VERY_HIGH: "vh",
    RatingLevel.EXTRA_HIGH: "xh",
}

_TOKEN_ALIASES: dict[str, RatingLevel] = {}
for _level, _spellings in {
    RatingLevel.VERY_LOW: ("vl", "very_low", "verylow"),
    RatingLevel.LOW: ("l", "low"),
    RatingLevel.NOMINAL: ("n", "nominal", "nom"),
    RatingLevel.HIGH: ("h", "high"),
    RatingLevel.VERY_HIGH: ("vh", "very_high", "veryhigh"),
    RatingLevel.EXTRA_HIGH: ("xh", "eh", "extra_high", "extrahigh", "xhigh", "extra_very_high"),
}.items():
    for _s in _spellings:
        _TOKEN_ALIASES[_s] = _level


def normalize_mode(token: str) -> str:
    key = token.strip().strip("'\"").lower().replace("-", "").replace("_", "").replace(" ", "")
    if key in MODES:
        return key
    raise UnknownToken(f"unrecognised development mode {token!r}")


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # "nominal" | "numeric" | "string"
    values: tuple[str, ...] = ()

    @property
    def role(self) -> str:
        key = self.name.lower()
        if key in DRIVERS:
            return "driver"
        if key in ID_ATTRIBUTES:
            return "id"
        if key in SIZE_ATTRIBUTES:
            return "size"
        if key in EFFORT_ATTRIBUTES:
            return "effort"
        if key in MODE_ATTRIBUTES:
            return "mode"
        return "metadata"


@dataclass(frozen=True)
class Schema:
    attributes: tuple[Attribute, ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def find(self, role: str) -> Attribute | None:
        for attr in self.attributes:
            if attr.role == role:
                return attr
        return None

    @classmethod
    def cocomo81(cls, with_mode: bool = False) -> "Schema":
        """Schema used when datasets are built in memory rather than parsed."""
        attrs = [Attribute("id", "numeric")]
        if with_mode:
            attrs.append(Attribute("mode", "nominal", MODES))
        tokens = tuple(level.token for level in RatingLevel)
        attrs.extend(Attribute(d, "nominal", tokens) for d in DRIVERS)
        attrs.append(Attribute("kloc", "numeric"))
        attrs.append(Attribute("actual_effort", "numeric"))
        return cls(tuple(attrs))


@dataclass(frozen=True)
class ProjectRecord:
    """One historical project.

    Construction does not validate; parsed records are guaranteed clean and
    :func:`validate` reports problems in hand-built ones.
    """

    id: int
    ratings: dict[str, RatingLevel]
    kloc: float
    actual_effort: float
    mode: str | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    def rating(self, driver: str) -> RatingLevel:
        return self.ratings[driver]

    def replace(self, **changes) -> "ProjectRecord":
        values = {
            "id": self.id,
            "ratings": dict(self.ratings),
            "kloc": self.kloc,
            "actual_effort": self.actual_effort,
            "mode": self.mode,
            "metadata": dict(self.metadata),
        }
        values.update(changes)
        return ProjectRecord(**values)


@dataclass(frozen=True)
class Dataset:
    name: str
    records: tuple[ProjectRecord, ...]
    schema: Schema

    @classmethod
    def from_records(cls, records: Iterable[ProjectRecord], name: str = "dataset") -> "Dataset":
        records = tuple(records)
        with_mode = any(r.mode is not None for r in records)
        return cls(name, records, Schema.cocomo81(with_mode=with_mode))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ProjectRecord]:
        return iter(self.records)

    @cached_property
    def _by_id(self) -> dict[int, ProjectRecord]:
        return {r.id: r for r in self.records}

    @property
    def ids(self) -> list[int]:
        return [r.id for r in self.records]

    def get(self, project_id: int) -> ProjectRecord:
        try:
            return self._by_id[project_id]
        except KeyError:
            raise UnknownProject(f"unknown project id {project_id}") from None

    def __contains__(self, project_id: object) -> bool:
        return project_id in self._by_id

    def without(self, project_ids: Iterable[int]) -> "Dataset":
        drop = set(project_ids)
        return Dataset(self.name, tuple(r for r in self.records if r.id not in drop), self.schema)

    def subset(self, project_ids: Iterable[int]) -> "Dataset":
        return Dataset(self.name, tuple(self.get(i) for i in project_ids), self.schema)


# ---------------------------------------------------------------------------
# ARFF

def _split_values(line: str) -> list[str]:
    reader = csv.reader([line], quotechar="'", escapechar="\\", skipinitialspace=True)
    values = next(reader, [])
    out = []
    for v in values:
        v = v.strip()
        if len(v) >= 2 and v[0] == v[-1] == '"':
            v = v[1:-1]
        out.append(v)
    return out


def _parse_attribute(line: str, lineno: int) -> Attribute:
    body = line[len("@attribute"):].strip()
    if not body:
        raise ArffError(f"line {lineno}: empty @attribute declaration")
    if body[0] in "'\"":
        end = body.find(body[0], 1)
        if end < 0:
            raise ArffError(f"line {lineno}: unterminated attribute name")
        name, rest = body[1:end], body[end + 1:].strip()
    else:
        parts = body.split(None, 1)
        name, rest = parts[0], (parts[1].strip() if len(parts) > 1 else "")
    if rest.startswith("{"):
        if not rest.endswith("}"):
            raise ArffError(f"line {lineno}: unterminated nominal enumeration")
        values = tuple(v for v in _split_values(rest[1:-1]) if v != "")
        return Attribute(name, "nominal", values)
    kind = rest.split()[0].lower() if rest else ""
    if kind in ("numeric", "real", "integer"):
        return Attribute(name, "numeric")
    if kind in ("string", "date"):
        return Attribute(name, "string")
    raise ArffError(f"line {lineno}: unsupported attribute type {rest!r} for {name!r}")


def _canonical_attribute(attr: Attribute) -> Attribute:
    """Normalise rating and mode enumerations to canonical lower-case tokens."""
    role = attr.role
    if role == "driver":
        if attr.kind != "nominal":
            raise AttributeMismatch(f"driver {attr.name!r} must be declared nominal")
        levels = sorted({RatingLevel.parse(v) for v in attr.values})
        return Attribute(attr.name.lower(), "nominal", tuple(l.token for l in levels))
    if role == "mode" and attr.kind == "nominal":
        return Attribute(attr.name, "nominal", tuple(dict.fromkeys(normalize_mode(v) for v in attr.values)))
    if role in ("size", "effort", "id") and attr.kind != "numeric":
        raise AttributeMismatch(f"attribute {attr.name!r} must be numeric")
    return attr


def _check_layout(schema: Schema) -> None:
    drivers = [a.name for a in schema.attributes if a.role == "driver"]
    missing = [d for d in DRIVERS if d not in drivers]
    if missing:
        raise AttributeMismatch(f"missing driver attributes: {', '.join(missing)}")
    if len(drivers) != len(set(drivers)):
        raise AttributeMismatch("duplicate driver attributes")
    for role in ("size", "effort"):
        found = [a.name for a in schema.attributes if a.role == role]
        if len(found) != 1:
            raise AttributeMismatch(f"expected exactly one {role} attribute, found {found or 'none'}")


def _positive(value: str, what: str, row: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ArffError(f"row {row}: {what} value {value!r} is not numeric") from None
    if not x > 0 or math.isinf(x):
        raise NonPositiveNumeric(f"row {row}: {what} must be positive, got {value!r}")
    return x


def parse_arff(text: str, name: str | None = None) -> Dataset:
    """Parse a PROMISE COCOMO81-layout ARFF document."""
    relation = None
    attributes: list[Attribute] = []
    data_lines: list[tuple[int, str]] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if data_lines is not None:
            data_lines.append((lineno, line))
            continue
        lower = line.lower()
        if lower.startswith("@relation"):
            relation = line[len("@relation"):].strip().strip("'\"")
        elif lower.startswith("@attribute"):
            attributes.append(_parse_attribute(line, lineno))
        elif lower.startswith("@data"):
            data_lines = []
        else:
            raise ArffError(f"line {lineno}: unexpected header content {line[:40]!r}")

    if data_lines is None:
        raise MissingSection("no @data section")
    schema = Schema(tuple(_canonical_attribute(a) for a in attributes))
    _check_layout(schema)

    records = []
    seen_ids: set[int] = set()
    has_id = schema.find("id") is not None
    for row, (lineno, line) in enumerate(data_lines, start=1):
        if line.startswith("{"):
            raise ArffError(f"line {lineno}: sparse ARFF rows are not supported")
        values = _split_values(line)
        if len(values) != len(schema.attributes):
            raise AttributeMismatch(
                f"line {lineno}: {len(values)} values for {len(schema.attributes)} declared attributes"
            )
        ratings: dict[str, RatingLevel] = {}
        metadata: dict[str, str] = {}
        kloc = effort = None
        mode = None
        project_id = row
        for attr, value in zip(schema.attributes, values):
            role = attr.role
            if role == "driver":
                if value == "?":
                    raise UnknownToken(f"line {lineno}: missing rating for {attr.name}")
                level = RatingLevel.parse(value)
                if level.token not in attr.values:
                    raise UnknownToken(f"line {lineno}: {value!r} not declared for {attr.name}")
                ratings[attr.name] = level
            elif role == "size":
                kloc = _positive(value, attr.name, row)
            elif role == "effort":
                effort = _positive(value, attr.name, row)
            elif role == "id":
                try:
                    as_float = float(value)
                except ValueError:
                    raise ArffError(f"line {lineno}: project id {value!r} is not numeric") from None
                if not as_float.is_integer():
                    raise ArffError(f"line {lineno}: project id {value!r} is not an integer")
                project_id = int(as_float)
            elif role == "mode" and value != "?":
                mode = normalize_mode(value)
                if attr.kind == "nominal" and mode not in attr.values:
                    raise UnknownToken(f"line {lineno}: mode {value!r} not declared")
            else:
                if attr.kind == "nominal" and value != "?" and value not in attr.values:
                    raise UnknownToken(f"line {lineno}: {value!r} not declared for {attr.name}")
                metadata[attr.name] = value
        if has_id and project_id in seen_ids:
            raise ArffError(f"line {lineno}: duplicate project id {project_id}")
        seen_ids.add(project_id)
        records.append(ProjectRecord(project_id, ratings, kloc, effort, mode, metadata))

    return Dataset(name or relation or "dataset", tuple(records), schema)


def load_arff(path: str | Path) -> Dataset:
    path = Path(path)
    return parse_arff(path.read_text(encoding="utf-8"), name=None)


def _quote(value: str) -> str:
    if value == "" or any(c in value for c in " ,'\"{}%\t"):
        return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"
    return value


def serialize_arff(dataset: Dataset) -> str:
    out = [f"@relation {_quote(dataset.name)}", ""]
    for attr in dataset.schema.attributes:
        if attr.kind == "nominal":
            decl = "{" + ",".join(_quote(v) for v in attr.values) + "}"
        else:
            decl = attr.kind
        out.append(f"@attribute {_quote(attr.name)} {decl}")
    out.extend(["", "@data"])
    for rec in dataset.records:
        row = []
        for attr in dataset.schema.attributes:
            role = attr.role
            if role == "driver":
                row.append(rec.ratings[attr.name].token)
            elif role == "id":
                row.append(str(rec.id))
            elif role == "size":
                row.append(repr(rec.kloc))
            elif role == "effort":
                row.append(repr(rec.actual_effort))
            elif role == "mode":
                row.append(rec.mode if rec.mode is not None else "?")
            else:
                row.append(_quote(rec.metadata.get(attr.name, "?")))
        out.append(",".join(row))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# JSON / CSV

def dataset_to_dict(dataset: Dataset) -> dict:
    return {
        "name": dataset.name,
        "schema": [
            {"name": a.name, "kind": a.kind, "values": list(a.values)} for a in dataset.schema.attributes
        ],
        "records": [
            {
                "id": r.id,
                "mode": r.mode,
                "kloc": r.kloc,
                "actual_effort": r.actual_effort,
                "ratings": {d: r.ratings[d].token for d in DRIVERS if d in r.ratings},
                "metadata": dict(r.metadata),
            }
            for r in dataset.records
        ],
    }


def dataset_from_dict(payload: dict) -> Dataset:
    schema = Schema(
        tuple(Attribute(a["name"], a["kind"], tuple(a.get("values", ()))) for a in payload["schema"])
    )
    records = tuple(
        ProjectRecord(
            id=int(r["id"]),
            ratings={d: RatingLevel.parse(t) for d, t in r["ratings"].items()},
            kloc=float(r["kloc"]),
            actual_effort=float(r["actual_effort"]),
            mode=r.get("mode"),
            metadata=dict(r.get("metadata", {})),
        )
        for r in payload["records"]
    )
    return Dataset(payload["name"], records, schema)


def dataset_to_json(dataset: Dataset) -> str:
    return json.dumps(dataset_to_dict(dataset), indent=2, sort_keys=True) + "\n"


def dataset_from_json(text: str) -> Dataset:
    return dataset_from_dict(json.loads(text))


def dataset_to_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "mode", *DRIVERS, "kloc", "actual_effort"])
    for r in dataset.records:
        writer.writerow(
            [r.id, r.mode or "", *(r.ratings[d].token if d in r.ratings else "" for d in DRIVERS),
             repr(r.kloc), repr(r.actual_effort)]
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    project_id: int
    field: str
    kind: str
    message: str


def validate(dataset: Dataset) -> list[Violation]:
    """Report every invariant violation; never raises on bad data."""
    violations: list[Violation] = []
    seen: set[int] = set()
    for rec in dataset.records:
        if rec.id in seen:
            violations.append(Violation(rec.id, "id", "DuplicateId", f"id {rec.id} appears more than once"))
        seen.add(rec.id)
        for name, value in (("kloc", rec.kloc), ("actual_effort", rec.actual_effort)):
            if not isinstance(value, (int, float)) or not value > 0 or math.isinf(value):
                violations.append(Violation(rec.id, name, "NonPositiveNumeric", f"{name}={value!r} must be > 0"))
        for driver in DRIVERS:
            if driver not in rec.ratings:
                violations.append(Violation(rec.id, driver, "MissingDriver", f"driver {driver} missing"))
            elif not isinstance(rec.ratings[driver], RatingLevel):
                violations.append(
                    Violation(rec.id, driver, "InvalidRating", f"{rec.ratings[driver]!r} is not a rating level")
                )
        for extra in sorted(set(rec.ratings) - set(DRIVERS)):
            violations.append(Violation(rec.id, extra, "UnexpectedDriver", f"driver {extra} not in schema"))
        if rec.mode is not None and rec.mode not in MODES:
            violations.append(Violation(rec.id, "mode", "InvalidMode", f"mode {rec.mode!r} unknown"))
    return violations


# ---------------------------------------------------------------------------
# outliers and strata

@dataclass(frozen=True)
class OutlierPolicy:
    """Flag projects whose log productivity lies outside median +/- whisker * IQR."""

    whisker: float = 1.5

    def scores(self, dataset: Dataset) -> np.ndarray:
        return np.log(np.array([r.actual_effort / r.kloc for r in dataset.records]))

    def bounds(self, scores: np.ndarray) -> tuple[float, float]:
        q1, median, q3 = np.percentile(scores, [25, 50, 75])
        spread = self.whisker * (q3 - q1)
        return float(median - spread), float(median + spread)


def flag_outliers(dataset: Dataset, policy: OutlierPolicy | None = None) -> list[int]:
    if len(dataset) == 0:
        raise EmptyDataset("cannot flag outliers in an empty dataset")
    policy = policy or OutlierPolicy()
    scores = policy.scores(dataset)
    lo, hi = policy.bounds(scores)
    return sorted(r.id for r, s in zip(dataset.records, scores) if s < lo or s > hi)


STRATUM_LABELS = ("simple", "average", "complex")


@dataclass(frozen=True)
class ComplexityStratum:
    label: str
    member_ids: tuple[int, ...]
    bounds: tuple[float, float]  # [lo, hi) in person-months


def tertile_bounds(dataset: Dataset) -> tuple[float, float]:
    if len(dataset) == 0:
        raise EmptyDataset("cannot compute tertiles of an empty dataset")
    efforts = np.array([r.actual_effort for r in dataset.records])
    t1, t2 = np.quantile(efforts, [1 / 3, 2 / 3])
    return float(t1), float(t2)


def stratify(dataset: Dataset, bounds: Sequence[float] | None = None) -> tuple[ComplexityStratum, ...]:
    t1, t2 = tertile_bounds(dataset) if bounds is None else bounds
    if not t1 < t2:
        raise InvalidBounds(f"stratum bounds must satisfy t1 < t2, got ({t1}, {t2})")
    edges = [(-math.inf, t1), (t1, t2), (t2, math.inf)]
    members: list[list[int]] = [[], [], []]
    for r in dataset.records:
        idx = 0 if r.actual_effort < t1 else (1 if r.actual_effort < t2 else 2)
        members[idx].append(r.id)
    return tuple(
        ComplexityStratum(label, tuple(ids), edge) for label, ids, edge in zip(STRATUM_LABELS, members, edges)
    )
