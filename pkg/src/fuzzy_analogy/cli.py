"""Command-line front end: estimate | evaluate | compare | inspect.

Exit codes: 0 success, 1 input/data error, 2 configuration error.
Settings precedence: command-line flags > --config file > shipped defaults.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path
from typing import Sequence

from .config import (
    COMBINERS,
    EXPONENT_MODES,
    METHODS,
    RUN_CONFIG_FILE,
    SCHEMES,
    STRATEGIES,
    RunConfig,
    _read_json,
    load_config_file,
)
from .dataset import DRIVERS, Dataset, ProjectRecord, RatingLevel, load_arff, normalize_mode
from .errors import ConfigError, DataError, FuzzyAnalogyError
from .estimation import EstimationContext, estimate_pipeline
from .evaluation import (
    EvaluationReport,
    actual_vs_estimated_series,
    compare,
    loocv,
    pred_series,
)
from .fuzzy import fuzzify_project
from .similarity import matrix_to_csv, similarity_matrix

_DEFAULTS = RunConfig()


class _InputError(DataError):
    pass


def _add_run_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (flags override --config, which overrides shipped defaults)")
    g.add_argument("--config", metavar="PATH", help="run-config JSON file (default: shipped run_config.json)")
    g.add_argument("--variables", metavar="PATH", help="fuzzy-variable config JSON (default: shipped)")
    g.add_argument("--em-table", metavar="PATH", help="effort-multiplier table JSON (default: shipped COCOMO81)")
    g.add_argument("--coefficients", metavar="PATH", help="coefficient presets JSON (default: shipped)")
    g.add_argument("--method", choices=METHODS, help=f"estimation method (default: {_DEFAULTS.method})")
    g.add_argument("--scheme", choices=SCHEMES, help=f"per-variable aggregation (default: {_DEFAULTS.scheme})")
    g.add_argument("--combiner", choices=COMBINERS, help=f"overall combiner (default: {_DEFAULTS.combiner})")
    g.add_argument("--weight", action="append", metavar="VAR=W",
                   help="similarity weight for one variable, repeatable (default: all 1)")
    g.add_argument("--k", type=int, help=f"number of analogs (default: {_DEFAULTS.k})")
    g.add_argument("--threshold", type=float, help="use all analogs with similarity >= this instead of k (default: off)")
    g.add_argument("--strategy", choices=STRATEGIES, help=f"adaptation strategy (default: {_DEFAULTS.strategy})")
    g.add_argument("--exponent-mode", choices=EXPONENT_MODES,
                   help=f"effort-formula exponent (default: {_DEFAULTS.exponent_mode})")
    g.add_argument("--exponent-terms", type=float, nargs="+", metavar="D",
                   help="exponent contributions summed in as_written mode (default: none)")
    g.add_argument("--preset", help=f"coefficient preset (default: {_DEFAULTS.preset})")
    g.add_argument("--fis-resolution", type=int, help=f"defuzzification samples (default: {_DEFAULTS.fis_resolution})")
    g.add_argument("--pred", type=float, nargs="+", metavar="P",
                   help=f"PRED thresholds as fractions (default: {' '.join(map(str, _DEFAULTS.pred_levels))})")
    g.add_argument("--strata", type=float, nargs=2, metavar=("T1", "T2"),
                   help="effort bounds for simple/average/complex (default: effort tertiles)")
    g.add_argument("--drop-outliers", action="store_true", default=None,
                   help="remove projects flagged by the log-productivity IQR rule (default: off)")


def _parse_weights(items: Sequence[str] | None) -> dict[str, float] | None:
    if not items:
        return None
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        try:
            if not sep:
                raise ValueError
            out[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--weight expects VAR=W, got {item!r}") from None
    return out


def build_run_config(args: argparse.Namespace) -> RunConfig:
    payload = dict(load_config_file(RUN_CONFIG_FILE))
    if args.config:
        override = _read_json(Path(args.config))
        if not isinstance(override, dict):
            raise ConfigError(f"{args.config}: run config must be a JSON object")
        payload.update(override)
    flags = {
        "method": args.method,
        "scheme": args.scheme,
        "combiner": args.combiner,
        "weights": _parse_weights(args.weight),
        "k": args.k,
        "threshold": args.threshold,
        "strategy": args.strategy,
        "exponent_mode": args.exponent_mode,
        "exponent_terms": args.exponent_terms,
        "preset": args.preset,
        "fis_resolution": args.fis_resolution,
        "pred_levels": args.pred,
        "strata_bounds": args.strata,
        "drop_outliers": args.drop_outliers,
        "variables_path": args.variables,
        "em_table_path": args.em_table,
        "coefficients_path": args.coefficients,
    }
    payload.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig.from_dict(payload)


def _load_dataset(path: str) -> Dataset:
    try:
        return load_arff(path)
    except OSError as exc:
        raise _InputError(f"cannot read dataset {path}: {exc.strerror or exc}") from None


def _target_from_file(path: str) -> ProjectRecord:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        missing = [d for d in DRIVERS if d not in payload["ratings"]]
        if missing:
            raise _InputError(f"target file {path}: missing ratings for {', '.join(missing)}")
        ratings = {d: RatingLevel.parse(payload["ratings"][d]) for d in DRIVERS}
        kloc = float(payload["kloc"])
        mode = normalize_mode(payload["mode"]) if payload.get("mode") else None
        actual = float(payload.get("actual_effort", "nan"))
        pid = payload.get("id")
    except OSError as exc:
        raise _InputError(f"cannot read target file {path}: {exc.strerror or exc}") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise _InputError(f"malformed target file {path}: {exc!r}") from None
    if not kloc > 0:
        raise _InputError(f"target file {path}: kloc must be positive")
    return ProjectRecord(int(pid) if pid is not None else None, ratings, kloc, actual, mode)


def _read_ids(path: str) -> list[int]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _InputError(f"cannot read id list {path}: {exc.strerror or exc}") from None
    ids = []
    for line in text.splitlines():
        for token in re.split(r"[\s,]+", line.split("#", 1)[0].strip()):
            if token:
                try:
                    ids.append(int(token))
                except ValueError:
                    raise _InputError(f"{path}: {token!r} is not a project id") from None
    return ids


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_estimate(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    dataset = _load_dataset(args.dataset)
    target = dataset.get(args.target_id) if args.target_id is not None else _target_from_file(args.target_file)
    record = estimate_pipeline(target, dataset, config, EstimationContext(config))
    text = json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.output:
        _write(Path(args.output), text)
    sys.stdout.write(text)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    dataset = _load_dataset(args.dataset)
    ids = _read_ids(args.ids) if args.ids else None
    report = loocv(dataset, config, ids=ids, stratified=args.stratify or ids is not None, jobs=args.jobs)
    out = Path(args.output_dir)
    _write(out / "report.json", report.to_json())
    _write(out / "report.csv", report.per_project_csv())
    _write(out / "series_actual_vs_estimated.csv", actual_vs_estimated_series(report))
    _write(out / "series_pred.csv", pred_series([report]))
    if args.svg:
        from .charts import actual_vs_estimated_chart

        actual_vs_estimated_chart(report, out / "actual_vs_estimated.svg")
    print(f"method={report.method} n={report.n} MMRE={report.mmre:.4f} "
          + " ".join(f"PRED({p:g})={v:.4f}" for p, v in sorted(report.pred.items())))
    for label, sub in report.strata.items():
        print(f"  {label:8s} n={sub.n:3d} MMRE={sub.mmre:.4f} PRED(0.25)={sub.pred_at(0.25):.4f}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    reports = []
    for path in args.reports:
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
            reports.append(EvaluationReport.from_dict(payload))
        except (OSError, json.JSONDecodeError, DataError) as exc:
            raise _InputError(f"unreadable report {path}: {exc}") from None
    table = compare(reports)
    sys.stdout.write(table.to_text())
    if args.output:
        _write(Path(args.output), table.to_csv())
    if args.svg:
        from .charts import pred_chart

        ordered = sorted(reports, key=lambda r: table.methods.index(r.method))
        pred_chart(ordered, Path(args.svg))
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    dataset = _load_dataset(args.dataset)
    ctx = EstimationContext(config)
    project = dataset.get(args.project) if args.project is not None else None
    matrix = similarity_matrix(dataset, ctx.variables, config.weights, config.scheme, config.combiner)
    _write(Path(args.output), matrix_to_csv(dataset.ids, matrix))
    if project is not None:
        fuzzified = fuzzify_project(project, ctx.variables)
        by_name = {v.name: v for v in ctx.variables}
        payload = {
            "id": project.id,
            "fuzzified": {
                name: dict(zip(by_name[name].labels, value.degrees)) for name, value in fuzzified.items()
            },
            "effort_multipliers": {d: ctx.inference(d, project.ratings[d]) for d in DRIVERS},
        }
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        print(f"wrote {len(dataset)}x{len(dataset)} similarity matrix to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzzy-analogy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate one project")
    p.add_argument("--dataset", required=True, help="ARFF casebase (COCOMO81 layout)")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--target-id", type=int, help="estimate this dataset project (excluded from its own casebase)")
    target.add_argument("--target-file", help="JSON file with ratings, kloc and optional mode/id")
    p.add_argument("--output", help="also write the estimate JSON here (default: stdout only)")
    _add_run_options(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="leave-one-out evaluation")
    p.add_argument("--dataset", required=True, help="ARFF dataset (COCOMO81 layout)")
    p.add_argument("--ids", help="file of project ids to evaluate; implies --stratify (default: all projects)")
    p.add_argument("--output-dir", default=".", help="directory for report files (default: .)")
    p.add_argument("--stratify", action="store_true", help="add simple/average/complex sub-reports (default: off)")
    p.add_argument("--svg", action="store_true", help="also write SVG charts (default: off)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes for folds (default: 1)")
    _add_run_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="tabulate evaluation reports by PRED(0.25)")
    p.add_argument("reports", nargs="+", help="report.json files written by evaluate")
    p.add_argument("--output", help="write the table as CSV here (default: none)")
    p.add_argument("--svg", help="write a PRED bar chart SVG here (default: none)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("inspect", help="similarity matrix and per-project fuzzification")
    p.add_argument("--dataset", required=True, help="ARFF dataset (COCOMO81 layout)")
    p.add_argument("--project", type=int, help="dump this project's fuzzified values and multipliers (default: none)")
    p.add_argument("--output", default="similarity_matrix.csv", help="matrix CSV path (default: similarity_matrix.csv)")
    _add_run_options(p)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FuzzyAnalogyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
