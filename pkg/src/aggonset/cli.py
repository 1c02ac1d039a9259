"""Command-line interface: synth, extract, train, evaluate, sweep, report."""

from __future__ import annotations

import argparse
import sys

import yaml

from . import __version__
from .errors import AggonsetError, ConfigError
from .features import FeatureSubset, extract_dataset, read_dataset_csv, write_dataset_csv
from .harness import ExperimentConfig, run_experiment
from .ingest import load_sessions, write_population
from .report import emit_report, load_report_json
from .schemes import SchemeKind, SchemeSpec, save_scheme, train_scheme
from .synthgen import DEFAULT_SEED, PopulationConfig, generate_population


def _read_yaml(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return doc


def _population_config(args) -> PopulationConfig:
    doc = _read_yaml(args.config) if args.config else {}
    # a full experiment config may be passed; use its population section
    if "data" in doc:
        doc = dict(doc.get("data", {}).get("population") or {})
    if args.seed is not None:
        doc["seed"] = args.seed
    doc.setdefault("seed", DEFAULT_SEED)
    return PopulationConfig.from_dict(doc)


def _lambda_value(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"--lambda must be a number or 'auto', got {text!r}") from None


def _cmd_synth(args) -> int:
    config = _population_config(args)
    sessions = generate_population(config)
    manifests = write_population(sessions, args.out)
    episodes = sum(len(s.episodes) for s in sessions)
    print(f"wrote {len(manifests)} sessions ({episodes} episodes) under {args.out}")
    return 0


def _cmd_extract(args) -> int:
    if args.data:
        sessions = load_sessions(args.data)
    else:
        sessions = generate_population(_population_config(args))
    dataset = extract_dataset(sessions, args.tau_p, args.tau_f,
                              FeatureSubset.parse(args.subset),
                              exclude_ongoing=args.exclude_ongoing)
    write_dataset_csv(dataset, args.out)
    print(f"wrote {len(dataset)} samples x {dataset.layout.d} features "
          f"({int(dataset.y.sum())} positive) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    dataset = read_dataset_csv(args.features)
    kind = SchemeKind.parse(args.scheme)
    lam = _lambda_value(args.ridge_lambda)
    if lam == "auto":
        raise ConfigError("train fits one scheme on the full file; pick a numeric --lambda")
    spec = SchemeSpec(kind=kind, tau_p=dataset.layout.tau_p, tau_f=0.0,
                      subset=dataset.layout.subset, lam=lam,
                      k=args.k if kind is SchemeKind.K_HYBRID else None)
    scheme = train_scheme(spec, dataset, args.rank_pool)
    save_scheme(scheme, args.out)
    print(f"trained {kind.value} scheme on {len(dataset)} samples "
          f"(d={dataset.layout.d}) -> {args.out}")
    return 0


def _experiment_config(args, single_cell: bool) -> ExperimentConfig:
    doc = _read_yaml(args.config) if args.config else {}
    if args.seed is not None:
        doc["seed"] = args.seed
    cv = dict(doc.get("cv", {}) or {})
    if getattr(args, "folds", None) is not None:
        cv["folds"] = args.folds
    if getattr(args, "repeats", None) is not None:
        cv["repeats"] = args.repeats
    if getattr(args, "fold_unit", None) is not None:
        cv["fold_unit"] = args.fold_unit
    if cv:
        doc["cv"] = cv
    if getattr(args, "rank_pool", None) is not None:
        doc["rank_pool"] = args.rank_pool
    if getattr(args, "ridge_lambda", None) is not None:
        doc["lambda"] = _lambda_value(args.ridge_lambda)
    if single_cell:
        doc["sweep"] = {
            "tau_p": [args.tau_p],
            "tau_f": [args.tau_f],
            "subsets": [args.subset],
            "schemes": [args.scheme],
            "k": [args.k if args.k is not None else 0],
        }
    return ExperimentConfig.from_dict(doc)


def _run_and_emit(config: ExperimentConfig, out) -> int:
    report = run_experiment(config)
    emit_report(report, out)
    for cell in sorted(report.cells, key=lambda c: c.key.sort_key()):
        if cell.status == "ok":
            print(f"{cell.key.slug()}: AUC {cell.auc_mean:.4f} "
                  f"(sd {cell.auc_sd:.4f}, min {cell.auc_min:.4f}, "
                  f"max {cell.auc_max:.4f}, n={cell.n_samples})")
        else:
            print(f"{cell.key.slug()}: FAILED ({cell.error})")
    print(f"report written to {out}")
    return 1 if report.failed_cells else 0


def _cmd_evaluate(args) -> int:
    return _run_and_emit(_experiment_config(args, single_cell=True), args.out)


def _cmd_sweep(args) -> int:
    return _run_and_emit(_experiment_config(args, single_cell=False), args.out)


def _cmd_report(args) -> int:
    report = load_report_json(args.results)
    emit_report(report, args.out)
    print(f"re-emitted {len(report.cells)} cells to {args.out}")
    return 0


def _add_cell_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau-p", type=float, default=60.0, help="past window length (s)")
    p.add_argument("--tau-f", type=float, default=60.0, help="future window length (s)")
    p.add_argument("--subset", default="all",
                   choices=[s.value for s in FeatureSubset], help="feature subset")


def _add_cv_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--folds", type=int, default=None, help="cross-validation folds")
    p.add_argument("--repeats", type=int, default=None, help="cross-validation repetitions")
    p.add_argument("--fold-unit", choices=["sample", "session"], default=None,
                   help="what a fold assigns: individual samples or whole sessions")
    p.add_argument("--rank-pool", choices=["all", "biomarker"], default=None,
                   help="features rankable for hybrid freezing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggonset",
        description="Predict imminent aggression onset from preceding biosignal windows.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic population as CSV exports")
    p.add_argument("--config", help="population (or experiment) YAML config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("extract", help="extract a labeled feature CSV from sessions")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="directory of session manifests")
    src.add_argument("--config", help="population YAML config (synthetic source)")
    p.add_argument("--seed", type=int, default=None)
    _add_cell_flags(p)
    p.add_argument("--exclude-ongoing", action="store_true",
                   help="drop decision points inside an ongoing episode")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="fit one scheme on a feature CSV and serialize it")
    p.add_argument("--features", required=True, help="feature CSV from 'extract'")
    p.add_argument("--scheme", required=True, choices=[s.value for s in SchemeKind])
    p.add_argument("--lambda", dest="ridge_lambda", default="1.0",
                   help="ridge strength")
    p.add_argument("--k", type=int, default=None, help="frozen features (k-hybrid)")
    p.add_argument("--rank-pool", choices=["all", "biomarker"], default="all")
    p.add_argument("--out", required=True, help="output scheme JSON path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="cross-validate a single configuration cell")
    p.add_argument("--config", help="experiment YAML config (data source etc.)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--scheme", default="global", choices=[s.value for s in SchemeKind])
    p.add_argument("--k", type=int, default=None, help="frozen features (k-hybrid)")
    p.add_argument("--lambda", dest="ridge_lambda", default=None,
                   help="ridge strength or 'auto'")
    _add_cell_flags(p)
    _add_cv_flags(p)
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run a full experiment sweep from a config")
    p.add_argument("--config", required=True, help="experiment YAML config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lambda", dest="ridge_lambda", default=None,
                   help="ridge strength or 'auto'")
    _add_cv_flags(p)
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="re-emit tables and figures from stored results")
    p.add_argument("--results", required=True, help="report.json from a previous run")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AggonsetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
