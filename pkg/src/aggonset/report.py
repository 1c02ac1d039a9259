"""Write an evaluation report as delimited tables plus rendered figures.

The output tree is byte-deterministic for a given report: fixed column
orders, ``repr`` float formatting, LF endings, sorted JSON keys, and
deterministic SVG rendering.
"""

from __future__ import annotations

import json
from pathlib import Path

from .harness import CellResult, EvaluationReport, report_from_dict, report_to_dict
from .plots import save_roc_figure, save_sweep_figure
from .schemes import SchemeKind

NA = "NA"


def _fmt(value) -> str:
    if value is None:
        return NA
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _key_columns(cell: CellResult) -> list:
    return [cell.key.scheme.value, cell.key.subset.value,
            cell.key.tau_p, cell.key.tau_f, cell.key.k]


def _summary_rows(cells) -> list[list]:
    rows = []
    for c in cells:
        rows.append(_key_columns(c) + [
            c.lam, c.status, c.n_samples, c.n_positives, c.n_participants,
            c.dimension, c.parameter_count, c.auc_mean, c.auc_sd, c.auc_min,
            c.auc_max, ";".join(c.excluded_participants) or None,
        ])
    return rows


def _participant_table(cells, with_k: bool) -> tuple[list[str], list[list]]:
    participants = sorted({p for c in cells for p in (c.per_participant_auc or {})})
    header = ["subset", "tau_p", "tau_f"] + (["k"] if with_k else [])
    header += participants + ["Mean", "SD"]
    rows = []
    for c in cells:
        row = [c.key.subset.value, c.key.tau_p, c.key.tau_f]
        if with_k:
            row.append(c.key.k)
        got = c.per_participant_auc or {}
        row += [got.get(p) for p in participants]
        row += [c.auc_mean, c.auc_sd]
        rows.append(row)
    return header, rows


def emit_report(report: EvaluationReport, directory) -> list[Path]:
    """Write the report tree (JSON, CSV tables, SVG figures); returns the paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    path = out / "report.json"
    path.write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    written.append(path)

    cells = sorted(report.cells, key=lambda c: c.key.sort_key())
    ok = [c for c in cells if c.status == "ok"]

    path = out / "summary.csv"
    _write_csv(path,
               ["scheme", "subset", "tau_p", "tau_f", "k", "lambda", "status",
                "n_samples", "n_positives", "n_participants", "dimension",
                "parameter_count", "auc_mean", "auc_sd", "auc_min", "auc_max",
                "excluded_participants"],
               _summary_rows(cells))
    written.append(path)

    global_cells = [c for c in ok if c.key.scheme is SchemeKind.GLOBAL]
    if global_cells:
        rows = []
        n_folds = max(len(c.per_repeat_fold_auc[0]) for c in global_cells)
        for c in global_cells:
            for r, pooled in enumerate(c.per_repeat_auc):
                fold_row = list(c.per_repeat_fold_auc[r])
                fold_row += [None] * (n_folds - len(fold_row))
                rows.append([c.key.subset.value, c.key.tau_p, c.key.tau_f, r, pooled]
                            + fold_row)
        path = out / "global_auc.csv"
        _write_csv(path, ["subset", "tau_p", "tau_f", "repeat", "auc_pooled"]
                   + [f"fold{f}" for f in range(n_folds)], rows)
        written.append(path)

    pd_cells = [c for c in ok if c.key.scheme is SchemeKind.PERSON_DEPENDENT]
    if pd_cells:
        header, rows = _participant_table(pd_cells, with_k=False)
        path = out / "person_dependent_auc.csv"
        _write_csv(path, header, rows)
        written.append(path)

    hy_cells = [c for c in ok if c.key.scheme is SchemeKind.K_HYBRID]
    if hy_cells:
        header, rows = _participant_table(hy_cells, with_k=True)
        path = out / "k_hybrid_auc.csv"
        _write_csv(path, header, rows)
        written.append(path)

    rows = []
    for c in ok:
        for r, curve in enumerate(c.roc_per_repeat):
            rows += [[c.key.slug(), r, f, t] for f, t in zip(curve.fpr, curve.tpr)]
    path = out / "roc_points.csv"
    _write_csv(path, ["cell", "repeat", "fpr", "tpr"], rows)
    written.append(path)

    rows = []
    for c in ok:
        if c.band is None:
            continue
        rows += [[c.key.slug(), f, m, lo, hi] for f, m, lo, hi in
                 zip(c.band.fpr_grid, c.band.tpr_mean, c.band.tpr_lower, c.band.tpr_upper)]
    path = out / "roc_band.csv"
    _write_csv(path, ["cell", "fpr", "tpr_mean", "tpr_lower", "tpr_upper"], rows)
    written.append(path)

    failed = [c for c in cells if c.status != "ok"]
    if failed:
        path = out / "errors.csv"
        _write_csv(path, ["scheme", "subset", "tau_p", "tau_f", "k", "error"],
                   [_key_columns(c)[:5] + [c.error] for c in failed])
        written.append(path)

    written += _emit_figures(ok, out / "figures")
    return written


def _emit_figures(ok_cells, fig_dir: Path) -> list[Path]:
    if not ok_cells:
        return []
    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for c in ok_cells:
        if not c.roc_per_repeat:
            continue
        path = fig_dir / f"roc_{c.key.slug()}.svg"
        save_roc_figure(c, path)
        written.append(path)

    hybrid = [c for c in ok_cells if c.key.scheme is SchemeKind.K_HYBRID]
    if len({c.key.k for c in hybrid}) > 1:
        path = fig_dir / "auc_vs_k.svg"
        save_sweep_figure(hybrid, lambda c: c.key.k, "k (globally trained weights)", path)
        written.append(path)
    if len({c.key.tau_f for c in ok_cells}) > 1:
        path = fig_dir / "auc_vs_tau_f.svg"
        save_sweep_figure(ok_cells, lambda c: c.key.tau_f, "tau_f (s)", path)
        written.append(path)
    if len({c.key.tau_p for c in ok_cells}) > 1:
        path = fig_dir / "auc_vs_tau_p.svg"
        save_sweep_figure(ok_cells, lambda c: c.key.tau_p, "tau_p (s)", path)
        written.append(path)
    return written


def save_report_json(report: EvaluationReport, path) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def load_report_json(path) -> EvaluationReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))
