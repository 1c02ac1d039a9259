from pathlib import Path

import pytest

from aggonset.harness import run_experiment
from aggonset.report import emit_report, load_report_json

CONFIG = {
    "seed": 3,
    "data": {"source": "synthetic",
             "population": {"n_participants": 4, "session_duration": 900.0}},
    "cv": {"folds": 4, "repeats": 2},
    "sweep": {"tau_p": [60], "tau_f": [60], "subsets": ["temporal"],
              "schemes": ["global", "person_dependent", "k_hybrid"], "k": [2, 100]},
    "lambda": 1.0,
}


@pytest.fixture(scope="module")
def report():
    # k=100 exceeds the temporal dimensionality of 10 -> one failed cell
    return run_experiment(CONFIG)


@pytest.fixture(scope="module")
def emitted(report, tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    emit_report(report, out)
    return out


def read_lines(path: Path) -> list[str]:
    return path.read_text(encoding="utf-8").splitlines()


class TestEmitReport:
    def test_expected_files_exist(self, emitted):
        for name in ("report.json", "summary.csv", "global_auc.csv",
                     "person_dependent_auc.csv", "k_hybrid_auc.csv",
                     "roc_points.csv", "roc_band.csv", "errors.csv"):
            assert (emitted / name).is_file(), name
        figures = list((emitted / "figures").glob("*.svg"))
        assert any(f.name.startswith("roc_") for f in figures)

    def test_summary_has_na_for_failed_cell(self, emitted):
        lines = read_lines(emitted / "summary.csv")
        header = lines[0].split(",")
        rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
        failed = [r for r in rows if r["status"] == "failed"]
        assert len(failed) == 1
        assert failed[0]["auc_mean"] == "NA"
        assert failed[0]["k"] == "100"

    def test_errors_csv_row(self, emitted):
        lines = read_lines(emitted / "errors.csv")
        assert len(lines) == 2
        assert "k" in lines[1]

    def test_person_dependent_table_layout(self, emitted):
        lines = read_lines(emitted / "person_dependent_auc.csv")
        header = lines[0].split(",")
        assert header[:3] == ["subset", "tau_p", "tau_f"]
        assert header[-2:] == ["Mean", "SD"]
        assert {"P01", "P02", "P03", "P04"} <= set(header)
        assert len(lines) == 2

    def test_hybrid_table_has_k_column(self, emitted):
        header = read_lines(emitted / "k_hybrid_auc.csv")[0].split(",")
        assert "k" in header

    def test_report_json_round_trip(self, report, emitted):
        loaded = load_report_json(emitted / "report.json")
        assert len(loaded.cells) == len(report.cells)
        assert loaded.seed == report.seed
        ok = loaded.cell("global", "temporal")
        assert ok.auc_mean == report.cell("global", "temporal").auc_mean

    def test_byte_determinism(self, report, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        emit_report(report, a)
        emit_report(report, b)
        files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel

    def test_sweep_figure_for_k(self, emitted):
        # only one k value survived, so no k sweep figure is expected
        assert not (emitted / "figures" / "auc_vs_k.svg").exists()
