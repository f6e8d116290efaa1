import json
import subprocess
import sys

import numpy as np
import pytest

from mvbound import bounds as B
from mvbound.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, bounds_report, main
from mvbound.dataio import read_prediction_table
from mvbound.lossstats import loss_stats


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    assert main(["train", "--hypotheses", "6", "--seed", "3", "--out", str(out)]) == EXIT_OK
    return out


def test_train_writes_tables(trained):
    summary = json.loads((trained / "train_summary.json").read_text())
    assert summary["n_hypotheses"] == 6 and summary["max_depth"] == 3
    assert summary["n_train"] + summary["n_test"] == 3000
    oob = read_prediction_table(str(trained / "oob_table.csv"))
    test = read_prediction_table(str(trained / "test_table.csv"))
    assert oob.n_hypotheses == test.n_hypotheses == 6
    assert test.oob_mask.all()
    assert 0.3 < summary["oob_size_mean"] / summary["n_train"] < 0.44


def test_train_is_deterministic(trained, tmp_path):
    assert main(["train", "--hypotheses", "6", "--seed", "3", "--out", str(tmp_path)]) == EXIT_OK
    for name in ("oob_table.csv", "test_table.csv", "train_summary.json"):
        assert (tmp_path / name).read_bytes() == (trained / name).read_bytes()


def test_bounds_report_schema_and_values(trained, tmp_path):
    out = tmp_path / "report.json"
    argv = ["bounds", "--table", str(trained / "oob_table.csv"), "--test-table", str(trained / "test_table.csv")]
    assert main(argv + ["--mu-grid-size", "20", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert set(report["bounds"]) == {"FO", "TND", "CmuTND", "COTND"}
    table = read_prediction_table(str(trained / "oob_table.csv"))
    stats = loss_stats(table)
    uniform = B.tnd_bound(stats, B.Posterior.uniform(6), 0.05)
    assert report["bounds"]["TND"]["uniform"]["raw"] == uniform.raw
    for name, entry in report["bounds"].items():
        assert entry["optimized"]["raw"] <= entry["uniform"]["raw"]
        assert sum(report["weights"][name]) == pytest.approx(1.0)
    assert report["ratios"]["bound_vs_optimized_tnd"]["TND"] == 1.0
    assert set(report["ratios"]["test_loss_vs_uniform"]) == {"FO", "TND", "CmuTND", "COTND"}
    assert report["test_loss"]["best_single"] >= 0
    # byte-identical on a rerun
    out2 = tmp_path / "again.json"
    assert main(argv + ["--mu-grid-size", "20", "--out", str(out2)]) == EXIT_OK
    assert out.read_bytes() == out2.read_bytes()


def test_bounds_report_without_test_table(trained):
    report = bounds_report(read_prediction_table(str(trained / "oob_table.csv")), mu_grid_size=10)
    assert "test_loss" not in report and "test_loss_vs_uniform" not in report["ratios"]


def test_usage_errors(tmp_path, capsys):
    assert main(["bounds", "--table", str(tmp_path / "missing.csv")]) == EXIT_USAGE
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a\nprediction table\n")
    assert main(["bounds", "--table", str(bad)]) == EXIT_USAGE
    assert "mvbound:" in capsys.readouterr().err
    with pytest.raises(SystemExit) as err:
        main(["bounds", "--table", str(bad), "--delta", "1.5"])
    assert err.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as err:
        main(["bounds", "--table", str(bad), "--mu-grid-size", "1"])
    assert err.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == EXIT_USAGE


def test_numerical_failure_exit_code(monkeypatch, trained):
    from mvbound import cli
    from mvbound.optimize import NumericalError

    def boom(*args, **kwargs):
        raise NumericalError("non-finite objective")

    monkeypatch.setattr(cli, "bounds_report", boom)
    assert main(["bounds", "--table", str(trained / "oob_table.csv")]) == EXIT_NUMERIC


def test_oracle_surface(tmp_path):
    out = tmp_path / "surface.csv"
    assert main(["oracle-surface", "--size", "30", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "g,t,ratio"
    ratios = np.array([float(line.split(",")[2]) for line in lines[1:]])
    assert ratios.size > 0 and np.all(ratios <= 1 + 1e-12)


def test_bennett_surface(tmp_path):
    out = tmp_path / "bennett.csv"
    assert main(["bennett-surface", "--n", "500", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "n,emp,var,bennett,bernstein,ratio"
    rows = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    assert np.all(rows[:, 0] == 500)
    np.testing.assert_allclose(rows[:, 5], rows[:, 3] / rows[:, 4], rtol=1e-12)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mvbound", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "bennett-surface" in proc.stdout
