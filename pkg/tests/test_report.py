import csv

import numpy as np
import pytest

from molrel import report


def test_summarize_mean_and_sample_std():
    rows = report.summarize([{"roc_auc": 0.8, "f1": None}, {"roc_auc": 0.9, "f1": 0.5}, {"roc_auc": 0.7}])
    auc, f1 = rows
    assert auc["mean"] == pytest.approx(0.8) and auc["std"] == pytest.approx(0.1) and auc["n"] == 3
    assert f1 == {"metric": "f1", "mean": 0.5, "std": 0.0, "n": 1}
    single = report.summarize([{"mse": 2.0}])[0]
    assert single["std"] == 0.0
    assert report.summarize([{"r2": None}])[0]["mean"] is None


def test_format_table():
    text = report.format_table(report.summarize([{"roc_auc": 0.5}, {"roc_auc": 0.7}]), title="t")
    lines = text.splitlines()
    assert lines[0] == "t" and "ROC-AUC" in lines[-1] and "0.6000 ± 0.1414" in lines[-1]
    assert "n/a" in report.format_table([{"metric": "r2", "mean": None, "std": None}])


def test_write_delimited(tmp_path):
    rows = [{"metric": "mse", "mean": 0.1, "std": None}, {"metric": "mae", "mean": 0.2, "extra": 3}]
    report.write_delimited(rows, tmp_path / "r.tsv")
    got = list(csv.reader((tmp_path / "r.tsv").open(), delimiter="\t"))
    assert got == [["metric", "mean", "std", "extra"], ["mse", "0.1", "", ""], ["mae", "0.2", "", "3"]]
    report.write_delimited(rows, tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().startswith("metric,mean,std,extra\n")


def test_figures(tmp_path):
    hist = [{"epoch": i, "train_loss": 1 / i, "valid_roc_auc": 0.5 + 0.05 * i} for i in range(1, 6)]
    rng = np.random.default_rng(0)
    paths = [
        report.plot_history(hist, tmp_path / "h.png", "roc_auc"),
        report.plot_history([{"epoch": 1, "train_loss": 0.3}], tmp_path / "h2.png"),
        report.plot_binary_curves(rng.random(20), np.arange(20) % 2, tmp_path / "c.png"),
        report.plot_binary_curves(rng.random(4), [1, 1, 1, 1], tmp_path / "c2.png"),
        report.plot_summary(report.summarize([{"roc_auc": 0.8, "f1": 0.6}, {"roc_auc": 0.7, "f1": 0.5}]),
                            tmp_path / "s.png", title="toy"),
    ]
    for p in paths:
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
