import json
import math

import numpy as np
import pytest
from scipy import stats
from sklearn.metrics import cohen_kappa_score, f1_score

import oracles
from molrel.errors import ConfigurationError, DataError, DegenerateInput, SingleClass
from molrel.metrics import (
    METRICS,
    all_metric_names,
    binary_metrics,
    canonical_metric,
    compute_metrics,
    multiclass_metrics,
    pr_auc,
    precision_at_recall,
    range_logauc,
    recall_at_precision,
    regression_metrics,
    roc_auc,
)


def test_metric_names():
    names = all_metric_names()
    assert len(names) == 21
    assert [len(METRICS[k]) for k in ("regression", "binary", "multiclass")] == [6, 9, 6]
    assert canonical_metric("ROC-AUC") == "roc_auc" and canonical_metric("Cohen's Kappa") == "cohen_kappa"
    with pytest.raises(ConfigurationError):
        canonical_metric("vibes")
    with pytest.raises(ConfigurationError):
        binary_metrics([0.1, 0.9], [0, 1], names=[])


def test_roc_hand_case():
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    assert oracles.roc_auc_pairwise([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75


def test_roc_against_pairwise_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        s = np.round(rng.random(n), 1)  # coarse grid forces ties
        assert abs(roc_auc(s, y) - oracles.roc_auc_pairwise(s, y)) <= 1e-9


def test_perfect_and_single_class():
    r = binary_metrics([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    assert r["roc_auc"] == 1.0 and r["pr_auc"] == 1.0 and r["range_logauc"] == pytest.approx(1.0)
    r = binary_metrics([0.3, 0.9], [1, 1])
    with pytest.raises(SingleClass):
        r["ROC-AUC"]
    assert r["accuracy"] == 0.5 and r.undefined
    with pytest.raises(SingleClass):
        roc_auc([0.3, 0.9], [1, 1])
    with pytest.raises(DataError):
        binary_metrics([0.1, 0.2], [0, 2])


def test_threshold_metrics_match_confusion_oracle():
    rng = np.random.default_rng(1)
    s = rng.random(60)
    y = (rng.random(60) < 0.4).astype(int)
    r = binary_metrics(s, y)
    tp, fp, fn, tn = oracles.confusion((s >= 0.5).astype(int), y)
    assert r["accuracy"] == pytest.approx((tp + tn) / 60, abs=1e-12)
    assert r["precision"] == pytest.approx(tp / (tp + fp), abs=1e-12)
    assert r["recall"] == pytest.approx(tp / (tp + fn), abs=1e-12)
    assert r["f1"] == pytest.approx(2 * tp / (2 * tp + fp + fn), abs=1e-12)


def _brute_pr_auc(s, y):
    """Interpolated precision integrated over recall, one threshold at a time."""
    thresholds = sorted(set(s), reverse=True)
    pts = [(0.0, 1.0)]
    for t in thresholds:
        tp = sum(1 for a, b in zip(s, y) if a >= t and b == 1)
        fp = sum(1 for a, b in zip(s, y) if a >= t and b == 0)
        pts.append((tp / sum(y), tp / (tp + fp)))
    area = 0.0
    for (r0, _), (r1, _) in zip(pts[:-1], pts[1:]):
        area += (r1 - r0) * max(p for r, p in pts if r >= r1)
    return area


def test_pr_auc_against_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(5, 40))
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        s = np.round(rng.random(n), 2)
        assert pr_auc(s, y) == pytest.approx(_brute_pr_auc(list(s), list(y)), abs=1e-9)


def test_range_logauc_closed_forms():
    # a random scorer has TPR = FPR, whose log-window mean is (hi - lo) / ln(hi / lo)
    rng = np.random.default_rng(3)
    n = 20000
    y = np.r_[np.zeros(n), np.ones(n)]
    s = rng.random(2 * n)
    want = (0.1 - 0.001) / math.log(100)
    assert range_logauc(s, y) == pytest.approx(want, abs=5e-3)
    # TPR stuck at 0.5 across the window
    s = np.r_[np.linspace(0, 0.5, n), np.r_[np.full(n // 2, 0.9), np.full(n // 2, 0.1)]]
    assert range_logauc(s, y) == pytest.approx(0.5, abs=1e-3)


def test_at_k_metrics():
    s = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4]
    y = [1, 1, 0, 1, 0, 0]
    assert precision_at_recall(s, y, k=0.9) == pytest.approx(0.75)
    assert precision_at_recall(s, y, k=0.6) == 1.0
    assert recall_at_precision(s, y, k=0.9) == pytest.approx(2 / 3)
    assert recall_at_precision(s, y, k=0.7) == 1.0


def test_regression_hand_case():
    r = regression_metrics([1, 2], [1, 4])
    assert r["mse"] == 2.0 and r["mae"] == 1.0 and r["rmse"] == pytest.approx(math.sqrt(2))
    r = regression_metrics([1.0, 2.0, 5.0], [1.0, 2.0, 5.0])
    assert (r["mse"], r["r2"], r["pcc"], r["spearman"]) == (0.0, 1.0, pytest.approx(1.0), pytest.approx(1.0))
    r = regression_metrics([1.0, 2.0], [3.0, 3.0])
    with pytest.raises(DegenerateInput):
        r["pcc"]
    assert r["mse"] == 2.5
    with pytest.raises(DataError):
        regression_metrics([1.0], [1.0])


def test_regression_against_direct_formulas():
    rng = np.random.default_rng(4)
    p, y = rng.normal(size=20), rng.normal(size=20)
    y[3] = y[7]  # a tie for the rank statistic
    r = regression_metrics(p, y)
    mp, my = sum(p) / 20, sum(y) / 20
    cov = sum((a - mp) * (b - my) for a, b in zip(p, y))
    pcc = cov / math.sqrt(sum((a - mp) ** 2 for a in p) * sum((b - my) ** 2 for b in y))
    assert r["pcc"] == pytest.approx(pcc, abs=1e-9)
    assert r["r2"] == pytest.approx(1 - sum((a - b) ** 2 for a, b in zip(p, y)) / sum((b - my) ** 2 for b in y),
                                    abs=1e-9)
    rp, ry = stats.rankdata(p), stats.rankdata(y)
    assert r["spearman"] == pytest.approx(np.corrcoef(rp, ry)[0, 1], abs=1e-9)


def test_multiclass_against_confusion_oracle():
    rng = np.random.default_rng(5)
    y = rng.integers(0, 4, 30)
    p = np.where(rng.random(30) < 0.6, y, rng.integers(0, 4, 30))
    r = multiclass_metrics(p, y, num_classes=4)
    cm = [[sum(1 for a, b in zip(y, p) if a == i and b == j) for j in range(4)] for i in range(4)]
    acc = sum(cm[i][i] for i in range(4)) / 30
    for name in ("accuracy", "micro_f1", "micro_precision", "micro_recall"):
        assert r[name] == pytest.approx(acc, abs=1e-9)
    f1s = []
    for k in range(4):
        tp = cm[k][k]
        fp = sum(cm[i][k] for i in range(4)) - tp
        fn = sum(cm[k]) - tp
        f1s.append(2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0)
    assert r["macro_f1"] == pytest.approx(sum(f1s) / 4, abs=1e-9)
    assert r["macro_f1"] == pytest.approx(f1_score(y, p, average="macro"), abs=1e-9)
    po = acc
    pe = sum(sum(cm[k]) * sum(cm[i][k] for i in range(4)) for k in range(4)) / 900
    assert r["cohen_kappa"] == pytest.approx((po - pe) / (1 - pe), abs=1e-9)
    assert r["cohen_kappa"] == pytest.approx(cohen_kappa_score(y, p), abs=1e-9)


def test_multiclass_perfect_and_scores():
    y = [0, 1, 2, 2]
    r = multiclass_metrics(y, y)
    assert all(v == 1.0 for v in r.values.values())
    scores = np.eye(3)[y] + 0.01
    assert multiclass_metrics(scores, y)["accuracy"] == 1.0
    r = multiclass_metrics([1, 1], [1, 1], num_classes=3)
    with pytest.raises(DegenerateInput):
        r["cohen_kappa"]


def test_invariances():
    rng = np.random.default_rng(6)
    s = rng.random(50)
    y = rng.integers(0, 2, 50)
    base = binary_metrics(s, y).values
    perm = rng.permutation(50)
    assert binary_metrics(s[perm], y[perm]).values == pytest.approx(base)
    for f in (np.exp, lambda v: 3 * v - 7, lambda v: v ** 3):
        assert roc_auc(f(s), y) == pytest.approx(base["roc_auc"], abs=1e-12)
    p, t = rng.normal(size=30), rng.normal(size=30)
    perm = rng.permutation(30)
    assert regression_metrics(p[perm], t[perm]).values == pytest.approx(regression_metrics(p, t).values)


def test_report_serialization(tmp_path):
    r = compute_metrics("binary", [0.2, 0.7, 0.4], [0, 1, 1])
    r.to_json(tmp_path / "m.json")
    data = json.loads((tmp_path / "m.json").read_text())
    assert data["kind"] == "binary" and data["n_samples"] == 3 and len(data["metrics"]) == 9
    text = r.to_csv(tmp_path / "m.csv")
    assert text.startswith("metric,value\n") and text.count("\n") == 10
    with pytest.raises(ConfigurationError):
        compute_metrics("ranking", [1], [1])
