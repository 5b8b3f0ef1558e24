"""Regression, binary and multiclass metrics (6 + 9 + 6).

All functions return a :class:`MetricReport`. A metric that is mathematically
undefined for the given input (e.g. Pearson correlation on constant labels)
is kept in the report as ``None`` together with the reason; indexing it raises.
"""
import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from sklearn.metrics import cohen_kappa_score, confusion_matrix, precision_recall_curve, roc_curve

from .errors import ConfigurationError, DataError, DegenerateInput, SingleClass

REGRESSION = ("mse", "rmse", "mae", "r2", "pcc", "spearman")
BINARY = ("roc_auc", "pr_auc", "range_logauc", "accuracy", "precision", "recall", "f1",
          "precision_at_recall", "recall_at_precision")
MULTICLASS = ("micro_f1", "micro_precision", "micro_recall", "accuracy", "macro_f1", "cohen_kappa")
METRICS = {"regression": REGRESSION, "binary": BINARY, "multiclass": MULTICLASS}

DISPLAY = {
    "mse": "MSE", "rmse": "RMSE", "mae": "MAE", "r2": "R2", "pcc": "PCC", "spearman": "Spearman",
    "roc_auc": "ROC-AUC", "pr_auc": "PR-AUC", "range_logauc": "Range LogAUC", "accuracy": "Accuracy",
    "precision": "Precision", "recall": "Recall", "f1": "F1",
    "precision_at_recall": "Precision@Recall", "recall_at_precision": "Recall@Precision",
    "micro_f1": "Micro-F1", "micro_precision": "Micro-Precision", "micro_recall": "Micro-Recall",
    "macro_f1": "Macro-F1", "cohen_kappa": "Cohen's Kappa",
}
LOWER_IS_BETTER = {"mse", "rmse", "mae"}

LOGAUC_RANGE = (0.001, 0.1)
AT_K = 0.9


def all_metric_names():
    """``(kind, name)`` for all 21 metrics."""
    return [(kind, name) for kind, names in METRICS.items() for name in names]


def canonical_metric(name, kind=None):
    key = name.strip().lower().replace("-", "_").replace(" ", "_").replace("@", "_at_")
    key = {"r²": "r2", "auroc": "roc_auc", "auprc": "pr_auc", "kappa": "cohen_kappa",
           "cohen's_kappa": "cohen_kappa", "logauc": "range_logauc", "pearson": "pcc"}.get(key, key)
    for display_key, display in DISPLAY.items():
        if key == display.lower().replace("-", "_").replace(" ", "_").replace("@", "_at_"):
            key = display_key
    pool = METRICS[kind] if kind else DISPLAY
    if key not in pool:
        where = f" for {kind} tasks" if kind else ""
        raise ConfigurationError(f"unknown metric {name!r}{where}; known: {', '.join(pool)}")
    return key


def higher_is_better(name):
    return canonical_metric(name) not in LOWER_IS_BETTER


@dataclass
class MetricReport:
    kind: str
    values: dict
    n_samples: int
    positive_rate: float = None
    undefined: dict = field(default_factory=dict)

    def __getitem__(self, name):
        key = canonical_metric(name)
        if key in self.undefined:
            err = SingleClass if self.kind == "binary" else DegenerateInput
            raise err(f"{DISPLAY[key]} is undefined: {self.undefined[key]}")
        return self.values[key]

    def __contains__(self, name):
        return canonical_metric(name) in self.values

    def get(self, name, default=None):
        try:
            return self[name]
        except (DegenerateInput, SingleClass, KeyError):
            return default

    def as_dict(self):
        out = {"kind": self.kind, "n_samples": self.n_samples}
        if self.positive_rate is not None:
            out["positive_rate"] = self.positive_rate
        out["metrics"] = {k: self.values[k] for k in self.values}
        if self.undefined:
            out["undefined"] = dict(self.undefined)
        return out

    def to_json(self, path=None):
        text = json.dumps(self.as_dict(), indent=2, sort_keys=False)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        for k, v in self.values.items():
            w.writerow([k, "" if v is None else repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _arrays(preds, labels):
    p = np.asarray(preds, dtype=float).ravel()
    y = np.asarray(labels, dtype=float).ravel()
    if p.shape != y.shape:
        raise DataError(f"predictions ({p.size}) and labels ({y.size}) differ in length")
    if p.size == 0:
        raise DataError("no samples to evaluate")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(y))):
        raise DataError("non-finite predictions or labels")
    return p, y


def _select(names, kind):
    if names is None:
        return list(METRICS[kind])
    names = [canonical_metric(n, kind) for n in names]
    if not names:
        raise ConfigurationError("empty metric list")
    return names


# ---------------------------------------------------------------- regression

def regression_metrics(preds, labels, names=None):
    p, y = _arrays(preds, labels)
    if p.size < 2:
        raise DataError("regression metrics need at least 2 samples")
    names = _select(names, "regression")
    err = p - y
    values, undefined = {}, {}
    const_y = np.ptp(y) == 0
    const_p = np.ptp(p) == 0
    for n in names:
        if n == "mse":
            values[n] = float(np.mean(err ** 2))
        elif n == "rmse":
            values[n] = float(math.sqrt(np.mean(err ** 2)))
        elif n == "mae":
            values[n] = float(np.mean(np.abs(err)))
        elif n == "r2":
            if const_y:
                values[n], undefined[n] = None, "labels are constant"
            else:
                values[n] = float(1 - np.sum(err ** 2) / np.sum((y - y.mean()) ** 2))
        elif n in ("pcc", "spearman"):
            if const_y or const_p:
                values[n] = None
                undefined[n] = "labels are constant" if const_y else "predictions are constant"
            elif n == "pcc":
                values[n] = float(stats.pearsonr(p, y)[0])
            else:
                values[n] = float(stats.spearmanr(p, y)[0])
    return MetricReport("regression", values, int(p.size), undefined=undefined)


# ---------------------------------------------------------------- binary

def roc_auc(scores, labels):
    """Mann-Whitney form: P(score+ > score-) + 0.5 P(tie), via average ranks."""
    s, y = _arrays(scores, labels)
    pos = y == 1
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0:
        raise SingleClass("ROC-AUC needs both classes")
    ranks = stats.rankdata(s)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2) / (n1 * n0))


def pr_auc(scores, labels):
    """Area under the interpolated precision-recall step curve."""
    s, y = _arrays(scores, labels)
    if y.min() == y.max():
        raise SingleClass("PR-AUC needs both classes")
    precision, recall, _ = precision_recall_curve(y, s)
    # sklearn orders by decreasing recall; flip so recall increases
    precision, recall = precision[::-1], recall[::-1]
    interp = np.maximum.accumulate(precision[::-1])[::-1]
    return float(np.sum(np.diff(recall) * interp[1:]))


def range_logauc(scores, labels, fpr_range=LOGAUC_RANGE):
    """Mean TPR over log10(FPR) within ``fpr_range``, TPR linearly interpolated in FPR."""
    s, y = _arrays(scores, labels)
    if y.min() == y.max():
        raise SingleClass("Range LogAUC needs both classes")
    lo, hi = fpr_range
    if not 0 < lo < hi <= 1:
        raise ConfigurationError(f"bad LogAUC range {fpr_range}")
    fpr, tpr, _ = roc_curve(y, s, drop_intermediate=False)
    total = 0.0
    for f0, f1, t0, t1 in zip(fpr[:-1], fpr[1:], tpr[:-1], tpr[1:]):
        if f1 <= f0:
            continue
        a, b = max(f0, lo), min(f1, hi)
        if a >= b:
            continue
        slope = (t1 - t0) / (f1 - f0)
        icpt = t0 - slope * f0
        # integral of (icpt + slope * f) d(log10 f)
        total += (icpt * math.log(b / a) + slope * (b - a)) / math.log(10)
    return float(total / (math.log10(hi) - math.log10(lo)))


def _pr_points(s, y):
    precision, recall, _ = precision_recall_curve(y, s)
    return precision[:-1], recall[:-1]  # drop the synthetic (recall 0, precision 1) end point


def precision_at_recall(scores, labels, k=AT_K):
    s, y = _arrays(scores, labels)
    if y.max() == 0:
        raise SingleClass("precision@recall needs positive labels")
    precision, recall = _pr_points(s, y)
    ok = recall >= k
    return float(precision[ok].max()) if ok.any() else 0.0


def recall_at_precision(scores, labels, k=AT_K):
    s, y = _arrays(scores, labels)
    if y.max() == 0:
        raise SingleClass("recall@precision needs positive labels")
    precision, recall = _pr_points(s, y)
    ok = precision >= k
    return float(recall[ok].max()) if ok.any() else 0.0


def binary_metrics(scores, labels, names=None, threshold=0.5, k=AT_K, fpr_range=LOGAUC_RANGE):
    s, y = _arrays(scores, labels)
    if not np.all((y == 0) | (y == 1)):
        raise DataError("binary labels must be 0 or 1")
    names = _select(names, "binary")
    pred = (s >= threshold).astype(int)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    single = y.min() == y.max()
    ranked = {"roc_auc": roc_auc, "pr_auc": pr_auc, "range_logauc": lambda a, b: range_logauc(a, b, fpr_range),
              "precision_at_recall": lambda a, b: precision_at_recall(a, b, k),
              "recall_at_precision": lambda a, b: recall_at_precision(a, b, k)}
    values, undefined = {}, {}
    for n in names:
        if n in ranked:
            if single:
                values[n], undefined[n] = None, "only one class present"
            else:
                values[n] = ranked[n](s, y)
        elif n == "accuracy":
            values[n] = float(np.mean(pred == y))
        elif n == "precision":
            values[n] = tp / (tp + fp) if tp + fp else 0.0
        elif n == "recall":
            values[n] = tp / (tp + fn) if tp + fn else 0.0
        elif n == "f1":
            values[n] = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
    return MetricReport("binary", values, int(s.size), positive_rate=float(y.mean()), undefined=undefined)


# ---------------------------------------------------------------- multiclass

def multiclass_metrics(preds, labels, num_classes=None, names=None):
    """``preds`` are class ids ``(n,)`` or class scores ``(n, K)`` (argmax taken)."""
    p = np.asarray(preds)
    if p.ndim == 2:
        num_classes = num_classes or p.shape[1]
        p = p.argmax(axis=1)
    y = np.asarray(labels).ravel()
    if p.shape != y.shape or p.size == 0:
        raise DataError("predictions and labels must be non-empty and equal length")
    p, y = p.astype(int), y.astype(int)
    K = int(num_classes or max(p.max(), y.max()) + 1)
    if min(p.min(), y.min()) < 0 or max(p.max(), y.max()) >= K:
        raise DataError(f"class ids must lie in [0, {K})")
    names = _select(names, "multiclass")
    cm = confusion_matrix(y, p, labels=list(range(K)))
    acc = float(np.trace(cm) / cm.sum())
    values, undefined = {}, {}
    for n in names:
        if n in ("micro_f1", "micro_precision", "micro_recall", "accuracy"):
            # single-label: micro TP = trace, micro FP = micro FN = n - trace
            values[n] = acc
        elif n == "macro_f1":
            tp = np.diag(cm).astype(float)
            denom = cm.sum(0) + cm.sum(1)
            f1 = np.divide(2 * tp, denom, out=np.zeros(K), where=denom > 0)
            values[n] = float(f1.mean())
        elif n == "cohen_kappa":
            pe = float((cm.sum(0) * cm.sum(1)).sum() / cm.sum() ** 2)
            if pe == 1:
                values[n], undefined[n] = None, "chance agreement is 1"
            else:
                values[n] = float(cohen_kappa_score(y, p, labels=list(range(K))))
    return MetricReport("multiclass", values, int(p.size), undefined=undefined)


def compute_metrics(kind, preds, labels, names=None, **opts):
    if kind == "binary":
        return binary_metrics(preds, labels, names, **opts)
    if kind == "regression":
        return regression_metrics(preds, labels, names)
    if kind == "multiclass":
        return multiclass_metrics(preds, labels, names=names, **opts)
    raise ConfigurationError(f"unknown task kind {kind!r}")
