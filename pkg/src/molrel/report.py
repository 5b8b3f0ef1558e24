"""Result tables and figures.

Tables are written as delimited text (CSV or TSV) and as a fixed-width text
table for the terminal. Figures are rendered with matplotlib's Agg backend
straight to files, so no display is needed.
"""
import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from sklearn.metrics import precision_recall_curve, roc_curve  # noqa: E402

from .metrics import DISPLAY  # noqa: E402


def summarize(reports):
    """Mean and sample std (ddof=1; 0 for one repeat) of each metric across repeats.

    ``reports`` is a list of ``{metric: value}`` dicts; undefined values
    (``None``) are skipped and the metric is reported with its count.
    """
    names = []
    for r in reports:
        names += [k for k in r if k not in names]
    rows = []
    for n in names:
        vals = [r[n] for r in reports if r.get(n) is not None]
        mean = float(np.mean(vals)) if vals else None
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else (0.0 if vals else None)
        rows.append({"metric": n, "mean": mean, "std": std, "n": len(vals)})
    return rows


def _fmt(v, digits=4):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "n/a"
    return f"{v:.{digits}f}"


def format_table(rows, title=None):
    """Plain-text ``metric | mean ± std`` table."""
    lines = [title] if title else []
    width = max([len(DISPLAY.get(r["metric"], r["metric"])) for r in rows] + [6])
    lines.append(f"{'metric':<{width}}  mean ± std")
    lines.append("-" * (width + 22))
    for r in rows:
        label = DISPLAY.get(r["metric"], r["metric"])
        lines.append(f"{label:<{width}}  {_fmt(r['mean'])} ± {_fmt(r['std'])}")
    return "\n".join(lines)


def write_delimited(rows, path, delimiter=None):
    """Write a list of dicts; delimiter from the suffix (``.tsv`` -> tab) unless given."""
    path = Path(path)
    delimiter = delimiter or ("\t" if path.suffix == ".tsv" else ",")
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, delimiter=delimiter, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in r.items()})
    return path


def plot_history(history, path, metric=None):
    """Training loss and (if present) the validation metric per epoch."""
    epochs = [h["epoch"] for h in history]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, [h["train_loss"] for h in history], color="tab:blue", label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("train loss")
    key = f"valid_{metric}" if metric else next((k for k in (history[0] if history else {}) if k.startswith("valid_")), None)
    if key and history and key in history[0]:
        ax2 = ax.twinx()
        ax2.plot(epochs, [h[key] for h in history], color="tab:orange", label=key)
        ax2.set_ylabel(DISPLAY.get(key[6:], key))
        ax2.legend(loc="upper right")
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def plot_binary_curves(scores, labels, path):
    """ROC and precision-recall curves side by side."""
    scores, labels = np.asarray(scores, dtype=float).ravel(), np.asarray(labels).ravel()
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 4))
    if labels.min() != labels.max():
        fpr, tpr, _ = roc_curve(labels, scores)
        prec, rec, _ = precision_recall_curve(labels, scores)
        a1.plot(fpr, tpr)
        a2.step(rec, prec, where="post")
    a1.plot([0, 1], [0, 1], ls="--", color="grey", lw=0.8)
    a1.set(xlabel="false positive rate", ylabel="true positive rate", title="ROC")
    a2.set(xlabel="recall", ylabel="precision", title="Precision-recall", ylim=(0, 1.02))
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def plot_summary(rows, path, title=None):
    """Bar chart of metric means with sample-std error bars."""
    rows = [r for r in rows if r["mean"] is not None]
    fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(rows) + 1), 4))
    x = np.arange(len(rows))
    ax.bar(x, [r["mean"] for r in rows], yerr=[r["std"] or 0 for r in rows], capsize=3, color="tab:green")
    ax.set_xticks(x)
    ax.set_xticklabels([DISPLAY.get(r["metric"], r["metric"]) for r in rows], rotation=45, ha="right")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)
