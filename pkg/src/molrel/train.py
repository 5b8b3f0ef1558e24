"""Trainers for binary, regression and multiclass interaction models.

A trainer runs mini-batch Adam over a :class:`~molrel.compose.BuiltModel`,
evaluates the early-stopping metric on the validation set after every epoch,
keeps the best parameters and stops once ``patience`` consecutive epochs
fail to improve on the best value.

Output directory layout (when ``output_dir`` is set)::

    history.csv    per-epoch train loss and validation metric
    metrics.json   the latest evaluation report
    best.ckpt      best parameters (versioned torch pickle of name -> tensor)
    config.json    the resolved TrainConfig
"""
import copy
import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import ConfigurationError, EmptyDataset, NonFiniteLoss
from .metrics import METRICS, canonical_metric, compute_metrics, higher_is_better

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "molrel-checkpoint"
CHECKPOINT_VERSION = 1
DEFAULT_METRIC = {"binary": "roc_auc", "regression": "mse", "multiclass": "accuracy"}


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    metric: str = None  # early-stopping metric; default depends on task kind
    direction: str = None  # "max" | "min"; inferred from the metric when None
    patience: int = 10
    seed: int = 0
    output_dir: str = None
    weight_decay: float = 0.0
    betas: tuple = (0.9, 0.999)
    max_grad_norm: float = None
    eval_metrics: list = None  # reported at evaluation; all metrics of the kind when None
    shuffle: bool = True
    deterministic: bool = True

    def resolve(self, kind):
        """Copy with kind-dependent defaults filled in and values checked."""
        cfg = copy.deepcopy(self)
        if kind not in METRICS:
            raise ConfigurationError(f"unknown task kind {kind!r}")
        cfg.metric = canonical_metric(cfg.metric or DEFAULT_METRIC[kind], kind)
        if cfg.direction is None:
            cfg.direction = "max" if higher_is_better(cfg.metric) else "min"
        if cfg.direction not in ("max", "min"):
            raise ConfigurationError(f"direction must be 'max' or 'min', got {cfg.direction!r}")
        if cfg.eval_metrics is not None:
            cfg.eval_metrics = [canonical_metric(m, kind) for m in cfg.eval_metrics]
            if not cfg.eval_metrics:
                raise ConfigurationError("eval_metrics is empty")
        for name, low in (("epochs", 1), ("batch_size", 1), ("patience", 1)):
            if int(getattr(cfg, name)) < low:
                raise ConfigurationError(f"{name} must be >= {low}")
        if not cfg.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        cfg.betas = tuple(cfg.betas)
        return cfg

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown train option(s): {', '.join(unknown)}")
        return cls(**data)


@dataclass
class TrainResult:
    history: list
    best_epoch: int
    best_value: float
    epochs_run: int
    stopped_early: bool
    metric: str
    config: dict = field(default_factory=dict)


def save_checkpoint(model, path, **meta):
    state = {k: v.detach().cpu().clone() for k, v in model.state_dict().items()}
    torch.save({"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "state": state, "meta": meta}, path)


def load_checkpoint(model, path):
    blob = torch.load(path, map_location="cpu", weights_only=True)
    if not isinstance(blob, dict) or blob.get("format") != CHECKPOINT_FORMAT:
        raise ConfigurationError(f"{path} is not a model checkpoint")
    if blob["version"] > CHECKPOINT_VERSION:
        raise ConfigurationError(f"checkpoint version {blob['version']} is newer than supported")
    model.load_state_dict(blob["state"])
    return blob.get("meta", {})


def _batches(n, batch_size, rng=None):
    order = rng.permutation(n) if rng is not None else np.arange(n)
    chunks = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    # a trailing singleton breaks batch norm in training mode
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        last = chunks.pop()
        chunks[-1] = np.concatenate([chunks[-1], last])
    return chunks


class Trainer:
    """Base trainer; use :meth:`for_kind` or one of the subclasses."""

    kind = None

    def __init__(self, config=None):
        self.config = (config or TrainConfig()).resolve(self.kind)

    @staticmethod
    def for_kind(kind, config=None):
        try:
            cls = {"binary": BinaryTrainer, "regression": RegressionTrainer,
                   "multiclass": MultiClassTrainer}[kind]
        except KeyError:
            raise ConfigurationError(f"unknown task kind {kind!r}") from None
        return cls(config)

    def loss_fn(self, logits, labels):
        raise NotImplementedError

    def _check(self, model, dataset, what):
        if dataset is None or len(dataset) == 0:
            raise EmptyDataset(f"{what} set is empty")
        if model.spec.kind != self.kind:
            raise ConfigurationError(f"{type(self).__name__} cannot train a {model.spec.kind} model")
        if model.spec.task != dataset.task:
            raise ConfigurationError(f"model is for {model.spec.task} but {what} data is {dataset.task}")

    def _labels(self, labels):
        if self.kind == "multiclass":
            return torch.as_tensor(labels, dtype=torch.long)
        return torch.as_tensor(labels, dtype=torch.float32)

    def warm_cache(self, model, *datasets):
        """Featurize every distinct entity once before training."""
        for ds in datasets:
            if ds is None:
                continue
            pairs = ds.pairs()
            for fkey in model.plan:
                slot = model.roles.index(fkey.role)
                for pair in pairs:
                    model.cache.get(fkey, pair[slot])

    # ------------------------------------------------------------ fit
    def fit(self, model, train, valid=None, config=None):
        cfg = self.config if config is None else config.resolve(self.kind)
        self._check(model, train, "training")
        if valid is not None:
            self._check(model, valid, "validation")
        prev_det = torch.are_deterministic_algorithms_enabled()
        if cfg.deterministic:
            torch.use_deterministic_algorithms(True, warn_only=True)
        try:
            return self._fit(model, train, valid, cfg)
        finally:
            torch.use_deterministic_algorithms(prev_det)

    def _fit(self, model, train, valid, cfg):
        out = Path(cfg.output_dir) if cfg.output_dir else None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
        torch.manual_seed(cfg.seed)
        rng = np.random.default_rng(cfg.seed)
        self.warm_cache(model, train, valid)
        opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate, betas=cfg.betas,
                               weight_decay=cfg.weight_decay)
        pairs = train.pairs()
        labels = self._labels(train.labels)
        sign = 1.0 if cfg.direction == "max" else -1.0
        best_value, best_epoch, best_state, stale = None, 0, None, 0
        history = []
        stopped_early = False

        for epoch in range(1, cfg.epochs + 1):
            model.train()
            total, count = 0.0, 0
            for b, idx in enumerate(_batches(len(train), cfg.batch_size, rng if cfg.shuffle else None)):
                inputs = model.featurize([pairs[i] for i in idx])
                logits = model(inputs)
                loss = self.loss_fn(logits, labels[idx])
                if not torch.isfinite(loss):
                    raise NonFiniteLoss(f"loss became {loss.item()} at epoch {epoch}, batch {b} "
                                        f"(learning rate {cfg.learning_rate}); try a smaller learning rate")
                opt.zero_grad()
                loss.backward()
                if cfg.max_grad_norm:
                    nn.utils.clip_grad_norm_(model.parameters(), cfg.max_grad_norm)
                opt.step()
                total += loss.item() * len(idx)
                count += len(idx)
            row = {"epoch": epoch, "train_loss": total / count}

            if valid is None:
                history.append(row)
                best_epoch, best_value = epoch, None
                continue
            value = compute_metrics(self.kind, self.scores(model, valid, cfg.batch_size), valid.labels,
                                    [cfg.metric])[cfg.metric]
            row[f"valid_{cfg.metric}"] = value
            history.append(row)
            if best_value is None or sign * value > sign * best_value:
                best_value, best_epoch, stale = value, epoch, 0
                best_state = copy.deepcopy(model.state_dict())
                if out is not None:
                    save_checkpoint(model, out / "best.ckpt", epoch=epoch, metric=cfg.metric, value=value)
            else:
                stale += 1
                if stale >= cfg.patience:
                    stopped_early = True
                    log.info("early stop at epoch %d (best %s %.4f at epoch %d)",
                             epoch, cfg.metric, best_value, best_epoch)
                    break

        if best_state is not None:
            model.load_state_dict(best_state)
        elif out is not None:
            save_checkpoint(model, out / "best.ckpt", epoch=best_epoch)
        if out is not None:
            write_history(history, out / "history.csv")
        model.eval()
        return TrainResult(history, best_epoch, best_value, len(history), stopped_early, cfg.metric,
                           cfg.to_dict())

    # ------------------------------------------------------------ inference
    def scores(self, model, dataset, batch_size=None):
        return model.predict(dataset.pairs(), batch_size=batch_size or max(self.config.batch_size, 256))

    def evaluate(self, model, dataset, metrics=None, output_dir=None, **metric_opts):
        """Metric report on ``dataset`` in evaluation mode; written to ``output_dir/metrics.json``."""
        if dataset is None or len(dataset) == 0:
            raise EmptyDataset("evaluation set is empty")
        names = metrics if metrics is not None else self.config.eval_metrics
        if self.kind == "multiclass" and model.spec.num_classes:
            metric_opts.setdefault("num_classes", model.spec.num_classes)
        report = compute_metrics(self.kind, self.scores(model, dataset), dataset.labels, names, **metric_opts)
        out = output_dir or self.config.output_dir
        if out is not None:
            Path(out).mkdir(parents=True, exist_ok=True)
            report.to_json(Path(out) / "metrics.json")
        return report

    def predict(self, model, pairs, batch_size=256):
        return model.predict(list(pairs), batch_size=batch_size)


class BinaryTrainer(Trainer):
    kind = "binary"

    def __init__(self, config=None):
        super().__init__(config)
        self._loss = nn.BCEWithLogitsLoss()

    def loss_fn(self, logits, labels):
        return self._loss(logits.squeeze(-1), labels)


class RegressionTrainer(Trainer):
    kind = "regression"

    def __init__(self, config=None):
        super().__init__(config)
        self._loss = nn.MSELoss()

    def loss_fn(self, logits, labels):
        return self._loss(logits.squeeze(-1), labels)


class MultiClassTrainer(Trainer):
    kind = "multiclass"

    def __init__(self, config=None):
        super().__init__(config)
        self._loss = nn.CrossEntropyLoss()

    def loss_fn(self, logits, labels):
        return self._loss(logits, labels)


def write_history(history, path):
    cols = []
    for row in history:
        cols += [k for k in row if k not in cols]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in history:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) and math.isfinite(v) else v)
                        for k, v in row.items()})
