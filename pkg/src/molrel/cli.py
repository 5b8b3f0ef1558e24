"""Command line interface.

::

    molrel run experiment.yaml
    molrel ablate experiment.yaml --drop self_attention
    molrel list-registry
    molrel featurize dti pairs.csv --featurizer morgan -o morgan.csv
    molrel enumerate --drug 16 --protein 22 --max 4

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.

Experiment config (YAML or JSON; relative paths resolve against the file)::

    name: davis-exp-1.1
    task: dti                  # dti | ddi | ppi
    kind: binary               # binary | regression | multiclass
    data:
      path: data/davis         # file, or directory with train/valid/test files
      structures_dir: pdb/     # optional, PDB files named <pdb_id>.pdb
      split: random            # random | stratified | kfold | predefined
      fractions: [0.7, 0.2, 0.1]
      negative_ratio: null     # sample unseen pairs into a positive-only file
    model: exp-1.1             # preset name, spec file path, or inline spec dict
    train: {epochs: 50, patience: 10}
    metrics: [roc_auc, pr_auc]
    repeats: 5
    seed: 0
    output_dir: runs/davis-exp-1.1
"""
import argparse
import csv
import datetime as dt
import json
import logging
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, ConfigurationError, DataError, MolrelError
from .modelspace import enumerate_model_space, enumerate_models

log = logging.getLogger("molrel")

SPLITS = ("random", "stratified", "kfold", "predefined")
DEFAULT_FRACTIONS = {"random": (0.7, 0.2, 0.1), "stratified": (0.6, 0.2, 0.2)}
_TOP_KEYS = {"name", "task", "kind", "num_classes", "data", "model", "train", "metrics", "repeats",
             "seed", "output_dir", "figures"}
_DATA_KEYS = {"path", "structures_dir", "split", "fractions", "folds", "valid_fraction", "negative_ratio"}


@dataclass
class ExperimentConfig:
    name: str
    task: str
    kind: str
    data: dict
    model: object  # preset name, spec dict or spec path
    train: dict
    metrics: list
    repeats: int
    seed: int
    output_dir: Path
    num_classes: int = None
    figures: bool = True
    raw: dict = field(default_factory=dict)


def _read_mapping(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", "config")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}", "config") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", "config")
    return data


def _resolve(base, value):
    if value is None:
        return None
    p = Path(value).expanduser()
    return p if p.is_absolute() else (base / p)


def load_config(path, overrides=None):
    """Parse and check an experiment config; errors name the offending field."""
    from . import dataio
    from .metrics import METRICS, canonical_metric
    from .presets import preset_names

    path = Path(path)
    raw = _read_mapping(path)
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    base = path.resolve().parent
    unknown = sorted(set(raw) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(unknown)}", "config")

    task = str(raw.get("task", "dti")).lower()
    if task not in dataio.SCHEMAS:
        raise ConfigError(f"unknown task {task!r}; expected dti, ddi or ppi", "task")
    kind = str(raw.get("kind", "binary")).lower()
    if kind not in METRICS:
        raise ConfigError(f"unknown kind {kind!r}; expected binary, regression or multiclass", "kind")

    data = raw.get("data")
    if not isinstance(data, dict):
        raise ConfigError("missing data section", "data")
    bad = sorted(set(data) - _DATA_KEYS)
    if bad:
        raise ConfigError(f"unknown key(s) {', '.join(bad)}", "data")
    data = dict(data)
    if not data.get("path"):
        raise ConfigError("missing dataset path", "data.path")
    data["path"] = _resolve(base, data["path"])
    if not data["path"].exists():
        raise ConfigError(f"dataset path does not exist: {data['path']}", "data.path")
    data["structures_dir"] = _resolve(base, data.get("structures_dir"))
    split = data.get("split")
    if split is not None and split not in SPLITS:
        raise ConfigError(f"unknown split {split!r}; expected one of {', '.join(SPLITS)}", "data.split")

    model = raw.get("model")
    if model is None:
        raise ConfigError("missing model (preset name, spec file or inline spec)", "model")
    if isinstance(model, str) and model.strip().lower() not in preset_names():
        mpath = _resolve(base, model)
        if not mpath.is_file():
            raise ConfigError(f"{model!r} is neither a preset ({', '.join(preset_names())}) nor a file", "model")
        model = str(mpath)

    train = raw.get("train") or {}
    if not isinstance(train, dict):
        raise ConfigError("train must be a mapping", "train")
    metrics = raw.get("metrics")
    if metrics is not None:
        if not isinstance(metrics, list) or not metrics:
            raise ConfigError("metrics must be a non-empty list", "metrics")
        try:
            metrics = [canonical_metric(m, kind) for m in metrics]
        except ConfigurationError as exc:
            raise ConfigError(str(exc), "metrics") from None
    repeats = raw.get("repeats", 1)
    if not isinstance(repeats, int) or repeats < 1:
        raise ConfigError("repeats must be a positive integer", "repeats")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer", "seed")
    name = str(raw.get("name") or path.stem)
    out = _resolve(base, raw.get("output_dir") or f"runs/{name}")
    return ExperimentConfig(name, task, kind, data, model, train, metrics, repeats, seed, out,
                            raw.get("num_classes"), bool(raw.get("figures", True)), raw)


def build_spec(cfg, num_classes=None):
    from .compose import ModelSpec
    from .presets import get_preset, preset_names

    model = cfg.model
    k = cfg.num_classes or num_classes
    try:
        if isinstance(model, dict):
            spec = ModelSpec.from_dict({"task": cfg.task, "kind": cfg.kind, "num_classes": k, **model})
        elif model.strip().lower() in preset_names():
            spec = get_preset(model, cfg.kind, k)
        else:
            spec = ModelSpec.load(model)
    except ConfigError:
        raise
    except ConfigurationError as exc:
        raise ConfigError(str(exc), "model") from None
    if spec.task != cfg.task:
        raise ConfigError(f"model is a {spec.task} model but the experiment task is {cfg.task}", "model")
    if spec.kind != cfg.kind:
        raise ConfigError(f"model head is {spec.kind} but the experiment kind is {cfg.kind}", "model")
    return spec


def train_config(cfg, seed, out_dir):
    from .presets import preset_names, train_defaults
    from .train import TrainConfig

    base = train_defaults(cfg.model) if isinstance(cfg.model, str) and cfg.model.strip().lower() in preset_names() else {}
    if cfg.kind != "binary":
        base.pop("metric", None)
    merged = {**base, **cfg.train, "seed": seed, "output_dir": str(out_dir)}
    if cfg.metrics is not None:
        merged.setdefault("eval_metrics", cfg.metrics)
    try:
        return TrainConfig.from_dict(merged).resolve(cfg.kind)
    except TypeError as exc:
        raise ConfigError(str(exc), "train") from None
    except ConfigurationError as exc:
        raise ConfigError(str(exc), "train") from None


# ---------------------------------------------------------------- data plan

def load_data(cfg):
    from . import dataio

    d = cfg.data
    loaded = dataio.load_task(cfg.task, d["path"], cfg.kind, d["structures_dir"], cfg.num_classes)
    if isinstance(loaded, tuple):
        if d.get("split") not in (None, "predefined"):
            raise ConfigError("the dataset directory is already split; use split: predefined", "data.split")
        return loaded
    if d.get("split") == "predefined":
        raise ConfigError("split: predefined needs a directory with train/valid/test files", "data.split")
    if d.get("negative_ratio"):
        loaded = dataio.sample_negatives(loaded, float(d["negative_ratio"]), seed=cfg.seed)
    return loaded


def repeat_splits(cfg, data):
    """Yield ``(seed, train, valid, test)`` for each repeat."""
    from . import dataio

    if isinstance(data, tuple):
        for r in range(cfg.repeats):
            yield (cfg.seed + r, *data)
        return
    d = cfg.data
    split = d.get("split") or "random"
    fractions = tuple(d.get("fractions") or DEFAULT_FRACTIONS.get(split, (0.7, 0.2, 0.1)))
    if split != "kfold" and len(fractions) != 3:
        raise ConfigError("fractions must list train, valid and test shares", "data.fractions")
    if split == "random":
        for r in range(cfg.repeats):
            yield (cfg.seed + r, *dataio.split_random(data, fractions, seed=cfg.seed + r))
    elif split == "stratified":
        folds = dataio.split_stratified(data, fractions, seed=cfg.seed, folds=cfg.repeats)
        for r, parts in enumerate(folds):
            yield (cfg.seed + r, *parts)
    elif split == "kfold":
        k = int(d.get("folds", 5))
        vf = float(d.get("valid_fraction", 0.1))
        folds = dataio.kfold(data, k, seed=cfg.seed)
        if cfg.repeats > k:
            raise ConfigError(f"repeats ({cfg.repeats}) exceeds folds ({k})", "repeats")
        for r, (train, test) in enumerate(folds[: cfg.repeats]):
            tr, va = dataio.split_random(train, (1 - vf, vf), seed=cfg.seed + r)
            yield cfg.seed + r, tr, va, test


# ---------------------------------------------------------------- run

def _json_dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def run_experiment(cfg, spec=None, stream=sys.stdout, label=None):
    """Train and test ``cfg.repeats`` times; write per-repeat and summary outputs."""
    import torch

    from . import report
    from .train import Trainer

    started = dt.datetime.now(dt.timezone.utc).isoformat()
    data = load_data(cfg)
    k = None
    if cfg.kind == "multiclass":
        k = max(p.num_classes for p in data) if isinstance(data, tuple) else data.num_classes
    spec = spec or build_spec(cfg, k)
    spec.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec.save(out / "model.json")
    if not isinstance(data, tuple) and data.rejects:
        data.write_rejects(out / "rejects.csv")

    per_repeat, seeds = [], []
    for r, (seed, train, valid, test) in enumerate(repeat_splits(cfg, data)):
        rdir = out / f"repeat-{r}"
        tcfg = train_config(cfg, seed, rdir)
        trainer = Trainer.for_kind(cfg.kind, tcfg)
        model = spec.build(seed)
        result = trainer.fit(model, train, valid)
        rep = trainer.evaluate(model, test, cfg.metrics, output_dir=rdir)
        per_repeat.append(rep.values)
        seeds.append(seed)
        if cfg.figures:
            report.plot_history(result.history, rdir / "history.png", tcfg.metric)
            if cfg.kind == "binary":
                report.plot_binary_curves(trainer.scores(model, test), test.labels, rdir / "curves.png")
        print(f"[{label or cfg.name}] repeat {r + 1}/{cfg.repeats} (seed {seed}): "
              f"best epoch {result.best_epoch}, epochs run {result.epochs_run}", file=stream)

    rows = report.summarize(per_repeat)
    for row in rows:
        row.update({f"repeat_{i}": v.get(row["metric"]) for i, v in enumerate(per_repeat)})
    report.write_delimited(rows, out / "results.csv")
    _json_dump({"name": label or cfg.name, "task": cfg.task, "kind": cfg.kind, "seeds": seeds,
                "summary": rows, "repeats": per_repeat}, out / "results.json")
    if cfg.figures:
        report.plot_summary(rows, out / "summary.png", title=label or cfg.name)
    _json_dump({"started": started, "finished": dt.datetime.now(dt.timezone.utc).isoformat(),
                "version": __version__, "python": platform.python_version(), "torch": torch.__version__,
                "numpy": np.__version__, "argv": sys.argv}, out / "manifest.json")
    print(report.format_table(rows, title=f"{label or cfg.name}: {len(per_repeat)} repeat(s)"), file=stream)
    return rows


def cmd_run(args):
    overrides = {"output_dir": args.output_dir, "repeats": args.repeats, "seed": args.seed}
    cfg = load_config(args.config, overrides)
    if args.epochs is not None:
        cfg.train["epochs"] = args.epochs
    run_experiment(cfg)
    return 0


def cmd_ablate(args):
    from .ablation import ablate_spec

    overrides = {"repeats": args.repeats, "seed": args.seed}
    cfg = load_config(args.config, overrides)
    if args.epochs is not None:
        cfg.train["epochs"] = args.epochs
    base = Path(args.output_dir) if args.output_dir else cfg.output_dir
    data_k = None
    if cfg.kind == "multiclass":
        loaded = load_data(cfg)
        data_k = max(p.num_classes for p in loaded) if isinstance(loaded, tuple) else loaded.num_classes
    spec = build_spec(cfg, data_k)
    for drop in args.drop:
        spec = ablate_spec(spec, drop)
    tag = "w-o-" + "-".join(d.lower().replace(" ", "_") for d in args.drop)
    cfg.output_dir = base / tag
    run_experiment(cfg, spec=spec, label=f"{cfg.name} {tag}")
    return 0


def registry_listing():
    from .compose import registry_inventory
    from .featurize import FEATURIZERS
    from .interact import INTERACTIONS
    from .metrics import METRICS
    from .presets import preset_names

    inv = registry_inventory()
    return {
        "drug_encoders": inv["drug"],
        "protein_sequence_encoders": inv["protein_sequence"],
        "protein_structure_encoders": inv["protein_structure"],
        "interaction_layers": list(INTERACTIONS),
        "metrics": {k: list(v) for k, v in METRICS.items()},
        "featurizers": sorted(FEATURIZERS),
        "presets": preset_names(),
    }


def cmd_list_registry(args):
    listing = registry_listing()
    if args.json:
        print(json.dumps(listing, indent=2))
        return 0
    for key, values in listing.items():
        if isinstance(values, dict):
            total = sum(len(v) for v in values.values())
            print(f"{key} ({total}):")
            for kind, names in values.items():
                print(f"  {kind}: {', '.join(names)}")
        else:
            print(f"{key} ({len(values)}): {', '.join(values)}")
    return 0


def _entity_columns(task, entity, header_fields):
    from . import dataio

    cols = dataio.SCHEMAS[task]["columns"]
    kinds = dataio.SCHEMAS[task]["entities"]
    wanted = [c for c, k in zip(cols, kinds) if k == entity]
    if not wanted:
        raise ConfigError(f"{task} data has no {entity} column", "featurizer")
    missing = [c for c in wanted if c not in header_fields]
    if missing:
        raise dataio.SchemaError(f"missing column(s) {', '.join(missing)}")
    return wanted


def _parse_params(items):
    params = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}", "param")
        k, v = item.split("=", 1)
        params[k] = yaml.safe_load(v)
    return params


def cmd_featurize(args):
    from . import dataio
    from .featurize import get_featurizer

    feat = get_featurizer(args.featurizer)
    if feat.kind != "vector":
        raise ConfigError(f"{feat.id} produces {feat.kind} output; only vector featurizers can be exported",
                          "featurizer")
    if feat.needs_structure:
        raise ConfigError(f"{feat.id} needs structures", "featurizer")
    task = args.task.lower()
    if task not in dataio.SCHEMAS:
        raise ConfigError(f"unknown task {task!r}", "task")
    params = _parse_params(args.param)
    src = Path(args.input)
    if not src.is_file():
        raise DataError(f"input file not found: {src}")
    with open(src, newline="", encoding="utf-8") as fh:
        header = fh.readline()
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=dataio.sniff_delimiter(header))
        fields = {(f or "").strip().lower(): f for f in reader.fieldnames or []}
        cols = _entity_columns(task, feat.entity, fields)
        entities = []
        for row in reader:
            for c in cols:
                v = (row.get(fields[c]) or "").strip()
                if v and v not in entities:
                    entities.append(v)
    rows, failed = [], 0
    for e in entities:
        try:
            vec = feat(e, **params)
        except DataError as exc:
            failed += 1
            log.warning("skipping %s: %s", e[:30], exc)
            continue
        rows.append([e, *[repr(float(x)) for x in vec]])
    if not rows:
        raise DataError("no entity could be featurized")
    dim = len(rows[0]) - 1
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["entity", *[f"{feat.id}_{i}" for i in range(dim)]])
        w.writerows(rows)
    print(f"featurized {len(rows)} {feat.entity}(s) with {feat.id} ({dim} values)"
          + (f"; {failed} skipped" if failed else ""))
    return 0


def cmd_enumerate(args):
    count = enumerate_model_space(args.drug, args.protein, args.max)
    if args.check:
        brute = sum(1 for _ in enumerate_models(range(args.drug), range(args.protein), args.max))
        if brute != count:
            raise MolrelError(f"closed form {count} != brute force {brute}")
    print(count)
    return 0


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="molrel", description="Molecular interaction model toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn in (("run", cmd_run), ("ablate", cmd_ablate)):
        s = sub.add_parser(name, help=f"{name} an experiment config")
        s.add_argument("config")
        s.add_argument("--output-dir")
        s.add_argument("--repeats", type=_positive)
        s.add_argument("--seed", type=int)
        s.add_argument("--epochs", type=_positive)
        if name == "ablate":
            s.add_argument("--drop", action="append", required=True,
                           help="component to remove (interaction, encoder id or 'esm'); repeatable")
        s.set_defaults(func=fn)

    s = sub.add_parser("list-registry", help="list encoders, interaction layers, metrics")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_list_registry)

    s = sub.add_parser("featurize", help="export a vector featurization of a data file")
    s.add_argument("task", help="dti, ddi or ppi")
    s.add_argument("input")
    s.add_argument("--featurizer", required=True)
    s.add_argument("--param", action="append", help="featurizer option key=value")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("enumerate", help="count encoder combinations")
    s.add_argument("--drug", type=_positive, required=True)
    s.add_argument("--protein", type=_positive, required=True)
    s.add_argument("--max", type=_positive, required=True)
    s.add_argument("--check", action="store_true", help="cross-check against brute-force enumeration")
    s.set_defaults(func=cmd_enumerate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MolrelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FloatingPointError, RuntimeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
