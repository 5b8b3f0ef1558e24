"""Dataset loading, splitting and negative sampling for DTI, DDI and PPI data.

Files are UTF-8 CSV or TSV with a header row. Column schemas::

    dti  drug_smiles, protein_seq, [pdb_id], label
    ddi  drug1_smiles, drug2_smiles, label
    ppi  protein1_seq, protein2_seq, [protein1_pdb_id, protein2_pdb_id], label

Rows that cannot be used (empty fields, unparsable SMILES, invalid residues,
non-numeric labels) are skipped and listed in ``dataset.rejects``.
"""
import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError, InsufficientUniverse, SchemaError
from .featurize.protein import normalize_sequence
from .molparse import ProteinRecord, parse_smiles

log = logging.getLogger(__name__)

SCHEMAS = {
    "dti": {"columns": ("drug_smiles", "protein_seq"), "optional": {"pdb_id": 1},
            "entities": ("drug", "protein")},
    "ddi": {"columns": ("drug1_smiles", "drug2_smiles"), "optional": {},
            "entities": ("drug", "drug")},
    "ppi": {"columns": ("protein1_seq", "protein2_seq"),
            "optional": {"protein1_pdb_id": 0, "protein2_pdb_id": 1},
            "entities": ("protein", "protein")},
}
LABEL_COLUMN = "label"
LABEL_KINDS = ("binary", "regression", "multiclass")
SYMMETRIC_TASKS = {"ddi", "ppi"}
SPLIT_NAMES = ("train", "valid", "test")
_SPLIT_ALIASES = {"train": ("train",), "valid": ("valid", "val", "validation", "dev"), "test": ("test",)}
_SUFFIXES = (".csv", ".tsv", ".txt")


@dataclass
class Reject:
    line: int
    reason: str
    row: dict


@dataclass
class InteractionDataset:
    task: str
    kind: str
    entity1: list
    entity2: list
    labels: np.ndarray
    num_classes: int = None
    rejects: list = field(default_factory=list)
    source: str = None

    def __post_init__(self):
        if self.task not in SCHEMAS:
            raise ConfigurationError(f"unknown task {self.task!r}; expected one of {', '.join(SCHEMAS)}")
        if self.kind not in LABEL_KINDS:
            raise ConfigurationError(f"unknown label kind {self.kind!r}")
        dtype = float if self.kind == "regression" else np.int64
        self.labels = np.asarray(self.labels, dtype=dtype).reshape(-1)
        if not len(self.entity1) == len(self.entity2) == len(self.labels):
            raise DataError("entity and label columns differ in length")

    def __len__(self):
        return len(self.labels)

    def pairs(self):
        return list(zip(self.entity1, self.entity2))

    def subset(self, indices):
        idx = [int(i) for i in indices]
        return InteractionDataset(self.task, self.kind, [self.entity1[i] for i in idx],
                                  [self.entity2[i] for i in idx], self.labels[idx],
                                  self.num_classes, [], self.source)

    def concat(self, other):
        if (other.task, other.kind) != (self.task, self.kind):
            raise DataError("cannot concatenate datasets of different task or label kind")
        k = None
        if self.kind == "multiclass":
            k = max(self.num_classes or 0, other.num_classes or 0)
        return InteractionDataset(self.task, self.kind, self.entity1 + other.entity1,
                                  self.entity2 + other.entity2,
                                  np.concatenate([self.labels, other.labels]), k, [], self.source)

    def keys(self):
        """Hashable identity of each row's entity pair."""
        return [(_key(a), _key(b)) for a, b in zip(self.entity1, self.entity2)]

    def write_rejects(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["line", "reason", "row"])
            for r in self.rejects:
                w.writerow([r.line, r.reason, "|".join(f"{k}={v}" for k, v in r.row.items())])

    def to_csv(self, path):
        cols = SCHEMAS[self.task]["columns"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([*cols, LABEL_COLUMN])
            for a, b, y in zip(self.entity1, self.entity2, self.labels):
                w.writerow([str(a), str(b), y.item()])


def _key(entity):
    return getattr(entity, "key", entity)


# ---------------------------------------------------------------- loading

def sniff_delimiter(header):
    try:
        return csv.Sniffer().sniff(header, delimiters=",\t").delimiter
    except csv.Error:
        return "\t" if "\t" in header else ","


def _parse_label(raw):
    text = raw.strip()
    if not text:
        raise ValueError("empty label")
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite label {text!r}")
    return value


def _resolve_structure(structures_dir, pdb_id):
    if not pdb_id or structures_dir is None:
        return None
    base = Path(structures_dir)
    for name in (pdb_id, pdb_id.lower(), pdb_id.upper()):
        for suffix in (".pdb", ".ent", ""):
            cand = base / f"{name}{suffix}"
            if cand.is_file():
                return str(cand)
    log.warning("no structure file for pdb_id %s in %s", pdb_id, structures_dir)
    return None


def _check_entity(kind, raw):
    if kind == "drug":
        parse_smiles(raw)
        return raw
    return normalize_sequence(raw)


def load_dataset(task, path, kind="binary", structures_dir=None, num_classes=None):
    """Load one CSV/TSV file into an :class:`InteractionDataset`."""
    if task not in SCHEMAS:
        raise ConfigurationError(f"unknown task {task!r}; expected one of {', '.join(SCHEMAS)}")
    if kind not in LABEL_KINDS:
        raise ConfigurationError(f"unknown label kind {kind!r}")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    schema = SCHEMAS[task]
    with open(path, newline="", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise SchemaError(f"{path}: empty file or missing header")
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=sniff_delimiter(header))
        fields = {(f or "").strip().lower(): f for f in reader.fieldnames or []}
        missing = [c for c in (*schema["columns"], LABEL_COLUMN) if c not in fields]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}; found {', '.join(fields) or 'none'}")
        rows = list(enumerate(reader, start=2))

    e1, e2, ys, rejects = [], [], [], []
    kinds = schema["entities"]
    for line, row in rows:
        rec = {c: (row.get(fields[c]) or "").strip() for c in fields if c}
        try:
            ents = []
            for col, ekind in zip(schema["columns"], kinds):
                raw = rec[col]
                if not raw:
                    raise DataError(f"empty {col}")
                ents.append(_check_entity(ekind, raw))
            for col, slot in schema["optional"].items():
                if col in rec:
                    ents[slot] = ProteinRecord(ents[slot], _resolve_structure(structures_dir, rec[col]))
            ents = [ProteinRecord(e) if ek == "protein" and isinstance(e, str) else e
                    for e, ek in zip(ents, kinds)]
            y = _parse_label(rec[LABEL_COLUMN])
        except (DataError, ValueError) as exc:
            rejects.append(Reject(line, str(exc), rec))
            continue
        e1.append(ents[0])
        e2.append(ents[1])
        ys.append(y)

    labels = np.asarray(ys, dtype=float)
    if kind == "binary" and labels.size and not np.all((labels == 0) | (labels == 1)):
        bad = labels[(labels != 0) & (labels != 1)][:3]
        raise SchemaError(f"{path}: binary task but labels include {', '.join(map(str, bad))}; "
                          "use kind='regression' for real-valued affinities")
    if kind == "multiclass" and labels.size:
        if not np.all((labels == np.round(labels)) & (labels >= 0)):
            raise SchemaError(f"{path}: multiclass labels must be non-negative integers")
        top = int(labels.max()) + 1
        if num_classes is not None and top > num_classes:
            raise SchemaError(f"{path}: label {top - 1} outside [0, {num_classes})")
        num_classes = num_classes or top
    if rejects:
        log.warning("%s: %d malformed row(s) rejected", path, len(rejects))
    return InteractionDataset(task, kind, e1, e2, labels, num_classes if kind == "multiclass" else None,
                              rejects, str(path))


def _find_split(directory, name):
    for alias in _SPLIT_ALIASES[name]:
        for suffix in _SUFFIXES:
            cand = directory / f"{alias}{suffix}"
            if cand.is_file():
                return cand
    return None


def load_task(task, path, kind="binary", structures_dir=None, num_classes=None):
    """A file gives one dataset; a directory with train/valid/test files gives three.

    A directory holding a single data file is loaded as that one file.
    """
    path = Path(path)
    if path.is_file():
        return load_dataset(task, path, kind, structures_dir, num_classes)
    if not path.is_dir():
        raise DataError(f"dataset path not found: {path}")
    found = {n: _find_split(path, n) for n in SPLIT_NAMES}
    if all(found.values()):
        parts = [load_dataset(task, found[n], kind, structures_dir, num_classes) for n in SPLIT_NAMES]
        if kind == "multiclass":
            k = max(p.num_classes for p in parts)
            for p in parts:
                p.num_classes = k
        return tuple(parts)
    if any(found.values()):
        missing = [n for n, p in found.items() if p is None]
        raise SchemaError(f"{path}: split file(s) missing: {', '.join(missing)}")
    files = sorted(p for p in path.iterdir() if p.suffix in _SUFFIXES)
    if len(files) != 1:
        raise SchemaError(f"{path}: expected train/valid/test files or a single data file, found {len(files)}")
    return load_dataset(task, files[0], kind, structures_dir, num_classes)


def load_dti(path, kind="binary", structures_dir=None, num_classes=None):
    return load_task("dti", path, kind, structures_dir, num_classes)


def load_ddi(path, kind="binary", num_classes=None):
    return load_task("ddi", path, kind, None, num_classes)


def load_ppi(path, kind="binary", structures_dir=None, num_classes=None):
    return load_task("ppi", path, kind, structures_dir, num_classes)


# ---------------------------------------------------------------- splits

def largest_remainder(n, fractions):
    """Integer part sizes proportional to ``fractions`` summing exactly to ``n``."""
    f = np.asarray(fractions, dtype=float)
    if f.ndim != 1 or f.size == 0 or np.any(f < 0) or f.sum() <= 0:
        raise ConfigurationError(f"invalid split fractions {fractions}")
    quotas = n * f / f.sum()
    sizes = np.floor(quotas + 1e-9).astype(int)
    rem = quotas - sizes
    order = sorted(range(len(f)), key=lambda i: (-rem[i], i))
    for i in order[: n - int(sizes.sum())]:
        sizes[i] += 1
    return sizes.tolist()


def _cut(perm, sizes):
    bounds = np.cumsum([0, *sizes])
    return [np.sort(perm[bounds[i]:bounds[i + 1]]) for i in range(len(sizes))]


def split_indices(n, fractions=(0.7, 0.2, 0.1), seed=0):
    perm = np.random.default_rng(seed).permutation(n)
    return _cut(perm, largest_remainder(n, fractions))


def split_random(dataset, fractions=(0.7, 0.2, 0.1), seed=0):
    """Disjoint random train/valid/test partition with exact rounded sizes."""
    return tuple(dataset.subset(idx) for idx in split_indices(len(dataset), fractions, seed))


def stratified_indices(classes, fractions=(0.6, 0.2, 0.2), seed=0):
    classes = np.asarray(classes)
    rng = np.random.default_rng(seed)
    parts = [[] for _ in fractions]
    for c in np.unique(classes):
        members = rng.permutation(np.flatnonzero(classes == c))
        if members.size == 1:
            warnings.warn(f"class {c!r} has a single sample; assigned to the first part", stacklevel=3)
            parts[0].extend(members.tolist())
            continue
        for part, chunk in zip(parts, _cut(members, largest_remainder(members.size, fractions))):
            part.extend(chunk.tolist())
    return [np.sort(np.asarray(p, dtype=int)) for p in parts]


def split_stratified(dataset, fractions=(0.6, 0.2, 0.2), seed=0, folds=3, by=None):
    """``folds`` independent class-stratified partitions.

    Every class is split on its own with largest-remainder rounding, so each
    part holds each class within one sample of its proportional share.
    ``by`` overrides the stratification key (defaults to the labels).
    """
    if folds < 1:
        raise ConfigurationError("folds must be >= 1")
    classes = dataset.labels if by is None else np.asarray(by)
    if len(classes) != len(dataset):
        raise DataError("stratification key length differs from dataset")
    out = []
    for f in range(folds):
        idx = stratified_indices(classes, fractions, seed=[seed, f])
        out.append(tuple(dataset.subset(i) for i in idx))
    return out


def kfold_indices(n, k=5, seed=0):
    if k < 2:
        raise ConfigurationError("k must be >= 2")
    if k > n:
        raise DataError(f"cannot make {k} folds from {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    tests = [np.sort(t) for t in np.array_split(perm, k)]
    return [(np.setdiff1d(np.arange(n), t), t) for t in tests]


def kfold(dataset, k=5, seed=0):
    """``k`` (train, test) pairs; every row is in exactly one test fold."""
    return [(dataset.subset(tr), dataset.subset(te)) for tr, te in kfold_indices(len(dataset), k, seed)]


# ---------------------------------------------------------------- negatives

def _unique(entities):
    seen = {}
    for e in entities:
        seen.setdefault(_key(e), e)
    return list(seen.values())


def sample_negatives(dataset, ratio=1.0, seed=0):
    """Append ``round(ratio * n_pos)`` unseen pairs labelled 0.

    DTI and PPI draw uniformly without replacement from the column-wise
    product of observed entities minus the positive pairs (for PPI a pair is
    seen in either order). DDI corrupts one endpoint of each positive in turn.
    """
    if dataset.kind != "binary":
        raise DataError("negative sampling needs a binary dataset")
    if len(dataset) == 0:
        raise DataError("no positive pairs to sample against")
    if not np.all(dataset.labels == 1):
        raise DataError("negative sampling expects a positive-only dataset")
    if ratio <= 0:
        raise ConfigurationError("ratio must be positive")
    need = int(round(ratio * len(dataset)))
    rng = np.random.default_rng(seed)
    if dataset.task == "ddi":
        neg1, neg2 = _corrupt_pairs(dataset, need, rng)
    else:
        neg1, neg2 = _product_negatives(dataset, need, rng)
    negatives = InteractionDataset(dataset.task, "binary", neg1, neg2, np.zeros(need, dtype=int))
    out = dataset.concat(negatives)
    out.source = dataset.source
    return out


def _product_negatives(dataset, need, rng):
    u1, u2 = _unique(dataset.entity1), _unique(dataset.entity2)
    k1 = {_key(e): i for i, e in enumerate(u1)}
    k2 = {_key(e): i for i, e in enumerate(u2)}
    n2 = len(u2)
    pos = {k1[_key(a)] * n2 + k2[_key(b)] for a, b in zip(dataset.entity1, dataset.entity2)}
    if dataset.task in SYMMETRIC_TASKS:
        # the reversed orientation of a positive is also seen
        for a, b in zip(dataset.entity1, dataset.entity2):
            ka, kb = _key(a), _key(b)
            if kb in k1 and ka in k2:
                pos.add(k1[kb] * n2 + k2[ka])
    total = len(u1) * n2
    unseen = total - len(pos)
    if need > unseen:
        raise InsufficientUniverse(f"requested {need} negatives but only {unseen} unseen pairs exist")
    if total <= 2_000_000:
        candidates = np.setdiff1d(np.arange(total), np.fromiter(pos, dtype=np.int64, count=len(pos)))
        codes = rng.choice(candidates, size=need, replace=False)
    else:
        chosen = []
        taken = set(pos)
        while len(chosen) < need:
            c = int(rng.integers(total))
            if c not in taken:
                taken.add(c)
                chosen.append(c)
        codes = np.asarray(chosen)
    return [u1[c // n2] for c in codes], [u2[c % n2] for c in codes]


def _corrupt_pairs(dataset, need, rng):
    pool = _unique(dataset.entity1 + dataset.entity2)
    keys = [_key(e) for e in pool]
    seen = {frozenset((_key(a), _key(b))) for a, b in zip(dataset.entity1, dataset.entity2)}
    order = rng.permutation(len(dataset))
    neg1, neg2 = [], []
    for step in range(need):
        i = order[step % len(order)]
        pair = [dataset.entity1[i], dataset.entity2[i]]
        sides = [0, 1] if rng.random() < 0.5 else [1, 0]
        for side in sides:
            keep = _key(pair[1 - side])
            options = [j for j, k in enumerate(keys) if k != keep and frozenset((keep, k)) not in seen]
            if options:
                j = options[int(rng.integers(len(options)))]
                pair[side] = pool[j]
                seen.add(frozenset((keep, keys[j])))
                break
        else:
            raise InsufficientUniverse(f"no unseen partner left for positive row {i}")
        neg1.append(pair[0])
        neg2.append(pair[1])
    return neg1, neg2
