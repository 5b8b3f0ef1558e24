import numpy as np
import pytest

from conftest import DRUGS, pdb_text, random_sequence
from molrel.dataio import (
    InteractionDataset,
    kfold,
    kfold_indices,
    largest_remainder,
    load_dataset,
    load_task,
    sample_negatives,
    split_random,
    split_stratified,
)
from molrel.errors import ConfigurationError, DataError, InsufficientUniverse, SchemaError
from molrel.molparse import ProteinRecord


def write_dti(path, n=10, labels=None, delimiter=",", extra_rows=()):
    rng = np.random.default_rng(0)
    labels = labels if labels is not None else [i % 2 for i in range(n)]
    lines = [delimiter.join(["drug_smiles", "protein_seq", "label"])]
    for i in range(n):
        lines.append(delimiter.join([DRUGS[i % len(DRUGS)], random_sequence(rng, 20, 30), str(labels[i])]))
    lines += list(extra_rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_load_ten_rows(tmp_path):
    for delim, name in ((",", "a.csv"), ("\t", "a.tsv")):
        ds = load_dataset("dti", write_dti(tmp_path / name, delimiter=delim))
        assert len(ds) == 10 and not ds.rejects
        assert isinstance(ds.entity2[0], ProteinRecord) and ds.labels.dtype == np.int64


def test_bad_rows_rejected(tmp_path, caplog):
    path = write_dti(tmp_path / "d.csv", extra_rows=["C(,MKT,1", "CCO,MK1T,0", "CCO,MKT,", ",MKT,1"])
    ds = load_dataset("dti", path)
    assert len(ds) == 10 and [r.line for r in ds.rejects] == [12, 13, 14, 15]
    ds.write_rejects(tmp_path / "rejects.csv")
    assert (tmp_path / "rejects.csv").read_text().count("\n") == 5
    assert "rejected" in caplog.text


def test_schema_errors(tmp_path):
    p = tmp_path / "nolabel.csv"
    p.write_text("drug_smiles,protein_seq\nCCO,MKT\n")
    with pytest.raises(SchemaError, match="label"):
        load_dataset("dti", p)
    kd = write_dti(tmp_path / "kd.csv", n=3, labels=[5.3, 7.1, 0])
    with pytest.raises(SchemaError):
        load_dataset("dti", kd)
    assert load_dataset("dti", kd, kind="regression").labels.tolist() == [5.3, 7.1, 0.0]
    with pytest.raises(DataError):
        load_dataset("dti", tmp_path / "missing.csv")
    with pytest.raises(SchemaError):
        load_dataset("dti", write_dti(tmp_path / "mc.csv", n=3, labels=[0, 1, 1.5]), kind="multiclass")


def test_ppi_structures_and_split_dir(tmp_path):
    (tmp_path / "pdb").mkdir()
    (tmp_path / "pdb" / "1abc.pdb").write_text(pdb_text("ACDEF"))
    body = "protein1_seq,protein2_seq,protein1_pdb_id,protein2_pdb_id,label\nACDEF,GHIKL,1ABC,,1\n"
    d = tmp_path / "splits"
    d.mkdir()
    for name in ("train.csv", "val.csv", "test.csv"):
        (d / name).write_text(body)
    train, valid, test = load_task("ppi", d, structures_dir=tmp_path / "pdb")
    assert train.entity1[0].structure_path.endswith("1abc.pdb") and train.entity2[0].structure_path is None
    (d / "test.csv").unlink()
    with pytest.raises(SchemaError):
        load_task("ppi", d)


def _dummy(n, labels=None, task="dti"):
    labels = np.zeros(n, dtype=int) if labels is None else labels
    return InteractionDataset(task, "binary" if set(np.unique(labels)) <= {0, 1} else "multiclass",
                              [f"C{i}" for i in range(n)], [f"P{i}" for i in range(n)], labels)


def test_random_split_sizes():
    ds = _dummy(1000)
    parts = split_random(ds, seed=1)
    assert [len(p) for p in parts] == [700, 200, 100]
    names = [set(p.entity1) for p in parts]
    assert not (names[0] & names[1] or names[0] & names[2] or names[1] & names[2])
    assert set().union(*names) == set(ds.entity1)
    assert largest_remainder(10, (1, 1, 1)) == [4, 3, 3]
    with pytest.raises(ConfigurationError):
        largest_remainder(10, (-1, 2))


def test_stratified_split_balance():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 86, 3000)
    labels[:86] = np.arange(86)  # every class present
    ds = InteractionDataset("ddi", "multiclass", list(range(3000)), list(range(3000)), labels, 86)
    fr = (0.6, 0.2, 0.2)
    folds = split_stratified(ds, fr, seed=0, folds=3)
    assert len(folds) == 3
    for parts in folds:
        assert sum(len(p) for p in parts) == 3000
        for c in range(86):
            total = int(np.sum(labels == c))
            for part, f in zip(parts, fr):
                assert abs(int(np.sum(part.labels == c)) - f * total) <= 1
    assert folds[0][0].entity1 != folds[1][0].entity1


def test_stratified_singleton_warns():
    ds = _dummy(7, labels=np.array([0, 0, 0, 1, 1, 1, 2]))
    with pytest.warns(UserWarning, match="single sample"):
        (train, valid, test), = split_stratified(ds, folds=1)
    assert "C6" in train.entity1 and "C6" not in valid.entity1 + test.entity1


def test_kfold():
    ds = _dummy(23)
    folds = kfold(ds, k=5, seed=3)
    tests = [set(te.entity1) for _, te in folds]
    assert sum(len(t) for t in tests) == 23 and set().union(*tests) == set(ds.entity1)
    for tr, te in folds:
        assert not set(tr.entity1) & set(te.entity1) and len(tr) + len(te) == 23
    with pytest.raises(DataError):
        kfold_indices(3, k=5)
    with pytest.raises(ConfigurationError):
        kfold_indices(10, k=1)


def test_negative_sampling_small_universe():
    drugs = ["CCO", "CCN", "CCC"]
    prots = [ProteinRecord(s) for s in ("MKT", "MKV", "MKW")]
    pos = [(0, 0), (1, 1), (2, 2), (0, 1)]
    ds = InteractionDataset("dti", "binary", [drugs[i] for i, _ in pos], [prots[j] for _, j in pos], [1] * 4)
    out = sample_negatives(ds, ratio=1.0, seed=0)
    assert len(out) == 8 and out.labels.tolist() == [1] * 4 + [0] * 4
    keys = out.keys()
    assert not set(keys[:4]) & set(keys[4:]) and len(set(keys[4:])) == 4
    assert len(sample_negatives(ds, ratio=1.25).labels) == 9  # the whole unseen universe (5)
    with pytest.raises(InsufficientUniverse):
        sample_negatives(ds, ratio=1.5)


def test_negative_sampling_symmetric_tasks():
    seqs = ["MKT", "MKV", "MKW", "MKY"]
    ds = InteractionDataset("ppi", "binary", [ProteinRecord(seqs[i]) for i in (0, 1, 2)],
                            [ProteinRecord(seqs[i]) for i in (1, 2, 3)], [1, 1, 1])
    out = sample_negatives(ds, seed=2)
    seen = {frozenset(k) for k in ds.keys()}
    assert all(frozenset(k) not in seen for k in out.keys()[3:])
    drugs = [DRUGS[i] for i in range(6)]
    ddi = InteractionDataset("ddi", "binary", drugs[:3], drugs[3:], [1, 1, 1])
    out = sample_negatives(ddi, ratio=2, seed=1)
    pairs = [frozenset(k) for k in out.keys()]
    assert len(out) == 9 and len(set(pairs)) == 9 and all(len(p) == 2 for p in pairs)


def test_negative_sampling_preconditions():
    with pytest.raises(DataError):
        sample_negatives(_dummy(3, labels=np.array([1, 0, 1])))
