"""Acceptance criteria 1-10, one test each.

Every test records its outcome through ``acceptance_log.criterion``; the
terminal summary prints one PASS/FAIL line per criterion.
"""
import csv
import random
import time
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

import helpers
import oracles
from acceptance_log import criterion
from conftest import DRUGS, random_sequence, separable_dti, toy_pairs
from molrel.cli import main
from molrel.dataio import InteractionDataset, kfold, sample_negatives, split_random, split_stratified
from molrel.errors import ParseError
from molrel.featurize import get_featurizer, protein
from molrel.metrics import all_metric_names, roc_auc
from molrel.modelspace import enumerate_model_space
from molrel.molparse import MolecularGraph, parse_smiles
from molrel.presets import DDI_ROWS, DTI_ROWS, PPI_ROWS, get_preset, preset_names
from molrel.train import BinaryTrainer, TrainConfig

CORPUS = Path(__file__).parent / "data" / "smiles_corpus.tsv"


def corpus():
    with open(CORPUS, encoding="utf-8") as fh:
        return [(r["smiles"], int(r["n_atoms"]), int(r["n_bonds"])) for r in csv.DictReader(fh, delimiter="\t")]


def test_criterion_01_model_space(capsys):
    with criterion(1, "enumerate 16/22/4 = 71368, brute-force agrees, < 1 s"):
        t0 = time.perf_counter()
        assert main(["enumerate", "--drug", "16", "--protein", "22", "--max", "4"]) == 0
        elapsed = time.perf_counter() - t0
        assert capsys.readouterr().out.strip() == "71368"
        assert elapsed < 1.0, f"{elapsed:.2f} s"
        brute = 0
        for d in range(1, 4):
            for p in range(1, 5 - d):
                brute += sum(1 for _ in combinations(range(16), d)) * sum(1 for _ in combinations(range(22), p))
        assert brute == enumerate_model_space(16, 22, 4) == 71368


def test_criterion_02_dimensions():
    with criterion(2, "featurizer dimensions over 50 molecules / 50 proteins"):
        drugs = [s for s, _, _ in corpus()][:40] + DRUGS
        assert len(drugs) == 50
        rng = np.random.default_rng(2)
        prots = [random_sequence(rng) for _ in range(50)]
        want = {"morgan": 1024, "daylight": 2048, "erg": 315, "pubchem": 881, "espf_drug": 2586,
                "espf_protein": 4114, "aac": 8420, "pseudo_aac": 30, "quasi_seq": 100,
                "conjoint_triad": 343, "autocorrelation": 720, "ctd": 147}
        for name, dim in want.items():
            feat = get_featurizer(name)
            for e in (drugs if feat.entity == "drug" else prots):
                assert feat(e).shape == (dim,), (name, e)


def test_criterion_03_descriptor_oracles():
    with criterion(3, "six descriptors equal brute-force oracles within 1e-9, < 30 s"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(3)
        pairs = [(protein.aac_kmer, oracles.aac), (protein.conjoint_triad, oracles.conjoint_triad),
                 (protein.ctd, oracles.ctd), (protein.quasi_seq_order, oracles.quasi_seq_order),
                 (protein.pseudo_aac, oracles.pseudo_aac), (protein.autocorrelation, oracles.autocorrelation)]
        for _ in range(20):
            seq = random_sequence(rng, 40, 60)
            for fn, ref in pairs:
                got, exp = np.asarray(fn(seq), dtype=float), np.asarray(ref(seq), dtype=float)
                assert got.shape == exp.shape
                assert np.max(np.abs(got - exp)) <= 1e-9, fn.__name__
        assert time.perf_counter() - t0 < 30


def test_criterion_04_metrics():
    with criterion(4, "ROC-AUC equals pairwise oracle, 21 metric names, hand case 0.75"):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(2, 201))
            y = rng.integers(0, 2, n)
            y[:2] = [0, 1]
            s = np.round(rng.random(n), 2)
            assert abs(roc_auc(s, y) - oracles.roc_auc_pairwise(s, y)) <= 1e-9
        assert len(all_metric_names()) == 21
        assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75


def test_criterion_05_gradients():
    with criterion(5, "9 encoders + 7 interactions pass float64 finite differences at 5 points, < 5 min"):
        t0 = time.perf_counter()
        assert len(helpers.ENCODERS) == 9 and len(helpers.INTERACTIONS) == 7
        worst = 0.0
        for seed in range(5):
            for name in helpers.ENCODERS:
                worst = max(worst, helpers.encoder_gradcheck(name, seed))
            for name in helpers.INTERACTIONS:
                worst = max(worst, helpers.interaction_gradcheck(name, seed))
        assert worst <= 1e-5, worst
        assert time.perf_counter() - t0 < 300


def test_criterion_06_presets():
    with criterion(6, "26 presets build; exp-1.12 gives 8 finite scores"):
        table = [*DTI_ROWS, *DDI_ROWS, *PPI_ROWS]
        assert len(table) == 26 and set(table) <= set(preset_names())
        for name in table:
            spec = get_preset(name)
            spec.validate()
            assert spec.build(seed=0).num_parameters() > 0
        scores = get_preset("exp-1.12").build(seed=0).predict(toy_pairs(8))
        assert scores.shape == (8,) and np.all(np.isfinite(scores))


def test_criterion_07_overfit():
    with criterion(7, "CNN+CNN overfits 50 separable pairs (train ROC-AUC >= 0.95), early stop within patience"):
        t0 = time.perf_counter()
        ds = separable_dti(50)
        model = get_preset("exp-1.1").build(seed=0)
        cfg = TrainConfig(epochs=200, batch_size=16, learning_rate=1e-3, patience=10, seed=0)
        trainer = BinaryTrainer(cfg)
        res = trainer.fit(model, ds, ds)
        auc = trainer.evaluate(model, ds, ["roc_auc"])["roc_auc"]
        assert auc >= 0.95, auc
        assert res.epochs_run <= 200 and res.epochs_run - res.best_epoch <= cfg.patience
        # a held-out validation set exercises the stopping rule on a metric that plateaus
        held = separable_dti(20, seed=1)
        res = BinaryTrainer(cfg).fit(get_preset("exp-1.1").build(seed=1), ds, held)
        assert res.epochs_run - res.best_epoch <= cfg.patience
        assert res.stopped_early or res.epochs_run == 200
        assert time.perf_counter() - t0 < 300


def test_criterion_08_splits():
    with criterion(8, "7:2:1 sizes, stratified within +-1 per class over 3 folds, 5-fold coverage, disjoint negatives"):
        n = 1000
        ds = InteractionDataset("dti", "binary", [f"d{i}" for i in range(n)], [f"p{i}" for i in range(n)],
                                np.zeros(n, dtype=int))
        assert [len(p) for p in split_random(ds, seed=0)] == [700, 200, 100]

        rng = np.random.default_rng(8)
        labels = rng.integers(0, 86, 3000)
        labels[:86] = np.arange(86)
        mc = InteractionDataset("ddi", "multiclass", list(range(3000)), list(range(3000)), labels, 86)
        fr = (0.6, 0.2, 0.2)
        folds = split_stratified(mc, fr, seed=0, folds=3)
        assert len(folds) == 3
        for parts in folds:
            for c in range(86):
                total = int(np.sum(labels == c))
                for part, f in zip(parts, fr):
                    assert abs(int(np.sum(part.labels == c)) - f * total) <= 1

        seen = []
        for train, test in kfold(ds, k=5, seed=0):
            assert not set(train.entity1) & set(test.entity1)
            seen += test.entity1
        assert sorted(seen) == sorted(ds.entity1)

        drugs = [f"C{'C' * i}O" for i in range(12)]
        prots = [random_sequence(rng, 20, 30) for _ in range(12)]
        pos = InteractionDataset("dti", "binary", drugs, prots, np.ones(12, dtype=int))
        out = sample_negatives(pos, ratio=1.0, seed=0)
        keys = out.keys()
        assert not set(keys[:12]) & set(keys[12:])
        assert int(np.sum(out.labels == 0)) == int(np.sum(out.labels == 1)) == 12


def test_criterion_09_determinism(tmp_path):
    with criterion(9, "two same-seed runs write identical metrics.json"):
        path = helpers.write_experiment(tmp_path, n=40, model="exp-1.1")
        texts = []
        for run in ("a", "b"):
            assert main(["run", str(path), "--output-dir", str(tmp_path / run), "--epochs", "3"]) == 0
            texts.append((tmp_path / run / "repeat-0" / "metrics.json").read_text())
        assert texts[0] == texts[1]


FUZZ_ALPHABET = list("CNOSPFIcnos()[]=#@+-0123456789%.H/\\:") + ["Cl", "Br", "[nH]", "[O-]", "[NH4+]"]


def test_criterion_10_parser():
    with criterion(10, "200-molecule corpus counts match reference, 1000 fuzz strings never crash"):
        rows = corpus()
        assert len(rows) == 200
        try:
            from rdkit import Chem
        except ImportError:  # fall back to the counts recorded from the toolkit
            Chem = None
        for smi, n_atoms, n_bonds in rows:
            if Chem is not None:
                mol = Chem.MolFromSmiles(smi)
                n_atoms, n_bonds = mol.GetNumAtoms(), mol.GetNumBonds()
            g = parse_smiles(smi)
            assert (g.num_atoms, g.num_bonds) == (n_atoms, n_bonds), smi

        rng = random.Random(10)
        outcomes = {"graph": 0, "error": 0}
        for _ in range(1000):
            text = "".join(rng.choice(FUZZ_ALPHABET) for _ in range(rng.randint(0, 25)))
            try:
                g = parse_smiles(text)
            except ParseError as err:
                assert err.position is not None and 0 <= err.position <= len(text), text
                outcomes["error"] += 1
            else:
                assert isinstance(g, MolecularGraph)
                outcomes["graph"] += 1
        assert sum(outcomes.values()) == 1000
