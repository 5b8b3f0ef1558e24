import hashlib

import numpy as np
import pytest
import torch
from torch import nn

from molrel import adapters
from molrel.dataio import InteractionDataset
from molrel.molparse import ProteinRecord, parse_pdb

import acceptance_log

AA = "ACDEFGHIKLMNPQRSTVWY"
THREE = {"A": "ALA", "C": "CYS", "D": "ASP", "E": "GLU", "F": "PHE", "G": "GLY", "H": "HIS", "I": "ILE",
         "K": "LYS", "L": "LEU", "M": "MET", "N": "ASN", "P": "PRO", "Q": "GLN", "R": "ARG", "S": "SER",
         "T": "THR", "V": "VAL", "W": "TRP", "Y": "TYR"}


def _seeded(text, salt):
    return np.random.default_rng(int.from_bytes(hashlib.sha256(f"{salt}:{text}".encode()).digest()[:8], "little"))


def stub_bits(n):
    return lambda smiles: (_seeded(smiles, n).random(n) < 0.3).astype(float)


def stub_pretrained(width):
    return lambda text: _seeded(text, width).standard_normal(width)


def stub_residue_embedding(width):
    return lambda seq: _seeded(seq, "res").standard_normal((len(seq), width))


class StubGraphEncoder(nn.Module):
    """Mean-pooled linear map, standing in for SchNet / GVP style encoders."""

    def __init__(self, in_dim, out_dim, **_):
        super().__init__()
        self.lin = nn.Linear(in_dim, out_dim)

    def forward(self, g):
        from molrel.encode import segment_mean
        return self.lin(segment_mean(g.x, g.batch, g.num_graphs))


def _rdkit_available():
    try:
        import rdkit  # noqa: F401
        return True
    except ImportError:
        return False


@pytest.fixture(scope="session", autouse=True)
def stub_adapters():
    """Deterministic stand-ins for externally provided fingerprints and embeddings."""
    adapters.register("fingerprint", "pubchem", stub_bits(881))
    if not _rdkit_available():
        adapters.register("fingerprint", "erg", lambda s: _seeded(s, "erg").random(315))
    for name, width in (("chemberta", 768), ("esm", 1280), ("prottrans-t5", 1024),
                        ("prottrans-bert", 1024), ("prottrans-albert", 4096)):
        adapters.register("pretrained", name, stub_pretrained(width))
    adapters.register("residue_embedding", "esm", stub_residue_embedding(1280))
    for name in ("schnet", "mgcn", "gvp", "gearnet"):
        adapters.register("encoder", name, StubGraphEncoder)
    yield


def pdb_text(sequence, spacing=3.8, chain="A", seed=0):
    """Synthetic CA-only PDB: residues along a jittered helix."""
    rng = np.random.default_rng(seed)
    lines = []
    for i, aa in enumerate(sequence):
        t = i * 1.7
        x, y, z = 2.3 * np.cos(t), 2.3 * np.sin(t), 1.5 * i
        x, y, z = np.array([x, y, z]) + rng.normal(0, 0.2, 3)
        lines.append(f"ATOM  {i + 1:5d}  CA  {THREE[aa]} {chain}{i + 1:4d}    {x:8.3f}{y:8.3f}{z:8.3f}  1.00  0.00           C")
    lines.append("END")
    return "\n".join(lines) + "\n"


@pytest.fixture
def make_structure():
    def make(sequence, seed=0):
        return parse_pdb(pdb_text(sequence, seed=seed))
    return make


def random_sequence(rng, lo=40, hi=60):
    return "".join(rng.choice(list(AA), size=int(rng.integers(lo, hi + 1))))


DRUGS = ["CCO", "CC(=O)Oc1ccccc1C(=O)O", "c1ccccc1", "CN1C=NC2=C1C(=O)N(C(=O)N2C)C", "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
         "O=C(O)c1ccccc1O", "CCN(CC)CC", "C1CCCCC1", "OC(=O)CCC(=O)O", "Nc1ccccc1"]


def toy_pairs(n=8, seed=0, structured=False):
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(n):
        seq = random_sequence(rng, 45, 60)
        prot = ProteinRecord(seq, structure=parse_pdb(pdb_text(seq, seed=i)) if structured else None)
        pairs.append((DRUGS[i % len(DRUGS)], prot))
    return pairs


def separable_dti(n=50, seed=0):
    """Label 1 pairs: oxygen-rich drugs with K/R-rich proteins; label 0: nitrogen drugs, D/E-rich."""
    rng = np.random.default_rng(seed)
    drugs, prots, labels = [], [], []
    for i in range(n):
        y = i % 2
        k = 2 + i // 2
        drugs.append("CCO" * k if y else "CN" * k)
        motif = "KR" if y else "DE"
        prots.append(ProteinRecord("".join(rng.choice(list(motif)) + rng.choice(list(AA)) for _ in range(30))))
        labels.append(y)
    return InteractionDataset("dti", "binary", drugs, prots, labels)


@pytest.fixture
def pairs():
    return toy_pairs(8)


def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance_log.RESULTS):
        status, text = acceptance_log.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {text}")


torch.set_num_threads(1)
