"""Drug featurizers: fingerprints, subword vectors, one-hot grids and atom graphs.

Functions accept either a SMILES string or a parsed :class:`MolecularGraph`
where that makes sense; fingerprints are returned as float32 0/1 arrays.
"""
import hashlib
import string

import numpy as np

from .. import adapters
from ..errors import DimensionMismatch
from ..molparse import EntityGraph, MolecularGraph, parse_smiles
from ..molparse.types import undirected_to_directed
from .tables import subword_vocab
from .types import TokenSequence

MORGAN_DIM = 1024
MORGAN_RADIUS = 2
DAYLIGHT_DIM = 2048
DAYLIGHT_MAX_PATH = 7
PUBCHEM_DIM = 881
ERG_DIM = 315
ESPF_DRUG_DIM = 2586
ESPF_DRUG_MAX_LEN = 50
SMILES_MAX_LEN = 100

# 64 characters; anything else lands on the trailing "unknown" row
SMILES_ALPHABET = (string.digits + "#%()+-./=@[\\]:"
                   + "ABCDEFGHIKLMNOPRSTUVWXYZ" + "abcdegilnoprstu" + "*")
SMILES_INDEX = {c: i for i, c in enumerate(SMILES_ALPHABET)}
SMILES_ROWS = len(SMILES_ALPHABET) + 1

ATOM_SYMBOLS = (
    "C", "N", "O", "S", "F", "Si", "P", "Cl", "Br", "Mg", "Na", "Ca", "Fe", "As", "Al",
    "I", "B", "V", "K", "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co", "Se", "Ti", "Zn", "H",
    "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn", "Zr", "Cr", "Pt", "Hg", "Pb",
)
ATOM_FEATURE_BLOCKS = (
    ("element", len(ATOM_SYMBOLS) + 1),
    ("degree", 11),
    ("formal_charge", 5),
    ("aromatic", 1),
    ("in_ring", 1),
    ("implicit_h", 5),
)
ATOM_FEATURE_DIM = sum(w for _, w in ATOM_FEATURE_BLOCKS)
BOND_FEATURE_DIM = 4

_BOND_CODE = {1: 1, 2: 2, 3: 3, "aromatic": 4}
_BOND_CHAR = {1: "-", 2: "=", 3: "#", "aromatic": ":"}


def _graph(mol):
    return mol if isinstance(mol, MolecularGraph) else parse_smiles(mol)


def _smiles(mol):
    if isinstance(mol, MolecularGraph):
        if mol.smiles is None:
            raise ValueError("graph carries no SMILES string")
        return mol.smiles
    return mol.strip()


def hash64(*parts):
    """Stable 64-bit hash (blake2b) of the repr of ``parts``."""
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def morgan_environments(graph, radius=MORGAN_RADIUS):
    """Distinct circular environment identifiers, radius 0..``radius``.

    Radius-0 identifiers hash the atom invariant. Each later round hashes the
    previous identifier with the sorted (bond code, neighbour identifier)
    list. An environment whose bond set was already produced (by an earlier
    round, or by a lower identifier in the same round) is dropped.
    """
    adj = graph.neighbors()
    bond_id = {(min(i, j), max(i, j)): k for k, (i, j, _) in enumerate(graph.bonds)}
    ids = [hash64(0, a.element, a.degree, a.formal_charge, a.implicit_h, a.in_ring)
           for a in graph.atoms]
    envs = set(ids)
    seen = set()
    shells = [frozenset() for _ in graph.atoms]
    for r in range(1, radius + 1):
        new_ids = []
        new_shells = []
        for a, nbrs in enumerate(adj):
            shell = set(shells[a])
            for b, _ in nbrs:
                shell.add(bond_id[(min(a, b), max(a, b))])
                shell |= shells[b]
            new_shells.append(frozenset(shell))
            ctx = sorted((_BOND_CODE[o], ids[b]) for b, o in nbrs)
            new_ids.append(hash64(r, ids[a], tuple(ctx)))
        for a in sorted(range(len(ids)), key=lambda k: new_ids[k]):
            shell = new_shells[a]
            if not shell or shell in seen:
                continue
            seen.add(shell)
            envs.add(new_ids[a])
        ids, shells = new_ids, new_shells
    return envs


def morgan_fp(mol, dim=MORGAN_DIM, radius=MORGAN_RADIUS):
    out = np.zeros(dim, dtype=np.float32)
    for env in morgan_environments(_graph(mol), radius):
        out[env % dim] = 1.0
    return out


def _atom_label(atom):
    return atom.element.lower() if atom.aromatic else atom.element


def daylight_paths(graph, max_bonds=DAYLIGHT_MAX_PATH):
    """Canonical strings of every simple path with 1..``max_bonds`` bonds."""
    adj = graph.neighbors()
    labels = [_atom_label(a) for a in graph.atoms]
    paths = set()

    def walk(path, tokens):
        if len(path) > 1:
            rev = tokens[::-1]
            paths.add(min("".join(tokens), "".join(rev)))
        if len(path) - 1 == max_bonds:
            return
        for nb, order in adj[path[-1]]:
            if nb in path:
                continue
            path.append(nb)
            walk(path, tokens + [_BOND_CHAR[order], labels[nb]])
            path.pop()

    for start in range(graph.num_atoms):
        walk([start], [labels[start]])
    return paths


def daylight_fp(mol, dim=DAYLIGHT_DIM, max_bonds=DAYLIGHT_MAX_PATH):
    out = np.zeros(dim, dtype=np.float32)
    for p in daylight_paths(_graph(mol), max_bonds):
        out[hash64("path", p) % dim] = 1.0
    return out


def _adapter_fp(name, smiles, dim):
    fn = adapters.get("fingerprint", name)
    vals = np.asarray(fn(smiles), dtype=np.float32).ravel()
    if vals.shape[0] != dim:
        raise DimensionMismatch(f"{name} adapter returned {vals.shape[0]} values, expected {dim}")
    return vals


def pubchem_fp(mol):
    return _adapter_fp("pubchem", _smiles(mol), PUBCHEM_DIM)


def erg_fp(mol):
    return _adapter_fp("erg", _smiles(mol), ERG_DIM)


def espf_partition(smiles):
    return subword_vocab("drug").partition(_smiles(smiles))


def espf_drug(mol):
    vocab = subword_vocab("drug")
    out = np.zeros(vocab.size, dtype=np.float32)
    for idx in vocab.encode(_smiles(mol)):
        if idx < vocab.size:
            out[idx] = 1.0
    return out


def espf_tokens_drug(mol, max_len=ESPF_DRUG_MAX_LEN):
    vocab = subword_vocab("drug")
    return TokenSequence.from_ids(vocab.encode(_smiles(mol)), max_len,
                                  vocab.size + 2, vocab.pad_id)


def smiles_onehot(mol, max_len=SMILES_MAX_LEN):
    """``(65, max_len)`` one-hot grid; columns past the string are zero."""
    text = _smiles(mol)[:max_len]
    out = np.zeros((SMILES_ROWS, max_len), dtype=np.float32)
    unk = SMILES_ROWS - 1
    for col, ch in enumerate(text):
        out[SMILES_INDEX.get(ch, unk), col] = 1.0
    return out


def _onehot(value, size, offset=0):
    v = np.zeros(size, dtype=np.float32)
    k = value - offset
    v[min(max(k, 0), size - 1)] = 1.0  # out-of-range values clip to the end slots
    return v


def atom_features(atom):
    elem = np.zeros(len(ATOM_SYMBOLS) + 1, dtype=np.float32)
    try:
        elem[ATOM_SYMBOLS.index(atom.element)] = 1.0
    except ValueError:
        elem[-1] = 1.0
    return np.concatenate([
        elem,
        _onehot(atom.degree, 11),
        _onehot(atom.formal_charge, 5, offset=-2),
        np.array([atom.aromatic, atom.in_ring], dtype=np.float32),
        _onehot(atom.implicit_h, 5),
    ])


def bond_features(order):
    v = np.zeros(BOND_FEATURE_DIM, dtype=np.float32)
    v[_BOND_CODE[order] - 1] = 1.0
    return v


def atom_graph_features(mol):
    """Featured atom graph: node width ``ATOM_FEATURE_DIM``, edge width 4, both edge directions."""
    g = _graph(mol)
    nodes = np.stack([atom_features(a) for a in g.atoms])
    pairs = [(i, j) for i, j, _ in g.bonds]
    feats = [bond_features(o) for _, _, o in g.bonds]
    edges, efeat = undirected_to_directed(pairs, np.array(feats).reshape(-1, BOND_FEATURE_DIM))
    coords = None if g.coords is None else np.asarray(g.coords)
    return EntityGraph(node_features=nodes, edge_list=edges, edge_features=efeat, coords=coords)
