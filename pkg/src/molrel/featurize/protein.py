"""Protein sequence descriptors and residue-graph node features."""
import logging
from itertools import product

import numpy as np

from .. import adapters
from ..errors import DataError, DimensionMismatch, EmptySequence, SequenceTooShort
from ..molparse import EntityGraph, ProteinRecord, ProteinStructure
from .tables import CANONICAL, distance_matrix, property_vector, subword_vocab
from .types import TokenSequence

log = logging.getLogger(__name__)

AAC_DIM = 8420
CONJOINT_DIM = 343
QSO_DIM = 100
PSEAAC_DIM = 30
AUTOCORR_DIM = 720
CTD_DIM = 147
ESPF_PROTEIN_DIM = 4114
ESPF_PROTEIN_MAX_LEN = 545
SEQ_ONEHOT_MAX_LEN = 1000
SEQ_ONEHOT_ROWS = 26
RESIDUE_ONEHOT_DIM = 21

AA_INDEX = {a: i for i, a in enumerate(CANONICAL)}

# closest canonical residue for ambiguous / rare codes
SUBSTITUTIONS = {"B": "D", "Z": "E", "U": "C", "O": "K", "X": "A", "J": "L"}

PSEAAC_PROPERTIES = ("hydrophobicity", "hydrophilicity", "side_chain_mass")
AUTOCORR_PROPERTIES = ("hydrophobicity_ac", "flexibility", "polarizability", "free_energy",
                       "residue_asa", "residue_volume", "steric", "mutability")

# Shen et al. seven classes (dipole and side-chain volume)
CONJOINT_CLASSES = ("AGV", "ILFP", "YMTS", "HNQW", "RK", "DE", "C")
CONJOINT_EPS = 1e-12

# Dubchak-style three-class groupings
CTD_GROUPS = (
    ("hydrophobicity", ("RKEDQN", "GASTPHY", "CLVIMFW")),
    ("vdw_volume", ("GASTPDC", "NVEQIL", "MHKFRYW")),
    ("polarity", ("LIFWCMVY", "PATGS", "HQRKNED")),
    ("polarizability", ("GASDT", "CPNVEQIL", "KMHFRYW")),
    ("charge", ("KR", "ANCQGHILMFPSTWYV", "DE")),
    ("secondary_structure", ("EALMQKRH", "VIYCWFT", "GNPSD")),
    ("solvent_accessibility", ("ALFCGIVW", "RKQEND", "MPSTHY")),
)
CTD_QUANTILES = (0.0, 0.25, 0.5, 0.75, 1.0)


def _raw(seq):
    if isinstance(seq, ProteinRecord):
        return seq.sequence
    if isinstance(seq, ProteinStructure):
        return seq.sequence
    return seq


def normalize_sequence(seq):
    """Strip, uppercase and map non-canonical codes onto the 20 canonical residues."""
    text = "".join(_raw(seq).split()).upper()
    if not text:
        raise EmptySequence("protein sequence is empty")
    bad = sorted(set(text) - set(CANONICAL) - set(SUBSTITUTIONS))
    if bad:
        raise DataError(f"invalid residue codes in sequence: {''.join(bad)}")
    subs = sorted(set(text) & set(SUBSTITUTIONS))
    if subs:
        log.warning("substituting non-canonical residues: %s",
                    ", ".join(f"{c}->{SUBSTITUTIONS[c]}" for c in subs))
        text = "".join(SUBSTITUTIONS.get(c, c) for c in text)
    return text


def _indices(seq):
    return np.array([AA_INDEX[c] for c in seq], dtype=np.int64)


def _require_length(seq, minimum, what):
    if len(seq) < minimum:
        raise SequenceTooShort(f"{what} needs at least {minimum} residues, got {len(seq)}")


def aac_kmer(seq):
    """Normalized 1-, 2- and 3-mer frequencies (20 + 400 + 8000)."""
    s = normalize_sequence(seq)
    idx = _indices(s)
    blocks = []
    for k in (1, 2, 3):
        counts = np.zeros(20 ** k)
        m = len(idx) - k + 1
        if m > 0:
            code = np.zeros(m, dtype=np.int64)
            for off in range(k):
                code = code * 20 + idx[off:off + m]
            np.add.at(counts, code, 1.0)
            counts /= m
        blocks.append(counts)
    return np.concatenate(blocks)


def kmer_names():
    return ["".join(p) for k in (1, 2, 3) for p in product(CANONICAL, repeat=k)]


_CONJOINT_OF = {a: c for c, group in enumerate(CONJOINT_CLASSES) for a in group}


def conjoint_triad(seq):
    """Min-max normalized counts of the 343 overlapping class triads."""
    s = normalize_sequence(seq)
    _require_length(s, 3, "conjoint triad")
    cls = np.array([_CONJOINT_OF[c] for c in s])
    code = cls[:-2] * 49 + cls[1:-1] * 7 + cls[2:]
    counts = np.bincount(code, minlength=343).astype(float)
    lo, hi = counts.min(), counts.max()
    return (counts - lo) / max(hi - lo, CONJOINT_EPS)


def _composition(idx):
    return np.bincount(idx, minlength=20) / len(idx)


def quasi_seq_order(seq, maxlag=30, w=0.1):
    """Quasi-sequence-order descriptor, one 20 + ``maxlag`` block per distance matrix."""
    s = normalize_sequence(seq)
    if len(s) <= maxlag:
        raise SequenceTooShort(f"quasi-sequence-order needs more than {maxlag} residues, got {len(s)}")
    idx = _indices(s)
    comp = _composition(idx)
    out = []
    for name in ("schneider_wrede", "grantham"):
        dist = distance_matrix(name)
        tau = np.array([np.sum(dist[idx[:-d], idx[d:]] ** 2) for d in range(1, maxlag + 1)])
        denom = comp.sum() + w * tau.sum()
        out.append(np.concatenate([comp / denom, w * tau / denom]))
    return np.concatenate(out)


def pseudo_aac(seq, lam=10, w=0.05):
    """Type-1 pseudo amino acid composition (20 + ``lam`` entries summing to 1)."""
    s = normalize_sequence(seq)
    if len(s) <= lam:
        raise SequenceTooShort(f"pseudo-AAC needs more than {lam} residues, got {len(s)}")
    idx = _indices(s)
    props = np.stack([property_vector(p) for p in PSEAAC_PROPERTIES])  # (3, 20)
    vals = props[:, idx]
    theta = np.array([np.mean((vals[:, j:] - vals[:, :-j]) ** 2) for j in range(1, lam + 1)])
    comp = _composition(idx)
    denom = comp.sum() + w * theta.sum()
    return np.concatenate([comp / denom, w * theta / denom])


def autocorrelation(seq, maxlag=30):
    """Moreau-Broto, Moran and Geary blocks, each property-major over lags 1..maxlag."""
    s = normalize_sequence(seq)
    if len(s) <= maxlag:
        raise SequenceTooShort(f"autocorrelation needs more than {maxlag} residues, got {len(s)}")
    idx = _indices(s)
    n = len(idx)
    mb, moran, geary = [], [], []
    for name in AUTOCORR_PROPERTIES:
        p = property_vector(name)[idx]
        dev = p - p.mean()
        ss = np.sum(dev ** 2)
        constant = np.ptp(p) == 0  # ss is rounding noise here, not a variance
        for d in range(1, maxlag + 1):
            mb.append(np.sum(p[:-d] * p[d:]) / (n - d))
            if constant:
                moran.append(0.0)
                geary.append(0.0)
                continue
            moran.append((np.sum(dev[:-d] * dev[d:]) / (n - d)) / (ss / n))
            geary.append(((n - 1) / (2 * (n - d))) * np.sum((p[:-d] - p[d:]) ** 2) / ss)
    return np.array(mb + moran + geary)


def ctd(seq):
    """Composition (21), transition (21) and distribution (105) over 7 groupings."""
    s = normalize_sequence(seq)
    _require_length(s, 2, "CTD")
    n = len(s)
    comp, trans, dist = [], [], []
    for _, classes in CTD_GROUPS:
        lookup = {a: k for k, group in enumerate(classes) for a in group}
        c = np.array([lookup[a] for a in s])
        comp.extend(np.bincount(c, minlength=3) / n)
        a, b = c[:-1], c[1:]
        for x, y in ((0, 1), (0, 2), (1, 2)):
            trans.append(np.sum(((a == x) & (b == y)) | ((a == y) & (b == x))) / (n - 1))
        for k in range(3):
            pos = np.nonzero(c == k)[0] + 1
            if len(pos) == 0:
                dist.extend([0.0] * len(CTD_QUANTILES))
                continue
            for q in CTD_QUANTILES:
                r = max(1, int(np.floor(q * len(pos))))
                dist.append(pos[r - 1] / n)
    return np.array(comp + trans + dist, dtype=float)


def espf_protein(seq):
    vocab = subword_vocab("protein")
    out = np.zeros(vocab.size, dtype=np.float32)
    for idx in vocab.encode(normalize_sequence(seq)):
        if idx < vocab.size:
            out[idx] = 1.0
    return out


def espf_tokens_protein(seq, max_len=ESPF_PROTEIN_MAX_LEN):
    vocab = subword_vocab("protein")
    return TokenSequence.from_ids(vocab.encode(normalize_sequence(seq)), max_len,
                                  vocab.size + 2, vocab.pad_id)


def seq_onehot(seq, max_len=SEQ_ONEHOT_MAX_LEN):
    """``(26, max_len)`` letter one-hot grid (A..Z) of the upper-cased raw sequence."""
    text = "".join(_raw(seq).split()).upper()[:max_len]
    out = np.zeros((SEQ_ONEHOT_ROWS, max_len), dtype=np.float32)
    for col, ch in enumerate(text):
        k = ord(ch) - ord("A")
        if 0 <= k < SEQ_ONEHOT_ROWS:
            out[k, col] = 1.0
    return out


def residue_onehot(sequence):
    """``(n, 21)``: 20 canonical residues plus an "other" column."""
    out = np.zeros((len(sequence), RESIDUE_ONEHOT_DIM), dtype=np.float32)
    for i, c in enumerate(sequence.upper()):
        out[i, AA_INDEX.get(c, RESIDUE_ONEHOT_DIM - 1)] = 1.0
    return out


def residue_graph_features(structure, esm_adapter=None, width=None, cutoff=8.0):
    """Residue contact graph; node features are the residue one-hot, optionally
    followed by per-residue embeddings from a ``residue_embedding`` adapter."""
    from ..molparse.pdb import build_residue_graph
    nodes = residue_onehot(structure.sequence)
    if esm_adapter is not None:
        fn = adapters.get("residue_embedding", esm_adapter) if isinstance(esm_adapter, str) else esm_adapter
        emb = np.asarray(fn(structure.sequence), dtype=np.float32)
        if emb.ndim != 2 or emb.shape[0] != len(nodes):
            raise DimensionMismatch(
                f"residue embedding has shape {emb.shape}, expected ({len(nodes)}, k)")
        if width is not None and emb.shape[1] != width:
            raise DimensionMismatch(f"residue embedding width {emb.shape[1]} != declared {width}")
        nodes = np.concatenate([nodes, emb], axis=1)
    return build_residue_graph(structure, cutoff=cutoff, node_features=nodes)


def empty_graph(width):
    return EntityGraph(node_features=np.zeros((0, width), dtype=np.float32))
