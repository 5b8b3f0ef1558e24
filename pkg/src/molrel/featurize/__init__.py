"""Featurizer registry: string id -> (function, entity type, output kind, dim).

Output kinds:

* ``vector``: 1-D float array of fixed ``dim``
* ``grid``: ``(rows, max_len)`` one-hot matrix
* ``tokens``: :class:`TokenSequence`
* ``graph``: :class:`EntityGraph` with node width ``dim``
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .. import adapters
from ..errors import ConfigurationError, DimensionMismatch, ShapeError
from ..molparse import ProteinRecord, parse_smiles
from ..molparse.pdb import extract_pocket, embed_conformer, read_pdb
from . import drug, protein
from .types import TokenSequence

__all__ = ["Featurizer", "FEATURIZERS", "get_featurizer", "featurize", "TokenSequence",
           "load_structure", "DIMENSIONS"]


@dataclass(frozen=True)
class Featurizer:
    id: str
    entity: str  # "drug" | "protein"
    kind: str
    fn: Callable
    dim: Optional[int] = None
    rows: Optional[int] = None  # grid height
    vocab_size: Optional[int] = None
    needs_structure: bool = False

    def output_dim(self, params=None):
        params = params or {}
        if self.kind == "graph":
            return self.dim + int(params.get("embedding_width", 0) or 0)
        if self.kind == "vector" and self.dim is None:
            return int(params["width"])
        if self.kind == "vector" and params.get("dim"):
            return int(params["dim"])
        return self.dim

    def __call__(self, entity, **params):
        out = self.fn(entity, **params)
        if self.kind == "vector":
            out = np.asarray(out, dtype=np.float32)
            want = self.output_dim(params)
            if out.shape != (want,):
                raise DimensionMismatch(f"{self.id} produced shape {out.shape}, expected ({want},)")
        return out


def load_structure(record):
    if not isinstance(record, ProteinRecord):
        raise ShapeError(f"structure featurizers need a ProteinRecord, got {type(record).__name__}")
    if record.structure is not None:
        return record.structure
    if record.structure_path is None:
        from ..errors import DataError
        raise DataError(f"no structure file for protein {record.sequence[:20]}...")
    return read_pdb(record.structure_path)


def _residue_graph(record, embedding=None, embedding_width=None, cutoff=8.0):
    return protein.residue_graph_features(load_structure(record), esm_adapter=embedding,
                                          width=embedding_width, cutoff=cutoff)


def _pocket_graph(record, pocket_adapter=None, radius=15.0, cutoff=8.0):
    pocket = extract_pocket(load_structure(record), adapter=pocket_adapter, radius=radius)
    return protein.residue_graph_features(pocket, cutoff=cutoff)


def _conformer_graph(smiles, conformer="rdkit", seed=0):
    graph = embed_conformer(parse_smiles(smiles), adapter=conformer, seed=seed)
    return drug.atom_graph_features(graph)


def _pretrained(entity, model, width):
    fn = adapters.get("pretrained", model)
    text = entity.sequence if isinstance(entity, ProteinRecord) else entity
    out = np.asarray(fn(text), dtype=np.float32)
    if out.ndim == 2 and out.shape[0] == 1:
        out = out[0]
    if out.ndim != 1:
        raise ShapeError(f"pretrained adapter {model!r} returned shape {out.shape}, expected (width,)")
    if out.shape[0] != int(width):
        raise ShapeError(f"pretrained adapter {model!r} returned width {out.shape[0]}, declared {width}")
    return out


def _seq(entity):
    return entity.sequence if isinstance(entity, ProteinRecord) else entity


_ONEHOT_ROWS_DRUG = drug.SMILES_ROWS

FEATURIZERS = {f.id: f for f in [
    # drug
    Featurizer("morgan", "drug", "vector", drug.morgan_fp, drug.MORGAN_DIM),
    Featurizer("daylight", "drug", "vector", drug.daylight_fp, drug.DAYLIGHT_DIM),
    Featurizer("erg", "drug", "vector", drug.erg_fp, drug.ERG_DIM),
    Featurizer("pubchem", "drug", "vector", drug.pubchem_fp, drug.PUBCHEM_DIM),
    Featurizer("espf_drug", "drug", "vector", drug.espf_drug, drug.ESPF_DRUG_DIM),
    Featurizer("smiles_onehot", "drug", "grid", drug.smiles_onehot, rows=_ONEHOT_ROWS_DRUG),
    Featurizer("espf_tokens_drug", "drug", "tokens", drug.espf_tokens_drug,
               vocab_size=drug.ESPF_DRUG_DIM + 2),
    Featurizer("atom_graph", "drug", "graph", drug.atom_graph_features, drug.ATOM_FEATURE_DIM),
    Featurizer("atom_graph_3d", "drug", "graph", _conformer_graph, drug.ATOM_FEATURE_DIM),
    Featurizer("pretrained_drug", "drug", "vector", _pretrained),
    # protein sequence
    Featurizer("aac", "protein", "vector", lambda e: protein.aac_kmer(_seq(e)), protein.AAC_DIM),
    Featurizer("espf_protein", "protein", "vector", lambda e: protein.espf_protein(_seq(e)),
               protein.ESPF_PROTEIN_DIM),
    Featurizer("pseudo_aac", "protein", "vector", lambda e: protein.pseudo_aac(_seq(e)),
               protein.PSEAAC_DIM),
    Featurizer("quasi_seq", "protein", "vector", lambda e: protein.quasi_seq_order(_seq(e)),
               protein.QSO_DIM),
    Featurizer("conjoint_triad", "protein", "vector", lambda e: protein.conjoint_triad(_seq(e)),
               protein.CONJOINT_DIM),
    Featurizer("autocorrelation", "protein", "vector", lambda e: protein.autocorrelation(_seq(e)),
               protein.AUTOCORR_DIM),
    Featurizer("ctd", "protein", "vector", lambda e: protein.ctd(_seq(e)), protein.CTD_DIM),
    Featurizer("seq_onehot", "protein", "grid", lambda e, max_len=protein.SEQ_ONEHOT_MAX_LEN:
               protein.seq_onehot(_seq(e), max_len), rows=protein.SEQ_ONEHOT_ROWS),
    Featurizer("espf_tokens_protein", "protein", "tokens",
               lambda e, max_len=protein.ESPF_PROTEIN_MAX_LEN: protein.espf_tokens_protein(_seq(e), max_len),
               vocab_size=protein.ESPF_PROTEIN_DIM + 2),
    Featurizer("pretrained_protein", "protein", "vector", _pretrained),
    # protein structure
    Featurizer("residue_graph", "protein", "graph", _residue_graph, protein.RESIDUE_ONEHOT_DIM,
               needs_structure=True),
    Featurizer("pocket_graph", "protein", "graph", _pocket_graph, protein.RESIDUE_ONEHOT_DIM,
               needs_structure=True),
]}

# fixed widths the registry guarantees
DIMENSIONS = {k: f.dim for k, f in FEATURIZERS.items() if f.kind == "vector" and f.dim}


def get_featurizer(fid):
    try:
        return FEATURIZERS[fid]
    except KeyError:
        raise ConfigurationError(f"unknown featurizer {fid!r}; known: {', '.join(sorted(FEATURIZERS))}") from None


def featurize(fid, entity, **params):
    return get_featurizer(fid)(entity, **params)
