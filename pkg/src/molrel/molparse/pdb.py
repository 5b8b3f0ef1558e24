"""Protein structures from PDB text, residue contact graphs, pockets, conformers."""
import logging

import numpy as np

from .. import adapters
from ..errors import EmptyPocket, ParseError
from .types import EntityGraph, ProteinStructure, Residue, undirected_to_directed

log = logging.getLogger(__name__)

THREE_TO_ONE = {
    "ALA": "A", "ARG": "R", "ASN": "N", "ASP": "D", "CYS": "C", "GLN": "Q", "GLU": "E",
    "GLY": "G", "HIS": "H", "ILE": "I", "LEU": "L", "LYS": "K", "MET": "M", "PHE": "F",
    "PRO": "P", "SER": "S", "THR": "T", "TRP": "W", "TYR": "Y", "VAL": "V",
}

DEFAULT_CUTOFF = 8.0
DEFAULT_POCKET_RADIUS = 15.0


def parse_pdb(content):
    """Read CA atoms from the ``ATOM`` records of the first model.

    One residue per (chain, residue number, insertion code). Alternate
    locations of the CA are resolved by highest occupancy, ties going to the
    first one seen. Residues with no CA are dropped and reported in
    ``structure.warnings``.
    """
    if not content or not content.strip():
        raise ParseError("empty PDB content", 0)
    order = []
    names = {}
    cas = {}
    for lineno, line in enumerate(content.splitlines()):
        rec = line[:6]
        if rec.startswith("ENDMDL"):
            break
        if not rec.startswith("ATOM"):
            continue
        if len(line) < 54:
            raise ParseError(f"truncated ATOM record on line {lineno + 1}", lineno)
        atom_name = line[12:16].strip()
        altloc = line[16]
        resname = line[17:20].strip()
        chain = line[21].strip() or "A"
        try:
            resseq = int(line[22:26])
        except ValueError:
            raise ParseError(f"bad residue number on line {lineno + 1}", lineno) from None
        icode = line[26].strip()
        key = (chain, resseq, icode)
        if key not in names:
            order.append(key)
            names[key] = resname
        if atom_name != "CA":
            continue
        try:
            xyz = (float(line[30:38]), float(line[38:46]), float(line[46:54]))
        except ValueError:
            raise ParseError(f"bad coordinates on line {lineno + 1}", lineno) from None
        occ_txt = line[54:60].strip()
        occupancy = float(occ_txt) if occ_txt else 1.0
        best = cas.get(key)
        if best is None or occupancy > best[0]:
            cas[key] = (occupancy, xyz, altloc)

    residues = []
    warnings = []
    for key in order:
        chain, resseq, icode = key
        if key not in cas:
            warnings.append(f"residue {names[key]} {chain}{resseq}{icode} has no CA atom; dropped")
            continue
        code = THREE_TO_ONE.get(names[key], "X")
        residues.append(Residue(code=code, ca=cas[key][1], chain=chain, number=resseq))
    if not residues:
        raise ParseError("no CA atoms found", 0)
    for w in warnings:
        log.warning(w)
    return ProteinStructure(residues=tuple(residues), warnings=tuple(warnings))


def read_pdb(path):
    with open(path, encoding="utf-8") as fh:
        return parse_pdb(fh.read())


def contact_pairs(coords, cutoff):
    coords = np.asarray(coords, dtype=float).reshape(-1, 3)
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    i, j = np.nonzero(np.triu(dist <= cutoff, k=1))
    return list(zip(i.tolist(), j.tolist()))


def build_residue_graph(structure, cutoff=DEFAULT_CUTOFF, node_features=None):
    """Residue graph with an undirected edge wherever CA-CA distance <= ``cutoff``.

    ``node_features`` defaults to the 21-wide residue one-hot.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if not structure.residues:
        raise ValueError("structure has no residues")
    coords = structure.ca_coords()
    if node_features is None:
        from ..featurize.protein import residue_onehot
        node_features = residue_onehot(structure.sequence)
    edges, _ = undirected_to_directed(contact_pairs(coords, cutoff))
    return EntityGraph(node_features=node_features, edge_list=edges, coords=coords)


def extract_pocket(structure, adapter=None, radius=DEFAULT_POCKET_RADIUS):
    """Residue subset of the binding pocket.

    With ``adapter`` (a name registered under kind ``pocket`` or a callable)
    the residue indices it returns are used as-is. Otherwise every residue
    whose CA lies within ``radius`` of the CA centroid is kept.
    """
    if adapter is not None:
        fn = adapters.get("pocket", adapter) if isinstance(adapter, str) else adapter
        indices = sorted(set(int(i) for i in fn(structure)))
    else:
        coords = structure.ca_coords()
        center = coords.mean(axis=0)
        dist = np.linalg.norm(coords - center, axis=1)
        indices = np.nonzero(dist <= radius)[0].tolist()
    if not indices:
        raise EmptyPocket("pocket selection is empty")
    return structure.subset(indices)


def embed_conformer(graph, adapter="rdkit", seed=0):
    """Attach 3D coordinates produced by the configured conformer adapter."""
    fn = adapters.get("conformer", adapter) if isinstance(adapter, str) else adapter
    coords = fn(graph, seed=seed)
    return graph.with_coords(coords)
