from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

BOND_ORDERS = (1, 2, 3, "aromatic")

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"


@dataclass(frozen=True)
class Atom:
    element: str
    degree: int = 0
    formal_charge: int = 0
    aromatic: bool = False
    in_ring: bool = False
    implicit_h: int = 0


@dataclass(frozen=True)
class MolecularGraph:
    """Heavy-atom graph of a small molecule.

    ``bonds`` holds ``(i, j, order)`` with ``i < j`` and ``order`` in
    ``{1, 2, 3, "aromatic"}``. ``coords`` is either ``None`` or one ``(x, y, z)``
    triple per atom, in Angstrom.
    """

    atoms: tuple
    bonds: tuple
    coords: Optional[tuple] = None
    smiles: Optional[str] = None

    def __post_init__(self):
        n = len(self.atoms)
        seen = set()
        for i, j, order in self.bonds:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"bond ({i}, {j}) out of range for {n} atoms")
            if i == j:
                raise ValueError(f"self-loop on atom {i}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate bond {key}")
            if order not in BOND_ORDERS:
                raise ValueError(f"bad bond order {order!r}")
            seen.add(key)
        if self.coords is not None and len(self.coords) != n:
            raise ValueError(f"{len(self.coords)} coordinates for {n} atoms")

    @property
    def num_atoms(self):
        return len(self.atoms)

    @property
    def num_bonds(self):
        return len(self.bonds)

    def neighbors(self):
        """Adjacency as ``list[list[(neighbor, order)]]``."""
        adj = [[] for _ in self.atoms]
        for i, j, order in self.bonds:
            adj[i].append((j, order))
            adj[j].append((i, order))
        return adj

    def with_coords(self, coords):
        return replace(self, coords=tuple(tuple(float(c) for c in xyz) for xyz in coords))


@dataclass(frozen=True)
class Residue:
    code: str
    ca: tuple
    chain: str = "A"
    number: int = 0


@dataclass(frozen=True)
class ProteinStructure:
    residues: tuple
    warnings: tuple = ()
    pocket: bool = False

    @property
    def sequence(self):
        return "".join(r.code for r in self.residues)

    @property
    def chain_ids(self):
        return tuple(dict.fromkeys(r.chain for r in self.residues))

    def ca_coords(self):
        return np.array([r.ca for r in self.residues], dtype=float).reshape(-1, 3)

    def subset(self, indices, pocket=True):
        return ProteinStructure(
            residues=tuple(self.residues[i] for i in indices),
            warnings=self.warnings,
            pocket=pocket,
        )


@dataclass(frozen=True)
class ProteinRecord:
    """A protein entity as it appears in a dataset row."""

    sequence: str
    structure_path: Optional[str] = None
    structure: Optional[ProteinStructure] = None

    @property
    def key(self):
        return self.sequence if self.structure_path is None else f"{self.sequence}|{self.structure_path}"

    def __str__(self):
        return self.sequence


@dataclass
class EntityGraph:
    """Graph carrier shared by drug and residue graphs.

    ``edge_list`` is ``(E, 2)`` and stores both directions of every undirected
    edge; ``edge_features`` (if any) is aligned with it row for row.
    """

    node_features: np.ndarray
    edge_list: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    edge_features: Optional[np.ndarray] = None
    coords: Optional[np.ndarray] = None

    def __post_init__(self):
        self.node_features = np.asarray(self.node_features, dtype=np.float32)
        self.edge_list = np.asarray(self.edge_list, dtype=np.int64).reshape(-1, 2)
        if self.edge_features is not None:
            self.edge_features = np.asarray(self.edge_features, dtype=np.float32)
            if len(self.edge_features) != len(self.edge_list):
                raise ValueError("edge_features must align with edge_list")
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=np.float32).reshape(-1, 3)

    @property
    def num_nodes(self):
        return self.node_features.shape[0]

    @property
    def num_edges(self):
        """Number of undirected edges."""
        return len(self.edge_list) // 2

    def undirected_edges(self):
        return {(int(min(i, j)), int(max(i, j))) for i, j in self.edge_list}


def undirected_to_directed(pairs, features=None):
    """Expand ``(i, j)`` pairs into both directions, duplicating feature rows."""
    pairs = list(pairs)
    if not pairs:
        feats = None
        if features is not None:
            arr = np.asarray(features, dtype=np.float32)
            feats = arr.reshape(0, arr.shape[-1] if arr.ndim == 2 else 0)
        return np.zeros((0, 2), dtype=np.int64), feats
    fwd = np.asarray(pairs, dtype=np.int64)
    edges = np.concatenate([fwd, fwd[:, ::-1]], axis=0)
    if features is None:
        return edges, None
    features = np.asarray(features, dtype=np.float32)
    return edges, np.concatenate([features, features], axis=0)
