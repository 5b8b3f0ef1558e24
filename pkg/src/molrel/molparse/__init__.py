from .pdb import (
    build_residue_graph,
    contact_pairs,
    embed_conformer,
    extract_pocket,
    parse_pdb,
    read_pdb,
)
from .smiles import parse_smiles
from .types import (
    AMINO_ACIDS,
    Atom,
    EntityGraph,
    MolecularGraph,
    ProteinRecord,
    ProteinStructure,
    Residue,
)

__all__ = [
    "AMINO_ACIDS", "Atom", "EntityGraph", "MolecularGraph", "ProteinRecord",
    "ProteinStructure", "Residue", "build_residue_graph", "contact_pairs",
    "embed_conformer", "extract_pocket", "parse_pdb", "parse_smiles", "read_pdb",
]
