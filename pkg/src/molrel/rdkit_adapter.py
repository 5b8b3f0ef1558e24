"""Optional RDKit-backed adapters (``pip install artifact[rdkit]``).

Installs a conformer generator (ETKDG + MMFF-free embedding, seeded) under the
name ``rdkit`` and the 315-bit ErG pharmacophore fingerprint under ``erg``.
"""
from rdkit import Chem, RDLogger
from rdkit.Chem import AllChem, rdReducedGraphs

from . import adapters
from .errors import AdapterUnavailable

RDLogger.DisableLog("rdApp.*")


def _mol_from_graph(graph):
    mol = Chem.RWMol()
    for atom in graph.atoms:
        a = Chem.Atom(atom.element if atom.element != "other" else "C")
        a.SetFormalCharge(atom.formal_charge)
        a.SetNumExplicitHs(atom.implicit_h)
        a.SetNoImplicit(True)
        a.SetIsAromatic(atom.aromatic)
        mol.AddAtom(a)
    order = {1: Chem.BondType.SINGLE, 2: Chem.BondType.DOUBLE, 3: Chem.BondType.TRIPLE,
             "aromatic": Chem.BondType.AROMATIC}
    for i, j, bo in graph.bonds:
        mol.AddBond(i, j, order[bo])
        if bo == "aromatic":
            mol.GetBondBetweenAtoms(i, j).SetIsAromatic(True)
    mol = mol.GetMol()
    Chem.SanitizeMol(mol, catchErrors=True)
    return mol


def conformer(graph, seed=0):
    mol = Chem.AddHs(_mol_from_graph(graph))
    params = AllChem.ETKDGv3()
    params.randomSeed = int(seed)
    if AllChem.EmbedMolecule(mol, params) != 0:
        params.useRandomCoords = True
        if AllChem.EmbedMolecule(mol, params) != 0:
            raise AdapterUnavailable("rdkit could not embed a conformer for this molecule")
    pos = mol.GetConformer().GetPositions()
    return [tuple(map(float, pos[i])) for i in range(len(graph.atoms))]


def erg(smiles):
    mol = Chem.MolFromSmiles(smiles)
    if mol is None:
        raise ValueError(f"rdkit cannot parse {smiles!r}")
    return list(rdReducedGraphs.GetErGFingerprint(mol))


def install():
    adapters.register("conformer", "rdkit", conformer)
    adapters.register("fingerprint", "erg", erg)
