import csv
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import pdb_text
from molrel import adapters
from molrel.errors import AdapterUnavailable, EmptyPocket, ParseError
from molrel.molparse import (
    MolecularGraph,
    ProteinStructure,
    Residue,
    build_residue_graph,
    embed_conformer,
    extract_pocket,
    parse_pdb,
    parse_smiles,
)

CORPUS = Path(__file__).parent / "data" / "smiles_corpus.tsv"


def corpus():
    with open(CORPUS, encoding="utf-8") as fh:
        return [(r["smiles"], int(r["n_atoms"]), int(r["n_bonds"])) for r in csv.DictReader(fh, delimiter="\t")]


def test_corpus_counts():
    rows = corpus()
    assert len(rows) == 200
    for smi, n_atoms, n_bonds in rows:
        g = parse_smiles(smi)
        assert (g.num_atoms, g.num_bonds) == (n_atoms, n_bonds), smi


def test_corpus_against_rdkit():
    Chem = pytest.importorskip("rdkit.Chem")
    for smi, _, _ in corpus():
        mol = Chem.MolFromSmiles(smi)
        g = parse_smiles(smi)
        assert g.num_atoms == mol.GetNumAtoms() and g.num_bonds == mol.GetNumBonds(), smi
        assert [a.element for a in g.atoms] == [a.GetSymbol() for a in mol.GetAtoms()]


def test_methane_and_hydrogens():
    (atom,) = parse_smiles("C").atoms
    assert atom.element == "C" and atom.implicit_h == 4 and atom.degree == 0
    assert parse_smiles("[H]C([H])([H])[H]").atoms == (atom,)
    assert parse_smiles("[CH4]").atoms[0].implicit_h == 4


def test_bracket_atoms_and_rings():
    g = parse_smiles("[NH4+]")
    assert g.atoms[0].formal_charge == 1 and g.atoms[0].implicit_h == 4
    g = parse_smiles("c1ccccc1")
    assert all(a.aromatic and a.in_ring for a in g.atoms)
    assert {o for *_, o in g.bonds} == {"aromatic"}
    g = parse_smiles("C1CC%10CC1.CC%10")
    assert g.num_atoms == 7 and g.num_bonds == 7
    assert not parse_smiles("CCO").atoms[0].in_ring


@pytest.mark.parametrize("bad", ["", "C(", "C)", "C1CC", "C==C", "[Xx]", "C$", "[C", "C11"])
def test_parse_errors_are_positioned(bad):
    with pytest.raises(ParseError) as err:
        parse_smiles(bad)
    assert err.value.position is not None
    assert 0 <= err.value.position <= len(bad)


SMILES_CHARS = st.sampled_from(list("CNOSPFIBrcnos()[]=#@+-123456789%.H/\\:"))


@settings(max_examples=300, deadline=None)
@given(st.lists(SMILES_CHARS, max_size=30).map("".join))
def test_fuzz_never_crashes(text):
    try:
        g = parse_smiles(text)
    except ParseError as err:
        assert err.position is not None
        return
    assert isinstance(g, MolecularGraph)


def test_pdb_three_residues():
    s = parse_pdb(pdb_text("AGS"))
    assert s.sequence == "AGS" and s.ca_coords().shape == (3, 3)


def test_pdb_missing_ca_dropped(caplog):
    lines = pdb_text("AGS").splitlines()
    lines[1] = lines[1][:12] + " CB " + lines[1][16:]
    s = parse_pdb("\n".join(lines))
    assert s.sequence == "AS" and len(s.warnings) == 1
    assert "no CA" in caplog.text


def test_pdb_empty_and_truncated():
    for bad in ("", "   \n", "HEADER only\nEND\n"):
        with pytest.raises(ParseError):
            parse_pdb(bad)
    with pytest.raises(ParseError):
        parse_pdb("ATOM      1  CA  ALA A   1      1.0\n")


def test_pdb_first_model_and_altloc():
    text = pdb_text("AG").replace("END\n", "ENDMDL\n") + pdb_text("WWW")
    assert parse_pdb(text).sequence == "AG"
    line = pdb_text("A").splitlines()[0]
    alt_a = line[:16] + "A" + line[17:54] + "  0.40" + line[60:]
    alt_b = line[:16] + "B" + line[17:30] + "   9.000   9.000   9.000" + "  0.60" + line[60:]
    s = parse_pdb(alt_a + "\n" + alt_b + "\n")
    assert s.residues[0].ca == (9.0, 9.0, 9.0)


def _line(coords):
    return ProteinStructure(tuple(Residue("A", tuple(map(float, c)), number=i) for i, c in enumerate(coords)))


def test_residue_graph_cutoffs():
    two = _line([(0, 0, 0), (5, 0, 0)])
    assert build_residue_graph(two, cutoff=8).num_edges == 1
    assert build_residue_graph(two, cutoff=3).num_edges == 0
    three = _line([(0, 0, 0), (5, 0, 0), (10, 0, 0)])
    assert build_residue_graph(three, cutoff=8).undirected_edges() == {(0, 1), (1, 2)}


def test_residue_graph_symmetric_and_monotone():
    rng = np.random.default_rng(0)
    s = _line(rng.uniform(0, 20, size=(25, 3)))
    prev = set()
    for cutoff in (2, 4, 6, 8, 10, 15):
        g = build_residue_graph(s, cutoff=cutoff)
        directed = {tuple(e) for e in g.edge_list.tolist()}
        assert directed == {(j, i) for i, j in directed}
        assert prev <= g.undirected_edges()
        prev = g.undirected_edges()


def test_pocket_extraction():
    s = parse_pdb(pdb_text("ACDEFGHIKLMNPQRSTVWY" * 2))
    adapters.register("pocket", "first12", lambda st: range(12))
    try:
        p = extract_pocket(s, adapter="first12")
    finally:
        adapters.unregister("pocket", "first12")
    assert len(p.residues) == 12 and p.pocket and p.sequence == s.sequence[:12]
    assert extract_pocket(s, radius=1e6).residues == s.residues
    one = _line([(1, 2, 3)])
    assert extract_pocket(one).residues == one.residues
    with pytest.raises(EmptyPocket):
        extract_pocket(s, adapter=lambda st: [])
    with pytest.raises(AdapterUnavailable):
        extract_pocket(s, adapter="nope")


def test_conformers():
    g = parse_smiles("C")
    with pytest.raises(AdapterUnavailable):
        embed_conformer(g, adapter="not-installed")
    fake = lambda graph, seed: [(float(seed), 0.0, 0.0)] * graph.num_atoms  # noqa: E731
    out = embed_conformer(g, adapter=fake, seed=3)
    assert out.coords == ((3.0, 0.0, 0.0),)


def test_rdkit_conformer_seeded():
    pytest.importorskip("rdkit")
    g = parse_smiles("CCO")
    a = embed_conformer(g, seed=42)
    b = embed_conformer(g, seed=42)
    assert len(a.coords) == 3 and a.coords == b.coords
    assert len(embed_conformer(parse_smiles("C"), seed=1).coords) == 1
