"""Parser tests: hand-verified corpus, ring perception against an
independent oracle, hybridization rules, and error reporting."""

import networkx as nx
import pytest

from ccpred.molparse import (
    Chirality,
    Hybridization,
    MolGraph,
    SmilesSyntaxError,
    UnsupportedFeatureError,
    hybridization_of,
    molecular_formula,
    parse_smiles,
    ring_membership,
)

from corpus import HAND_VERIFIED, expected_molwt


@pytest.mark.parametrize("smiles,atoms,bonds,rings,formula,hydrogens",
                         HAND_VERIFIED)
def test_hand_verified_corpus(smiles, atoms, bonds, rings, formula, hydrogens):
    mol = parse_smiles(smiles)
    assert mol.num_atoms == atoms
    assert mol.num_bonds == bonds
    assert len(mol.rings) == rings
    assert molecular_formula(mol) == formula
    assert mol.total_hydrogens() == hydrogens
    assert abs(mol.molecular_weight() - expected_molwt(formula)) < 0.01


def test_benzene_details():
    mol = parse_smiles("c1ccccc1")
    assert all(a.aromatic and a.element == 6 for a in mol.atoms)
    assert all(b.order.value == "aromatic" and b.in_ring for b in mol.bonds)
    assert len(mol.rings) == 1 and len(mol.rings[0]) == 6


def test_methane_implicit_hydrogens():
    mol = parse_smiles("C")
    assert mol.num_atoms == 1 and mol.num_bonds == 0
    assert mol.atoms[0].implicit_h == 4


def test_allylphenol_shape():
    mol = parse_smiles("C=CCc1ccccc1O")
    assert mol.heavy_atom_count() == 10
    assert mol.num_bonds == 10
    aromatic_rings = [r for r in mol.rings
                      if all(mol.atoms[i].aromatic for i in r)]
    assert len(aromatic_rings) == 1
    oxygens = [a for a in mol.atoms if a.element == 8]
    assert len(oxygens) == 1 and oxygens[0].implicit_h == 1


def test_determinism():
    a = parse_smiles("CC(=O)Nc1ccccc1")
    b = parse_smiles("CC(=O)Nc1ccccc1")
    assert a == b


def _ring_flags_oracle(mol: MolGraph) -> list[bool]:
    graph = nx.MultiGraph()
    graph.add_nodes_from(range(mol.num_atoms))
    for i, bond in enumerate(mol.bonds):
        graph.add_edge(bond.a, bond.b, key=i)
    bridges = set()
    for a, b in nx.bridges(nx.Graph(graph)):
        bridges.add(frozenset((a, b)))
    return [frozenset((bond.a, bond.b)) not in bridges for bond in mol.bonds]


@pytest.mark.parametrize("smiles", [row[0] for row in HAND_VERIFIED])
def test_ring_flags_match_bridge_oracle(smiles):
    mol = parse_smiles(smiles)
    flags, rings = ring_membership(mol)
    assert flags == _ring_flags_oracle(mol)
    covered = set()
    for ring in rings:
        for i in range(len(ring)):
            covered.add(frozenset((ring[i], ring[(i + 1) % len(ring)])))
    for bond, flag in zip(mol.bonds, flags):
        if flag:
            assert frozenset((bond.a, bond.b)) in covered


def test_naphthalene_rings():
    mol = parse_smiles("c1ccc2ccccc2c1")
    flags, rings = ring_membership(mol)
    assert sum(flags) == 11
    assert len(rings) == 2
    assert sorted(len(r) for r in rings) == [6, 6]


def test_acyclic_chain_has_no_rings():
    flags, rings = ring_membership(parse_smiles("CCCC"))
    assert not any(flags) and rings == ()


def test_hybridization_rules():
    benzene = parse_smiles("c1ccccc1")
    assert all(hybridization_of(benzene, i) is Hybridization.SP2
               for i in range(6))
    assert hybridization_of(parse_smiles("C"), 0) is Hybridization.SP3
    nitrile = parse_smiles("C#N")
    assert hybridization_of(nitrile, 0) is Hybridization.SP
    ketone = parse_smiles("CC(C)=O")
    assert hybridization_of(ketone, 1) is Hybridization.SP2
    allene = parse_smiles("C=C=C")
    assert hybridization_of(allene, 1) is Hybridization.SP
    with pytest.raises(IndexError):
        hybridization_of(benzene, 6)


def test_bracket_atoms():
    mol = parse_smiles("O=[N+]([O-])c1ccccc1")
    charges = sorted(a.formal_charge for a in mol.atoms if a.element in (7, 8))
    assert charges == [-1, 0, 1]
    nitrogen = next(a for a in mol.atoms if a.element == 7)
    assert nitrogen.implicit_h == 0

    pyrrole = parse_smiles("[nH]1cccc1")
    assert pyrrole.atoms[0].implicit_h == 1
    assert pyrrole.atoms[0].aromatic


def test_chirality_tags():
    mol = parse_smiles("C[C@H](O)CC")
    assert mol.atoms[1].chirality is Chirality.CCW
    mol = parse_smiles("C[C@@H](O)CC")
    assert mol.atoms[1].chirality is Chirality.CW


def test_bond_directions():
    mol = parse_smiles("F/C=C/F")
    directions = [b.direction.value for b in mol.bonds]
    assert directions == ["up", "none", "up"]


def test_isotope_warns_and_parses():
    with pytest.warns(UserWarning):
        mol = parse_smiles("[13C]")
    assert mol.atoms[0].element == 6


def test_multivalent_sulfur():
    dmso = parse_smiles("CS(C)=O")
    sulfur = next(a for a in dmso.atoms if a.element == 16)
    assert sulfur.explicit_valence == 4 and sulfur.implicit_h == 0
    sulfide = parse_smiles("CSC")
    sulfur = next(a for a in sulfide.atoms if a.element == 16)
    assert sulfur.explicit_valence == 2 and sulfur.implicit_h == 0


def test_hydrogen_conservation_via_valence_table():
    # degree + implicit H adds up to the default valence for neutral
    # carbon in saturated chains
    mol = parse_smiles("CCCCCCCC")
    for atom in mol.atoms:
        assert atom.degree + atom.implicit_h == 4


@pytest.mark.parametrize("bad,fragment", [
    ("", "empty"),
    ("   ", "empty"),
    ("C(", "unclosed"),
    ("C)", "unmatched"),
    ("C1CC", "unclosed ring"),
    ("C=", "dangling bond"),
    ("C==C", "consecutive bond"),
    ("C%1C", "'%'"),
    ("[Xx]", "unknown element"),
    ("Zz", "not in the organic subset"),
    ("C=.C", "bond symbol before '.'"),
    ("C11", "same atom"),
    ("C1C1", "duplicate"),
    ("cc", "outside any ring"),
    ("C(F)(F)(F)(F)F", "valence"),
    ("[C", "unterminated"),
])
def test_syntax_errors(bad, fragment):
    with pytest.raises(SmilesSyntaxError) as err:
        parse_smiles(bad)
    assert fragment.split()[0] in str(err.value)
    assert "position" in str(err.value)


@pytest.mark.parametrize("bad", ["C*", "[*]", "C~C", "[C@TH1](C)(O)N"])
def test_unsupported_features(bad):
    with pytest.raises(UnsupportedFeatureError):
        parse_smiles(bad)


def test_disconnected_fragments():
    mol = parse_smiles("CC.O")
    assert mol.num_atoms == 3
    assert mol.num_bonds == 1


def test_canonical_order_is_permutation():
    mol = parse_smiles("CCOC(C)=O")
    assert sorted(mol.canonical_order) == list(range(mol.num_atoms))
