"""Dual-graph tensor assembly tests."""

import numpy as np
import pytest

from ccpred.chemfeat import descriptor_vector, idealized_geometry
from ccpred.graphrep import (
    ATOM_EDGE_WIDTH,
    ATOM_NODE_WIDTH,
    BOND_EDGE_WIDTH,
    BOND_NODE_WIDTH,
    ExperimentalFeatures,
    FractionSumError,
    SingleAtomMoleculeError,
    build_pair,
    codebook_version,
    column_table,
    dump_tables,
    get_codebook,
    parse_eluent_ratio,
    solvent_table,
    solvent_weighting,
)
from ccpred.molparse import parse_smiles


def pair_for(smiles, exp):
    mol = parse_smiles(smiles)
    return build_pair(mol, descriptor_vector(mol), idealized_geometry(mol), exp)


def test_ethane_shapes(conditions_4g):
    pair = pair_for("CC", conditions_4g)
    assert pair.atom_graph.node_features.shape == (2, ATOM_NODE_WIDTH)
    assert pair.atom_graph.edge_features.shape == (2, ATOM_EDGE_WIDTH)
    assert pair.angle_graph.node_features.shape == (1, BOND_NODE_WIDTH)
    assert pair.angle_graph.edge_features.shape == (0, BOND_EDGE_WIDTH)


def test_benzene_shapes(conditions_4g):
    pair = pair_for("c1ccccc1", conditions_4g)
    assert pair.atom_graph.node_features.shape[0] == 6
    assert pair.atom_graph.edge_src.shape[0] == 12
    assert pair.angle_graph.node_features.shape[0] == 6
    assert pair.angle_graph.edge_src.shape[0] == 12  # 2 ordered pairs x 6 atoms


def test_edge_index_symmetric(conditions_4g):
    pair = pair_for("CCO", conditions_4g)
    forward = set(zip(pair.atom_graph.edge_src.tolist(),
                      pair.atom_graph.edge_dst.tolist()))
    assert all((dst, src) in forward for src, dst in forward)


def test_conditions_live_on_edges_only(conditions_4g):
    other = ExperimentalFeatures.from_conditions("4g", "1/1", 60.0, "DCM", 1.0)
    a = pair_for("Cc1ccccc1", conditions_4g)
    b = pair_for("Cc1ccccc1", other)
    assert np.array_equal(a.atom_graph.node_features, b.atom_graph.node_features)
    assert np.array_equal(a.angle_graph.edge_features, b.angle_graph.edge_features)
    assert np.array_equal(a.atom_graph.edge_src, b.atom_graph.edge_src)
    diff = a.atom_graph.edge_features != b.atom_graph.edge_features
    assert diff.any()
    # only the condition block (columns 3..14) may differ
    assert not diff[:, :3].any()


def test_single_atom_rejected(conditions_4g):
    with pytest.raises(SingleAtomMoleculeError):
        pair_for("C", conditions_4g)


def test_permutation_invariance_byte_identical(conditions_4g):
    for left, right in [("CCO", "OCC"), ("Cc1ccccc1O", "Oc1ccccc1C"),
                        ("CCOC(C)=O", "O=C(C)OCC")]:
        a = pair_for(left, conditions_4g)
        b = pair_for(right, conditions_4g)
        assert np.array_equal(a.atom_graph.node_features,
                              b.atom_graph.node_features)
        assert np.array_equal(a.atom_graph.edge_src, b.atom_graph.edge_src)
        assert np.array_equal(a.atom_graph.edge_dst, b.atom_graph.edge_dst)
        assert np.array_equal(a.atom_graph.edge_features,
                              b.atom_graph.edge_features)
        assert np.array_equal(a.angle_graph.node_features,
                              b.angle_graph.node_features)
        assert np.array_equal(a.angle_graph.edge_src, b.angle_graph.edge_src)
        assert np.array_equal(a.angle_graph.edge_features,
                              b.angle_graph.edge_features)
        assert np.array_equal(a.edge_bond_index, b.edge_bond_index)


def test_bond_map_round_trip(conditions_4g):
    pair = pair_for("c1ccc2ccccc2c1", conditions_4g)
    n_bonds = pair.n_bonds
    assert pair.bond_map.shape == (n_bonds, 2)
    # every angle-graph node maps to exactly two directed edges and back
    for bond_row in range(n_bonds):
        for edge in pair.bond_map[bond_row]:
            assert pair.edge_bond_index[edge] == bond_row
    assert sorted(pair.bond_map.ravel().tolist()) == \
        list(range(2 * n_bonds))


def test_solvent_weighting_pure_rows():
    table = solvent_table()
    assert np.allclose(solvent_weighting(1.0, 0.0), table["PE"])
    assert np.allclose(solvent_weighting(0.0, 1.0), table["EA"])
    mean = 0.5 * (np.asarray(table["PE"]) + np.asarray(table["EA"]))
    assert np.allclose(solvent_weighting(0.5, 0.5), mean)


def test_solvent_weighting_errors():
    with pytest.raises(FractionSumError):
        solvent_weighting(0.6, 0.6)
    with pytest.raises(FractionSumError):
        solvent_weighting(-0.1, 1.1)


def test_polarity_monotone_in_ea_fraction():
    fractions = np.linspace(0.0, 1.0, 11)
    polarity = [solvent_weighting(1 - f, f)[0] for f in fractions]
    assert all(b > a for a, b in zip(polarity, polarity[1:]))


def test_parse_eluent_ratio():
    pe, ea = parse_eluent_ratio("20/1")
    assert pe == pytest.approx(20 / 21)
    assert ea == pytest.approx(1 / 21)
    assert parse_eluent_ratio("1/1") == (0.5, 0.5)
    with pytest.raises(ValueError):
        parse_eluent_ratio("20:1")
    with pytest.raises(ValueError):
        parse_eluent_ratio("-1/2")


def test_experimental_features_flatten(conditions_4g):
    flat = conditions_4g.flatten()
    assert flat.shape == (12,)
    info = column_table()["4g"]
    assert flat[6] == info["packing_mass_g"]
    assert flat[9] == 60.0  # sample mass
    assert flat[10] == get_codebook()["loading_solvent"]["DCM"]


def test_unknown_column_spec():
    with pytest.raises(KeyError):
        ExperimentalFeatures.from_conditions("12g", "20/1", 60.0, "DCM", 1.0)


def test_codebook_dump_and_version():
    text = dump_tables()
    assert "codebook" in text and "solvents" in text and "columns" in text
    assert codebook_version() == get_codebook()["version"]


def test_geometry_must_match_molecule(conditions_4g):
    mol = parse_smiles("CCO")
    other = parse_smiles("CCCC")
    with pytest.raises(ValueError):
        build_pair(mol, descriptor_vector(mol),
                   idealized_geometry(other), conditions_4g)
