"""Descriptor, fingerprint, similarity and geometry tests."""

import math

import numpy as np
import pytest

from ccpred.chemfeat import (
    DESCRIPTOR_NAMES,
    FINGERPRINT_BITS,
    Fingerprint,
    SchemeMismatchError,
    UnknownOverrideKeyError,
    descriptor_vector,
    fingerprint,
    fingerprint_from_bitstring,
    idealized_geometry,
    load_override_table,
    tanimoto,
)
from ccpred.molparse import parse_smiles


def test_benzene_descriptors():
    desc = descriptor_vector(parse_smiles("c1ccccc1"))
    assert abs(desc.molwt - 78.11) < 0.01
    assert desc.hbd == 0
    assert desc.hba == 0


def test_allylphenol_descriptors():
    desc = descriptor_vector(parse_smiles("C=CCc1ccccc1O"))
    assert desc.hbd == 1
    assert desc.hba == 1
    assert desc.tpsa == pytest.approx(20.23)


def test_acetic_acid_tpsa_is_fragment_sum():
    # hydroxyl (20.23) + carbonyl (17.07)
    desc = descriptor_vector(parse_smiles("CC(O)=O"))
    assert desc.tpsa == pytest.approx(37.30)


def test_logp_contribution_table():
    # 6 aromatic C (+0.3 each) and one O (-0.4)
    desc = descriptor_vector(parse_smiles("Oc1ccccc1"))
    assert desc.logp == pytest.approx(6 * 0.3 - 0.4)


def test_override_passthrough_and_provenance():
    mol = parse_smiles("c1ccccc1")
    desc = descriptor_vector(mol, {"tpsa": 20.23})
    assert desc.tpsa == pytest.approx(20.23)
    assert desc.provenance[DESCRIPTOR_NAMES.index("tpsa")] == "injected"
    assert desc.provenance[DESCRIPTOR_NAMES.index("molwt")] == "computed"


def test_unknown_override_key():
    with pytest.raises(UnknownOverrideKeyError):
        descriptor_vector(parse_smiles("C"), {"nope": 1.0})


def test_aux_slots_default_zero():
    desc = descriptor_vector(parse_smiles("CCO"))
    for name in DESCRIPTOR_NAMES[5:]:
        assert desc[name] == 0.0


def test_descriptor_permutation_invariance():
    pairs = [("Cc1ccccc1O", "Oc1ccccc1C"), ("CCO", "OCC"),
             ("CC(=O)Nc1ccccc1", "c1ccccc1NC(C)=O")]
    for left, right in pairs:
        a = descriptor_vector(parse_smiles(left))
        b = descriptor_vector(parse_smiles(right))
        assert np.array_equal(a.as_array(), b.as_array())


def test_methane_fingerprint_single_bit():
    fp = fingerprint(parse_smiles("C"))
    assert fp.count() <= 1


def test_fingerprint_determinism_and_difference():
    benzene1 = fingerprint(parse_smiles("c1ccccc1"))
    benzene2 = fingerprint(parse_smiles("c1ccccc1"))
    methane = fingerprint(parse_smiles("C"))
    assert np.array_equal(benzene1.bits, benzene2.bits)
    assert not np.array_equal(benzene1.bits, methane.bits)


def test_fingerprint_independent_of_atom_order():
    a = fingerprint(parse_smiles("CCOC(C)=O"))
    b = fingerprint(parse_smiles("O=C(C)OCC"))
    assert np.array_equal(a.bits, b.bits)


def test_tanimoto_identities():
    fp = fingerprint(parse_smiles("c1ccccc1"))
    assert tanimoto(fp, fp) == 1.0
    empty = Fingerprint(np.zeros(FINGERPRINT_BITS, dtype=bool), "hashed_paths")
    assert tanimoto(empty, empty) == 1.0
    assert tanimoto(fp, empty) == 0.0


def test_tanimoto_hand_case():
    a = np.zeros(FINGERPRINT_BITS, dtype=bool)
    b = np.zeros(FINGERPRINT_BITS, dtype=bool)
    a[[1, 2, 3]] = True
    b[[2, 3, 4]] = True
    value = tanimoto(Fingerprint(a, "hashed_paths"),
                     Fingerprint(b, "hashed_paths"))
    assert value == pytest.approx(0.5)


def test_tanimoto_scheme_mismatch():
    hashed = fingerprint(parse_smiles("C"))
    injected = fingerprint_from_bitstring("1" * FINGERPRINT_BITS)
    with pytest.raises(SchemeMismatchError):
        tanimoto(hashed, injected)


def test_tanimoto_properties_bulk():
    # symmetry, reflexivity and range over ten thousand random pairs
    rng = np.random.default_rng(5)
    lhs = rng.random((10_000, FINGERPRINT_BITS)) < 0.1
    rhs = rng.random((10_000, FINGERPRINT_BITS)) < 0.1
    inter = (lhs & rhs).sum(axis=1)
    union = (lhs | rhs).sum(axis=1)
    values = np.where(union == 0, 1.0, inter / np.maximum(union, 1))
    assert np.all((0.0 <= values) & (values <= 1.0))
    sample = rng.integers(0, 10_000, size=64)
    for i in sample:
        a = Fingerprint(lhs[i], "hashed_paths")
        b = Fingerprint(rhs[i], "hashed_paths")
        assert tanimoto(a, b) == pytest.approx(values[i])
        assert tanimoto(b, a) == tanimoto(a, b)
        assert tanimoto(a, a) == 1.0


def test_bond_length_table():
    geo = idealized_geometry(parse_smiles("CC"))
    assert geo.bond_lengths[0] == pytest.approx(1.52)
    geo = idealized_geometry(parse_smiles("C=C"))
    assert geo.bond_lengths[0] == pytest.approx(1.52 * 0.87)


def test_angles_by_hybridization():
    benzene = idealized_geometry(parse_smiles("c1ccccc1"))
    assert benzene.angles[0] == pytest.approx(2.0944, abs=1e-4)
    nitrile = idealized_geometry(parse_smiles("CC#N"))
    # the sp carbon holds the only angle pair
    assert np.all(nitrile.angles == pytest.approx(math.pi))
    methane_chain = idealized_geometry(parse_smiles("CCC"))
    assert methane_chain.angles[0] == pytest.approx(math.radians(109.47))


@pytest.mark.parametrize("smiles", ["CC(C)CC", "c1ccc2ccccc2c1",
                                    "CC(=O)Oc1ccccc1", "C=CCc1ccccc1O"])
def test_angle_count_matches_degree_formula(smiles):
    mol = parse_smiles(smiles)
    geo = idealized_geometry(mol)
    degrees = [a.degree for a in mol.atoms]
    expected = sum(d * (d - 1) for d in degrees if d >= 2)
    assert len(geo.angles) == expected
    assert len(geo.angle_pairs) == expected


def test_override_table_round_trip(tmp_path):
    path = tmp_path / "overrides.csv"
    bits = "".join("1" if i % 7 == 0 else "0" for i in range(FINGERPRINT_BITS))
    path.write_text(
        "smiles,tpsa,aux01,fingerprint\n"
        f"c1ccccc1,1.5,0.25,{bits}\n"
        "CCO,9.9,,\n")
    table = load_override_table(path)
    overrides, fp = table["c1ccccc1"]
    assert overrides == {"tpsa": 1.5, "aux01": 0.25}
    assert fp is not None and fp.scheme == "injected"
    assert fp.bits[0] and not fp.bits[1]
    overrides, fp = table["CCO"]
    assert overrides == {"tpsa": 9.9} and fp is None


def test_override_table_rejects_unknown_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("smiles,bogus\nC,1\n")
    with pytest.raises(UnknownOverrideKeyError):
        load_override_table(path)
