"""Hand-verified molecule table shared by parser tests and acceptance.

Each row was derived by hand from the structure: heavy-atom count, bond
count, ring count, molecular formula, and total hydrogen count.  The
expected molecular weight is recomputed in the tests from the formula
with an independent standard-atomic-weight table, so it never leans on
package code.
"""

# (smiles, atoms, bonds, rings, formula dict, total hydrogens)
HAND_VERIFIED = [
    ("C", 1, 0, 0, {"C": 1, "H": 4}, 4),
    ("CCO", 3, 2, 0, {"C": 2, "H": 6, "O": 1}, 6),
    ("CCCC", 4, 3, 0, {"C": 4, "H": 10}, 10),
    ("C1CCCCC1", 6, 6, 1, {"C": 6, "H": 12}, 12),
    ("c1ccccc1", 6, 6, 1, {"C": 6, "H": 6}, 6),
    ("Cc1ccccc1", 7, 7, 1, {"C": 7, "H": 8}, 8),
    ("Oc1ccccc1", 7, 7, 1, {"C": 6, "H": 6, "O": 1}, 6),
    ("c1ccc2ccccc2c1", 10, 11, 2, {"C": 10, "H": 8}, 8),
    ("c1ccncc1", 6, 6, 1, {"C": 5, "H": 5, "N": 1}, 5),
    ("CC(C)=O", 4, 3, 0, {"C": 3, "H": 6, "O": 1}, 6),
    ("CC(O)=O", 4, 3, 0, {"C": 2, "H": 4, "O": 2}, 4),
    ("CCOC(C)=O", 6, 5, 0, {"C": 4, "H": 8, "O": 2}, 8),
    ("CCOCC", 5, 4, 0, {"C": 4, "H": 10, "O": 1}, 10),
    ("CC#N", 3, 2, 0, {"C": 2, "H": 3, "N": 1}, 3),
    ("Nc1ccccc1", 7, 7, 1, {"C": 6, "H": 7, "N": 1}, 7),
    ("Clc1ccccc1", 7, 7, 1, {"C": 6, "H": 5, "Cl": 1}, 5),
    ("CCBr", 3, 2, 0, {"C": 2, "H": 5, "Br": 1}, 5),
    ("C=CCOc1ccccc1", 10, 10, 1, {"C": 9, "H": 10, "O": 1}, 10),
    ("C=CCc1ccccc1O", 10, 10, 1, {"C": 9, "H": 10, "O": 1}, 10),
    ("COc1ccccc1", 8, 8, 1, {"C": 7, "H": 8, "O": 1}, 8),
    ("C=Cc1ccccc1", 8, 8, 1, {"C": 8, "H": 8}, 8),
    ("CN(C)C=O", 5, 4, 0, {"C": 3, "H": 7, "N": 1, "O": 1}, 7),
    ("O=Cc1ccccc1", 8, 8, 1, {"C": 7, "H": 6, "O": 1}, 6),
    ("c1ccsc1", 5, 5, 1, {"C": 4, "H": 4, "S": 1}, 4),
]

# Independent standard atomic weights for recomputing expected MolWt.
STANDARD_WEIGHTS = {
    "H": 1.008, "C": 12.011, "N": 14.007, "O": 15.999, "F": 18.998,
    "P": 30.974, "S": 32.06, "Cl": 35.45, "Br": 79.904, "I": 126.904,
}


def expected_molwt(formula: dict[str, int]) -> float:
    return sum(STANDARD_WEIGHTS[symbol] * count
               for symbol, count in formula.items())
