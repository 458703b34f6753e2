"""Molecular descriptors, structural fingerprint, similarity and geometry.

The 16-slot descriptor vector holds molecular weight, H-bond donor and
acceptor counts, a coarse atom-contribution logP, a fragment-based polar
surface area, and eleven auxiliary slots that default to zero unless
injected from an external table (their reference definitions need a
descriptor toolkit this package deliberately does not depend on).

The 167-bit fingerprint hashes all linear atom paths of 1..6 atoms,
labeled by (element, bond order), into fixed buckets.  Externally
computed 167-bit substructure keys can be injected instead; the two
schemes are never mixed in a similarity computation.

Geometry is idealized: bond lengths from covalent radii scaled by a
bond-order factor, bond angles from the hybridization of the shared
atom.  Deterministic and dependency-free, at the price of ignoring
conformational detail.
"""

from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass

import numpy as np

from .molparse import (
    ATOMIC_MASSES,
    Atom,
    Bond,
    BondOrder,
    Hybridization,
    MolGraph,
)

DESCRIPTOR_NAMES: tuple[str, ...] = (
    "molwt", "hbd", "hba", "logp", "tpsa",
    "aux01", "aux02", "aux03", "aux04", "aux05", "aux06",
    "aux07", "aux08", "aux09", "aux10", "aux11",
)

FINGERPRINT_BITS = 167
MAX_PATH_ATOMS = 6

COMPUTED = "computed"
INJECTED = "injected"


class UnknownOverrideKeyError(KeyError):
    """Descriptor override refers to a name outside the 16-slot layout."""


class SchemeMismatchError(ValueError):
    """Similarity requested between fingerprints of different schemes."""


# Covalent radii in angstroms (single-bond values).
COVALENT_RADII: dict[int, float] = {
    1: 0.31, 3: 1.28, 5: 0.84, 6: 0.76, 7: 0.71, 8: 0.66, 9: 0.57,
    11: 1.66, 12: 1.41, 14: 1.11, 15: 1.07, 16: 1.05, 17: 1.02,
    19: 2.03, 20: 1.76, 30: 1.22, 33: 1.19, 34: 1.20, 35: 1.20,
    53: 1.39,
}

BOND_LENGTH_FACTOR: dict[BondOrder, float] = {
    BondOrder.SINGLE: 1.00,
    BondOrder.DOUBLE: 0.87,
    BondOrder.TRIPLE: 0.78,
    BondOrder.AROMATIC: 0.93,
}

TETRAHEDRAL_ANGLE = math.radians(109.47)

ANGLE_BY_HYBRIDIZATION: dict[Hybridization, float] = {
    Hybridization.SP3: TETRAHEDRAL_ANGLE,
    Hybridization.SP2: math.radians(120.0),
    Hybridization.SP: math.pi,
    Hybridization.OTHER: TETRAHEDRAL_ANGLE,
}

# Coarse per-atom logP contributions (aromatic carbon counted separately).
_LOGP_HALOGENS = {9, 17, 35, 53}
_LOGP_CONTRIB = {6: 0.2, 7: -0.7, 8: -0.4, 16: 0.4}
_LOGP_AROMATIC_C = 0.3
_LOGP_HALOGEN = 0.6

# Fragment contributions to polar surface area (angstrom^2) for N and O
# environments, keyed by (element, aromatic, h_count, singles, doubles,
# triples).  Subset of the standard additive scheme; lookups fall back
# to the closest entry for the same element and aromaticity.
_TPSA_FRAGMENTS: dict[tuple[int, bool, int, int, int, int], float] = {
    (7, False, 0, 3, 0, 0): 3.24,
    (7, False, 1, 2, 0, 0): 12.03,
    (7, False, 2, 1, 0, 0): 26.02,
    (7, False, 0, 1, 1, 0): 12.36,
    (7, False, 1, 0, 1, 0): 23.85,
    (7, False, 0, 0, 0, 1): 23.79,
    (7, False, 0, 2, 1, 0): 11.68,
    (7, True, 0, 2, 0, 0): 12.89,
    (7, True, 1, 2, 0, 0): 15.79,
    (7, True, 0, 3, 0, 0): 4.41,
    (8, False, 0, 2, 0, 0): 9.23,
    (8, False, 1, 1, 0, 0): 20.23,
    (8, False, 0, 0, 1, 0): 17.07,
    (8, False, 1, 0, 0, 0): 20.23,
    (8, True, 0, 2, 0, 0): 13.14,
}
# Charged environments that appear in the supported subset (nitro group).
_TPSA_CHARGED: dict[tuple[int, int], float] = {
    (7, 1): 11.68,   # quaternary-type N+ as in nitro
    (8, -1): 23.06,  # oxide O-
}


@dataclass(frozen=True)
class DescriptorVector:
    """The 16 molecular descriptors with per-slot provenance."""

    values: np.ndarray
    provenance: tuple[str, ...]

    def __post_init__(self):
        if self.values.shape != (len(DESCRIPTOR_NAMES),):
            raise ValueError(f"descriptor vector must have {len(DESCRIPTOR_NAMES)} "
                             f"entries, got {self.values.shape}")
        if self.molwt <= 0:
            raise ValueError("molecular weight must be positive")
        if self.hbd < 0 or self.hba < 0 or self.tpsa < 0:
            raise ValueError("hbd, hba and tpsa must be nonnegative")

    def __getitem__(self, name: str) -> float:
        return float(self.values[DESCRIPTOR_NAMES.index(name)])

    @property
    def molwt(self) -> float:
        return float(self.values[0])

    @property
    def hbd(self) -> float:
        return float(self.values[1])

    @property
    def hba(self) -> float:
        return float(self.values[2])

    @property
    def logp(self) -> float:
        return float(self.values[3])

    @property
    def tpsa(self) -> float:
        return float(self.values[4])

    def as_array(self) -> np.ndarray:
        return self.values.copy()


@dataclass(frozen=True)
class Fingerprint:
    """Fixed 167-bit structural fingerprint."""

    bits: np.ndarray  # bool, shape (167,)
    scheme: str       # "hashed_paths" or "injected"

    def __post_init__(self):
        if self.bits.shape != (FINGERPRINT_BITS,) or self.bits.dtype != np.bool_:
            raise ValueError(f"fingerprint must be a bool vector of length "
                             f"{FINGERPRINT_BITS}")

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class Geometry:
    """Idealized bond lengths and bond angles of one molecule.

    ``angle_pairs[k]`` is an ordered pair of bond indices sharing an
    atom; ``angles[k]`` is the angle at the shared atom in radians.
    """

    bond_lengths: np.ndarray
    angle_pairs: tuple[tuple[int, int], ...]
    angles: np.ndarray

    def __post_init__(self):
        if np.any(self.bond_lengths <= 0):
            raise ValueError("bond lengths must be positive")
        if self.angles.size and (np.any(self.angles <= 0)
                                 or np.any(self.angles > math.pi + 1e-12)):
            raise ValueError("angles must lie in (0, pi]")


def _counts_key(mol: MolGraph, idx: int) -> tuple[int, bool, int, int, int, int]:
    atom = mol.atoms[idx]
    singles = doubles = triples = 0
    for bond in mol.bonds:
        if idx not in (bond.a, bond.b):
            continue
        if bond.order is BondOrder.DOUBLE:
            doubles += 1
        elif bond.order is BondOrder.TRIPLE:
            triples += 1
        else:
            singles += 1  # aromatic counted with singles for the key
    return (atom.element, atom.aromatic, atom.implicit_h, singles, doubles,
            triples)


def _tpsa_contribution(mol: MolGraph, idx: int) -> float:
    atom = mol.atoms[idx]
    if atom.element not in (7, 8):
        return 0.0
    if atom.formal_charge != 0:
        return _TPSA_CHARGED.get((atom.element, atom.formal_charge), 0.0)
    key = _counts_key(mol, idx)
    if key in _TPSA_FRAGMENTS:
        return _TPSA_FRAGMENTS[key]
    # Fall back to the same-element entry with the nearest H count.
    candidates = [(abs(k[2] - key[2]), v) for k, v in _TPSA_FRAGMENTS.items()
                  if k[0] == key[0] and k[1] == key[1]]
    if not candidates:
        candidates = [(abs(k[2] - key[2]), v) for k, v in _TPSA_FRAGMENTS.items()
                      if k[0] == key[0]]
    candidates.sort(key=lambda item: item[0])
    return candidates[0][1]


def _has_explicit_h_neighbor(mol: MolGraph, idx: int) -> bool:
    return any(mol.atoms[n].element == 1 for n in mol.neighbors(idx))


def descriptor_vector(mol: MolGraph,
                      overrides: dict[str, float] | None = None) -> DescriptorVector:
    """Compute the 16-slot descriptor vector for one molecule.

    Args:
        mol: parsed molecule.
        overrides: optional name -> value map; named slots are replaced
            and flagged as injected.

    Raises:
        UnknownOverrideKeyError: override name outside the 16-slot layout.
    """
    values = np.zeros(len(DESCRIPTOR_NAMES))
    values[0] = mol.molecular_weight()
    hbd = hba = 0
    logp_terms: list[float] = []
    tpsa_terms: list[float] = []
    for idx, atom in enumerate(mol.atoms):
        if atom.element in (7, 8):
            if atom.implicit_h > 0 or _has_explicit_h_neighbor(mol, idx):
                hbd += 1
            if atom.formal_charge <= 0:
                hba += 1
        if atom.element in _LOGP_HALOGENS:
            logp_terms.append(_LOGP_HALOGEN)
        elif atom.element == 6:
            logp_terms.append(_LOGP_AROMATIC_C if atom.aromatic else _LOGP_CONTRIB[6])
        else:
            logp_terms.append(_LOGP_CONTRIB.get(atom.element, 0.0))
        tpsa_terms.append(_tpsa_contribution(mol, idx))
    values[1] = hbd
    values[2] = hba
    # fsum keeps both sums independent of atom order.
    values[3] = math.fsum(logp_terms)
    values[4] = math.fsum(tpsa_terms)

    provenance = [COMPUTED] * len(DESCRIPTOR_NAMES)
    if overrides:
        for name, value in overrides.items():
            if name not in DESCRIPTOR_NAMES:
                raise UnknownOverrideKeyError(
                    f"unknown descriptor override {name!r}")
            slot = DESCRIPTOR_NAMES.index(name)
            values[slot] = float(value)
            provenance[slot] = INJECTED
    return DescriptorVector(values, tuple(provenance))


_ORDER_CODE = {
    BondOrder.SINGLE: "1",
    BondOrder.DOUBLE: "2",
    BondOrder.TRIPLE: "3",
    BondOrder.AROMATIC: "a",
}


def fingerprint(mol: MolGraph) -> Fingerprint:
    """Hash all linear paths of 1..6 atoms into a 167-bit vector.

    Paths are labeled by atomic numbers and bond-order codes, read in
    whichever direction compares smaller, so the bit pattern does not
    depend on atom numbering.
    """
    adjacency: list[list[tuple[int, int]]] = [[] for _ in range(mol.num_atoms)]
    for i, bond in enumerate(mol.bonds):
        adjacency[bond.a].append((bond.b, i))
        adjacency[bond.b].append((bond.a, i))

    labels: set[str] = set()

    def walk(node: int, visited: list[int], label_parts: list[str]) -> None:
        label = "".join(label_parts)
        reverse = _reverse_label(visited, mol)
        labels.add(min(label, reverse))
        if len(visited) == MAX_PATH_ATOMS:
            return
        for nbr, edge in adjacency[node]:
            if nbr in visited:
                continue
            visited.append(nbr)
            label_parts.append(_ORDER_CODE[mol.bonds[edge].order])
            label_parts.append(str(mol.atoms[nbr].element))
            walk(nbr, visited, label_parts)
            label_parts.pop()
            label_parts.pop()
            visited.pop()

    for start in range(mol.num_atoms):
        walk(start, [start], [str(mol.atoms[start].element)])

    bits = np.zeros(FINGERPRINT_BITS, dtype=bool)
    for label in labels:
        bits[zlib.crc32(label.encode()) % FINGERPRINT_BITS] = True
    return Fingerprint(bits, "hashed_paths")


def _reverse_label(path: list[int], mol: MolGraph) -> str:
    parts = [str(mol.atoms[path[-1]].element)]
    for i in range(len(path) - 1, 0, -1):
        a, b = path[i], path[i - 1]
        order = next(bond.order for bond in mol.bonds
                     if {bond.a, bond.b} == {a, b})
        parts.append(_ORDER_CODE[order])
        parts.append(str(mol.atoms[b].element))
    return "".join(parts)


def fingerprint_from_bitstring(bitstring: str) -> Fingerprint:
    """Build an injected-scheme fingerprint from a 167-character 0/1 string."""
    if len(bitstring) != FINGERPRINT_BITS or set(bitstring) - {"0", "1"}:
        raise ValueError(f"expected a {FINGERPRINT_BITS}-character 0/1 string")
    bits = np.frombuffer(bitstring.encode(), dtype=np.uint8) == ord("1")
    return Fingerprint(bits, "injected")


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """Intersection-over-union of set bits; 1.0 when both are empty.

    Raises:
        SchemeMismatchError: fingerprints come from different schemes.
    """
    if a.scheme != b.scheme:
        raise SchemeMismatchError(
            f"cannot compare schemes {a.scheme!r} and {b.scheme!r}")
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        return 1.0
    inter = int(np.count_nonzero(a.bits & b.bits))
    return inter / union


def idealized_geometry(mol: MolGraph) -> Geometry:
    """Bond lengths and angles from covalent radii and hybridization."""
    lengths = np.empty(mol.num_bonds)
    for i, bond in enumerate(mol.bonds):
        radius_sum = (COVALENT_RADII[mol.atoms[bond.a].element]
                      + COVALENT_RADII[mol.atoms[bond.b].element])
        lengths[i] = radius_sum * BOND_LENGTH_FACTOR[bond.order]

    incident: list[list[int]] = [[] for _ in range(mol.num_atoms)]
    for i, bond in enumerate(mol.bonds):
        incident[bond.a].append(i)
        incident[bond.b].append(i)

    pairs: list[tuple[int, int]] = []
    angles: list[float] = []
    for idx in range(mol.num_atoms):
        if len(incident[idx]) < 2:
            continue
        angle = ANGLE_BY_HYBRIDIZATION[mol.atoms[idx].hybridization]
        for bi in incident[idx]:
            for bj in incident[idx]:
                if bi != bj:
                    pairs.append((bi, bj))
                    angles.append(angle)
    return Geometry(lengths, tuple(pairs), np.asarray(angles))


def load_override_table(path) -> dict[str, tuple[dict[str, float], Fingerprint | None]]:
    """Read a descriptor/fingerprint override table.

    Comma-separated, keyed by SMILES, with any subset of the 16
    descriptor names as columns plus an optional ``fingerprint`` column
    holding a 167-character bitstring.

    Returns:
        smiles -> (descriptor overrides, injected fingerprint or None).
    """
    table: dict[str, tuple[dict[str, float], Fingerprint | None]] = {}
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "smiles" not in reader.fieldnames:
            raise ValueError("override table must have a 'smiles' column")
        for name in reader.fieldnames:
            if name not in ("smiles", "fingerprint") and name not in DESCRIPTOR_NAMES:
                raise UnknownOverrideKeyError(
                    f"unknown override column {name!r}")
        for row in reader:
            overrides = {
                key: float(value)
                for key, value in row.items()
                if key in DESCRIPTOR_NAMES and value not in (None, "")
            }
            fp = None
            if row.get("fingerprint"):
                fp = fingerprint_from_bitstring(row["fingerprint"].strip())
            table[row["smiles"]] = (overrides, fp)
    return table
