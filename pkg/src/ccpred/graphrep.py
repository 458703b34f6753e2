"""Dual-graph feature tensors for one chromatography experiment.

A molecule under given experimental conditions becomes two coupled
graphs.  The atom graph carries one node per atom (9 attributes) and
two directed edges per bond; each edge holds the three bond attributes
plus the 12 flattened experimental-condition values, so conditions are
injected where messages flow.  The angle graph carries one node per
undirected bond (its idealized length) and one directed edge per
ordered pair of bonds sharing an atom; each edge holds the bond angle
plus the 16 molecular descriptors.

All categorical attributes are integer-coded through a versioned
codebook shipped as a data file; tensors built under one codebook
version are rejected by models trained under another.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .chemfeat import DescriptorVector, Geometry
from .molparse import BondDirection, MolGraph

ATOM_NODE_WIDTH = 9
ATOM_EDGE_WIDTH = 15
BOND_NODE_WIDTH = 1
BOND_EDGE_WIDTH = 17
CONDITION_WIDTH = 12


class FractionSumError(ValueError):
    """Eluent volume fractions do not sum to one."""


class SingleAtomMoleculeError(ValueError):
    """Molecules without bonds have an empty angle graph and cannot be
    represented for modeling."""


@lru_cache(maxsize=None)
def _load_data(name: str) -> dict:
    with resources.files("ccpred.data").joinpath(name).open() as handle:
        return json.load(handle)


def get_codebook() -> dict:
    return _load_data("codebook.json")


def codebook_version() -> str:
    return get_codebook()["version"]


def solvent_table() -> dict[str, list[float]]:
    return _load_data("solvents.json")["solvents"]


def column_table() -> dict[str, dict[str, float]]:
    return _load_data("columns.json")["columns"]


def column_flow_rate(column_spec: str) -> float:
    """Recommended flow rate (mL/min) for a column size class."""
    return column_table()[column_spec]["flow_ml_min"]


def dump_tables() -> str:
    """All shipped data tables as pretty JSON, for audit from the CLI."""
    payload = {
        "codebook": get_codebook(),
        "solvents": _load_data("solvents.json"),
        "columns": _load_data("columns.json"),
    }
    return json.dumps(payload, indent=2)


def parse_eluent_ratio(ratio: str) -> tuple[float, float]:
    """Convert a "PE/EA = a/b" ratio string to volume fractions.

    "20/1" means 20 volumes of petroleum ether to 1 of ethyl acetate,
    i.e. fractions (20/21, 1/21).
    """
    parts = ratio.strip().split("/")
    if len(parts) != 2:
        raise ValueError(f"eluent ratio {ratio!r} is not of the form 'a/b'")
    try:
        pe, ea = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ValueError(f"eluent ratio {ratio!r} is not numeric") from exc
    if pe < 0 or ea < 0 or pe + ea <= 0:
        raise ValueError(f"eluent ratio {ratio!r} must have nonnegative parts")
    total = pe + ea
    return pe / total, ea / total


def solvent_weighting(pe_fraction: float, ea_fraction: float) -> np.ndarray:
    """Volume-fraction-weighted solvent descriptor row (6 values).

    Raises:
        FractionSumError: fractions negative or not summing to one.
    """
    if pe_fraction < 0 or ea_fraction < 0:
        raise FractionSumError("volume fractions must be nonnegative")
    if abs(pe_fraction + ea_fraction - 1.0) > 1e-9:
        raise FractionSumError(
            f"volume fractions sum to {pe_fraction + ea_fraction}, expected 1")
    table = solvent_table()
    pe = np.asarray(table["PE"], dtype=float)
    ea = np.asarray(table["EA"], dtype=float)
    return pe_fraction * pe + ea_fraction * ea


@dataclass(frozen=True)
class ExperimentalFeatures:
    """Flattened experimental conditions attached to atom-graph edges."""

    solvent_weighted: np.ndarray   # 6 values
    column_info: np.ndarray        # packing mass g, length mm, diameter mm
    sample_mass_mg: float
    loading_solvent_code: int
    loading_volume_ml: float

    def __post_init__(self):
        if self.solvent_weighted.shape != (6,):
            raise ValueError("solvent_weighted must have 6 entries")
        if self.column_info.shape != (3,):
            raise ValueError("column_info must have 3 entries")
        if (np.any(self.solvent_weighted < 0) or np.any(self.column_info < 0)
                or self.sample_mass_mg < 0 or self.loading_volume_ml < 0
                or self.loading_solvent_code < 0):
            raise ValueError("experimental features must be nonnegative")

    def flatten(self) -> np.ndarray:
        return np.concatenate([
            self.solvent_weighted,
            self.column_info,
            [self.sample_mass_mg, float(self.loading_solvent_code),
             self.loading_volume_ml],
        ])

    @classmethod
    def from_conditions(cls, column_spec: str, pe_ea_ratio: str,
                        sample_mass_mg: float, loading_solvent: str,
                        loading_volume_ml: float) -> "ExperimentalFeatures":
        pe_fraction, ea_fraction = parse_eluent_ratio(pe_ea_ratio)
        columns = column_table()
        if column_spec not in columns:
            raise KeyError(f"unknown column spec {column_spec!r}; "
                           f"known: {sorted(columns)}")
        info = columns[column_spec]
        codes = get_codebook()["loading_solvent"]
        code = codes.get(loading_solvent, codes["other"])
        return cls(
            solvent_weighted=solvent_weighting(pe_fraction, ea_fraction),
            column_info=np.array([info["packing_mass_g"], info["length_mm"],
                                  info["inner_diameter_mm"]]),
            sample_mass_mg=float(sample_mass_mg),
            loading_solvent_code=int(code),
            loading_volume_ml=float(loading_volume_ml),
        )


@dataclass(frozen=True)
class AtomBondGraph:
    """Atoms as nodes, directed bonds as edges."""

    node_features: np.ndarray  # (n_atoms, 9)
    edge_src: np.ndarray       # (2 * n_bonds,)
    edge_dst: np.ndarray
    edge_features: np.ndarray  # (2 * n_bonds, 15)


@dataclass(frozen=True)
class BondAngleGraph:
    """Undirected bonds as nodes, ordered incident-bond pairs as edges."""

    node_features: np.ndarray  # (n_bonds, 1)
    edge_src: np.ndarray       # (n_angle_pairs,)
    edge_dst: np.ndarray
    edge_features: np.ndarray  # (n_angle_pairs, 17)


@dataclass(frozen=True)
class DualGraphPair:
    """Both graph views of one experiment plus their correspondence.

    ``edge_bond_index[e]`` is the angle-graph node (undirected bond row)
    that atom-graph directed edge ``e`` belongs to; ``bond_map`` lists,
    per angle-graph node, the two directed-edge rows derived from it.
    """

    atom_graph: AtomBondGraph
    angle_graph: BondAngleGraph
    edge_bond_index: np.ndarray
    bond_map: np.ndarray  # (n_bonds, 2)
    codebook_version: str

    @property
    def n_atoms(self) -> int:
        return self.atom_graph.node_features.shape[0]

    @property
    def n_bonds(self) -> int:
        return self.angle_graph.node_features.shape[0]


def _encode_atoms(mol: MolGraph, perm: tuple[int, ...], codebook: dict) -> np.ndarray:
    chirality = codebook["chirality"]
    hybridization = codebook["hybridization"]
    explicit_h = [0] * mol.num_atoms
    for bond in mol.bonds:
        if mol.atoms[bond.a].element == 1:
            explicit_h[bond.b] += 1
        if mol.atoms[bond.b].element == 1:
            explicit_h[bond.a] += 1
    rows = np.empty((mol.num_atoms, ATOM_NODE_WIDTH))
    for pos, orig in enumerate(perm):
        atom = mol.atoms[orig]
        rows[pos] = (
            atom.element,
            chirality[atom.chirality.value],
            atom.degree,
            atom.explicit_valence,
            atom.formal_charge,
            hybridization[atom.hybridization.value],
            atom.implicit_valence,
            int(atom.aromatic),
            atom.implicit_h + explicit_h[orig],
        )
    return rows


_DIRECTION_FLIP = {"none": "none", "up": "down", "down": "up"}


def build_pair(mol: MolGraph, desc: DescriptorVector, geo: Geometry,
               exp: ExperimentalFeatures) -> DualGraphPair:
    """Assemble the dual-graph tensors for one experiment.

    All inputs must describe the same molecule; tensors are emitted in
    the molecule's canonical atom order so equivalent writings of one
    structure produce identical arrays.

    Raises:
        SingleAtomMoleculeError: the molecule has no bonds.
        ValueError: descriptor/geometry sizes inconsistent with ``mol``.
    """
    if mol.num_bonds == 0:
        raise SingleAtomMoleculeError(
            f"{mol.smiles!r} has no bonds; the bond-angle graph would be empty")
    if geo.bond_lengths.shape[0] != mol.num_bonds:
        raise ValueError("geometry does not match the molecule's bond count")

    codebook = get_codebook()
    perm = mol.canonical_order
    inverse = {orig: pos for pos, orig in enumerate(perm)}

    node_features = _encode_atoms(mol, perm, codebook)

    # Canonical bond rows: sorted by renumbered endpoints.
    bond_rows = sorted(
        range(mol.num_bonds),
        key=lambda i: (min(inverse[mol.bonds[i].a], inverse[mol.bonds[i].b]),
                       max(inverse[mol.bonds[i].a], inverse[mol.bonds[i].b])),
    )
    row_of_bond = {orig: row for row, orig in enumerate(bond_rows)}

    conditions = exp.flatten()
    order_codes = codebook["bond_order"]
    direction_codes = codebook["bond_direction"]

    n_edges = 2 * mol.num_bonds
    edge_src = np.empty(n_edges, dtype=np.int64)
    edge_dst = np.empty(n_edges, dtype=np.int64)
    edge_features = np.empty((n_edges, ATOM_EDGE_WIDTH))
    edge_bond_index = np.empty(n_edges, dtype=np.int64)
    bond_map = np.empty((mol.num_bonds, 2), dtype=np.int64)

    for row, orig in enumerate(bond_rows):
        bond = mol.bonds[orig]
        u, v = inverse[bond.a], inverse[bond.b]
        if u > v:
            u, v = v, u
            forward_dir = _DIRECTION_FLIP[bond.direction.value]
        else:
            forward_dir = bond.direction.value
        for k, (src, dst, direction) in enumerate(
                ((u, v, forward_dir), (v, u, _DIRECTION_FLIP[forward_dir]))):
            e = 2 * row + k
            edge_src[e] = src
            edge_dst[e] = dst
            edge_features[e, 0] = direction_codes[direction]
            edge_features[e, 1] = order_codes[bond.order.value]
            edge_features[e, 2] = float(bond.in_ring)
            edge_features[e, 3:] = conditions
            edge_bond_index[e] = row
        bond_map[row] = (2 * row, 2 * row + 1)

    bond_node = np.empty((mol.num_bonds, BOND_NODE_WIDTH))
    for row, orig in enumerate(bond_rows):
        bond_node[row, 0] = geo.bond_lengths[orig]

    angle_by_pair = {pair: float(angle)
                     for pair, angle in zip(geo.angle_pairs, geo.angles)}
    descriptors = desc.as_array()

    incident: list[list[int]] = [[] for _ in range(mol.num_atoms)]
    for row, orig in enumerate(bond_rows):
        bond = mol.bonds[orig]
        incident[inverse[bond.a]].append(row)
        incident[inverse[bond.b]].append(row)

    angle_src: list[int] = []
    angle_dst: list[int] = []
    angle_feature_rows: list[np.ndarray] = []
    for pos in range(mol.num_atoms):
        rows_here = sorted(incident[pos])
        for bi in rows_here:
            for bj in rows_here:
                if bi == bj:
                    continue
                pair = (bond_rows[bi], bond_rows[bj])
                if pair not in angle_by_pair:
                    raise ValueError(
                        "geometry angles do not match the molecule's topology")
                feature = np.empty(BOND_EDGE_WIDTH)
                feature[0] = angle_by_pair[pair]
                feature[1:] = descriptors
                angle_src.append(bi)
                angle_dst.append(bj)
                angle_feature_rows.append(feature)

    angle_graph = BondAngleGraph(
        node_features=bond_node,
        edge_src=np.asarray(angle_src, dtype=np.int64),
        edge_dst=np.asarray(angle_dst, dtype=np.int64),
        edge_features=(np.stack(angle_feature_rows)
                       if angle_feature_rows
                       else np.empty((0, BOND_EDGE_WIDTH))),
    )
    atom_graph = AtomBondGraph(
        node_features=node_features,
        edge_src=edge_src,
        edge_dst=edge_dst,
        edge_features=edge_features,
    )
    return DualGraphPair(
        atom_graph=atom_graph,
        angle_graph=angle_graph,
        edge_bond_index=edge_bond_index,
        bond_map=bond_map,
        codebook_version=codebook["version"],
    )
