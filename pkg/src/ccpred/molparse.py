"""SMILES parsing into an annotated molecular graph.

Supports the common organic subset: bare atoms B/C/N/O/P/S/F/Cl/Br/I,
aromatic lowercase b/c/n/o/p/s, bracket atoms with charge, H-count and
@/@@ chirality, ring-closure digits (incl. %nn), branches, bond symbols
``- = # : / \\`` and dot-separated fragments.  Isotope numbers are parsed
and ignored with a warning.  Anything outside this subset raises
:class:`UnsupportedFeatureError`; malformed input raises
:class:`SmilesSyntaxError` with the offending position.

Implicit hydrogens follow a fixed default-valence table (B 3, C 4, N 3,
O 2, P 3/5, S 2/4/6, halogens 1).  Aromatic bare atoms count each ring
bond as one plus a single one-unit aromatic-system bonus, and never
escalate to a higher valence state; bracket atoms carry exactly the
hydrogen count written in the brackets (zero when omitted), as SMILES
prescribes.

A ring is aromatic only when written with lowercase aromatic atoms; no
independent aromaticity perception is attempted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum


class SmilesSyntaxError(ValueError):
    """Malformed SMILES input; carries the character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"position {position}: {message}")
        self.position = position


class UnsupportedFeatureError(ValueError):
    """Valid SMILES grammar that falls outside the supported subset."""


class Chirality(Enum):
    NONE = "none"
    CW = "cw"
    CCW = "ccw"


class BondOrder(Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"


class BondDirection(Enum):
    NONE = "none"
    UP = "up"
    DOWN = "down"


class Hybridization(Enum):
    OTHER = "other"
    SP = "sp"
    SP2 = "sp2"
    SP3 = "sp3"


# Atomic numbers for every symbol accepted in brackets; bare (organic
# subset) atoms are the keys of DEFAULT_VALENCES below.
ATOMIC_NUMBERS: dict[str, int] = {
    "H": 1, "Li": 3, "B": 5, "C": 6, "N": 7, "O": 8, "F": 9, "Na": 11,
    "Mg": 12, "Si": 14, "P": 15, "S": 16, "Cl": 17, "K": 19, "Ca": 20,
    "Zn": 30, "As": 33, "Se": 34, "Br": 35, "I": 53,
}

SYMBOLS_BY_NUMBER: dict[int, str] = {z: s for s, z in ATOMIC_NUMBERS.items()}

# Standard atomic weights, g/mol.
ATOMIC_MASSES: dict[int, float] = {
    1: 1.008, 3: 6.94, 5: 10.81, 6: 12.011, 7: 14.007, 8: 15.999,
    9: 18.998, 11: 22.990, 12: 24.305, 14: 28.085, 15: 30.974,
    16: 32.06, 17: 35.45, 19: 39.098, 20: 40.078, 30: 65.38,
    33: 74.922, 34: 78.971, 35: 79.904, 53: 126.904,
}

# Allowed valence states for bare-atom implicit-H assignment, smallest
# first.  Multi-valent P and S escalate to the next state when the bond
# sum exceeds the smaller one.
DEFAULT_VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,), "C": (4,), "N": (3,), "O": (2,), "P": (3, 5),
    "S": (2, 4, 6), "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,),
}

ORGANIC_SUBSET = set(DEFAULT_VALENCES)
AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s"}

_BOND_SYMBOLS = {
    "-": (BondOrder.SINGLE, BondDirection.NONE),
    "=": (BondOrder.DOUBLE, BondDirection.NONE),
    "#": (BondOrder.TRIPLE, BondDirection.NONE),
    ":": (BondOrder.AROMATIC, BondDirection.NONE),
    "/": (BondOrder.SINGLE, BondDirection.UP),
    "\\": (BondOrder.SINGLE, BondDirection.DOWN),
}

_BOND_SUM = {
    BondOrder.SINGLE: 1,
    BondOrder.DOUBLE: 2,
    BondOrder.TRIPLE: 3,
    BondOrder.AROMATIC: 1,  # plus a one-unit bonus per aromatic atom
}


@dataclass(frozen=True, slots=True)
class Atom:
    """One heavy (or explicit-H) atom with model-facing attributes."""

    element: int
    formal_charge: int = 0
    aromatic: bool = False
    implicit_h: int = 0
    chirality: Chirality = Chirality.NONE
    degree: int = 0
    explicit_valence: int = 0
    implicit_valence: int = 0
    hybridization: Hybridization = Hybridization.OTHER

    @property
    def symbol(self) -> str:
        return SYMBOLS_BY_NUMBER.get(self.element, f"Z{self.element}")


@dataclass(frozen=True, slots=True)
class Bond:
    """Edge between two atom indices."""

    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE
    in_ring: bool = False
    direction: BondDirection = BondDirection.NONE

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass(frozen=True)
class MolGraph:
    """Parsed molecule: atoms, bonds, perceived rings, canonical order.

    ``canonical_order[k]`` is the input index of the atom at canonical
    position ``k``; the permutation is deterministic for a given input
    and stable under relabeling up to graph automorphism.
    """

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    rings: tuple[tuple[int, ...], ...]
    canonical_order: tuple[int, ...]
    smiles: str = ""

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    def neighbors(self, idx: int) -> list[int]:
        return [b.other(idx) for b in self.bonds if idx in (b.a, b.b)]

    def incident_bonds(self, idx: int) -> list[int]:
        return [i for i, b in enumerate(self.bonds) if idx in (b.a, b.b)]

    def molecular_weight(self) -> float:
        # fsum: exact rounding, so the value is independent of atom order.
        import math
        terms = [ATOMIC_MASSES[a.element] for a in self.atoms]
        terms += [a.implicit_h * ATOMIC_MASSES[1] for a in self.atoms]
        return math.fsum(terms)

    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.element != 1)

    def total_hydrogens(self) -> int:
        explicit = sum(1 for a in self.atoms if a.element == 1)
        return explicit + sum(a.implicit_h for a in self.atoms)

    def debug_dump(self) -> str:
        """Human-readable atom/bond/ring listing for the CLI."""
        lines = [f"smiles: {self.smiles}",
                 f"atoms: {self.num_atoms}  bonds: {self.num_bonds}  "
                 f"rings: {len(self.rings)}  molwt: {self.molecular_weight():.3f}"]
        for i, a in enumerate(self.atoms):
            lines.append(
                f"  atom {i:3d} {a.symbol:>2s} charge={a.formal_charge:+d} "
                f"arom={int(a.aromatic)} H={a.implicit_h} deg={a.degree} "
                f"val={a.explicit_valence}+{a.implicit_valence} "
                f"hyb={a.hybridization.value} chi={a.chirality.value}")
        for i, b in enumerate(self.bonds):
            lines.append(
                f"  bond {i:3d} {b.a:3d}-{b.b:<3d} {b.order.value:<8s} "
                f"ring={int(b.in_ring)} dir={b.direction.value}")
        for i, ring in enumerate(self.rings):
            lines.append(f"  ring {i:3d} size={len(ring)} atoms={list(ring)}")
        return "\n".join(lines)


@dataclass
class _PendingAtom:
    element: int
    aromatic: bool
    charge: int = 0
    h_count: int | None = None  # None: infer from valence table
    chirality: Chirality = Chirality.NONE
    position: int = 0


@dataclass
class _PendingBond:
    a: int
    b: int
    order: BondOrder | None  # None: order unspecified in the input
    direction: BondDirection
    position: int


_TWO_LETTER_BARE = ("Cl", "Br")


class _Parser:
    """Single-pass cursor parser for one SMILES string."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[_PendingAtom] = []
        self.bonds: list[_PendingBond] = []
        self.prev_atom: int | None = None
        self.branch_stack: list[int | None] = []
        # ring number -> (atom index, bond symbol or None, position)
        self.open_rings: dict[int, tuple[int, tuple[BondOrder | None, BondDirection], int]] = {}
        self.pending_bond: tuple[BondOrder | None, BondDirection] | None = None

    def error(self, message: str, position: int | None = None) -> SmilesSyntaxError:
        return SmilesSyntaxError(message, self.pos if position is None else position)

    def parse(self) -> tuple[list[_PendingAtom], list[_PendingBond]]:
        text = self.text
        n = len(text)
        while self.pos < n:
            ch = text[self.pos]
            if ch == "(":
                if self.prev_atom is None:
                    raise self.error("branch before any atom")
                self.branch_stack.append(self.prev_atom)
                self.pos += 1
            elif ch == ")":
                if not self.branch_stack:
                    raise self.error("unmatched ')'")
                if self.pending_bond is not None:
                    raise self.error("dangling bond symbol before ')'")
                self.prev_atom = self.branch_stack.pop()
                self.pos += 1
            elif ch in _BOND_SYMBOLS:
                if self.pending_bond is not None:
                    raise self.error("two consecutive bond symbols")
                self.pending_bond = _BOND_SYMBOLS[ch]
                self.pos += 1
            elif ch == ".":
                if self.branch_stack:
                    raise self.error("'.' inside a branch")
                if self.pending_bond is not None:
                    raise self.error("bond symbol before '.'")
                self.prev_atom = None
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                self._ring_closure()
            elif ch == "[":
                self._bracket_atom()
            elif ch == "*":
                raise UnsupportedFeatureError(
                    f"position {self.pos}: wildcard atoms are not supported")
            elif ch == "$" or ch == "~":
                raise UnsupportedFeatureError(
                    f"position {self.pos}: bond symbol {ch!r} is not supported")
            else:
                self._bare_atom()
        if self.branch_stack:
            raise self.error("unclosed '('", len(text) - 1)
        if self.pending_bond is not None:
            raise self.error("dangling bond symbol at end", len(text) - 1)
        if self.open_rings:
            num = sorted(self.open_rings)[0]
            raise self.error(f"unclosed ring bond {num}",
                             self.open_rings[num][2])
        return self.atoms, self.bonds

    def _take_pending(self) -> tuple[BondOrder | None, BondDirection]:
        pending = self.pending_bond
        self.pending_bond = None
        if pending is None:
            return None, BondDirection.NONE
        return pending

    def _add_atom(self, atom: _PendingAtom) -> None:
        idx = len(self.atoms)
        self.atoms.append(atom)
        if self.prev_atom is not None:
            order, direction = self._take_pending()
            self.bonds.append(_PendingBond(self.prev_atom, idx, order,
                                           direction, atom.position))
        elif self.pending_bond is not None:
            raise self.error("bond symbol with no preceding atom")
        self.prev_atom = idx

    def _ring_closure(self) -> None:
        start = self.pos
        ch = self.text[self.pos]
        if ch == "%":
            digits = self.text[self.pos + 1:self.pos + 3]
            if len(digits) < 2 or not digits.isdigit():
                raise self.error("'%' must be followed by two digits")
            number = int(digits)
            self.pos += 3
        else:
            number = int(ch)
            self.pos += 1
        if self.prev_atom is None:
            raise self.error("ring closure before any atom", start)
        symbol = self.pending_bond
        self.pending_bond = None
        if number in self.open_rings:
            other, other_symbol, _ = self.open_rings.pop(number)
            if other == self.prev_atom:
                raise self.error("ring closure to the same atom", start)
            order = self._merge_ring_orders(other_symbol, symbol, start)
            direction = BondDirection.NONE
            for sym in (other_symbol, symbol):
                if sym is not None and sym[1] is not BondDirection.NONE:
                    direction = sym[1]
            self.bonds.append(_PendingBond(other, self.prev_atom, order,
                                           direction, start))
        else:
            self.open_rings[number] = (self.prev_atom, symbol, start)

    def _merge_ring_orders(self, first, second, position) -> BondOrder | None:
        orders = [s[0] for s in (first, second) if s is not None and s[0] is not None]
        if len(orders) == 2 and orders[0] is not orders[1]:
            raise self.error("conflicting ring-closure bond orders", position)
        return orders[0] if orders else None

    def _bare_atom(self) -> None:
        start = self.pos
        text = self.text
        two = text[self.pos:self.pos + 2]
        if two in _TWO_LETTER_BARE:
            symbol, aromatic = two, False
            self.pos += 2
        else:
            ch = text[self.pos]
            if ch in AROMATIC_SYMBOLS:
                symbol, aromatic = ch.upper(), True
            elif ch.isupper() and ch in ORGANIC_SUBSET:
                symbol, aromatic = ch, False
            elif ch.isalpha():
                raise self.error(f"atom {ch!r} is not in the organic subset; "
                                 "write it in brackets", start)
            else:
                raise self.error(f"unexpected character {ch!r}", start)
            self.pos += 1
        self._add_atom(_PendingAtom(ATOMIC_NUMBERS[symbol], aromatic,
                                    position=start))

    def _bracket_atom(self) -> None:
        start = self.pos
        end = self.text.find("]", start)
        if end < 0:
            raise self.error("unterminated '['", start)
        body = self.text[start + 1:end]
        self.pos = end + 1
        cursor = 0

        isotope = ""
        while cursor < len(body) and body[cursor].isdigit():
            isotope += body[cursor]
            cursor += 1
        if isotope:
            warnings.warn(f"isotope label {isotope} ignored", stacklevel=4)

        if cursor >= len(body):
            raise self.error("empty bracket atom", start)
        aromatic = False
        if body[cursor].islower():
            if body[cursor] not in AROMATIC_SYMBOLS and body[cursor:cursor + 2] not in ("se", "as"):
                raise self.error(f"unknown aromatic symbol {body[cursor]!r}", start)
            if body[cursor:cursor + 2] in ("se", "as"):
                symbol = body[cursor:cursor + 2].capitalize()
                cursor += 2
            else:
                symbol = body[cursor].upper()
                cursor += 1
            aromatic = True
        else:
            symbol = body[cursor]
            cursor += 1
            if cursor < len(body) and body[cursor].islower():
                if symbol + body[cursor] in ATOMIC_NUMBERS:
                    symbol += body[cursor]
                    cursor += 1
        if symbol == "*":
            raise UnsupportedFeatureError(
                f"position {start}: wildcard atoms are not supported")
        if symbol not in ATOMIC_NUMBERS:
            raise self.error(f"unknown element {symbol!r}", start)

        chirality = Chirality.NONE
        if cursor < len(body) and body[cursor] == "@":
            if body[cursor + 1:cursor + 3] in ("TH", "AL", "SP", "OH", "TB"):
                raise UnsupportedFeatureError(
                    f"position {start}: extended stereo descriptors are not supported")
            if body[cursor:cursor + 2] == "@@":
                chirality = Chirality.CW
                cursor += 2
            else:
                chirality = Chirality.CCW
                cursor += 1

        h_count = 0
        if cursor < len(body) and body[cursor] == "H":
            cursor += 1
            digits = ""
            while cursor < len(body) and body[cursor].isdigit():
                digits += body[cursor]
                cursor += 1
            h_count = int(digits) if digits else 1

        charge = 0
        if cursor < len(body) and body[cursor] in "+-":
            sign = 1 if body[cursor] == "+" else -1
            run = 1
            cursor += 1
            digits = ""
            while cursor < len(body) and body[cursor].isdigit():
                digits += body[cursor]
                cursor += 1
            if digits:
                charge = sign * int(digits)
            else:
                while cursor < len(body) and body[cursor] == body[cursor - 1]:
                    run += 1
                    cursor += 1
                charge = sign * run

        if cursor < len(body) and body[cursor] == ":":
            cursor = len(body)  # atom-class label: parsed and ignored
            warnings.warn("atom class label ignored", stacklevel=4)
        if cursor != len(body):
            raise self.error(f"trailing characters {body[cursor:]!r} in bracket atom",
                             start)
        self._add_atom(_PendingAtom(ATOMIC_NUMBERS[symbol], aromatic,
                                    charge=charge, h_count=h_count,
                                    chirality=chirality, position=start))


def _find_ring_bonds(num_atoms: int, bonds: list[_PendingBond]) -> set[int]:
    """Indices of bonds lying on a cycle of the graph.

    A bond is in a ring exactly when its endpoints stay connected after
    the bond is removed.  Quadratic, which is irrelevant at molecule
    scale and keeps the rule self-evident.
    """
    adjacency: list[list[tuple[int, int]]] = [[] for _ in range(num_atoms)]
    for i, bond in enumerate(bonds):
        adjacency[bond.a].append((bond.b, i))
        adjacency[bond.b].append((bond.a, i))
    in_ring: set[int] = set()
    for skip, bond in enumerate(bonds):
        seen = {bond.a}
        queue = [bond.a]
        while queue and bond.b not in seen:
            node = queue.pop()
            for nbr, edge in adjacency[node]:
                if edge != skip and nbr not in seen:
                    seen.add(nbr)
                    queue.append(nbr)
        if bond.b in seen:
            in_ring.add(skip)
    return in_ring


def _smallest_rings(num_atoms: int, bonds: list[_PendingBond],
                    ring_bonds: set[int]) -> list[tuple[int, ...]]:
    """One smallest cycle through each ring bond, de-duplicated.

    BFS on the graph minus the bond itself yields the shortest alternate
    path between its endpoints; cycles are reported in traversal order
    and sorted by (size, atom tuple) for determinism.
    """
    adjacency: list[list[tuple[int, int]]] = [[] for _ in range(num_atoms)]
    for i, bond in enumerate(bonds):
        adjacency[bond.a].append((bond.b, i))
        adjacency[bond.b].append((bond.a, i))
    seen: set[frozenset[int]] = set()
    rings: list[tuple[int, ...]] = []
    for skip in sorted(ring_bonds):
        source, target = bonds[skip].a, bonds[skip].b
        parent = {source: -1}
        queue = [source]
        while queue and target not in parent:
            frontier: list[int] = []
            for node in queue:
                for nbr, edge in adjacency[node]:
                    if edge == skip or nbr in parent:
                        continue
                    parent[nbr] = node
                    frontier.append(nbr)
            queue = frontier
        if target not in parent:
            continue
        path = [target]
        while path[-1] != source:
            path.append(parent[path[-1]])
        key = frozenset(path)
        if key not in seen:
            seen.add(key)
            rings.append(tuple(path))
    rings.sort(key=lambda ring: (len(ring), tuple(sorted(ring))))
    return rings


def _canonical_order(atoms: list[Atom], bonds: list[Bond]) -> tuple[int, ...]:
    """Morgan-style iterative refinement with input-order tie-break."""
    n = len(atoms)
    neighbors: list[list[int]] = [[] for _ in range(n)]
    for bond in bonds:
        neighbors[bond.a].append(bond.b)
        neighbors[bond.b].append(bond.a)
    invariants = [
        (a.element, a.degree, a.formal_charge, int(a.aromatic), a.implicit_h,
         a.explicit_valence)
        for a in atoms
    ]
    ranks = _rank(invariants)
    for _ in range(n):
        refined = [
            (ranks[i], tuple(sorted(ranks[j] for j in neighbors[i])))
            for i in range(n)
        ]
        new_ranks = _rank(refined)
        if new_ranks == ranks:
            break
        ranks = new_ranks
    return tuple(sorted(range(n), key=lambda i: (ranks[i], i)))


def _rank(keys: list) -> list[int]:
    ordered = {key: rank for rank, key in enumerate(sorted(set(keys)))}
    return [ordered[key] for key in keys]


def parse_smiles(text: str) -> MolGraph:
    """Parse a SMILES string into a :class:`MolGraph`.

    Args:
        text: non-empty SMILES drawn from the supported subset.

    Returns:
        The parsed molecule with implicit hydrogens, ring flags and a
        canonical atom order assigned.

    Raises:
        SmilesSyntaxError: malformed input (message carries position).
        UnsupportedFeatureError: grammar outside the supported subset.
    """
    if not isinstance(text, str) or not text.strip():
        raise SmilesSyntaxError("empty SMILES", 0)
    text = text.strip()
    pending_atoms, pending_bonds = _Parser(text).parse()

    seen_pairs: set[tuple[int, int]] = set()
    for bond in pending_bonds:
        key = (min(bond.a, bond.b), max(bond.a, bond.b))
        if key in seen_pairs:
            raise SmilesSyntaxError("duplicate bond between atoms "
                                    f"{key[0]} and {key[1]}", bond.position)
        seen_pairs.add(key)

    ring_bond_ids = _find_ring_bonds(len(pending_atoms), pending_bonds)

    # Resolve unspecified bond orders: aromatic when both ends are
    # aromatic and the bond sits in a ring (biphenyl's inter-ring bond
    # stays single), single otherwise.
    orders: list[BondOrder] = []
    for i, bond in enumerate(pending_bonds):
        if bond.order is not None:
            orders.append(bond.order)
        elif (pending_atoms[bond.a].aromatic and pending_atoms[bond.b].aromatic
              and i in ring_bond_ids):
            orders.append(BondOrder.AROMATIC)
        else:
            orders.append(BondOrder.SINGLE)

    for i, bond in enumerate(pending_bonds):
        if orders[i] is BondOrder.AROMATIC:
            if not (pending_atoms[bond.a].aromatic and pending_atoms[bond.b].aromatic):
                raise SmilesSyntaxError(
                    "aromatic bond between non-aromatic atoms", bond.position)

    for idx, atom in enumerate(pending_atoms):
        if atom.aromatic:
            incident = [i for i, b in enumerate(pending_bonds) if idx in (b.a, b.b)]
            if not any(i in ring_bond_ids for i in incident):
                raise SmilesSyntaxError("aromatic atom outside any ring",
                                        atom.position)

    atoms = _finalize_atoms(pending_atoms, pending_bonds, orders)
    bonds = tuple(
        Bond(b.a, b.b, orders[i], i in ring_bond_ids, b.direction)
        for i, b in enumerate(pending_bonds)
    )
    rings = tuple(_smallest_rings(len(atoms), pending_bonds, ring_bond_ids))
    order = _canonical_order(list(atoms), list(bonds))
    return MolGraph(tuple(atoms), bonds, rings, order, smiles=text)


def _finalize_atoms(pending: list[_PendingAtom], bonds: list[_PendingBond],
                    orders: list[BondOrder]) -> list[Atom]:
    n = len(pending)
    degree = [0] * n
    bond_sum = [0] * n
    any_aromatic_bond = [False] * n
    double_count = [0] * n
    triple_count = [0] * n
    for bond, order in zip(bonds, orders):
        for end in (bond.a, bond.b):
            degree[end] += 1
            bond_sum[end] += _BOND_SUM[order]
            if order is BondOrder.AROMATIC:
                any_aromatic_bond[end] = True
            elif order is BondOrder.DOUBLE:
                double_count[end] += 1
            elif order is BondOrder.TRIPLE:
                triple_count[end] += 1

    atoms: list[Atom] = []
    for idx, p in enumerate(pending):
        explicit = bond_sum[idx] + (1 if any_aromatic_bond[idx] else 0)
        symbol = SYMBOLS_BY_NUMBER[p.element]
        if p.h_count is not None:
            implicit = p.h_count
        elif p.aromatic:
            states = DEFAULT_VALENCES.get(symbol)
            if states is None:
                raise SmilesSyntaxError("aromatic atom outside the organic subset",
                                        p.position)
            implicit = max(0, states[0] - explicit)
        else:
            states = DEFAULT_VALENCES.get(symbol)
            if states is None:
                raise SmilesSyntaxError(
                    f"bare atom {symbol!r} outside the organic subset", p.position)
            fitting = [s for s in states if s >= explicit]
            if not fitting:
                raise SmilesSyntaxError(
                    f"valence {explicit} exceeds the maximum ({states[-1]}) "
                    f"for {symbol}", p.position)
            implicit = fitting[0] - explicit
        hyb = _hybridization(p, double_count[idx], triple_count[idx],
                             any_aromatic_bond[idx])
        atoms.append(Atom(
            element=p.element,
            formal_charge=p.charge,
            aromatic=p.aromatic,
            implicit_h=implicit,
            chirality=p.chirality,
            degree=degree[idx],
            explicit_valence=explicit,
            implicit_valence=implicit,
            hybridization=hyb,
        ))
    return atoms


def _hybridization(p: _PendingAtom, doubles: int, triples: int,
                   aromatic_bond: bool) -> Hybridization:
    if triples >= 1 or doubles >= 2:
        return Hybridization.SP
    if doubles == 1 or aromatic_bond or p.aromatic:
        return Hybridization.SP2
    if SYMBOLS_BY_NUMBER[p.element] in ("C", "N", "O", "S"):
        return Hybridization.SP3
    return Hybridization.OTHER


def ring_membership(mol: MolGraph) -> tuple[list[bool], tuple[tuple[int, ...], ...]]:
    """Per-bond in-ring flags plus the perceived ring list.

    Acyclic molecules yield all-False flags and an empty ring list.
    """
    return [b.in_ring for b in mol.bonds], mol.rings


def hybridization_of(mol: MolGraph, index: int) -> Hybridization:
    """Hybridization of one atom (rule-based, assigned at parse time)."""
    if not 0 <= index < mol.num_atoms:
        raise IndexError(f"atom index {index} out of range")
    return mol.atoms[index].hybridization


def molecular_formula(mol: MolGraph) -> dict[str, int]:
    """Element-symbol histogram including implicit hydrogens."""
    counts: dict[str, int] = {}
    for atom in mol.atoms:
        counts[atom.symbol] = counts.get(atom.symbol, 0) + 1
        if atom.implicit_h:
            counts["H"] = counts.get("H", 0) + atom.implicit_h
    return counts
