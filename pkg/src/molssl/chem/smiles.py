"""SMILES parsing into :class:`MolGraph`.

Supported: organic-subset and bracket atoms (isotope ignored, charge and
H-count honoured), bonds ``- = # :``, branches, ring closures ``1-9`` and
``%nn``, and ``.`` fragment separators. Stereo marks (``@``, ``/``, ``\\``)
are parsed and dropped with a :class:`StereoDiscardedWarning`.
"""

from __future__ import annotations

import re
import warnings
from collections import deque

from molssl.chem.elements import AROMATIC_SYMBOLS, ELEMENTS, ORGANIC_SUBSET
from molssl.chem.graph import Atom, Bond, BondOrder, MolGraph
from molssl.errors import (
    SmilesError,
    UnclosedBranch,
    UnknownElement,
    UnpairedRingBond,
    ValenceViolation,
)


class StereoDiscardedWarning(UserWarning):
    pass


class ValenceWarning(UserWarning):
    pass


_BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": None,  # directional single bond; stereo dropped
    "\\": None,
}

_BRACKET_RE = re.compile(
    r"""^(?P<isotope>\d+)?
        (?P<symbol>[A-Z][a-z]?|se|as|te|[bcnops]|\*)
        (?P<chiral>@(?:@|TH[12]|AL[12]|SP[1-3]|TB\d{1,2}|OH\d{1,2})?)?
        (?P<hcount>H\d*)?
        (?P<charge>[+-](?:\d+|[+-]*))?
        (?::(?P<klass>\d+))?$""",
    re.VERBOSE,
)


class _ProtoAtom:
    __slots__ = ("element", "aromatic", "charge", "hcount", "bracket", "pos")

    def __init__(self, element, aromatic, charge=0, hcount=None, bracket=False, pos=0):
        self.element = element
        self.aromatic = aromatic
        self.charge = charge
        self.hcount = hcount
        self.bracket = bracket
        self.pos = pos


def _parse_charge(text: str) -> int:
    if not text:
        return 0
    sign = 1 if text[0] == "+" else -1
    rest = text[1:]
    if rest.isdigit():
        return sign * int(rest)
    return sign * len(text)


def _bracket_atom(body: str, smiles: str, pos: int) -> _ProtoAtom:
    m = _BRACKET_RE.match(body)
    if m is None:
        raise SmilesError(f"malformed bracket atom [{body}]", smiles, pos)
    symbol = m.group("symbol")
    aromatic = symbol[0].islower()
    element = AROMATIC_SYMBOLS.get(symbol, symbol) if aromatic else symbol
    if element not in ELEMENTS:
        raise UnknownElement(f"unknown element {symbol!r}", smiles, pos)
    if m.group("chiral"):
        warnings.warn(f"stereo mark dropped in {smiles!r}", StereoDiscardedWarning, stacklevel=4)
    h = m.group("hcount")
    hcount = 0 if h is None else (1 if h == "H" else int(h[1:]))
    return _ProtoAtom(element, aromatic, _parse_charge(m.group("charge") or ""), hcount, True, pos)


def _implicit_h(atom: _ProtoAtom, bond_sum: int, smiles: str, strict: bool) -> int:
    valences = ELEMENTS[atom.element].valences
    if atom.bracket or not valences:
        return atom.hcount or 0
    if bond_sum > max(valences):
        msg = f"{atom.element} with bond order sum {bond_sum} exceeds valence {max(valences)}"
        if strict:
            raise ValenceViolation(msg, smiles, atom.pos)
        warnings.warn(f"{msg} in {smiles!r}", ValenceWarning, stacklevel=4)
        return 0
    if atom.aromatic:
        # one electron goes to the aromatic system; only the lowest valence applies
        return max(0, valences[0] - bond_sum - 1)
    for v in valences:
        if v >= bond_sum:
            return v - bond_sum
    return 0


def parse_smiles(text: str, strict: bool = False) -> MolGraph:
    """Parse ``text`` into a ring-perceived :class:`MolGraph`.

    With ``strict=True`` valence violations raise :class:`ValenceViolation`;
    otherwise they warn and the offending atom gets no implicit hydrogens.
    """
    smiles = text.strip()
    if not smiles:
        raise SmilesError("empty SMILES", text)
    if not smiles.isascii():
        raise SmilesError("non-ASCII character", smiles)

    atoms: list[_ProtoAtom] = []
    bonds: dict[frozenset, BondOrder] = {}
    bond_list: list[tuple[int, int]] = []
    branch_stack: list[int] = []
    open_rings: dict[int, tuple[int, str | None, int]] = {}
    prev: int | None = None
    pending: str | None = None
    last = "start"  # kind of the previous token
    i = 0
    n = len(smiles)

    def add_bond(a, b, symbol, pos):
        key = frozenset((a, b))
        if a == b:
            raise SmilesError("ring bond closes on itself", smiles, pos)
        if key in bonds:
            raise SmilesError("duplicate bond between the same atoms", smiles, pos)
        order = _BOND_SYMBOLS.get(symbol) if symbol is not None else None
        if order is None:
            order = BondOrder.AROMATIC if atoms[a].aromatic and atoms[b].aromatic else BondOrder.SINGLE
        bonds[key] = order
        bond_list.append((a, b))

    def add_atom(proto):
        nonlocal prev, pending, last
        atoms.append(proto)
        idx = len(atoms) - 1
        if prev is not None:
            add_bond(prev, idx, pending, proto.pos)
        elif pending is not None:
            raise SmilesError("bond symbol without a preceding atom", smiles, proto.pos)
        pending = None
        prev = idx
        last = "atom"

    while i < n:
        c = smiles[i]
        if c == "[":
            j = smiles.find("]", i + 1)
            if j < 0:
                raise SmilesError("unterminated bracket atom", smiles, i)
            add_atom(_bracket_atom(smiles[i + 1:j], smiles, i))
            i = j + 1
            continue
        if c.isalpha() or c == "*":
            two = smiles[i:i + 2]
            if two in ("Cl", "Br"):
                add_atom(_ProtoAtom(two, False, pos=i))
                i += 2
                continue
            if c in ORGANIC_SUBSET:
                add_atom(_ProtoAtom(c, False, pos=i))
            elif c in "bcnops":
                add_atom(_ProtoAtom(AROMATIC_SYMBOLS[c], True, pos=i))
            else:
                raise UnknownElement(f"unknown or non-organic atom {c!r} outside brackets", smiles, i)
            i += 1
            continue
        if c in _BOND_SYMBOLS or c == "$":
            if c == "$":
                raise SmilesError("quadruple bonds are not supported", smiles, i)
            if pending is not None or last in ("start", "dot"):
                raise SmilesError("misplaced bond symbol", smiles, i)
            if c in "/\\":
                warnings.warn(f"stereo mark dropped in {smiles!r}", StereoDiscardedWarning, stacklevel=2)
            pending = c
            last = "bond"
            i += 1
            continue
        if c == "(":
            if prev is None or pending is not None:
                raise SmilesError("branch without a preceding atom", smiles, i)
            branch_stack.append(prev)
            last = "open"
            i += 1
            continue
        if c == ")":
            if not branch_stack:
                raise UnclosedBranch("unbalanced ')'", smiles, i)
            if pending is not None or last == "open":
                raise SmilesError("empty branch or dangling bond", smiles, i)
            prev = branch_stack.pop()
            last = "close"
            i += 1
            continue
        if c.isdigit() or c == "%":
            if c == "%":
                digits = smiles[i + 1:i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise SmilesError("'%' must be followed by two digits", smiles, i)
                ring, width = int(digits), 3
            else:
                ring, width = int(c), 1
            # a digit after ')' binds to the branch root, as common toolkits accept
            if prev is None or last not in ("atom", "ring", "bond", "close"):
                raise SmilesError("ring-closure digit without an atom", smiles, i)
            if ring in open_rings:
                other, sym_open, _ = open_rings.pop(ring)
                if sym_open is not None and pending is not None and sym_open != pending:
                    raise SmilesError("conflicting ring-closure bond symbols", smiles, i)
                add_bond(other, prev, pending if pending is not None else sym_open, i)
            else:
                open_rings[ring] = (prev, pending, i)
            pending = None
            last = "ring"
            i += width
            continue
        if c == ".":
            if pending is not None or last in ("start", "dot", "open"):
                raise SmilesError("misplaced '.'", smiles, i)
            prev = None
            last = "dot"
            i += 1
            continue
        raise SmilesError(f"unexpected character {c!r}", smiles, i)

    if branch_stack:
        raise UnclosedBranch("unclosed '('", smiles, n)
    if open_rings:
        digit, (_, _, pos) = next(iter(open_rings.items()))
        raise UnpairedRingBond(f"ring-closure {digit} never closed", smiles, pos)
    if pending is not None or last == "dot":
        raise SmilesError("SMILES ends with a dangling bond or '.'", smiles, n)
    if not atoms:
        raise SmilesError("no atoms", smiles)

    bond_sum = [0] * len(atoms)
    for (a, b) in bond_list:
        contrib = bonds[frozenset((a, b))].valence_contribution
        bond_sum[a] += contrib
        bond_sum[b] += contrib
    hcount = [_implicit_h(at, bond_sum[k], smiles, strict) for k, at in enumerate(atoms)]

    # Fold plain [H] atoms hanging off one heavy atom into that atom's H count.
    nbrs: list[list[int]] = [[] for _ in atoms]
    for a, b in bond_list:
        nbrs[a].append(b)
        nbrs[b].append(a)
    drop = set()
    for k, at in enumerate(atoms):
        if at.element == "H" and at.charge == 0 and len(nbrs[k]) == 1:
            host = nbrs[k][0]
            if atoms[host].element != "H" and host not in drop:
                drop.add(k)
                hcount[host] += 1
    keep = [k for k in range(len(atoms)) if k not in drop]
    remap = {old: new for new, old in enumerate(keep)}
    new_bonds = []
    for a, b in bond_list:
        if a in drop or b in drop:
            continue
        new_bonds.append(Bond(remap[a], remap[b], bonds[frozenset((a, b))]))
    degree = [0] * len(keep)
    for bd in new_bonds:
        degree[bd.begin] += 1
        degree[bd.end] += 1
    new_atoms = tuple(
        Atom(
            element=atoms[old].element,
            formal_charge=atoms[old].charge,
            aromatic=atoms[old].aromatic,
            explicit_h=hcount[old],
            degree=degree[new],
        )
        for new, old in enumerate(keep)
    )
    graph = MolGraph(new_atoms, tuple(new_bonds), smiles_source=text)
    return perceive_rings(graph, strict=strict)


def perceive_rings(graph: MolGraph, strict: bool = False) -> MolGraph:
    """Mark ring atoms/bonds from the fundamental cycles of a BFS spanning forest.

    The number of basis cycles is ``bonds - atoms + components``.
    """
    n = graph.n_atoms
    adj = [[] for _ in range(n)]
    for idx, b in enumerate(graph.bonds):
        adj[b.begin].append((b.end, idx))
        adj[b.end].append((b.begin, idx))

    parent = [-1] * n
    parent_bond = [-1] * n
    depth = [-1] * n
    tree_bonds = set()
    n_components = 0
    for root in range(n):
        if depth[root] >= 0:
            continue
        n_components += 1
        depth[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, bidx in adj[u]:
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    parent_bond[v] = bidx
                    tree_bonds.add(bidx)
                    queue.append(v)

    ring_atoms = set()
    ring_bonds = set()
    basis = []
    for bidx, b in enumerate(graph.bonds):
        if bidx in tree_bonds:
            continue
        u, v = b.begin, b.end
        left, right = [u], [v]
        cycle_bonds = {bidx}
        while u != v:
            if depth[u] >= depth[v]:
                cycle_bonds.add(parent_bond[u])
                u = parent[u]
                left.append(u)
            else:
                cycle_bonds.add(parent_bond[v])
                v = parent[v]
                right.append(v)
        cycle = left + right[-2::-1]
        basis.append(tuple(cycle))
        ring_atoms.update(cycle)
        ring_bonds.update(cycle_bonds)

    atoms = []
    for k, at in enumerate(graph.atoms):
        in_ring = k in ring_atoms
        aromatic = at.aromatic
        if aromatic and not in_ring:
            msg = f"aromatic atom {k} ({at.element}) is not in a ring"
            if strict:
                raise SmilesError(msg, graph.smiles_source)
            warnings.warn(f"{msg} in {graph.smiles_source!r}; treated as aliphatic", ValenceWarning, stacklevel=2)
            aromatic = False
        atoms.append(Atom(at.element, at.formal_charge, aromatic, at.explicit_h, in_ring, at.degree))
    bonds = []
    for bidx, b in enumerate(graph.bonds):
        order = b.order
        if order is BondOrder.AROMATIC and not (atoms[b.begin].aromatic and atoms[b.end].aromatic):
            order = BondOrder.SINGLE if bidx not in ring_bonds else order
        bonds.append(Bond(b.begin, b.end, order, bidx in ring_bonds))
    return MolGraph(tuple(atoms), tuple(bonds), graph.smiles_source, n_components, tuple(basis))


def count_ring_basis(graph: MolGraph) -> int:
    return len(graph.ring_basis)
