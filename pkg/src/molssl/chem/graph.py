"""Molecular graph containers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class BondOrder(enum.IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence_contribution(self) -> int:
        # aromatic bonds count as single; the extra pi electron is handled per atom
        return 1 if self is BondOrder.AROMATIC else int(self)


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    aromatic: bool = False
    explicit_h: int = 0
    in_ring: bool = False
    degree: int = 0


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: BondOrder
    in_ring: bool = False

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.begin, self.end)


@dataclass(frozen=True)
class MolGraph:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    smiles_source: str = ""
    n_fragments: int = 1
    ring_basis: tuple[tuple[int, ...], ...] = field(default=(), compare=False)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @property
    def multi_fragment(self) -> bool:
        return self.n_fragments > 1

    def neighbors(self) -> list[list[tuple[int, BondOrder]]]:
        """Adjacency list: for each atom, ``(neighbor, bond order)`` pairs."""
        adj: list[list[tuple[int, BondOrder]]] = [[] for _ in self.atoms]
        for b in self.bonds:
            adj[b.begin].append((b.end, b.order))
            adj[b.end].append((b.begin, b.order))
        return adj

    def with_atoms(self, atoms) -> "MolGraph":
        return replace(self, atoms=tuple(atoms))
