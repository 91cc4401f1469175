"""Atom and bond feature vectors.

Layout of an atom vector (``ATOM_FEATURE_DIM`` = 29):

====================  =====  ==============================================
segment               width  notes
====================  =====  ==============================================
element one-hot          13  FEATURE_ELEMENTS + "other"
degree bucket 0..5        6  degrees above 5 fall into the last bucket
hybridization             4  sp, sp2, sp3, other (bond-order approximation)
aromatic                  1
in ring                   1
scaled atomic weight      1  sigmoid((w - WEIGHT_MEAN) / WEIGHT_STD)
valence electrons         1
bound hydrogens           1
formal charge             1
====================  =====  ==============================================

Partial charges are not included.
"""

from __future__ import annotations

import math

import numpy as np

from molssl.chem.elements import ELEMENTS, FEATURE_ELEMENTS, WEIGHT_MEAN, WEIGHT_STD
from molssl.chem.graph import BondOrder, MolGraph

HYBRIDIZATIONS = ("sp", "sp2", "sp3", "other")
N_DEGREE_BUCKETS = 6

ELEMENT_SLICE = slice(0, len(FEATURE_ELEMENTS) + 1)
DEGREE_SLICE = slice(ELEMENT_SLICE.stop, ELEMENT_SLICE.stop + N_DEGREE_BUCKETS)
HYBRID_SLICE = slice(DEGREE_SLICE.stop, DEGREE_SLICE.stop + len(HYBRIDIZATIONS))
AROMATIC_IDX = HYBRID_SLICE.stop
RING_IDX = AROMATIC_IDX + 1
WEIGHT_IDX = RING_IDX + 1
VALENCE_E_IDX = WEIGHT_IDX + 1
H_COUNT_IDX = VALENCE_E_IDX + 1
CHARGE_IDX = H_COUNT_IDX + 1
ATOM_FEATURE_DIM = CHARGE_IDX + 1

ONE_HOT_SEGMENTS = (ELEMENT_SLICE, DEGREE_SLICE, HYBRID_SLICE)

# bond vector: one-hot order (single, double, triple, aromatic) + ring flag
BOND_FEATURE_DIM = 5

_ELEMENT_INDEX = {sym: k for k, sym in enumerate(FEATURE_ELEMENTS)}
_NON_HYBRIDIZED = {"H", "Li", "Na", "K", "Rb", "Cs", "Be", "Mg", "Ca", "Sr", "Ba"}


def scaled_weight(element: str) -> float:
    return 1.0 / (1.0 + math.exp(-(ELEMENTS[element].weight - WEIGHT_MEAN) / WEIGHT_STD))


def hybridization(graph: MolGraph, atom_index: int, adj=None) -> str:
    """Approximate hybridization from the incident bond orders."""
    atom = graph.atoms[atom_index]
    if adj is None:
        adj = graph.neighbors()
    orders = [o for _, o in adj[atom_index]]
    if atom.element in _NON_HYBRIDIZED or ELEMENTS[atom.element].valences == () \
            or (not orders and atom.explicit_h == 0):
        return "other"
    n_double = sum(o is BondOrder.DOUBLE for o in orders)
    if any(o is BondOrder.TRIPLE for o in orders) or n_double >= 2:
        return "sp"
    if n_double == 1 or atom.aromatic or any(o is BondOrder.AROMATIC for o in orders):
        return "sp2"
    return "sp3"


def featurize_atom(graph: MolGraph, atom_index: int, adj=None) -> np.ndarray:
    if not 0 <= atom_index < graph.n_atoms:
        raise IndexError(f"atom index {atom_index} out of range for {graph.n_atoms} atoms")
    atom = graph.atoms[atom_index]
    vec = np.zeros(ATOM_FEATURE_DIM)
    vec[_ELEMENT_INDEX.get(atom.element, len(FEATURE_ELEMENTS))] = 1.0
    vec[DEGREE_SLICE.start + min(atom.degree, N_DEGREE_BUCKETS - 1)] = 1.0
    vec[HYBRID_SLICE.start + HYBRIDIZATIONS.index(hybridization(graph, atom_index, adj))] = 1.0
    vec[AROMATIC_IDX] = float(atom.aromatic)
    vec[RING_IDX] = float(atom.in_ring)
    vec[WEIGHT_IDX] = scaled_weight(atom.element)
    vec[VALENCE_E_IDX] = ELEMENTS[atom.element].valence_electrons
    vec[H_COUNT_IDX] = atom.explicit_h
    vec[CHARGE_IDX] = atom.formal_charge
    return vec


def atom_features(graph: MolGraph) -> np.ndarray:
    """Stacked ``(n_atoms, ATOM_FEATURE_DIM)`` matrix."""
    adj = graph.neighbors()
    if graph.n_atoms == 0:
        return np.zeros((0, ATOM_FEATURE_DIM))
    return np.stack([featurize_atom(graph, k, adj) for k in range(graph.n_atoms)])


def bond_features(graph: MolGraph) -> np.ndarray:
    """``(n_bonds, BOND_FEATURE_DIM)`` matrix in bond order."""
    out = np.zeros((graph.n_bonds, BOND_FEATURE_DIM))
    for k, b in enumerate(graph.bonds):
        out[k, int(b.order) - 1] = 1.0
        out[k, 4] = float(b.in_ring)
    return out
