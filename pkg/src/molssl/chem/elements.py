"""Element table: standard atomic weights, valence electrons, allowed valences."""

from __future__ import annotations

import math
from typing import NamedTuple


class Element(NamedTuple):
    symbol: str
    weight: float
    valence_electrons: int
    valences: tuple[int, ...]  # allowed bonding valences; () means "no inference"


_TABLE = [
    ("H", 1.008, 1, (1,)),
    ("Li", 6.94, 1, ()),
    ("Be", 9.012, 2, ()),
    ("B", 10.811, 3, (3,)),
    ("C", 12.011, 4, (4,)),
    ("N", 14.007, 5, (3, 5)),
    ("O", 15.999, 6, (2,)),
    ("F", 18.998, 7, (1,)),
    ("Na", 22.990, 1, ()),
    ("Mg", 24.305, 2, ()),
    ("Al", 26.982, 3, ()),
    ("Si", 28.086, 4, (4,)),
    ("P", 30.974, 5, (3, 5)),
    ("S", 32.06, 6, (2, 4, 6)),
    ("Cl", 35.45, 7, (1,)),
    ("K", 39.098, 1, ()),
    ("Ca", 40.078, 2, ()),
    ("Ti", 47.867, 4, ()),
    ("Cr", 51.996, 6, ()),
    ("Mn", 54.938, 7, ()),
    ("Fe", 55.845, 8, ()),
    ("Co", 58.933, 9, ()),
    ("Ni", 58.693, 10, ()),
    ("Cu", 63.546, 11, ()),
    ("Zn", 65.38, 2, ()),
    ("Ga", 69.723, 3, ()),
    ("Ge", 72.630, 4, ()),
    ("As", 74.922, 5, (3, 5)),
    ("Se", 78.971, 6, (2, 4, 6)),
    ("Br", 79.904, 7, (1,)),
    ("Rb", 85.468, 1, ()),
    ("Sr", 87.62, 2, ()),
    ("Zr", 91.224, 4, ()),
    ("Mo", 95.95, 6, ()),
    ("Ru", 101.07, 8, ()),
    ("Rh", 102.906, 9, ()),
    ("Pd", 106.42, 10, ()),
    ("Ag", 107.868, 11, ()),
    ("Cd", 112.414, 2, ()),
    ("In", 114.818, 3, ()),
    ("Sn", 118.710, 4, ()),
    ("Sb", 121.760, 5, ()),
    ("Te", 127.60, 6, (2, 4, 6)),
    ("I", 126.904, 7, (1,)),
    ("Cs", 132.905, 1, ()),
    ("Ba", 137.327, 2, ()),
    ("Gd", 157.25, 3, ()),
    ("W", 183.84, 6, ()),
    ("Pt", 195.084, 10, ()),
    ("Au", 196.967, 11, ()),
    ("Hg", 200.592, 2, ()),
    ("Tl", 204.38, 3, ()),
    ("Pb", 207.2, 4, ()),
    ("Bi", 208.980, 5, ()),
]

ELEMENTS: dict[str, Element] = {sym: Element(sym, w, ve, val) for sym, w, ve, val in _TABLE}

# Atoms writable without brackets.
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_SYMBOLS = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S",
                    "se": "Se", "as": "As", "te": "Te"}

# One-hot element vocabulary; anything else lands in the trailing "other" slot.
FEATURE_ELEMENTS = ("B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Br", "I", "Se")


def _mean_std(values):
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


# Location/scale of the sigmoid used to squash atomic weight into (0, 1):
# population mean and std of the weights of FEATURE_ELEMENTS.
WEIGHT_MEAN, WEIGHT_STD = _mean_std([ELEMENTS[s].weight for s in FEATURE_ELEMENTS])
