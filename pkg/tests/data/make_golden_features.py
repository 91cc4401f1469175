"""Regenerate golden_atom_features.csv from hand-written atom descriptions.

Nothing here imports the featurizer: each row is described by chemistry
read off the SMILES by hand, and the vector is assembled from the layout
(13 element slots, 6 degree buckets, 4 hybridizations, aromatic, ring,
scaled weight, valence electrons, hydrogens, charge).
"""

import csv
import math
from pathlib import Path

ELEMENTS = ("B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Br", "I", "Se")
WEIGHTS = {"B": 10.811, "C": 12.011, "N": 14.007, "O": 15.999, "F": 18.998, "Si": 28.086,
           "P": 30.974, "S": 32.06, "Cl": 35.45, "Br": 79.904, "I": 126.904, "Se": 78.971}
VALENCE_E = {"B": 3, "C": 4, "N": 5, "O": 6, "F": 7, "Si": 4, "P": 5, "S": 6, "Cl": 7, "Br": 7,
             "I": 7, "Se": 6}
HYB = ("sp", "sp2", "sp3", "other")

_mu = sum(WEIGHTS.values()) / len(WEIGHTS)
_sd = math.sqrt(sum((w - _mu) ** 2 for w in WEIGHTS.values()) / len(WEIGHTS))

# smiles, atom index, element, degree, hybridization, aromatic, ring, hydrogens, charge
ATOMS = [
    ("CCO", 0, "C", 1, "sp3", 0, 0, 3, 0),
    ("CCO", 1, "C", 2, "sp3", 0, 0, 2, 0),
    ("CCO", 2, "O", 1, "sp3", 0, 0, 1, 0),
    ("c1ccccc1", 0, "C", 2, "sp2", 1, 1, 1, 0),
    ("C#N", 0, "C", 1, "sp", 0, 0, 1, 0),
    ("C#N", 1, "N", 1, "sp", 0, 0, 0, 0),
    ("CC(=O)[O-]", 1, "C", 3, "sp2", 0, 0, 0, 0),
    ("CC(=O)[O-]", 2, "O", 1, "sp2", 0, 0, 0, 0),
    ("CC(=O)[O-]", 3, "O", 1, "sp3", 0, 0, 0, -1),
    ("c1cc[nH]c1", 3, "N", 2, "sp2", 1, 1, 1, 0),
    ("FC(F)(F)Cl", 4, "Cl", 1, "sp3", 0, 0, 0, 0),
    ("FC(F)(F)Cl", 1, "C", 4, "sp3", 0, 0, 0, 0),
    ("CS(=O)(=O)C", 1, "S", 4, "sp", 0, 0, 0, 0),
    ("C1CC1", 0, "C", 2, "sp3", 0, 1, 2, 0),
    ("[NH4+]", 0, "N", 0, "sp3", 0, 0, 4, 1),
    ("C[Se]C", 1, "Se", 2, "sp3", 0, 0, 0, 0),
    ("CC(C)(C)C(C)(C)C(C)(C)C", 2, "C", 1, "sp3", 0, 0, 3, 0),
]


def vector(element, degree, hyb, aromatic, ring, h, charge):
    v = [0.0] * (len(ELEMENTS) + 1 + 6 + 4 + 6)
    v[ELEMENTS.index(element)] = 1.0
    v[13 + min(degree, 5)] = 1.0
    v[19 + HYB.index(hyb)] = 1.0
    v[23], v[24] = float(aromatic), float(ring)
    v[25] = 1.0 / (1.0 + math.exp(-(WEIGHTS[element] - _mu) / _sd))
    v[26], v[27], v[28] = float(VALENCE_E[element]), float(h), float(charge)
    return v


def main() -> None:
    with open(Path(__file__).with_name("golden_atom_features.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["smiles", "atom_index", "features"])
        for smiles, idx, *desc in ATOMS:
            w.writerow([smiles, idx, " ".join(repr(x) for x in vector(*desc))])
    print(len(ATOMS), "rows")


if __name__ == "__main__":
    main()
