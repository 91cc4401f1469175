from molssl.chem.canon import canonical_key, scaffold_atoms, scaffold_key
from molssl.chem.features import (
    ATOM_FEATURE_DIM,
    BOND_FEATURE_DIM,
    atom_features,
    bond_features,
    featurize_atom,
)
from molssl.chem.fingerprint import FingerprintBits, circular_fingerprint, tanimoto
from molssl.chem.graph import Atom, Bond, BondOrder, MolGraph
from molssl.chem.smiles import parse_smiles, perceive_rings

__all__ = [
    "ATOM_FEATURE_DIM",
    "BOND_FEATURE_DIM",
    "Atom",
    "Bond",
    "BondOrder",
    "FingerprintBits",
    "MolGraph",
    "atom_features",
    "bond_features",
    "canonical_key",
    "circular_fingerprint",
    "featurize_atom",
    "parse_smiles",
    "perceive_rings",
    "scaffold_atoms",
    "scaffold_key",
    "tanimoto",
]
