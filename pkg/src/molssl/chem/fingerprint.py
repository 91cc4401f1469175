"""Morgan-style circular fingerprints and Tanimoto similarity."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from molssl.chem.graph import MolGraph
from molssl.errors import ConfigError


@dataclass(frozen=True)
class FingerprintBits:
    bits: np.ndarray  # bool, shape (n_bits,)
    radius: int

    @property
    def n_bits(self) -> int:
        return self.bits.shape[0]

    def on_bits(self) -> list[int]:
        return np.flatnonzero(self.bits).tolist()

    def __eq__(self, other):
        return (isinstance(other, FingerprintBits) and self.radius == other.radius
                and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.radius, self.bits.tobytes()))


def _hash(obj) -> int:
    return int.from_bytes(hashlib.blake2b(repr(obj).encode(), digest_size=8).digest(), "little")


def atom_invariants(graph: MolGraph) -> list[int]:
    return [
        _hash((a.element, a.degree, a.explicit_h, a.formal_charge, a.in_ring, a.aromatic))
        for a in graph.atoms
    ]


def environment_hashes(graph: MolGraph, radius: int) -> list[list[int]]:
    """Per radius 0..radius, the environment identifier of every atom."""
    adj = graph.neighbors()
    ids = atom_invariants(graph)
    layers = [ids]
    for r in range(1, radius + 1):
        ids = [
            _hash((r, ids[v], tuple(sorted((int(o), ids[u]) for u, o in adj[v]))))
            for v in range(graph.n_atoms)
        ]
        layers.append(ids)
    return layers


def circular_fingerprint(graph: MolGraph, radius: int = 2, n_bits: int = 2048) -> FingerprintBits:
    if n_bits <= 0 or n_bits & (n_bits - 1):
        raise ConfigError(f"n_bits must be a power of two, got {n_bits}")
    if radius < 0:
        raise ConfigError(f"radius must be >= 0, got {radius}")
    bits = np.zeros(n_bits, dtype=bool)
    for layer in environment_hashes(graph, radius):
        for h in layer:
            bits[h % n_bits] = True
    return FingerprintBits(bits, radius)


def tanimoto(a: FingerprintBits, b: FingerprintBits) -> float:
    inter = np.count_nonzero(a.bits & b.bits)
    union = np.count_nonzero(a.bits | b.bits)
    return 1.0 if union == 0 else inter / union
