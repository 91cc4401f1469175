"""Counter-based random streams addressed by (seed, label...)."""

from __future__ import annotations

import hashlib

import numpy as np


class SeededRng:
    """Splittable RNG: ``stream(*labels)`` is a pure function of the seed and labels.

    Streams are Philox generators keyed by a hash of the labels, so the
    dropout mask for ``("gin", epoch, step)`` never depends on how many other
    draws happened before it.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def _key(self, labels) -> int:
        text = repr((self.seed,) + tuple(labels)).encode()
        return int.from_bytes(hashlib.blake2b(text, digest_size=16).digest(), "little")

    def stream(self, *labels) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self._key(labels)))

    def split(self, *labels) -> "SeededRng":
        return SeededRng(self._key(labels) & 0x7FFFFFFFFFFFFFFF)

    def __repr__(self):
        return f"SeededRng({self.seed})"
