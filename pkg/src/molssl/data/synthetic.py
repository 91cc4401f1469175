"""Generated regression task on real molecular graphs with a known oracle.

The target is a smooth function of a few graph statistics plus Gaussian
noise. Labeled molecules come from the small end of the size distribution
while the unlabeled pool and the val/test sets cover all sizes, so labeled
and unlabeled data differ in distribution.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from importlib import resources

import numpy as np

from molssl.chem import MolGraph
from molssl.data.dataset import MolDataset, MolPool, TaskSpec, parse_many
from molssl.errors import SizeExceedsPool
from molssl.tensorkit import SeededRng

HETERO = frozenset({"N", "O", "S", "P"})
HALOGEN = frozenset({"F", "Cl", "Br", "I"})

# Location/scale of the statistics over the bundled pool; fixed so the oracle
# does not depend on which molecules a run happens to sample.
_STAT_CENTER = np.array([24.0, 2.7, 0.20, 0.45, 0.05])
_STAT_SCALE = np.array([4.5, 0.9, 0.08, 0.17, 0.07])


def graph_statistics(g: MolGraph) -> np.ndarray:
    """[heavy atoms, ring count, hetero fraction, aromatic fraction, halogen fraction]."""
    n = max(g.n_atoms, 1)
    hetero = sum(a.element in HETERO for a in g.atoms)
    arom = sum(a.aromatic for a in g.atoms)
    halo = sum(a.element in HALOGEN for a in g.atoms)
    return np.array([g.n_atoms, len(g.ring_basis), hetero / n, arom / n, halo / n], dtype=np.float64)


def oracle(stats: np.ndarray) -> np.ndarray:
    """Noise-free target for rows of :func:`graph_statistics`."""
    z = (np.atleast_2d(stats) - _STAT_CENTER) / _STAT_SCALE
    size, rings, hetero, arom, halo = z.T
    return (1.2 * np.tanh(0.8 * size) - 0.7 * hetero + 0.5 * np.sin(rings)
            + 0.4 * arom * (1.0 + 0.5 * size) + 0.3 * halo)


@functools.lru_cache(maxsize=1)
def bundled_pool() -> MolPool:
    text = resources.files("molssl.datasets").joinpath("zinc_moses_20k.smi").read_text()
    raw = [line.split()[0] for line in text.splitlines() if line.strip()]
    keep, graphs = parse_many(raw)
    return MolPool([raw[i] for i in keep], graphs, skipped=len(raw) - len(keep))


@dataclass
class SyntheticTask:
    labeled: MolDataset
    val: MolDataset
    test: MolDataset
    pool: MolPool
    pool_clean: np.ndarray    # oracle value for each pool molecule
    noise: float
    seed: int


def make_synthetic_task(seed: int = 0, n_labeled: int = 100, n_unlabeled: int = 5000,
                        n_val: int = 200, n_test: int = 1000, noise: float = 0.3,
                        shift_quantile: float = 0.35) -> SyntheticTask:
    """Draw a task from the bundled pool.

    Labeled molecules are sampled from those whose heavy-atom count is at or
    below the ``shift_quantile`` quantile; everything else is sampled
    uniformly from the remaining molecules.
    """
    source = bundled_pool()
    total = n_labeled + n_unlabeled + n_val + n_test
    if total > len(source):
        raise SizeExceedsPool(f"task needs {total} molecules, pool has {len(source)}")
    stats = np.array([graph_statistics(g) for g in source.graphs])
    clean = oracle(stats)
    rng = SeededRng(seed).stream("synthetic_task")
    order = rng.permutation(len(source))
    cutoff = np.quantile(stats[:, 0], shift_quantile)
    small = order[stats[order, 0] <= cutoff]
    labeled_idx = small[:n_labeled]
    rest = order[~np.isin(order, labeled_idx)]
    val_idx = rest[:n_val]
    test_idx = rest[n_val:n_val + n_test]
    pool_idx = rest[n_val + n_test:n_val + n_test + n_unlabeled]
    noisy = clean + noise * rng.standard_normal(len(source))
    task = TaskSpec("regression", 1)

    def make(idx, tag):
        return MolDataset([source.smiles[i] for i in idx], [source.graphs[i] for i in idx],
                          noisy[idx, None], task, ["y"], tag=tag)

    return SyntheticTask(
        labeled=make(labeled_idx, "train"),
        val=make(val_idx, "val"),
        test=make(test_idx, "test"),
        pool=source.subset(pool_idx),
        pool_clean=clean[pool_idx],
        noise=noise,
        seed=seed,
    )
