"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 20]

Both paths are imported directly, so no environment flag is needed; the
script also checks that the two paths agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from molssl.tensorkit import _kernels as K


def best_of(fn, repeat: int) -> float:
    fn()  # warm-up (includes numba compilation on first call)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if K.numba is None:
        raise SystemExit("numba is not importable; only the numpy path is available")
    rng = np.random.default_rng(0)

    # a batch of 512 drug-like molecules: ~12k atoms, ~26k directed bonds
    n_atoms, n_edges, width = 12_000, 26_000, 64
    values = rng.standard_normal((n_edges, width))
    segments = rng.integers(0, n_atoms, n_edges)
    scores = rng.standard_normal(n_atoms)
    graph_of_atom = np.sort(rng.integers(0, 512, n_atoms))
    fp_a = rng.random((256, 2048)) < 0.03
    fp_b = rng.random((1024, 2048)) < 0.03

    cases = [
        ("segment_sum (26k x 64 -> 12k)", lambda: K.segment_sum_numba(values, segments, n_atoms),
         lambda: K.segment_sum_numpy(values, segments, n_atoms)),
        ("segment_max (12k -> 512)", lambda: K.segment_max_numba(scores, graph_of_atom, 512),
         lambda: K.segment_max_numpy(scores, graph_of_atom, 512)),
        ("tanimoto_matrix (256 x 1024, 2048 bits)", lambda: K.tanimoto_matrix_numba(fp_a, fp_b),
         lambda: K.tanimoto_matrix_numpy(fp_a, fp_b)),
    ]
    print(f"{'kernel':<42}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}  max |diff|")
    for name, fast, slow in cases:
        diff = float(np.max(np.abs(fast() - slow())))
        t_fast, t_slow = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<42}{t_fast * 1e3:>10.2f}{t_slow * 1e3:>10.2f}{t_slow / t_fast:>8.1f}x  {diff:.1e}")


if __name__ == "__main__":
    main()
