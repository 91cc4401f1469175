"""Scatter/gather kernels used by message passing and graph readout.

Each kernel has a numba implementation and a pure-numpy one. The numba path
is used when numba imports and ``MOLSSL_NUMBA`` is not ``0``; set
``MOLSSL_NUMBA=0`` to force the numpy path (results agree to rounding).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("MOLSSL_NUMBA", "1") != "0"


# --- numpy reference path --------------------------------------------------

def segment_sum_numpy(values: np.ndarray, segments: np.ndarray, n_segments: int) -> np.ndarray:
    out = np.zeros((n_segments,) + values.shape[1:], dtype=np.float64)
    np.add.at(out, segments, values)
    return out


def segment_max_numpy(values: np.ndarray, segments: np.ndarray, n_segments: int) -> np.ndarray:
    out = np.full(n_segments, -np.inf)
    np.maximum.at(out, segments, values)
    return out


def tanimoto_matrix_numpy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    inter = a @ b.T
    union = a.sum(1)[:, None] + b.sum(1)[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 1.0)
    return out


# --- numba path ------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True)
    def _segment_sum_2d(values, segments, n_segments):
        n, d = values.shape
        out = np.zeros((n_segments, d))
        for i in range(n):
            s = segments[i]
            for j in range(d):
                out[s, j] += values[i, j]
        return out

    @numba.njit(cache=True)
    def _segment_sum_1d(values, segments, n_segments):
        out = np.zeros(n_segments)
        for i in range(values.shape[0]):
            out[segments[i]] += values[i]
        return out

    @numba.njit(cache=True)
    def _segment_max_1d(values, segments, n_segments):
        out = np.full(n_segments, -np.inf)
        for i in range(values.shape[0]):
            s = segments[i]
            if values[i] > out[s]:
                out[s] = values[i]
        return out

    @numba.njit(cache=True, inline="always")
    def _popcount64(x):
        x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
        x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
        x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)

    @numba.njit(cache=True)
    def _tanimoto_packed(a, b):
        na, nb, words = a.shape[0], b.shape[0], a.shape[1]
        count_a = np.zeros(na, dtype=np.int64)
        count_b = np.zeros(nb, dtype=np.int64)
        for i in range(na):
            for w in range(words):
                count_a[i] += _popcount64(a[i, w])
        for j in range(nb):
            for w in range(words):
                count_b[j] += _popcount64(b[j, w])
        out = np.empty((na, nb))
        for i in range(na):
            for j in range(nb):
                inter = 0
                for w in range(words):
                    inter += _popcount64(a[i, w] & b[j, w])
                union = count_a[i] + count_b[j] - inter
                out[i, j] = inter / union if union > 0 else 1.0
        return out

    def segment_sum_numba(values, segments, n_segments):
        values = np.ascontiguousarray(values, dtype=np.float64)
        segments = np.ascontiguousarray(segments, dtype=np.int64)
        if values.ndim == 1:
            return _segment_sum_1d(values, segments, n_segments)
        if values.ndim == 2:
            return _segment_sum_2d(values, segments, n_segments)
        return segment_sum_numpy(values, segments, n_segments)

    def segment_max_numba(values, segments, n_segments):
        return _segment_max_1d(np.ascontiguousarray(values, dtype=np.float64),
                               np.ascontiguousarray(segments, dtype=np.int64), n_segments)

    def _pack_words(bits):
        """Bool rows -> uint64 words (zero-padded to a multiple of 64 bits)."""
        bits = np.asarray(bits, dtype=np.bool_)
        pad = (-bits.shape[1]) % 64
        if pad:
            bits = np.concatenate([bits, np.zeros((bits.shape[0], pad), dtype=np.bool_)], axis=1)
        return np.ascontiguousarray(np.packbits(bits, axis=1)).view(np.uint64)

    def tanimoto_matrix_numba(a, b):
        return _tanimoto_packed(_pack_words(a), _pack_words(b))


def segment_sum(values, segments, n_segments):
    if USE_NUMBA:
        return segment_sum_numba(values, segments, n_segments)
    return segment_sum_numpy(values, segments, n_segments)


def segment_max(values, segments, n_segments):
    if USE_NUMBA:
        return segment_max_numba(values, segments, n_segments)
    return segment_max_numpy(values, segments, n_segments)


def tanimoto_matrix(a, b):
    if USE_NUMBA:
        return tanimoto_matrix_numba(a, b)
    return tanimoto_matrix_numpy(a, b)
