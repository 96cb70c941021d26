"""Rank of binary matrices over GF(2), on rows packed into 64-bit words."""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def _pack_rows(mat: np.ndarray) -> np.ndarray:
    rows, cols = mat.shape
    words = (cols + 63) // 64
    out = np.zeros((rows, words), dtype=np.uint64)
    for r in range(rows):
        for c in range(cols):
            if mat[r, c]:
                out[r, c >> 6] |= np.uint64(1) << np.uint64(c & 63)
    return out


@numba.njit(cache=True)
def _rank_packed(packed: np.ndarray, cols: int) -> int:
    rows, words = packed.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        w = c >> 6
        bit = np.uint64(1) << np.uint64(c & 63)
        pivot = -1
        for r in range(rank, rows):
            if packed[r, w] & bit:
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != rank:
            for k in range(w, words):
                tmp = packed[pivot, k]
                packed[pivot, k] = packed[rank, k]
                packed[rank, k] = tmp
        for r in range(rank + 1, rows):
            if packed[r, w] & bit:
                for k in range(w, words):
                    packed[r, k] ^= packed[rank, k]
        rank += 1
    return rank


@numba.njit(cache=True)
def rank_columns(mat: np.ndarray, cols: np.ndarray) -> int:
    """GF(2) rank of ``mat[:, cols]`` without materialising the slice twice."""
    rows = mat.shape[0]
    ncols = cols.shape[0]
    words = (ncols + 63) // 64
    packed = np.zeros((rows, words), dtype=np.uint64)
    for r in range(rows):
        for k in range(ncols):
            if mat[r, cols[k]]:
                packed[r, k >> 6] |= np.uint64(1) << np.uint64(k & 63)
    return _rank_packed(packed, ncols)


def gf2_rank(mat: np.ndarray) -> int:
    """Rank over GF(2) of a 0/1 matrix."""
    mat = np.ascontiguousarray(mat, dtype=np.uint8)
    if mat.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if mat.size == 0:
        return 0
    return int(_rank_packed(_pack_rows(mat), mat.shape[1]))
