"""Trace ground distance: plain and length-normalized Levenshtein."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .event_log import Variant


def levenshtein(a: Sequence[int], b: Sequence[int]) -> int:
    """Minimal number of single-activity edits (insert/delete/substitute)
    turning ``a`` into ``b``.  All three operations cost 1; there is no
    transposition operation."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    if tuple(a) == tuple(b):
        return 0
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a):
        cur = [i + 1]
        for j, cb in enumerate(b):
            cur.append(min(prev[j + 1] + 1, cur[j] + 1, prev[j] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_distance(a: Variant, b: Variant) -> float:
    """Levenshtein distance divided by the longer trace length; in [0, 1]."""
    if not a or not b:
        raise ValueError("normalized distance requires non-empty traces")
    return levenshtein(a, b) / max(len(a), len(b))


def _block_distances(row: Sequence[int], block: np.ndarray, lens: np.ndarray) -> np.ndarray:
    """Levenshtein distances from one trace to every padded trace in a block.

    The DP advances one ``row`` activity per iteration; the dependency of a
    cell on its left neighbour is resolved with the prefix-minimum identity
    cur[j] = min-accumulate(cur[j] - j) + j, so each iteration is a handful
    of whole-block vector operations.
    """
    n, width = block.shape
    offsets = np.arange(width + 1, dtype=np.int32)
    prev = np.broadcast_to(offsets, (n, width + 1)).copy()
    tfull = np.empty((n, width + 1), dtype=np.int32)
    for i, ca in enumerate(row, start=1):
        np.minimum(prev[:, 1:] + 1, prev[:, :-1] + (block != ca), out=tfull[:, 1:])
        tfull[:, 0] = i
        tfull -= offsets
        np.minimum.accumulate(tfull, axis=1, out=tfull)
        tfull += offsets
        prev, tfull = tfull, prev
    return prev[np.arange(n), lens]


def distance_matrix(rows: Sequence[Variant], cols: Sequence[Variant]) -> np.ndarray:
    """Dense matrix of normalized distances between two variant lists.

    Same values as calling :func:`normalized_distance` per pair; columns are
    grouped into length buckets and each bucket is processed with vectorized
    DP rows, which keeps log-sized (hundreds x hundreds) matrices affordable.
    """
    if any(not r for r in rows) or any(not c for c in cols):
        raise ValueError("normalized distance requires non-empty traces")
    out = np.zeros((len(rows), len(cols)), dtype=np.float64)
    if not rows or not cols:
        return out

    order = sorted(range(len(cols)), key=lambda j: len(cols[j]))
    buckets: list[list[int]] = []
    for j in order:
        if buckets and len(cols[j]) <= 2 * len(cols[buckets[-1][0]]):
            buckets[-1].append(j)
        else:
            buckets.append([j])

    row_lens = np.fromiter((len(r) for r in rows), dtype=np.int64, count=len(rows))
    for bucket in buckets:
        lens = np.fromiter((len(cols[j]) for j in bucket), dtype=np.int64, count=len(bucket))
        width = int(lens.max())
        block = np.full((len(bucket), width), -1, dtype=np.int64)
        for bi, j in enumerate(bucket):
            block[bi, : len(cols[j])] = cols[j]
        denom = np.maximum(row_lens[:, None], lens[None, :]).astype(np.float64)
        cols_idx = np.fromiter(bucket, dtype=np.int64, count=len(bucket))
        for i, row in enumerate(rows):
            raw = _block_distances(row, block, lens)
            out[i, cols_idx] = raw / denom[i]
    return out
