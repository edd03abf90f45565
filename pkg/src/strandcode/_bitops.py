"""Vectorized window machinery shared by the scanners.

Everything here is exact.  The close-pair search uses the pigeonhole split:
two windows differing in at most ``rho`` positions must agree exactly on one
of ``rho + 1`` parts, so grouping windows by each part in turn finds every
close pair without comparing all pairs.
"""

from __future__ import annotations

import numpy as np

from .bitseq import BitSeq


def seq_bits(x: BitSeq) -> np.ndarray:
    return x.to_numpy()


def packed_windows(bits: np.ndarray, L: int) -> np.ndarray:
    """All length-L windows of a 0/1 array, packed little-endian into uint64 words.

    Returns a (n-L+1, ceil(L/64)) uint64 array; row i is the window at i.
    """
    n = bits.size
    if L > n:
        return np.zeros((0, (L + 63) // 64), dtype=np.uint64)
    view = np.lib.stride_tricks.sliding_window_view(bits, L)
    nwords = (L + 63) // 64
    pad = nwords * 64 - L
    if pad:
        view = np.concatenate(
            [view, np.zeros((view.shape[0], pad), dtype=bits.dtype)], axis=1
        )
    packed = np.packbits(view.astype(np.uint8), axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64).reshape(view.shape[0], nwords)


def pack_rows(rows: np.ndarray) -> np.ndarray:
    """Pack a (m, L) 0/1 array into (m, ceil(L/64)) uint64 words."""
    m, L = rows.shape
    nwords = (L + 63) // 64
    pad = nwords * 64 - L
    if pad:
        rows = np.concatenate([rows, np.zeros((m, pad), dtype=rows.dtype)], axis=1)
    packed = np.packbits(rows.astype(np.uint8), axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64).reshape(m, nwords)


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full (len(a), len(b)) Hamming distance matrix between packed rows."""
    diffs = a[:, None, :] ^ b[None, :, :]
    return np.bitwise_count(diffs).sum(axis=2, dtype=np.int64)


def min_pair_distance(wins: np.ndarray, block: int = 1024) -> tuple[int, tuple[int, int]]:
    """Minimum Hamming distance over all pairs of distinct packed rows.

    Exact all-pairs scan, blocked for memory.  Returns (distance, (i, j))
    with i < j, or (large, (-1, -1)) when fewer than two rows exist.
    """
    m = wins.shape[0]
    if m < 2:
        return (1 << 30), (-1, -1)
    best = 1 << 30
    best_pair = (-1, -1)
    for i0 in range(0, m, block):
        ai = wins[i0 : i0 + block]
        for j0 in range(i0, m, block):
            bj = wins[j0 : j0 + block]
            d = pairwise_distances(ai, bj)
            if j0 == i0:
                np.fill_diagonal(d, 1 << 30)
                d[np.tril_indices_from(d)] = 1 << 30
            k = int(np.argmin(d))
            di, dj = divmod(k, d.shape[1])
            if d[di, dj] < best:
                best = int(d[di, dj])
                best_pair = (i0 + di, j0 + dj)
    return best, best_pair


def _part_slices(L: int, parts: int) -> list[tuple[int, int]]:
    cuts = [round(t * L / parts) for t in range(parts + 1)]
    return [(cuts[t], cuts[t + 1]) for t in range(parts)]


def close_pairs(bits: np.ndarray, L: int, rho: int) -> list[tuple[int, int, int]]:
    """All pairs (i, j, dist) of window start positions with i < j and
    Hamming distance at most ``rho`` between the length-L windows.

    Complete by the pigeonhole argument: a pair within distance rho agrees
    exactly on at least one of rho+1 parts of the window, so it is found
    when grouping by that part.
    """
    n = bits.size
    m = n - L + 1
    if m < 2:
        return []
    wins = packed_windows(bits, L)
    view = np.lib.stride_tricks.sliding_window_view(bits, L)
    candidates: set[tuple[int, int]] = set()
    for lo, hi in _part_slices(L, rho + 1):
        part = pack_rows(np.ascontiguousarray(view[:, lo:hi]))
        order = np.lexsort(part.T[::-1])
        sorted_part = part[order]
        same = np.all(sorted_part[1:] == sorted_part[:-1], axis=1)
        # group boundaries over the sorted order
        run_start = 0
        for t in range(m):
            is_end = t == m - 1 or not same[t]
            if is_end:
                group = order[run_start : t + 1]
                if group.size > 1:
                    g = np.sort(group)
                    for ai in range(g.size):
                        for bi in range(ai + 1, g.size):
                            candidates.add((int(g[ai]), int(g[bi])))
                run_start = t + 1
    out = []
    for i, j in candidates:
        dist = int(np.bitwise_count(wins[i] ^ wins[j]).sum())
        if dist <= rho:
            out.append((i, j, dist))
    out.sort(key=lambda p: (p[1], p[0]))
    return out


def window_weights(bits: np.ndarray, L: int) -> np.ndarray:
    """Weight of every length-L window (length n-L+1 vector)."""
    c = np.concatenate([[0], np.cumsum(bits, dtype=np.int64)])
    return c[L:] - c[:-L]


def min_window_weight(x: BitSeq, L: int) -> int:
    """Smallest weight over all length-L windows; large when none exist."""
    if len(x) < L:
        return 1 << 30
    w = window_weights(x.to_numpy(), L)
    return int(w.min())
