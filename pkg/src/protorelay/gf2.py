"""Dense GF(2) linear algebra on bit-packed rows."""
from __future__ import annotations

import numpy as np


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix row-wise into uint64 words (bit c -> word c//64, bit c%64)."""
    bits = np.asarray(bits, dtype=np.uint8)
    n_rows, n_cols = bits.shape
    n_words = (n_cols + 63) // 64
    padded = np.zeros((n_rows, n_words * 64), dtype=np.uint8)
    padded[:, :n_cols] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view("<u8").copy()


def unpack_rows(words: np.ndarray, n_cols: int) -> np.ndarray:
    as_bytes = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :n_cols]


def rref(bits: np.ndarray, column_order=None):
    """Reduced row echelon form over GF(2).

    Columns are scanned in ``column_order`` (default: natural order), so the
    order decides which columns become pivots.  Returns ``(reduced, pivots)``
    where ``reduced`` has ``rank`` rows in original column order and
    ``pivots[r]`` is the original column index of row r's leading one.
    """
    bits = np.asarray(bits, dtype=np.uint8) & 1
    n_rows, n_cols = bits.shape
    order = np.arange(n_cols) if column_order is None else np.asarray(column_order)
    if sorted(order.tolist()) != list(range(n_cols)):
        raise ValueError("column_order must be a permutation of the columns")
    work = pack_rows(bits[:, order])
    pivots = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        w, b = divmod(c, 64)
        col = (work[r:, w] >> np.uint64(b)) & np.uint64(1)
        hits = np.flatnonzero(col)
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            work[[r, p]] = work[[p, r]]
        mask = ((work[:, w] >> np.uint64(b)) & np.uint64(1)).astype(bool)
        mask[r] = False
        if mask.any():
            work[mask] ^= work[r]
        pivots.append(order[c])
        r += 1
    reduced = unpack_rows(work[:r], n_cols)
    inverse = np.empty(n_cols, dtype=np.int64)
    inverse[order] = np.arange(n_cols)
    return reduced[:, inverse], np.array(pivots, dtype=np.int64)


def rank(bits: np.ndarray) -> int:
    return len(rref(bits)[1])


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product over GF(2) of 0/1 matrices (exact while inner dimension < 2**24)."""
    a = np.asarray(a, dtype=np.float32)
    b = np.asarray(b, dtype=np.float32)
    if a.shape[-1] >= 1 << 24:
        raise ValueError("inner dimension too large for float32 accumulation")
    return (np.rint(a @ b).astype(np.int64) & 1).astype(np.uint8)
