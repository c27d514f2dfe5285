"""Flooding sum-product decoder for binary LDPC codes."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

# |LLR| entering tanh(x/2) is clipped here; tanh(15) = 1 - 1.9e-13.
TANH_CLAMP = 30.0
# keeps atanh finite: 2 * atanh(1 - 1e-15) ~ 35.2
_PROD_LIMIT = 1.0 - 1e-15


@dataclass(frozen=True)
class DecodeResult:
    """Decoder output; arrays gain a leading batch axis for batched input."""

    hard: np.ndarray
    posterior: np.ndarray
    iterations: np.ndarray | int
    syndrome_ok: np.ndarray | bool


@njit(cache=True, fastmath=True, error_model="numpy")
def _decode_one(row_ptr, edge_var, var_ptr, var_edges, llr, max_iter,
                v2c, c2v, post, hard, scratch):
    n_checks = row_ptr.size - 1
    n_vars = var_ptr.size - 1
    for e in range(edge_var.size):
        v2c[e] = llr[edge_var[e]]
    it = 0
    ok = False
    while it < max_iter:
        it += 1
        # check nodes: exclusive tanh products by forward/backward sweeps;
        # branch-free tanh(x/2) = (1 - e^-|x|) / (1 + e^-|x|) with the sign of x
        for c in range(n_checks):
            a = row_ptr[c]
            deg = row_ptr[c + 1] - a
            for k in range(deg):
                x = v2c[a + k]
                mag = min(abs(x), TANH_CLAMP)
                ex = math.exp(-mag)
                scratch[k] = math.copysign((1.0 - ex) / (1.0 + ex), x)
            acc = 1.0
            for k in range(deg):
                c2v[a + k] = acc
                acc *= scratch[k]
            acc = 1.0
            for k in range(deg - 1, -1, -1):
                p = c2v[a + k] * acc
                acc *= scratch[k]
                q = min(abs(p), _PROD_LIMIT)
                # 2 atanh(p)
                c2v[a + k] = math.copysign(math.log((1.0 + q) / (1.0 - q)), p)
        # variable nodes
        for v in range(n_vars):
            total = llr[v]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                total += c2v[var_edges[k]]
            post[v] = total
            hard[v] = 1 if total < 0.0 else 0
            for k in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edges[k]
                v2c[e] = total - c2v[e]
        ok = True
        for c in range(n_checks):
            parity = 0
            for e in range(row_ptr[c], row_ptr[c + 1]):
                parity ^= hard[edge_var[e]]
            if parity:
                ok = False
                break
        if ok:
            break
    return it, ok


@njit(cache=True, fastmath=True, error_model="numpy")
def _decode_batch(row_ptr, edge_var, var_ptr, var_edges, llr, max_iter, post, hard,
                  iters, oks, max_deg):
    n_edges = edge_var.size
    v2c = np.empty(n_edges)
    c2v = np.empty(n_edges)
    scratch = np.empty(max_deg)
    for b in range(llr.shape[0]):
        it, ok = _decode_one(row_ptr, edge_var, var_ptr, var_edges, llr[b], max_iter,
                             v2c, c2v, post[b], hard[b], scratch)
        iters[b] = it
        oks[b] = ok


class BPDecoder:
    """Sum-product decoder bound to one parity-check matrix.

    Holds only read-only index arrays; message buffers are allocated per
    call, so one instance can serve concurrent callers.
    """

    def __init__(self, H):
        H = sp.csr_matrix(H)
        H.sum_duplicates()
        if H.nnz and H.data.max() > 1:
            raise ValueError("H must be binary without parallel edges")
        H.eliminate_zeros()
        H.sort_indices()
        self.shape = H.shape
        self.row_ptr = H.indptr.astype(np.int64)
        self.edge_var = H.indices.astype(np.int64)
        # edges grouped by variable node
        self.var_edges = np.argsort(self.edge_var, kind="stable").astype(np.int64)
        counts = np.bincount(self.edge_var, minlength=H.shape[1])
        self.var_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.max_deg = int(np.diff(self.row_ptr).max()) if H.nnz else 1
        for a in (self.row_ptr, self.edge_var, self.var_edges, self.var_ptr):
            a.setflags(write=False)

    def decode(self, llr, max_iter: int = 100) -> DecodeResult:
        """Decode channel LLRs (positive favours bit 0) of shape (n,) or (B, n).

        Punctured positions must carry LLR 0.  Hard decisions are 1 where the
        posterior LLR is negative; the run stops as soon as all checks hold.
        """
        x = np.asarray(llr, dtype=float)
        single = x.ndim == 1
        x2 = np.atleast_2d(x)
        if x2.ndim != 2 or x2.shape[1] != self.shape[1]:
            raise ValueError(f"expected LLRs of length {self.shape[1]}, got shape {x.shape}")
        if not np.isfinite(x2).all():
            raise ValueError("channel LLRs must be finite")
        if max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        x2 = np.ascontiguousarray(x2)
        n_blocks = x2.shape[0]
        post = np.empty_like(x2)
        hard = np.empty(x2.shape, dtype=np.uint8)
        iters = np.empty(n_blocks, dtype=np.int64)
        oks = np.empty(n_blocks, dtype=np.bool_)
        _decode_batch(self.row_ptr, self.edge_var, self.var_ptr, self.var_edges, x2,
                      int(max_iter), post, hard, iters, oks, self.max_deg)
        if single:
            return DecodeResult(hard[0], post[0], int(iters[0]), bool(oks[0]))
        return DecodeResult(hard, post, iters, oks)


def bp_decode(code, llr, max_iter: int = 100) -> DecodeResult:
    """Decode with a LiftedCode's cached decoder, or with any binary H."""
    dec = code.decoder if hasattr(code, "decoder") else BPDecoder(code)
    return dec.decode(llr, max_iter)
