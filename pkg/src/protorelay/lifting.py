"""Copy-and-permute lifting of a protograph and systematic encoding.

Every protograph edge becomes a Z x Z circulant permutation.  Shifts are
drawn at random and conditioned progressively: a candidate shift is rejected
when it closes a short cycle with the edges placed so far, and after a
bounded number of tries the candidate closing the fewest cycles is kept.
The parallel edges of one bundle always get distinct shifts, so their
permutation blocks are disjoint and H has no double edges.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import gf2
from .protograph import BaseMatrix


@dataclass(frozen=True, eq=False)
class LiftedCode:
    """A lifted protograph code with its encoder.

    Lifted column ``j * Z + t`` is copy t of protograph variable node j, and
    row ``i * Z + t`` is copy t of check node i.  Circulant shift s on edge
    (i, j) connects row ``i*Z + t`` to column ``j*Z + (t + s) % Z``.

    Information bits sit at ``info_positions`` (ascending lifted column
    indices); parity bits at ``pivot_positions`` are solved from them.
    """

    base: BaseMatrix
    Z: int
    seed: int
    edges: np.ndarray          # (E, 3): protograph row, column, circulant shift
    H: sp.csr_matrix
    info_positions: np.ndarray
    pivot_positions: np.ndarray
    parity_map: np.ndarray = field(repr=False)   # (rank, K) 0/1
    frozen_positions: np.ndarray = field(repr=False)

    @property
    def n_checks(self) -> int:
        return self.H.shape[0]

    @property
    def n_vars(self) -> int:
        return self.H.shape[1]

    @property
    def column_map(self) -> np.ndarray:
        return np.repeat(np.arange(self.base.cols), self.Z)

    @property
    def transmit_mask(self) -> np.ndarray:
        return np.repeat(~self.base.punctured, self.Z)

    @property
    def k(self) -> int:
        """Information length K_p = (N - M) Z."""
        return (self.base.cols - self.base.rows) * self.Z

    @property
    def n_transmitted(self) -> int:
        return (self.base.cols - self.base.n_punctured) * self.Z

    @property
    def n_punctured_bits(self) -> int:
        return self.base.n_punctured * self.Z

    @property
    def rank(self) -> int:
        return len(self.pivot_positions)

    @cached_property
    def _parity_map_f32(self):
        return self.parity_map.astype(np.float32)

    def encode(self, info) -> np.ndarray:
        """Map K info bits (or a batch of shape (B, K)) to full codewords of length N*Z."""
        u = np.asarray(info)
        single = u.ndim == 1
        u2 = np.atleast_2d(u)
        if u2.shape[1] != self.k:
            raise ValueError(f"expected {self.k} information bits, got {u2.shape[1]}")
        if ((u2 != 0) & (u2 != 1)).any():
            raise ValueError("information bits must be 0/1")
        u2 = u2.astype(np.uint8)
        c = np.zeros((u2.shape[0], self.n_vars), dtype=np.uint8)
        c[:, self.info_positions] = u2
        parity = np.rint(u2.astype(np.float32) @ self._parity_map_f32.T).astype(np.int64) & 1
        c[:, self.pivot_positions] = parity
        return c[0] if single else c

    def syndrome(self, word) -> np.ndarray:
        w = np.asarray(word, dtype=np.int64)
        return (self.H @ w.T).T % 2

    def is_codeword(self, word) -> bool:
        return not np.any(self.syndrome(word))

    @cached_property
    def decoder(self):
        from .bp import BPDecoder
        return BPDecoder(self.H)

    def four_cycle_count(self) -> int:
        return count_four_cycles(self.H)

    def digest(self) -> str:
        """SHA-256 of the sparse triplet export; identifies H across runs."""
        return hashlib.sha256(to_triplet_text(self.H).encode()).hexdigest()


def count_four_cycles(H) -> int:
    """Number of length-4 cycles of the Tanner graph of a binary matrix H."""
    H = sp.csr_matrix(H, dtype=np.int64)
    overlap = sp.triu(H @ H.T, k=1).tocoo()
    o = overlap.data
    return int((o * (o - 1) // 2).sum())


def _closed_walks(edges: np.ndarray, length: int) -> np.ndarray:
    """All non-backtracking closed walks of ``length`` edges in the protograph.

    A walk starts at a check node and alternates check->variable and
    variable->check steps; consecutive edges (cyclically) are distinct.
    """
    by_row: dict[int, list[int]] = {}
    by_col: dict[int, list[int]] = {}
    for e, (i, j, _) in enumerate(edges):
        by_row.setdefault(int(i), []).append(e)
        by_col.setdefault(int(j), []).append(e)
    walks = []

    def extend(path):
        step = len(path)
        last = path[-1]
        if step == length:
            first = path[0]
            if edges[last, 0] == edges[first, 0] and last != first:
                walks.append(tuple(path))
            return
        # odd positions leave a variable node, even positions leave a check node
        pool = by_col[int(edges[last, 1])] if step % 2 == 1 else by_row[int(edges[last, 0])]
        for e in pool:
            if e != last:
                extend(path + [e])

    for e in range(len(edges)):
        extend([e])
    if not walks:
        return np.zeros((0, length), dtype=np.int64)
    return np.array(walks, dtype=np.int64)


def _choose_shifts(base: BaseMatrix, Z: int, rng: np.random.Generator,
                   girth: int, max_tries: int) -> np.ndarray:
    edges = np.array([(i, j, 0) for j in range(base.cols) for i in range(base.rows)
                      for _ in range(int(base.entries[i, j]))], dtype=np.int64)
    n_edges = len(edges)
    walk_sets = []
    for length in range(4, girth, 2):
        w = _closed_walks(edges, length)
        signs = np.where(np.arange(length) % 2 == 0, 1, -1)
        last = w.max(axis=1) if len(w) else np.zeros(0, dtype=np.int64)
        walk_sets.append((w, signs, last))

    shifts = np.zeros(n_edges, dtype=np.int64)
    for e in range(n_edges):
        i, j = edges[e, 0], edges[e, 1]
        taken = {int(shifts[f]) for f in range(e) if edges[f, 0] == i and edges[f, 1] == j}
        free = np.array([s for s in range(Z) if s not in taken], dtype=np.int64)
        candidates = rng.permutation(free)[:max_tries]
        cost = np.zeros(candidates.size, dtype=np.int64)
        for w, signs, last in walk_sets:
            # walks whose highest edge index is e: all their other edges are placed
            sel = w[last == e]
            if sel.size == 0:
                continue
            here = sel == e
            own_sign = (here * signs).sum(axis=1)
            fixed = (np.where(here, 0, shifts[sel]) * signs).sum(axis=1)
            total = fixed[None, :] + own_sign[None, :] * candidates[:, None]
            cost += (total % Z == 0).sum(axis=1)
        shifts[e] = candidates[int(np.argmin(cost))]
    edges[:, 2] = shifts
    return edges


def _assemble(base: BaseMatrix, Z: int, edges: np.ndarray) -> sp.csr_matrix:
    t = np.arange(Z)
    rows = np.concatenate([i * Z + t for i, _, _ in edges])
    cols = np.concatenate([j * Z + (t + s) % Z for _, j, s in edges])
    data = np.ones(rows.size, dtype=np.uint8)
    H = sp.csr_matrix((data, (rows, cols)), shape=(base.rows * Z, base.cols * Z))
    if H.max() > 1:
        raise RuntimeError("lifting produced a double edge")
    H.sort_indices()
    return H


def _encoder(base: BaseMatrix, Z: int, H: sp.csr_matrix):
    # prefer low-degree protograph columns for parity; punctured and
    # high-degree columns then carry information
    deg = base.column_degrees()
    proto_order = np.lexsort((np.arange(base.cols), base.punctured, deg))
    column_order = np.concatenate([np.arange(j * Z, (j + 1) * Z) for j in proto_order])
    reduced, pivots = gf2.rref(H.toarray(), column_order)
    free = np.setdiff1d(np.arange(H.shape[1]), pivots)
    k = (base.cols - base.rows) * Z
    if free.size < k:
        raise ValueError("parity-check matrix leaves fewer than K free positions")
    info = free[:k]
    frozen = free[k:]
    parity_map = reduced[:, info].astype(np.uint8)
    return info, pivots, parity_map, frozen


def lift(base: BaseMatrix, Z: int, seed: int = 0, girth: int = 6,
         max_tries: int = 64) -> LiftedCode:
    """Expand ``base`` by a factor Z with conditioned random circulant shifts.

    Candidate shifts closing a cycle shorter than ``girth`` are rejected
    while alternatives remain (6 avoids 4-cycles, 8 also avoids 6-cycles,
    4 disables conditioning).  Deterministic in (base, Z, seed, girth,
    max_tries).
    """
    if Z < 1:
        raise ValueError("lifting factor must be positive")
    if girth not in (4, 6, 8):
        raise ValueError("girth must be 4, 6 or 8")
    if int(base.entries.max()) > Z:
        raise ValueError(f"edge multiplicity {int(base.entries.max())} exceeds Z={Z}: "
                         "no disjoint permutations exist")
    rng = np.random.default_rng(seed)
    edges = _choose_shifts(base, Z, rng, girth, max_tries)
    H = _assemble(base, Z, edges)
    info, pivots, parity_map, frozen = _encoder(base, Z, H)
    for a in (edges, info, pivots, parity_map, frozen):
        a.setflags(write=False)
    return LiftedCode(base=base, Z=Z, seed=seed, edges=edges, H=H, info_positions=info,
                      pivot_positions=pivots, parity_map=parity_map, frozen_positions=frozen)


def to_triplet_text(H) -> str:
    """Sparse text export: header "rows cols nnz", then one "row col" per line (0-based)."""
    coo = sp.coo_matrix(H)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{H.shape[0]} {H.shape[1]} {coo.nnz}"]
    lines += [f"{r} {c}" for r, c in zip(coo.row[order], coo.col[order])]
    return "\n".join(lines) + "\n"


def from_triplet_text(text: str) -> sp.csr_matrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    n_rows, n_cols, nnz = (int(v) for v in lines[0].split())
    if len(lines) - 1 != nnz:
        raise ValueError(f"header announces {nnz} entries, found {len(lines) - 1}")
    rc = np.array([[int(v) for v in ln.split()] for ln in lines[1:]], dtype=np.int64).reshape(-1, 2)
    data = np.ones(nnz, dtype=np.uint8)
    return sp.csr_matrix((data, (rc[:, 0], rc[:, 1])), shape=(n_rows, n_cols))


def save_triplets(H, path) -> None:
    Path(path).write_text(to_triplet_text(H), encoding="utf-8")


def load_triplets(path) -> sp.csr_matrix:
    return from_triplet_text(Path(path).read_text(encoding="utf-8"))
