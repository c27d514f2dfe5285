"""Protograph EXIT analysis over ergodic fading and decoding-threshold search.

Messages are tracked as mutual information per protograph edge type (i, j).
Fading enters through a ensemble of per-node channel-LLR variances
``var[q, j]``, one row per channel realization q.  In every iteration the
variable-node extrinsic MI of each edge (and the a-posteriori MI of each node)
is computed separately for each realization and then averaged over q; the
check-node update acts on those averages.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from . import jfunc
from .channel import NakagamiParams, RelayGeometry, db_to_linear, sample_nakagami
from .protograph import BaseMatrix, code_rate

CONVERGENCE_LEVEL = 1.0 - 1e-6
# below this per-iteration change the recursion is at a fixed point
_FIXED_POINT_TOL = 1e-12
_INVERSES = ("closed_form", "numeric")


# ---------------------------------------------------------------------------
# fading ensembles

@dataclass(frozen=True)
class RelayGains:
    """Per-realization, per-node link gains for one (m, d) draw.

    Arrays have shape (Q, N).  ``sr``, ``sd`` and ``rd`` come from the same
    stream (in that order) so EF and DF analyses share random numbers.
    """

    sr: np.ndarray
    sd: np.ndarray
    rd: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        """lambda = gamma_SD + gamma_RD, the MRC gain at the destination."""
        return self.sd + self.rd

    @property
    def q(self) -> int:
        return self.sd.shape[0]


def draw_relay_gains(n_nodes: int, m: float, d: float = 0.4, q: int = 10_000,
                     seed: int = 0) -> RelayGains:
    params = NakagamiParams(m)
    geo = RelayGeometry(d)
    if q < 1:
        raise ValueError("need at least one channel realization")
    rng = np.random.default_rng(seed)
    shape = (q, n_nodes)
    sr = (sample_nakagami(params, rng, shape) * geo.scale_sr) ** 2
    sd = (sample_nakagami(params, rng, shape) * geo.scale_sd) ** 2
    rd = (sample_nakagami(params, rng, shape) * geo.scale_rd) ** 2
    return RelayGains(sr, sd, rd)


@dataclass(frozen=True)
class ChannelVarianceEnsemble:
    """Channel-LLR variances var[q, j]; exactly zero on punctured nodes."""

    var: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.var, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError("variance ensemble must have shape (Q, N)")
        if (v < 0).any() or not np.isfinite(v).all():
            raise ValueError("variances must be finite and non-negative")
        object.__setattr__(self, "var", v)

    @property
    def q(self) -> int:
        return self.var.shape[0]

    @classmethod
    def from_gains(cls, base: BaseMatrix, gains: np.ndarray, ebn0_db: float,
                   rate=None) -> "ChannelVarianceEnsemble":
        """var = 4 R P_j lambda Eb/N0 for gains lambda of shape (Q, N)."""
        r = float(code_rate(base) if rate is None else rate)
        ebn0 = float(db_to_linear(ebn0_db))
        var = 4.0 * r * ebn0 * np.asarray(gains, dtype=float) * base.transmitted[None, :]
        return cls(var)


# ---------------------------------------------------------------------------
# reference single-step updates (numpy)

def _j_sqrt(x):
    return jfunc.default_table()(np.sqrt(np.maximum(x, 0.0)))


def _inverse_fn(inverse: str):
    if inverse == "closed_form":
        return lambda i: jfunc._j_inv_unchecked(np.clip(i, 0.0, 1.0))
    if inverse == "numeric":
        return lambda i: jfunc.default_table().inverse(np.clip(i, 0.0, 1.0))
    raise ValueError(f"inverse must be one of {_INVERSES}")


def _as_var(var_ch, n_cols):
    v = np.asarray(var_ch, dtype=float)
    v = v[None, :] if v.ndim == 1 else v
    if v.shape[1] != n_cols:
        raise ValueError("channel variance must have one entry per protograph column")
    return v


def pexit_vn_update(base: BaseMatrix, i_av, var_ch, inverse: str = "closed_form"):
    """Variable-to-check extrinsic MI per edge type.

    I_Ev(i,j) = J(sqrt(sum_s b[s,j] Jinv(I_Av(s,j))^2 - Jinv(I_Av(i,j))^2 + var_ch[j])),
    averaged over realizations when ``var_ch`` has shape (Q, N).  Entries with
    b[i,j] = 0 are returned as 0.
    """
    b = base.entries
    jinv = _inverse_fn(inverse)
    s2 = np.where(b > 0, jinv(np.asarray(i_av, dtype=float)) ** 2, 0.0)
    col = (b * s2).sum(axis=0)
    v = _as_var(var_ch, base.cols)
    out = np.zeros(b.shape)
    for i, j in zip(*np.nonzero(b)):
        out[i, j] = _j_sqrt(col[j] - s2[i, j] + v[:, j]).mean()
    return out


def pexit_cn_update(base: BaseMatrix, i_ac, inverse: str = "closed_form"):
    """Check-to-variable extrinsic MI per edge type.

    I_Ec(i,j) = 1 - J(sqrt(sum_s b[i,s] Jinv(1 - I_Ac(i,s))^2 - Jinv(1 - I_Ac(i,j))^2)).
    """
    b = base.entries
    jinv = _inverse_fn(inverse)
    s2 = np.where(b > 0, jinv(1.0 - np.asarray(i_ac, dtype=float)) ** 2, 0.0)
    row = (b * s2).sum(axis=1)
    out = np.where(b > 0, 1.0 - _j_sqrt(row[:, None] - s2), 0.0)
    return np.clip(out, 0.0, 1.0)


def app_mi(base: BaseMatrix, i_av, var_ch, inverse: str = "closed_form"):
    """A-posteriori MI per variable node, averaged over realizations."""
    b = base.entries
    jinv = _inverse_fn(inverse)
    s2 = np.where(b > 0, jinv(np.asarray(i_av, dtype=float)) ** 2, 0.0)
    col = (b * s2).sum(axis=0)
    v = _as_var(var_ch, base.cols)
    return _j_sqrt(col[None, :] + v).mean(axis=0)


# ---------------------------------------------------------------------------
# compiled recursion

@njit(cache=True, inline="always")
def _j_of_var(x, tab, step, smax):
    if x <= 0.0:
        return 0.0
    s = math.sqrt(x)
    if s >= smax:
        return tab[tab.size - 1]
    u = s / step
    k = int(u)
    f = u - k
    return tab[k] * (1.0 - f) + tab[k + 1] * f


@njit(cache=True)
def _jinv(x, use_table, inv_mi, inv_sigma):
    if x < 0.0:
        x = 0.0
    if use_table:
        if x >= inv_mi[inv_mi.size - 1]:
            return inv_sigma[inv_sigma.size - 1]
        return np.interp(x, inv_mi, inv_sigma)
    if x <= 0.3646:
        return 1.09542 * x * x + 0.214217 * x + 2.33737 * math.sqrt(x)
    r = 1.0 - x
    if r < 1e-300:
        r = 1e-300
    return -0.706692 * math.log(0.386013 * r) + 1.75017 * x


@njit(cache=True)
def _vn_pass(b, var, i_av, i_ev, app, tab, step, smax, use_table, inv_mi, inv_sigma):
    n_rows, n_cols = b.shape
    n_q = var.shape[0]
    s2 = np.zeros((n_rows, n_cols))
    for i in range(n_rows):
        for j in range(n_cols):
            if b[i, j] > 0:
                v = _jinv(i_av[i, j], use_table, inv_mi, inv_sigma)
                s2[i, j] = v * v
    acc = np.zeros(n_rows + 1)
    comp = np.zeros(n_rows + 1)
    for j in range(n_cols):
        tot = 0.0
        for i in range(n_rows):
            tot += b[i, j] * s2[i, j]
        for i in range(n_rows + 1):
            acc[i] = 0.0
            comp[i] = 0.0
        for q in range(n_q):
            vq = var[q, j]
            for i in range(n_rows + 1):
                if i < n_rows:
                    if b[i, j] == 0:
                        continue
                    y = _j_of_var(tot - s2[i, j] + vq, tab, step, smax)
                else:
                    y = _j_of_var(tot + vq, tab, step, smax)
                # Neumaier summation: order-fixed and accurate for large Q
                t = acc[i] + y
                if abs(acc[i]) >= abs(y):
                    comp[i] += (acc[i] - t) + y
                else:
                    comp[i] += (y - t) + acc[i]
                acc[i] = t
        for i in range(n_rows):
            i_ev[i, j] = (acc[i] + comp[i]) / n_q if b[i, j] > 0 else 0.0
        app[j] = (acc[n_rows] + comp[n_rows]) / n_q


@njit(cache=True)
def _cn_pass(b, i_ac, i_ec, tab, step, smax, use_table, inv_mi, inv_sigma):
    n_rows, n_cols = b.shape
    for i in range(n_rows):
        tot = 0.0
        s2 = np.zeros(n_cols)
        for j in range(n_cols):
            if b[i, j] > 0:
                v = _jinv(1.0 - i_ac[i, j], use_table, inv_mi, inv_sigma)
                s2[j] = v * v
                tot += b[i, j] * s2[j]
        for j in range(n_cols):
            if b[i, j] > 0:
                y = 1.0 - _j_of_var(tot - s2[j], tab, step, smax)
                i_ec[i, j] = min(max(y, 0.0), 1.0)
            else:
                i_ec[i, j] = 0.0


@njit(cache=True)
def _run(b, var, t_max, stop_on_convergence, stop_on_fixed_point, level,
         tab, step, smax, use_table, inv_mi, inv_sigma):
    n_rows, n_cols = b.shape
    i_av = np.zeros((n_rows, n_cols))
    i_ev = np.zeros((n_rows, n_cols))
    i_ec = np.zeros((n_rows, n_cols))
    app = np.zeros(n_cols)
    trace = np.zeros((t_max, n_cols))
    converged = False
    t = 0
    while True:
        _vn_pass(b, var, i_av, i_ev, app, tab, step, smax, use_table, inv_mi, inv_sigma)
        if t >= 1:
            trace[t - 1, :] = app
            if app.min() >= level:
                converged = True
                if stop_on_convergence:
                    break
        if t == t_max:
            break
        _cn_pass(b, i_ev, i_ec, tab, step, smax, use_table, inv_mi, inv_sigma)
        delta = 0.0
        for i in range(n_rows):
            for j in range(n_cols):
                d = abs(i_ec[i, j] - i_av[i, j])
                if d > delta:
                    delta = d
                i_av[i, j] = i_ec[i, j]
        t += 1
        if stop_on_fixed_point and t >= 2 and delta < 1e-12 and not converged:
            _vn_pass(b, var, i_av, i_ev, app, tab, step, smax, use_table, inv_mi, inv_sigma)
            trace[t - 1, :] = app
            converged = app.min() >= level
            break
    return trace[:t], t, converged, i_av, i_ev, i_ec


@dataclass
class MIState:
    """Edge and node mutual information after ``t`` iterations."""

    i_av: np.ndarray
    i_ev: np.ndarray
    i_ac: np.ndarray
    i_ec: np.ndarray
    i_app: np.ndarray
    t: int


@dataclass
class PexitRun:
    trace: np.ndarray            # (t, N): averaged a-posteriori MI after each iteration
    converged: bool
    iterations: int
    state: MIState

    @property
    def final_app(self) -> np.ndarray:
        return self.trace[-1] if len(self.trace) else np.zeros(self.state.i_app.shape)


def run_modified_pexit(base: BaseMatrix, ensemble: ChannelVarianceEnsemble,
                       t_max: int = 500, stop_on_convergence: bool = True,
                       stop_on_fixed_point: bool = True, level: float = CONVERGENCE_LEVEL,
                       inverse: str = "closed_form") -> PexitRun:
    """Iterate the fading-averaged PEXIT recursion.

    Converged means every node's averaged a-posteriori MI reached ``level``
    (1 - 1e-6) within ``t_max`` iterations.  With both early-stop flags off
    exactly ``t_max`` iterations run.
    """
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    if inverse not in _INVERSES:
        raise ValueError(f"inverse must be one of {_INVERSES}")
    if ensemble.var.shape[1] != base.cols:
        raise ValueError("ensemble width differs from the number of protograph columns")
    table = jfunc.default_table()
    trace, t, converged, i_av, i_ev, i_ec = _run(
        base.entries, ensemble.var, int(t_max), stop_on_convergence, stop_on_fixed_point,
        float(level), table.values, table.step, table.sigma_max,
        inverse == "numeric", table._inv_values, table._inv_sigma)
    app = trace[-1] if len(trace) else np.zeros(base.cols)
    state = MIState(i_av=i_av, i_ev=i_ev, i_ac=i_ev.copy(), i_ec=i_ec, i_app=app, t=t)
    return PexitRun(trace=trace, converged=bool(converged), iterations=int(t), state=state)


# ---------------------------------------------------------------------------
# thresholds

@dataclass
class ThresholdResult:
    family: str
    n: int
    rate: Fraction
    m: float
    d: float
    threshold_db: float
    tol_db: float
    q: int
    t_max: int
    protocol: str = "EF"
    converging_db: float = float("nan")
    failing_db: float = float("nan")
    probes: list = field(default_factory=list, repr=False)

    def csv_row(self) -> dict:
        return {"family": self.family, "n": self.n, "rate": str(self.rate), "m": self.m,
                "d": self.d, "threshold_db": f"{self.threshold_db:.4f}",
                "tol_db": self.tol_db, "Q": self.q, "Tmax": self.t_max}


THRESHOLD_FIELDS = ["family", "n", "rate", "m", "d", "threshold_db", "tol_db", "Q", "Tmax"]


class BracketError(RuntimeError):
    pass


def threshold_search(base: BaseMatrix, m: float, d: float = 0.4, tol_db: float = 0.01,
                     q: int = 10_000, t_max: int = 500, seed: int = 0,
                     lo_db: float = -10.0, hi_db: float = 10.0,
                     inverse: str = "closed_form", gains: RelayGains | None = None
                     ) -> ThresholdResult:
    """Bisect Eb/N0 (dB) for the EF decoding threshold.

    One gain ensemble is drawn from ``seed`` and rescaled for every probe, so
    all probes see the same fading samples.  Returns the midpoint of the
    final bracket [failing, converging] of width <= ``tol_db``.
    """
    if tol_db <= 0:
        raise ValueError("tolerance must be positive")
    if gains is None:
        gains = draw_relay_gains(base.cols, m, d, q, seed)
    lam = gains.combined
    probes = []

    def converges(db):
        ens = ChannelVarianceEnsemble.from_gains(base, lam, db)
        ok = run_modified_pexit(base, ens, t_max, inverse=inverse).converged
        probes.append((db, ok))
        return ok

    if not converges(hi_db):
        raise BracketError(f"no convergence even at {hi_db} dB")
    if converges(lo_db):
        raise BracketError(f"already converging at {lo_db} dB")
    lo, hi = lo_db, hi_db
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            hi = mid
        else:
            lo = mid
    return ThresholdResult(family=base.family, n=base.n, rate=code_rate(base), m=m, d=d,
                           threshold_db=0.5 * (lo + hi), tol_db=tol_db, q=gains.q,
                           t_max=t_max, converging_db=hi, failing_db=lo, probes=probes)


def write_thresholds_csv(results, fh) -> None:
    w = csv.DictWriter(fh, fieldnames=THRESHOLD_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(r.csv_row())
