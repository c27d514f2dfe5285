"""Gaussian-approximation BER predictions for EF and DF relaying.

After t iterations of the fading-averaged PEXIT recursion each protograph
node has an averaged a-posteriori MI.  Treating the averaged a-posteriori LLR
as consistent Gaussian with variance Jinv(MI)^2 gives a per-node BER of
erfc(Jinv(MI) / (2 sqrt 2)) / 2.

For DF the relay is assumed to forward bit j whenever it decoded it
correctly, independently of the destination's own decoding:

    P_DF(j) = P_SR(j) P_SD(j) + (1 - P_SR(j)) P_D(j)

This independence is taken as given, not derived.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from . import jfunc
from .pexit import ChannelVarianceEnsemble, RelayGains, draw_relay_gains, run_modified_pexit
from .protograph import BaseMatrix, code_rate

BER_FIELDS = ["protocol", "family", "n", "m", "d", "ebn0_db", "ber_theory", "tmax", "Q"]


def node_ber_from_app_mi(mi):
    """Per-node BER from averaged a-posteriori MI; MI >= 1 maps to 0."""
    x = np.asarray(mi, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("mutual information must be non-negative")
    sat = x >= 1.0
    sigma = jfunc._j_inv_unchecked(np.where(sat, 0.0, x))
    p = np.where(sat, 0.0, 0.5 * erfc(sigma / (2.0 * np.sqrt(2.0))))
    p = np.clip(p, 0.0, 0.5)
    return float(p) if p.ndim == 0 else p


def nominal_info_columns(base: BaseMatrix) -> np.ndarray:
    """Protograph columns that carry information under the encoder's pivot order.

    The encoder prefers low-degree, transmitted columns for parity; the
    remaining N - M columns are the nominal information nodes.
    """
    order = np.lexsort((np.arange(base.cols), base.punctured, base.column_degrees()))
    return np.sort(order[base.rows:])


@dataclass
class TheoreticalBerPoint:
    ebn0_db: float
    node_ber: np.ndarray
    ber: float
    info_ber: float
    t_max: int
    protocol: str
    m: float
    d: float
    q: int
    ber_by_iteration: np.ndarray | None = None

    def csv_row(self, base: BaseMatrix) -> dict:
        return {"protocol": self.protocol.lower(), "family": base.family, "n": base.n,
                "m": self.m, "d": self.d, "ebn0_db": f"{self.ebn0_db:.4f}",
                "ber_theory": f"{self.ber:.6e}", "tmax": self.t_max, "Q": self.q}


def _node_ber_curve(base, gains, ebn0_db, t_max, rate, inverse="closed_form"):
    ens = ChannelVarianceEnsemble.from_gains(base, gains, ebn0_db, rate)
    run = run_modified_pexit(base, ens, t_max, stop_on_convergence=False,
                             stop_on_fixed_point=False, inverse=inverse)
    # rows: iteration 1..t_max, columns: protograph nodes
    return node_ber_from_app_mi(np.minimum(run.trace, 1.0))


def _point(base, node_trace, ebn0_db, t_max, protocol, m, d, q, info_cols):
    node = node_trace[-1]
    return TheoreticalBerPoint(
        ebn0_db=float(ebn0_db), node_ber=node, ber=float(node.mean()),
        info_ber=float(node[info_cols].mean()), t_max=t_max, protocol=protocol,
        m=m, d=d, q=q, ber_by_iteration=node_trace.mean(axis=1))


def _gains(base, m, d, q, seed, gains):
    return draw_relay_gains(base.cols, m, d, q, seed) if gains is None else gains


def ef_ber_curve(base: BaseMatrix, m: float, d: float = 0.4, ebn0_db=(), t_max: int = 100,
                 q: int = 10_000, seed: int = 0, gains: RelayGains | None = None,
                 inverse: str = "closed_form"):
    """EF theoretical BER at each Eb/N0 (dB) after exactly ``t_max`` iterations.

    The same fading draw is reused for every point of the curve.  ``inverse``
    selects the J inverse used inside the recursion.
    """
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    g = _gains(base, m, d, q, seed, gains)
    rate = float(code_rate(base))
    info_cols = nominal_info_columns(base)
    out = []
    for db in ebn0_db:
        tr = _node_ber_curve(base, g.combined, db, t_max, rate, inverse)
        out.append(_point(base, tr, db, t_max, "EF", m, d, g.q, info_cols))
    return out


def combine_df(p_sr, p_sd, p_d):
    """Per-node DF BER from relay, direct-only and combined-link BERs."""
    p_sr = np.asarray(p_sr, dtype=float)
    return p_sr * np.asarray(p_sd) + (1.0 - p_sr) * np.asarray(p_d)


@dataclass
class DfComponents:
    """Per-node BER families behind one DF point (final iteration)."""

    p_sr: np.ndarray
    p_sd: np.ndarray
    p_d: np.ndarray


def df_ber_curve(base: BaseMatrix, m: float, d: float = 0.4, ebn0_db=(), t_max: int = 100,
                 q: int = 10_000, seed: int = 0, gains: RelayGains | None = None,
                 return_components: bool = False, inverse: str = "closed_form"):
    """DF theoretical BER per Eb/N0 (dB), sharing the fading draw with EF.

    With ``return_components`` a list of ``DfComponents`` is returned as well.
    """
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    g = _gains(base, m, d, q, seed, gains)
    rate = float(code_rate(base))
    info_cols = nominal_info_columns(base)
    out, comps = [], []
    for db in ebn0_db:
        p_sr = _node_ber_curve(base, g.sr, db, t_max, rate, inverse)
        p_sd = _node_ber_curve(base, g.sd, db, t_max, rate, inverse)
        p_d = _node_ber_curve(base, g.combined, db, t_max, rate, inverse)
        tr = combine_df(p_sr, p_sd, p_d)
        out.append(_point(base, tr, db, t_max, "DF", m, d, g.q, info_cols))
        comps.append(DfComponents(p_sr[-1], p_sd[-1], p_d[-1]))
    return (out, comps) if return_components else out


def crossing_db(ebn0_db, ber, target: float) -> float:
    """First Eb/N0 where a decreasing BER curve reaches ``target``.

    Interpolates linearly in log10(BER) between the bracketing points;
    returns nan when the curve never gets there.
    """
    x = np.asarray(ebn0_db, dtype=float)
    y = np.asarray(ber, dtype=float)
    for k in range(len(x)):
        if y[k] <= target:
            if k == 0:
                return float(x[0]) if y[0] == target else float("nan")
            y0, y1 = np.log10(max(y[k - 1], 1e-300)), np.log10(max(y[k], 1e-300))
            t = np.log10(target)
            if y0 == y1:
                return float(x[k])
            return float(x[k - 1] + (t - y0) * (x[k] - x[k - 1]) / (y1 - y0))
    return float("nan")


def write_ber_csv(base: BaseMatrix, points, fh, header: bool = True) -> None:
    w = csv.DictWriter(fh, fieldnames=BER_FIELDS, lineterminator="\n")
    if header:
        w.writeheader()
    for p in points:
        w.writerow(p.csv_row(base))


def ber_crossing(base: BaseMatrix, m: float, target: float, protocol: str = "ef",
                 d: float = 0.4, t_max: int = 100, q: int = 10_000, seed: int = 0,
                 lo_db: float = -5.0, hi_db: float = 10.0, tol_db: float = 1e-3,
                 gains: RelayGains | None = None) -> float:
    """Eb/N0 (dB) where the theoretical BER first falls to ``target``, by bisection.

    The waterfall of the averaged recursion is too steep for interpolation
    on a coarse grid.  Returns the upper end of the final bracket; raises
    ValueError when [lo_db, hi_db] does not bracket the target.
    """
    proto = protocol.lower()
    if proto not in ("ef", "df"):
        raise ValueError(f"protocol must be 'ef' or 'df', got {protocol!r}")
    g = _gains(base, m, d, q, seed, gains)
    curve = ef_ber_curve if proto == "ef" else df_ber_curve

    def ber(db):
        return curve(base, m, d, [db], t_max=t_max, gains=g)[0].ber

    if ber(hi_db) > target:
        raise ValueError(f"BER still above {target:g} at {hi_db} dB")
    if ber(lo_db) <= target:
        raise ValueError(f"BER already below {target:g} at {lo_db} dB")
    lo, hi = lo_db, hi_db
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if ber(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi
