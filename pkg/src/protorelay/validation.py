"""Quick self-checks behind ``protorelay validate``.

Each check returns (name, passed, detail).  They are cheap versions of the
invariants covered by the test-suite plus the reference threshold spot
checks.
"""
from __future__ import annotations

import numpy as np
from scipy import integrate, stats

from . import channel, jfunc
from .harness import SimConfig, run_experiment
from .lifting import lift
from .pexit import ChannelVarianceEnsemble, draw_relay_gains, run_modified_pexit, threshold_search
from .protograph import build

# reference decoding thresholds (dB), EF, d = 0.4
REFERENCE_THRESHOLDS = {
    ("ar3a", 0, 1.0): -1.345,
    ("ar3a", 3, 2.0): 0.575,
    ("ar4ja", 3, 2.0): 0.722,
    ("ar4ja", 0, 4.0): -1.895,
}


def spot_tolerance(q: int) -> float:
    return 0.05 if q >= 100_000 else 0.10


def _j_quad(sigma):
    if sigma == 0:
        return 0.0
    mu = sigma ** 2 / 2

    def f(x):
        return np.exp(-(x - mu) ** 2 / (2 * sigma ** 2)) / np.sqrt(2 * np.pi * sigma ** 2) \
            * np.log2(1 + np.exp(-x))
    lo, hi = mu - 40 * sigma, mu + 40 * sigma
    val, _ = integrate.quad(f, lo, hi, points=[0.0, mu], limit=400, epsabs=1e-13, epsrel=1e-12)
    return 1.0 - val


def check_j_function():
    sig = [0.1, 0.5, 1.0, 1.6363, 3.0, 6.0, 10.0]
    err = max(abs(jfunc.j_fun(s) - _j_quad(s)) for s in sig)
    grid = np.linspace(0.01, 0.99, 99)
    rt = float(np.max(np.abs(jfunc.j_fun(jfunc.j_inv(grid)) - grid)))
    ok = err <= 1e-6 and rt <= 0.01
    return "J function accuracy and round trip", ok, f"max quad error {err:.2e}, round trip {rt:.2e}"


def check_llr_consistency(rng):
    # combined MRC LLR with x = +1 over fading; mean must be var / 2
    m, d, ebn0_db, rate = 2.0, 0.4, 1.0, 0.8
    geom, par = channel.RelayGeometry(d), channel.NakagamiParams(m)
    sigma2 = channel.noise_variance(channel.db_to_linear(ebn0_db), rate)
    n = 400_000
    f = channel.sample_fading(geom, par, rng, n)
    noise = channel.draw_link_noise(rng, n, sigma2)
    llr = channel.mrc_llr(f.h_sd + noise.n_sd, f.h_rd + noise.n_rd, f.h_sd, f.h_rd, sigma2)
    # conditioned on the fading, the LLR is Gaussian with mean = var / 2
    lam = f.gamma_sd + f.gamma_rd
    cond_mean = 2 * lam / sigma2
    resid = llr - cond_mean
    ratio = float(np.mean(cond_mean) / (np.var(resid) / 2))
    ok = abs(ratio - 1) <= 0.02
    return "channel LLR consistency", ok, f"mean / (var/2) = {ratio:.4f}"


def check_nakagami(rng):
    h = channel.sample_nakagami(channel.NakagamiParams(1.0), rng, 200_000)
    ks = stats.kstest(h, "rayleigh", args=(0, np.sqrt(0.5)))
    h2 = channel.sample_nakagami(channel.NakagamiParams(2.0), rng, 200_000)
    msq = float(np.mean(h2 ** 2))
    ok = ks.pvalue > 1e-3 and abs(msq - 1) < 0.01
    return "Nakagami moments and Rayleigh case", ok, f"KS p={ks.pvalue:.3f}, E[h^2]={msq:.4f}"


def check_encoder(rng, blocks: int = 1000):
    code = lift(build("ar3a", 1), 32, seed=1)
    u = rng.integers(0, 2, (blocks, code.k))
    bad = int(np.count_nonzero(code.syndrome(code.encode(u)).any(axis=1)))
    x = 1.0 - 2.0 * code.encode(u[:8])
    llr = np.where(code.transmit_mask, 8.0 * x, 0.0)
    res = code.decoder.decode(llr, 50)
    ok = bad == 0 and bool(np.all(res.syndrome_ok)) and bool(np.all(res.hard[:, code.info_positions] == u[:8]))
    return "encoder / decoder syndrome soundness", ok, f"{bad} of {blocks} encoded words fail H c = 0"


def check_pexit_monotone():
    # exact inverse; the closed form may wobble slightly at a stalled point
    base = build("ar3a", 0)
    g = draw_relay_gains(base.cols, 2.0, 0.4, 2000, seed=0)
    ens = ChannelVarianceEnsemble.from_gains(base, g.combined, -1.0)
    run = run_modified_pexit(base, ens, 200, stop_on_convergence=False, stop_on_fixed_point=False,
                             inverse="numeric")
    drop = float(np.min(np.diff(run.trace, axis=0))) if len(run.trace) > 1 else 0.0
    ok = drop >= -1e-12
    return "PEXIT MI monotonicity", ok, f"largest per-iteration decrease {abs(min(drop, 0.0)):.2e}"


def check_worker_determinism():
    cfg = dict(family="ar3a", n=0, z=32, m=2.0, ebn0_db=(0.0,), min_error_blocks=20,
               max_blocks=160, chunk_blocks=8, seed=3)
    a = run_experiment(SimConfig(workers=1, **cfg))[0]
    b = run_experiment(SimConfig(workers=2, **cfg))[0]
    same = (a.blocks, a.block_errors, a.bit_errors) == (b.blocks, b.block_errors, b.bit_errors)
    return "determinism under worker count", same, \
        f"1 worker {a.block_errors}/{a.blocks}, 2 workers {b.block_errors}/{b.blocks}"


def check_thresholds(q: int, seed: int = 0):
    tol = spot_tolerance(q)
    out = []
    for (fam, n, m), ref in REFERENCE_THRESHOLDS.items():
        r = threshold_search(build(fam, n), m, q=q, seed=seed)
        ok = abs(r.threshold_db - ref) <= tol
        out.append((f"threshold {fam} n={n} m={m:g}", ok,
                    f"{r.threshold_db:.3f} dB vs {ref:.3f} dB (tol {tol:.2f}, Q={q})"))
    return out


def run_checks(q: int = 10_000, thresholds: bool = True, seed: int = 0):
    rng = np.random.default_rng(seed)
    results = [check_j_function(), check_llr_consistency(rng), check_nakagami(rng),
               check_encoder(rng), check_pexit_monotone(), check_worker_determinism()]
    if thresholds:
        results += check_thresholds(q, seed)
    return results
