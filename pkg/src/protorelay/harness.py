"""Monte-Carlo simulation of the coded two-hop relay link.

Every block draws its randomness from its own substream, seeded by
(master seed, block index).  Block b therefore sees the same information
bits, fading and normalized noise at every Eb/N0 point and under both
protocols, and results do not depend on how blocks are spread over
workers.  Blocks are processed in fixed-size chunks that are merged in
index order; the stop rule is checked only at chunk boundaries.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import channel
from .lifting import LiftedCode, lift
from .protograph import build, code_rate

PROTOCOLS = ("ef", "df")

SIM_FIELDS = ["protocol", "family", "n", "z", "m", "d", "ebn0_db", "blocks", "block_errors",
              "bits", "bit_errors", "ber", "bler", "relay_failure_rate",
              "undetected_relay_errors", "mean_iterations"]


class ConfigError(ValueError):
    """Invalid simulation or experiment parameters."""


@dataclass(frozen=True)
class SimConfig:
    family: str = "ar3a"
    n: int = 3
    z: int = 512
    m: float = 2.0
    d: float = 0.4
    protocol: str = "ef"
    ebn0_db: tuple = ()
    max_iter: int = 100
    min_error_blocks: int = 100
    max_blocks: int = 100_000
    seed: int = 0
    workers: int = 1
    chunk_blocks: int = 32
    code_seed: int = 0          # lifting seed, kept apart from the channel seed
    girth: int = 6
    sr_noise_scale: float = 1.0  # 0 gives a genie (noiseless) S-R link

    def __post_init__(self):
        object.__setattr__(self, "protocol", str(self.protocol).lower())
        object.__setattr__(self, "family", str(self.family).lower())
        object.__setattr__(self, "ebn0_db", tuple(float(v) for v in np.atleast_1d(self.ebn0_db)))
        self.validate()

    def validate(self) -> None:
        if not self.ebn0_db:
            raise ConfigError("Eb/N0 sweep is empty")
        if not np.all(np.isfinite(self.ebn0_db)):
            raise ConfigError("Eb/N0 values must be finite")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.family not in ("ar3a", "ar4ja"):
            raise ConfigError(f"unknown protograph family {self.family!r}")
        if self.n < 0 or self.z < 1:
            raise ConfigError("n must be >= 0 and z >= 1")
        if not 0.0 < self.d < 1.0:
            raise ConfigError(f"d must lie in (0, 1), got {self.d}")
        if not self.m >= 0.5:
            raise ConfigError(f"Nakagami m must be >= 0.5, got {self.m}")
        if self.min_error_blocks < 1 or self.max_blocks < 1:
            raise ConfigError("stop rule needs min_error_blocks >= 1 and max_blocks >= 1")
        if self.max_iter < 1 or self.workers < 1 or self.chunk_blocks < 1:
            raise ConfigError("max_iter, workers and chunk_blocks must be positive")
        if self.sr_noise_scale < 0:
            raise ConfigError("sr_noise_scale must be non-negative")

    def echo(self) -> str:
        parts = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "ebn0_db":
                v = ",".join(f"{x:g}" for x in v)
            parts.append(f"{f.name}={v}")
        return " ".join(parts)


@dataclass(frozen=True)
class Tally:
    """Integer counters for a run of blocks; addition is associative."""

    blocks: int = 0
    bits: int = 0
    bit_errors: int = 0
    block_errors: int = 0
    relay_failures: int = 0
    relay_undetected: int = 0
    iterations: int = 0

    def __add__(self, other: "Tally") -> "Tally":
        return Tally(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))


@dataclass(frozen=True)
class SimBerPoint:
    ebn0_db: float
    bits: int
    bit_errors: int
    blocks: int
    block_errors: int
    relay_failures: int
    undetected_relay_errors: int
    iterations: int
    protocol: str
    wall_seconds: float = 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else float("nan")

    @property
    def relay_failure_rate(self) -> float:
        """Fraction of blocks the DF relay did not forward; 0 for EF."""
        return self.relay_failures / self.blocks if self.blocks else float("nan")

    @property
    def mean_iterations(self) -> float:
        return self.iterations / self.blocks if self.blocks else float("nan")

    def csv_row(self, cfg: SimConfig) -> dict:
        # wall-clock time is left out so reruns give byte-identical files
        return {"protocol": cfg.protocol, "family": cfg.family, "n": cfg.n, "z": cfg.z,
                "m": cfg.m, "d": cfg.d, "ebn0_db": f"{self.ebn0_db:.4f}",
                "blocks": self.blocks, "block_errors": self.block_errors, "bits": self.bits,
                "bit_errors": self.bit_errors, "ber": f"{self.ber:.6e}",
                "bler": f"{self.bler:.6e}",
                "relay_failure_rate": f"{self.relay_failure_rate:.6e}",
                "undetected_relay_errors": self.undetected_relay_errors,
                "mean_iterations": f"{self.mean_iterations:.3f}"}


def build_code(cfg: SimConfig) -> LiftedCode:
    return lift(build(cfg.family, cfg.n), cfg.z, seed=cfg.code_seed, girth=cfg.girth)


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Substream for one block, independent of every other block index."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


class _Link:
    """Per-block draws for one chunk; shared by both protocols."""

    def __init__(self, code: LiftedCode, cfg: SimConfig, sigma2: float, start: int, stop: int):
        tx = np.flatnonzero(code.transmit_mask)
        geom = channel.RelayGeometry(cfg.d)
        params = channel.NakagamiParams(cfg.m)
        B = stop - start
        self.info = np.empty((B, code.k), dtype=np.uint8)
        self.fading = []
        self.noise = []
        for b in range(B):
            rng = block_rng(cfg.seed, start + b)
            self.info[b] = rng.integers(0, 2, code.k, dtype=np.uint8)
            self.fading.append(channel.sample_fading(geom, params, rng, tx.size))
            self.noise.append(channel.draw_link_noise(rng, tx.size, sigma2, cfg.sr_noise_scale))
        self.tx = tx
        self.words = code.encode(self.info)
        self.x = 1.0 - 2.0 * self.words[:, tx]


def simulate_chunk(code: LiftedCode, cfg: SimConfig, ebn0_db: float,
                   start: int, stop: int) -> Tally:
    """Simulate blocks ``start .. stop-1`` at one Eb/N0 point."""
    sigma2 = channel.noise_variance(channel.db_to_linear(ebn0_db), float(code_rate(code.base)))
    link = _Link(code, cfg, sigma2, start, stop)
    B = stop - start
    tx = link.tx
    x_relay = [link.x[b] for b in range(B)]
    relay_fail = relay_undetected = 0

    if cfg.protocol == "df":
        llr_r = np.zeros((B, code.n_vars))
        for b in range(B):
            f, nz = link.fading[b], link.noise[b]
            r_r1 = f.h_sr * link.x[b] + nz.n_sr
            if sigma2 * cfg.sr_noise_scale ** 2 > 0:
                llr_r[b, tx] = channel.single_link_llr(r_r1, f.h_sr, sigma2 * cfg.sr_noise_scale ** 2)
            else:
                # noiseless S-R link: the relay knows the codeword
                llr_r[b, tx] = np.where(link.x[b] > 0, 1e3, -1e3)
        res = code.decoder.decode(llr_r, cfg.max_iter)
        for b in range(B):
            if not res.syndrome_ok[b]:
                x_relay[b] = None
                relay_fail += 1
                continue
            if np.any(res.hard[b] != link.words[b]):
                relay_undetected += 1
            reenc = code.encode(res.hard[b, code.info_positions])
            x_relay[b] = 1.0 - 2.0 * reenc[tx]

    llr_d = np.zeros((B, code.n_vars))
    for b in range(B):
        f, nz = link.fading[b], link.noise[b]
        r_d1 = f.h_sd * link.x[b] + nz.n_sd
        r_d2 = None if x_relay[b] is None else f.h_rd * x_relay[b] + nz.n_rd
        llr_d[b, tx] = channel.mrc_llr(r_d1, r_d2, f.h_sd, f.h_rd, sigma2)
    res = code.decoder.decode(llr_d, cfg.max_iter)
    errs = (res.hard[:, code.info_positions] != link.info).sum(axis=1)
    return Tally(blocks=B, bits=B * code.k, bit_errors=int(errs.sum()),
                 block_errors=int((errs > 0).sum()), relay_failures=relay_fail,
                 relay_undetected=relay_undetected, iterations=int(np.sum(res.iterations)))


def _chunks(cfg: SimConfig):
    start = 0
    while start < cfg.max_blocks:
        stop = min(start + cfg.chunk_blocks, cfg.max_blocks)
        yield start, stop
        start = stop


def _done(t: Tally, cfg: SimConfig) -> bool:
    return t.block_errors >= cfg.min_error_blocks or t.blocks >= cfg.max_blocks


_WORKER_CODE: LiftedCode | None = None


def _init_worker(code):
    global _WORKER_CODE
    _WORKER_CODE = code


def _worker_chunk(args):
    cfg, ebn0_db, start, stop = args
    return simulate_chunk(_WORKER_CODE, cfg, ebn0_db, start, stop)


def _tally_point(code, cfg, ebn0_db, pool) -> Tally:
    total = Tally()
    chunks = _chunks(cfg)
    while True:
        wave = [c for _, c in zip(range(cfg.workers), chunks)]
        if not wave:
            return total
        if pool is None:
            # lazily, so no chunk past the stop point is simulated
            results = (simulate_chunk(code, cfg, ebn0_db, a, b) for a, b in wave)
        else:
            results = pool.map(_worker_chunk, [(cfg, ebn0_db, a, b) for a, b in wave])
        for t in results:
            total = total + t
            if _done(total, cfg):
                return total


def _to_point(t: Tally, cfg: SimConfig, ebn0_db: float, seconds: float) -> SimBerPoint:
    return SimBerPoint(ebn0_db=float(ebn0_db), bits=t.bits, bit_errors=t.bit_errors,
                       blocks=t.blocks, block_errors=t.block_errors,
                       relay_failures=t.relay_failures,
                       undetected_relay_errors=t.relay_undetected, iterations=t.iterations,
                       protocol=cfg.protocol, wall_seconds=seconds)


def simulate_point(cfg: SimConfig, ebn0_db: float, code: LiftedCode | None = None,
                   pool=None) -> SimBerPoint:
    """Run blocks at one Eb/N0 (dB) until the stop rule fires."""
    code = build_code(cfg) if code is None else code
    t0 = time.perf_counter()
    t = _tally_point(code, cfg, ebn0_db, pool)
    return _to_point(t, cfg, ebn0_db, time.perf_counter() - t0)


def reproducibility_header(cfg: SimConfig, code: LiftedCode) -> list[str]:
    return ["# protorelay simulate",
            f"# seed={cfg.seed}",
            f"# code_sha256={code.digest()}",
            f"# config: {cfg.echo()}"]


def write_sim_csv(cfg: SimConfig, code: LiftedCode, points, fh) -> None:
    for line in reproducibility_header(cfg, code):
        fh.write(line + "\n")
    w = csv.DictWriter(fh, fieldnames=SIM_FIELDS, lineterminator="\n")
    w.writeheader()
    for p in points:
        w.writerow(p.csv_row(cfg))


def run_experiment(cfg: SimConfig, out=None, code: LiftedCode | None = None, progress=None):
    """Sweep all Eb/N0 points; write CSV to ``out`` (path) when given.

    ``progress`` is an optional callable receiving each finished point.
    """
    code = build_code(cfg) if code is None else code
    points = []
    pool = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(code,))
    try:
        for db in cfg.ebn0_db:
            p = simulate_point(cfg, db, code, pool)
            points.append(p)
            if progress is not None:
                progress(p)
    finally:
        if pool is not None:
            pool.shutdown()
    if out is not None:
        path = Path(out)
        try:
            with path.open("w", encoding="utf-8", newline="") as fh:
                write_sim_csv(cfg, code, points, fh)
        except OSError as exc:
            raise OSError(f"cannot write simulation results to {path}: {exc}") from exc
    return points
