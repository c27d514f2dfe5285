"""Two-hop half-duplex relay channel with ergodic Nakagami-m fading.

Signal model (real BPSK, one fading draw per bit and link)::

    r_R1 = h_SR x + n_SR      source -> relay, slot 1
    r_D1 = h_SD x + n_SD      source -> destination, slot 1
    r_D2 = h_RD x' + n_RD     relay -> destination, slot 2

with h_SD = a_SD, h_SR = a_SR / d, h_RD = a_RD / (1 - d), each a ~ Nakagami(m,
1), and white Gaussian noise of variance sigma_n^2 = 1 / (R * Eb/N0) on all
three links.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NakagamiParams:
    """Nakagami-m amplitude law with unit mean-square amplitude."""

    m: float

    def __post_init__(self):
        if not self.m >= 0.5:
            raise ValueError(f"Nakagami fading depth must satisfy m >= 0.5, got {self.m}")

    @property
    def omega(self) -> float:
        return 1.0


@dataclass(frozen=True)
class RelayGeometry:
    """Collinear S-R-D placement with |SD| = 1 and |SR| = d."""

    d: float = 0.4

    def __post_init__(self):
        if not 0.0 < self.d < 1.0:
            raise ValueError(f"relay distance d must lie in (0, 1), got {self.d}")

    @property
    def scale_sd(self) -> float:
        return 1.0

    @property
    def scale_sr(self) -> float:
        return 1.0 / self.d

    @property
    def scale_rd(self) -> float:
        return 1.0 / (1.0 - self.d)


@dataclass(frozen=True)
class FadingRealization:
    """Per-bit link coefficients; gains are their squares."""

    h_sr: np.ndarray
    h_sd: np.ndarray
    h_rd: np.ndarray

    @property
    def gamma_sr(self):
        return self.h_sr ** 2

    @property
    def gamma_sd(self):
        return self.h_sd ** 2

    @property
    def gamma_rd(self):
        return self.h_rd ** 2


@dataclass(frozen=True)
class Received:
    r_r1: np.ndarray
    r_d1: np.ndarray
    r_d2: np.ndarray | None      # None when the relay stays silent
    fading: FadingRealization


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def noise_variance(ebn0, rate) -> float:
    """Per-dimension noise variance for linear Eb/N0 and code rate R.

    The two-slot energy split (E_b' = E_b / 2) turns 1 / (2 R E_b'/N0) into
    1 / (R Eb/N0).
    """
    ebn0 = float(ebn0)
    rate = float(rate)
    if ebn0 <= 0 or rate <= 0:
        raise ValueError("Eb/N0 and rate must be positive")
    return 1.0 / (rate * ebn0)


def sample_nakagami(params: NakagamiParams, rng: np.random.Generator, size=None):
    """Draw amplitudes sqrt(G) with G ~ Gamma(shape m, scale Omega/m).

    numpy's gamma sampler is exact (Marsaglia-Tsang rejection), so the
    amplitude law is reproduced without moment matching.
    """
    g = rng.gamma(params.m, params.omega / params.m, size)
    return np.sqrt(g)


def sample_fading(geometry: RelayGeometry, params: NakagamiParams,
                  rng: np.random.Generator, size) -> FadingRealization:
    # fixed draw order S-R, S-D, R-D keeps streams aligned across protocols
    h_sr = sample_nakagami(params, rng, size) * geometry.scale_sr
    h_sd = sample_nakagami(params, rng, size) * geometry.scale_sd
    h_rd = sample_nakagami(params, rng, size) * geometry.scale_rd
    return FadingRealization(h_sr, h_sd, h_rd)


@dataclass(frozen=True)
class LinkNoise:
    n_sr: np.ndarray
    n_sd: np.ndarray
    n_rd: np.ndarray


def draw_link_noise(rng: np.random.Generator, shape, sigma2: float,
                    sr_noise_scale: float = 1.0) -> LinkNoise:
    """AWGN for the three links, drawn in the fixed order S-R, S-D, R-D."""
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    sd = np.sqrt(sigma2)
    n_sr = rng.standard_normal(shape) * (sd * sr_noise_scale)
    n_sd = rng.standard_normal(shape) * sd
    n_rd = rng.standard_normal(shape) * sd
    return LinkNoise(n_sr, n_sd, n_rd)


def transmit_links(x_hat, x, geometry: RelayGeometry, params: NakagamiParams,
                   sigma2: float, rng: np.random.Generator,
                   fading: FadingRealization | None = None,
                   sr_noise_scale: float = 1.0) -> Received:
    """Pass BPSK vectors through the three links.

    ``x`` is the source word, ``x_hat`` the relay word (None for a silent
    relay).  Only transmitted (unpunctured) symbols should be passed in.
    Fading and all three noise vectors are always drawn, in a fixed order,
    so the random stream does not depend on whether the relay speaks.
    ``sr_noise_scale`` = 0 gives a noiseless source-relay link.
    """
    x = np.asarray(x, dtype=float)
    if x_hat is not None and np.shape(x_hat) != x.shape:
        raise ValueError(f"relay word shape {np.shape(x_hat)} differs from source word {x.shape}")
    if fading is None:
        fading = sample_fading(geometry, params, rng, x.shape)
    noise = draw_link_noise(rng, x.shape, sigma2, sr_noise_scale)
    r_r1 = fading.h_sr * x + noise.n_sr
    r_d1 = fading.h_sd * x + noise.n_sd
    r_d2 = None if x_hat is None else fading.h_rd * np.asarray(x_hat, dtype=float) + noise.n_rd
    return Received(r_r1, r_d1, r_d2, fading)


def single_link_llr(r, h, sigma2):
    """LLR 2 h r / sigma_n^2 of one faded BPSK observation with known h."""
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    return 2.0 * np.asarray(h) * np.asarray(r) / sigma2


def mrc_llr(r_d1, r_d2, h_sd, h_rd, sigma2):
    """Maximum-ratio-combined LLR at the destination.

    With ``r_d2`` None (silent relay) only the source-destination term is
    kept.
    """
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    y = np.asarray(h_sd) * np.asarray(r_d1)
    if r_d2 is not None:
        y = y + np.asarray(h_rd) * np.asarray(r_d2)
    return 2.0 * y / sigma2


def channel_llr_variance(gain, rate, ebn0, transmitted=1):
    """Variance 4 R P lambda Eb/N0 of a consistent Gaussian channel LLR.

    ``gain`` is gamma_SD + gamma_RD for the combined destination LLR or a
    single link gain; ``transmitted`` is 0 for punctured nodes.
    """
    ebn0 = np.asarray(ebn0, dtype=float)
    if np.any(ebn0 <= 0):
        raise ValueError("Eb/N0 must be positive (linear scale)")
    return 4.0 * float(rate) * np.asarray(transmitted) * np.asarray(gain) * ebn0
