import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from protorelay import jfunc

mpmath.mp.dps = 30


def j_oracle(sigma):
    """1 - E[log2(1 + e^-L)], L ~ N(sigma^2/2, sigma^2), by mpmath quadrature."""
    if sigma == 0:
        return 0.0
    s = mpmath.mpf(sigma)
    mu = s ** 2 / 2

    def f(x):
        return mpmath.exp(-(x - mu) ** 2 / (2 * s ** 2)) * mpmath.log(1 + mpmath.exp(-x), 2)
    val = mpmath.quad(f, [mu - 40 * s, 0, mu, mu + 40 * s]) / mpmath.sqrt(2 * mpmath.pi * s ** 2)
    return float(1 - val)


def sig4(x):
    return float(f"{x:.4g}")


@pytest.mark.parametrize("sigma", [0.05, 0.3, 0.8, 1.2, 1.6363, 2.0, 3.0, 4.5, 7.0, 10.0, 20.0])
def test_j_matches_oracle(sigma):
    assert abs(jfunc.j_fun(sigma) - j_oracle(sigma)) <= 1e-6


def test_j_endpoints():
    assert jfunc.j_fun(0.0) == 0.0
    assert jfunc.j_fun(10.0) > 0.999
    with pytest.raises(ValueError):
        jfunc.j_fun(-0.1)


def test_j_vectorized():
    s = np.array([0.0, 1.0, 2.0])
    out = jfunc.j_fun(s)
    assert out.shape == (3,)
    assert out[1] == pytest.approx(jfunc.j_fun(1.0))


# beyond sigma ~ 20, 1 - J drops below double resolution
@given(st.floats(0.0, 12.0), st.floats(0.01, 5.0))
def test_j_increasing(a, delta):
    assert jfunc.j_fun(a + delta) > jfunc.j_fun(a)


def test_j_half_root():
    # the quadrature root of J(sigma) = 0.5 sits near 2.0435, where the
    # closed-form inverse (2.0376) also lands; sigma = 1.6363 gives only 0.365
    root = brentq(lambda s: j_oracle(s) - 0.5, 1.0, 3.0, xtol=1e-10)
    assert root == pytest.approx(2.0435, abs=1e-3)
    assert abs(jfunc.j_inv(0.5) - root) < 0.01
    assert jfunc.j_fun(1.6363) == pytest.approx(0.3649, abs=1e-3)


def test_j_inv_point_values():
    assert jfunc.j_inv(0.0) == 0.0
    first = 1.09542 * 0.09 + 0.214217 * 0.3 + 2.33737 * math.sqrt(0.3)
    second = -0.706692 * math.log(0.386013 * 0.5) + 1.75017 * 0.5
    assert jfunc.j_inv(0.3) == pytest.approx(first, rel=1e-12)
    assert jfunc.j_inv(0.5) == pytest.approx(second, rel=1e-12)
    assert sig4(jfunc.j_inv(0.3)) == 1.443
    assert sig4(jfunc.j_inv(0.5)) == 2.038


def test_j_inv_branch_split():
    below = jfunc.j_inv(0.3646 - 1e-12)
    above = jfunc.j_inv(0.3646)
    assert abs(above - below) < 0.01


@pytest.mark.parametrize("bad", [1.0, 1.2, -0.01])
def test_j_inv_domain(bad):
    with pytest.raises(ValueError):
        jfunc.j_inv(bad)


def test_round_trip_on_grid():
    grid = np.linspace(0.01, 0.99, 981)
    err = np.abs(jfunc.j_fun(jfunc.j_inv(grid)) - grid)
    assert err.max() <= 0.01


def test_table_interpolation():
    tab = jfunc.default_table()
    s = np.random.default_rng(0).uniform(0, 39.9, 2000)
    assert np.max(np.abs(tab(s) - jfunc.j_fun(s))) <= 5e-8
    assert tab(0.0) == 0.0


@given(st.floats(0.001, 0.999))
def test_numeric_inverse_round_trip(mi):
    assert jfunc.default_table()(jfunc.j_inv_numeric(mi)) == pytest.approx(mi, abs=1e-6)
