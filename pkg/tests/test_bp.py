import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from protorelay.bp import BPDecoder, bp_decode
from protorelay.lifting import lift
from protorelay.protograph import BaseMatrix, build_ar3a

HAMMING = np.array([[1, 1, 0, 1, 1, 0, 0],
                    [1, 0, 1, 1, 0, 1, 0],
                    [0, 1, 1, 1, 0, 0, 1]])


def reference_decode(H, llr, max_iter):
    """Plain-Python flooding sum-product with the same stopping rule."""
    H = np.asarray(H)
    m, n = H.shape
    edges = [(c, v) for c in range(m) for v in range(n) if H[c, v]]
    v2c = {e: float(llr[e[1]]) for e in edges}
    c2v = {}
    post = np.array(llr, dtype=float)
    hard = (post < 0).astype(int)
    for it in range(1, max_iter + 1):
        for c in range(m):
            nb = [e for e in edges if e[0] == c]
            for e in nb:
                prod = 1.0
                for f in nb:
                    if f != e:
                        prod *= math.tanh(v2c[f] / 2)
                c2v[e] = 2 * math.atanh(prod)
        for v in range(n):
            nb = [e for e in edges if e[1] == v]
            post[v] = llr[v] + sum(c2v[e] for e in nb)
            for e in nb:
                v2c[e] = post[v] - c2v[e]
        hard = (post < 0).astype(int)
        if not (H @ hard % 2).any():
            return hard, post, it, True
    return hard, post, max_iter, False


def codewords(H):
    return np.array([w for w in itertools.product([0, 1], repeat=H.shape[1])
                     if not (H @ np.array(w) % 2).any()])


def test_saturated_input():
    code = lift(build_ar3a(1), 16, seed=0)
    res = bp_decode(code, np.full(code.n_vars, 50.0), 100)
    assert not res.hard.any()
    assert res.syndrome_ok and res.iterations == 1


@pytest.mark.parametrize("flip", [0, 1, 2, 4, 5, 6])
def test_hamming_single_flip_matches_ml(flip):
    words = codewords(HAMMING)
    assert len(words) == 16
    dec = BPDecoder(HAMMING)
    for c in words:
        llr = 4.0 * (1 - 2 * c)
        llr[flip] = -llr[flip]
        ml = words[np.argmax(((1 - 2 * words) * llr).sum(axis=1))]
        assert np.array_equal(ml, c)
        assert np.array_equal(dec.decode(llr, 20).hard, ml)


def test_hamming_degree3_flip_follows_sum_product():
    # flipping the weight-3 column pulls BP to a weight-3 codeword after one
    # iteration; the result must still match an independent sum-product run
    dec = BPDecoder(HAMMING)
    llr = np.full(7, 4.0)
    llr[3] = -4.0
    res = dec.decode(llr, 20)
    hard, post, it, ok = reference_decode(HAMMING, llr, 20)
    assert np.array_equal(res.hard, hard) and res.iterations == it and res.syndrome_ok == ok
    np.testing.assert_allclose(res.posterior, post, atol=1e-9)


def test_punctured_node_recovered_hand_trace():
    # 3x5 code, column 1 punctured (channel LLR 0), all-zero word sent
    H = np.array([[1, 1, 1, 0, 0], [0, 1, 0, 1, 1], [1, 0, 1, 1, 1]])
    a = 2.0
    llr = np.array([a, 0.0, a, a, a])
    res = BPDecoder(H).decode(llr, 10)
    # iteration 1: each check of the punctured node sees two inputs of LLR a
    c2v = 2 * math.atanh(math.tanh(a / 2) ** 2)
    assert res.iterations == 1 and res.syndrome_ok
    assert res.posterior[1] == pytest.approx(2 * c2v, rel=1e-12)
    assert res.posterior[1] > 0


def test_punctured_two_iteration_trace():
    # a wrong-sign bit forces a second iteration
    H = np.array([[1, 1, 1, 0, 0], [0, 1, 0, 1, 1], [1, 0, 1, 1, 1]])
    llr = np.array([-1.0, 0.0, 2.0, 1.5, 2.5])
    res = BPDecoder(H).decode(llr, 10)
    hard, post, it, ok = reference_decode(H, llr, 10)
    assert it == 2 and res.iterations == 2
    assert ok and res.syndrome_ok
    assert not res.hard.any()
    assert res.posterior[1] > 0
    np.testing.assert_allclose(res.posterior, post, rtol=1e-10, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 8))
def test_matches_reference_decoder(seed, iters):
    rng = np.random.default_rng(seed)
    code = lift(build_ar3a(0), 3, seed=seed % 7)
    H = code.H.toarray()
    llr = rng.normal(1.0, 2.0, code.n_vars)
    res = BPDecoder(H).decode(llr, iters)
    hard, post, it, ok = reference_decode(H, llr, iters)
    assert res.iterations == it and res.syndrome_ok == ok
    np.testing.assert_allclose(res.posterior, post, rtol=1e-8, atol=1e-8)


def test_syndrome_flag_is_sound():
    code = lift(build_ar3a(2), 32, seed=1)
    rng = np.random.default_rng(5)
    u = rng.integers(0, 2, (200, code.k))
    x = 1.0 - 2.0 * code.encode(u)
    sigma = 0.65       # near the waterfall: a mix of successes and failures
    llr = np.where(code.transmit_mask, 2 * (x + rng.normal(0, sigma, x.shape)) / sigma ** 2, 0.0)
    res = code.decoder.decode(llr, 30)
    synd = code.syndrome(res.hard).any(axis=1)
    assert np.array_equal(res.syndrome_ok, ~synd)
    assert res.syndrome_ok.any() and (~res.syndrome_ok).any()
    assert (res.iterations <= 30).all()


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 48, elements=st.floats(-20, 20).filter(lambda v: abs(v) > 1e-3)))
def test_sign_symmetry(llr):
    # even row weights make the all-ones word a codeword, so the complement
    # of a decision is valid exactly when the decision is
    base = BaseMatrix(np.array([[1, 1, 1, 1, 0, 0], [1, 1, 0, 0, 1, 1], [0, 0, 1, 1, 1, 1]]),
                      np.zeros(6, dtype=bool))
    dec = lift(base, 8, seed=0).decoder
    a = dec.decode(llr, 15)
    b = dec.decode(-llr, 15)
    np.testing.assert_allclose(b.posterior, -a.posterior, rtol=1e-12, atol=1e-12)
    nz = a.posterior != 0
    assert np.array_equal(b.hard[nz], 1 - a.hard[nz])
    assert a.iterations == b.iterations


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 40, elements=st.floats(-1e3, 1e3)))
def test_extreme_llrs_stay_finite(llr):
    code = lift(build_ar3a(0), 8, seed=2)
    res = code.decoder.decode(llr, 25)
    assert np.isfinite(res.posterior).all()


def test_input_validation():
    dec = BPDecoder(HAMMING)
    with pytest.raises(ValueError):
        dec.decode(np.ones(6))
    with pytest.raises(ValueError):
        dec.decode(np.array([1, 1, np.nan, 1, 1, 1, 1.0]))
    with pytest.raises(ValueError):
        dec.decode(np.array([1, 1, np.inf, 1, 1, 1, 1.0]))
    with pytest.raises(ValueError):
        dec.decode(np.ones(7), max_iter=0)
    with pytest.raises(ValueError):
        BPDecoder(np.array([[2, 1, 0], [0, 1, 1]]))


def test_batch_equals_single():
    code = lift(build_ar3a(1), 16, seed=3)
    llr = np.random.default_rng(0).normal(1.5, 2.0, (5, code.n_vars))
    batch = code.decoder.decode(llr, 20)
    for b in range(5):
        one = code.decoder.decode(llr[b], 20)
        assert np.array_equal(one.hard, batch.hard[b])
        assert one.iterations == batch.iterations[b]


def test_concurrent_calls_are_safe():
    code = lift(build_ar3a(2), 64, seed=0)
    rng = np.random.default_rng(9)
    llrs = [rng.normal(1.2, 2.0, code.n_vars) for _ in range(16)]
    serial = [code.decoder.decode(v, 40).posterior for v in llrs]
    with ThreadPoolExecutor(4) as ex:
        threaded = list(ex.map(lambda v: code.decoder.decode(v, 40).posterior, llrs))
    for s, t in zip(serial, threaded):
        assert np.array_equal(s, t)
