from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import riemann_level2, word_signature
from sigdr.signature import pathwise_signature, signature, signature_stream_array
from sigdr.streams import TimeSeries, lead_lag
from sigdr.tensor import TruncatedTensor, tensor_exp, tensor_mul


def series(values, times=None):
    values = np.asarray(values, dtype=np.float64)
    if times is None:
        times = np.arange(values.shape[0], dtype=np.float64)
    return TimeSeries(times, values)


def test_one_dim_closed_form():
    sig = signature(series([0.0, 0.7]), 5)
    np.testing.assert_allclose(sig.data, [0.7**k / math.factorial(k) for k in range(6)],
                               rtol=1e-15)


def test_two_segment_one_dim():
    np.testing.assert_allclose(signature(series([0.0, 1.0, 3.0]), 2).data, [1, 3, 4.5])


def test_linear_2d_against_riemann_sum():
    x = np.array([[0.0, 0.0], [1.0, 2.0]])
    sig = signature(series(x), 2)
    l1, l2 = riemann_level2(x)
    np.testing.assert_allclose(sig.block(1), [1, 2])
    np.testing.assert_allclose(sig.block(2).ravel(), [0.5, 1, 1, 2])
    np.testing.assert_allclose(sig.block(2), l2, atol=1e-6)
    np.testing.assert_allclose(sig.block(1), l1, atol=1e-12)


def test_random_path_against_riemann_and_word_sums(rng):
    x = rng.standard_normal((7, 3))
    sig = signature(series(x), 3)
    _, l2 = riemann_level2(x)
    np.testing.assert_allclose(sig.block(2), l2, atol=1e-6)
    for word in [(0, 1, 2), (2, 2, 0), (1, 1, 1)]:
        assert sig.coefficient(*word) == pytest.approx(word_signature(x, word), abs=1e-12)


def test_pathwise_examples():
    steps = pathwise_signature(series([0.0, 1.0, 3.0]), 2)
    np.testing.assert_allclose(np.stack([s.data for s in steps]),
                               [[1, 0, 0], [1, 1, 0.5], [1, 3, 4.5]])
    const = pathwise_signature(series(np.ones((4, 2))), 3)
    assert all(s == TruncatedTensor.unit(2, 3) for s in const)


def test_too_short_raises():
    with pytest.raises(ValueError):
        signature(np.zeros((1, 2)), 2)


paths = st.tuples(st.integers(2, 12), st.integers(1, 3), st.integers(0, 2**32 - 1))


@given(paths, st.integers(0, 4))
def test_last_prefix_is_signature(p, n):
    length, d, seed = p
    x = np.random.default_rng(seed).standard_normal((length, d))
    stream = signature_stream_array(x, n)
    assert np.array_equal(stream[-1], signature(series(x), n).data)
    assert stream[0, 0] == 1.0 and not stream[0, 1:].any()


@given(paths, st.integers(1, 4), st.data())
def test_chen_identity(p, n, data):
    length, d, seed = p
    x = np.random.default_rng(seed).standard_normal((length, d))
    j = data.draw(st.integers(0, length - 1))
    whole = signature(series(x), n)
    pre = signature(series(x[:j + 1]), n) if j >= 1 else TruncatedTensor.unit(d, n)
    suf = signature(series(x[j:] - x[j]), n) if j <= length - 2 else TruncatedTensor.unit(d, n)
    np.testing.assert_allclose(tensor_mul(pre, suf).data, whole.data, rtol=1e-12, atol=1e-12)


@given(paths, st.integers(0, 4))
def test_reparametrization_invariance_bitwise(p, n):
    length, d, seed = p
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((length, d))
    t = np.cumsum(rng.uniform(0.01, 5.0, length))
    assert signature(series(x), n) == signature(series(x, t), n)


@given(st.integers(1, 3), st.floats(-2, 2), st.integers(0, 5), st.integers(0, 2**32 - 1))
def test_linear_path_is_exp_of_increment(d, scale, n, seed):
    v = np.random.default_rng(seed).standard_normal(d) * scale
    x = np.vstack([np.zeros(d), v])
    np.testing.assert_allclose(signature(series(x), n).data, tensor_exp(v, n).data,
                               rtol=1e-14, atol=1e-15)


@given(paths, st.floats(0.1, 3.0), st.integers(1, 6))
def test_factorial_decay(p, tv, n):
    length, d, seed = p
    inc = np.random.default_rng(seed).standard_normal((length - 1, d))
    inc *= tv / np.linalg.norm(inc, axis=1).sum()
    x = np.vstack([np.zeros(d), np.cumsum(inc, axis=0)])
    sig = signature(series(x), n)
    assert np.max(np.abs(sig.block(n))) <= tv**n / math.factorial(n) * (1 + 1e-12)


def test_lead_lag_quadratic_variation_example():
    sig = signature(lead_lag(series([1.0, 5.0, 3.0])), 2)
    diff = sig.coefficient(0, 1) - sig.coefficient(1, 0)
    assert abs(diff) == pytest.approx(20.0, abs=1e-10)
    # realized sign under (lead, lag) ordering
    assert diff == pytest.approx(20.0, abs=1e-10)


@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_lead_lag_quadratic_variation(length, seed):
    x = np.random.default_rng(seed).standard_normal(length)
    sig = signature(lead_lag(series(x)), 2)
    qv = float(np.sum(np.diff(x) ** 2))
    assert abs(sig.coefficient(0, 1) - sig.coefficient(1, 0)) == pytest.approx(qv, abs=1e-10)
