from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sigdr import _backend
from sigdr.bench import fit_exponent, format_bench, run_bench

pytestmark = pytest.mark.skipif("cython" not in _backend.available(),
                                reason="compiled extension not built")

py = _backend.get("python")


def cy():
    return _backend.get("cython")


def test_get_and_available():
    assert _backend.get() is _backend.kernels
    assert _backend.available()[-1] == "python"
    with pytest.raises(ValueError):
        _backend.get("fortran")


@given(st.integers(1, 3), st.integers(1, 12), st.integers(1, 4), st.integers(0, 2**31))
def test_sig_stream_backends_agree(d, length, level, seed):
    inc = np.random.default_rng(seed).normal(size=(length, d))
    for stream in (False, True):
        a = py.sig_stream(inc, level, stream)
        b = cy().sig_stream(inc, level, stream)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@given(st.integers(1, 3), st.integers(2, 9), st.integers(2, 9), st.integers(0, 3),
       st.integers(0, 2**31))
def test_pde_kernel_backends_bitwise(d, lx, ly, r, seed):
    g = np.random.default_rng(seed)
    x, y = g.normal(size=(lx, d)) * 0.3, g.normal(size=(ly, d)) * 0.3
    assert py.pde_kernel(x, y, r) == cy().pde_kernel(x, y, r)


def test_lasso_cd_backends_agree(rng):
    X = np.asfortranarray(rng.normal(size=(40, 12)))
    y = X[:, :3] @ [1.0, -2.0, 0.5] + 0.1 * rng.normal(size=40)
    out = []
    for k in (py, cy()):
        w, r = np.zeros(12), y.copy()
        sweeps, conv, _ = k.lasso_cd(X, r, 0.05, w, 1e-10, 5000, False)  # column-major, as regress passes it
        out.append((w, sweeps, conv))
    np.testing.assert_allclose(out[0][0], out[1][0], atol=1e-9)
    assert out[0][2] and out[1][2]


def test_fit_exponent_recovers_power():
    xs = np.array([10, 20, 40, 80])
    assert fit_exponent(xs, 3.0 * xs**2.0) == pytest.approx(2.0)


def test_quick_bench_report_shape():
    res = run_bench(seed=0, quick=True)
    assert {"ses_vs_N", "kes_vs_N", "pde_vs_length"} <= set(res["scaling"])
    assert set(res["backends"]["speedup"]) == {"sig_stream", "pde_kernel", "lasso_cd"}
    assert "exponent" in format_bench(res)
