from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sigdr.measures import (expected_signature, pairwise_mean, pathwise_expected_signature,
                            read_feature_csv, ses_feature_count, ses_feature_matrix,
                            ses_features, write_feature_csv)
from sigdr.signature import pathwise_signature, signature
from sigdr.streams import EmpiricalMeasure, TimeSeries
from sigdr.tensor import term_count


def group_on_grid(rng, n_series, length, d):
    t = np.arange(length, dtype=np.float64)
    return EmpiricalMeasure([TimeSeries(t, rng.standard_normal((length, d)))
                             for _ in range(n_series)])


def test_expected_signature_examples(rng):
    x = TimeSeries([0, 1], [0.0, 1.0])
    y = TimeSeries([0, 1], [0.0, 3.0])
    np.testing.assert_allclose(expected_signature(EmpiricalMeasure([x, y]), 2).data,
                               [1, 2, 2.5])
    z = group_on_grid(rng, 1, 6, 2)[0]
    assert expected_signature(EmpiricalMeasure([z]), 3) == signature(z, 3)
    np.testing.assert_allclose(expected_signature(EmpiricalMeasure([z, z, z]), 3).data,
                               signature(z, 3).data, rtol=1e-15, atol=1e-15)
    assert expected_signature(EmpiricalMeasure([z, z, z, z]), 3) == signature(z, 3)
    with pytest.raises(ValueError):
        expected_signature([], 2)


def test_pes_examples(rng):
    g = EmpiricalMeasure([TimeSeries([0, 1, 2], [0, 1, 3]), TimeSeries([0, 1, 2], [0, 3, 9])])
    np.testing.assert_allclose(pathwise_expected_signature(g, 1).array, [[1, 0], [1, 2], [1, 6]])
    z = group_on_grid(rng, 1, 5, 2)
    pes = pathwise_expected_signature(z, 2)
    assert all(a == b for a, b in zip(pes.steps, pathwise_signature(z[0], 2)))


def test_pes_unequal_grids(rng):
    a = TimeSeries([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    b = TimeSeries([0.0, 0.5, 2.0], [0.0, 2.0, 1.0])
    with pytest.raises(ValueError, match="series 1"):
        pathwise_expected_signature(EmpiricalMeasure([a, b]), 2, resample=False)
    pes = pathwise_expected_signature(EmpiricalMeasure([a, b]), 2)
    np.testing.assert_array_equal(pes.times, [0, 0.5, 1, 2])
    np.testing.assert_allclose(pes[-1].data, expected_signature(EmpiricalMeasure([a, b]), 2).data,
                               rtol=1e-12, atol=1e-12)


@given(st.integers(1, 8), st.integers(2, 10), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_pes_final_step_is_expected_signature_exactly(n_series, length, d, seed):
    g = group_on_grid(np.random.default_rng(seed), n_series, length, d)
    assert pathwise_expected_signature(g, 3)[-1] == expected_signature(g, 3)


@given(st.integers(2, 8), st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_permutation_invariance(n_series, length, seed):
    rng = np.random.default_rng(seed)
    g = group_on_grid(rng, n_series, length, 2)
    perm = EmpiricalMeasure([g[i] for i in rng.permutation(n_series)])
    np.testing.assert_allclose(expected_signature(perm, 3).data, expected_signature(g, 3).data,
                               rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(pathwise_expected_signature(perm, 2).array,
                               pathwise_expected_signature(g, 2).array, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(ses_features(perm, 2, 2).coefficients,
                               ses_features(g, 2, 2).coefficients, rtol=1e-12, atol=1e-12)


def test_feature_count_examples(rng):
    assert ses_feature_count(2, 2, 2) == 43
    assert len(ses_features(group_on_grid(rng, 3, 6, 2), 2, 2)) == 43
    assert ses_feature_count(2, 2, 2, time_augment=True) == term_count(7, 2)
    with pytest.raises(ValueError, match="entries"):
        ses_features(group_on_grid(rng, 2, 4, 3), 3, 3, cap=1000)


def test_constant_group_gives_unit_features():
    g = EmpiricalMeasure([TimeSeries([0, 1, 2], np.full((3, 2), 4.0))] * 2)
    f = ses_features(g, 2, 2).coefficients
    assert f[0] == 1.0 and not f[1:].any()


def test_singleton_level_one_features():
    x = TimeSeries([0, 1, 2, 3], [2.0, 3.0, 1.0, 6.0])
    f = ses_features(EmpiricalMeasure([x]), 1, 1).coefficients
    np.testing.assert_allclose(f, [1.0, 4.0])


def test_rescale_and_time_augment_options(rng):
    g = group_on_grid(rng, 3, 5, 2)
    plain = ses_features(g, 2, 1).coefficients
    scaled = ses_features(g, 2, 1, rescale=True).coefficients
    np.testing.assert_allclose(scaled[1:3], plain[1:3])
    np.testing.assert_allclose(scaled[3:], 2 * plain[3:])
    ta = ses_features(g, 2, 1, time_augment=True).coefficients
    assert ta.shape[0] == plain.shape[0] + 1 and ta[1] == pytest.approx(1.0)


def test_features_are_continuous(rng):
    g = group_on_grid(rng, 4, 6, 2)
    eps = 1e-6
    pert = EmpiricalMeasure([TimeSeries(s.times, s.values + eps * rng.standard_normal(s.values.shape))
                             for s in g])
    diff = np.abs(ses_features(pert, 2, 2).coefficients - ses_features(g, 2, 2).coefficients)
    assert diff.max() / eps < 1e3


def test_feature_matrix_threads_and_csv(tmp_path, rng):
    groups = [group_on_grid(rng, 3, 5, 2) for _ in range(4)]
    a = ses_feature_matrix(groups, 2, 2, threads=1)
    b = ses_feature_matrix(groups, 2, 2, threads=3)
    assert np.array_equal(a, b)
    write_feature_csv(tmp_path / "f.csv", ["a", "b", "c", "d"], a)
    ids, back = read_feature_csv(tmp_path / "f.csv")
    assert list(ids) == ["a", "b", "c", "d"]
    assert np.array_equal(back, a)


def test_pairwise_mean():
    assert pairwise_mean(np.array([[1.0], [2.0], [4.0]]))[0] == pytest.approx(7 / 3)
    with pytest.raises(ValueError):
        pairwise_mean(np.zeros((0, 2)))


def test_clt_rate_small():
    # median error of a level-1 coefficient shrinks like N^{-1/2}
    from sigdr.synthdata.fbm import fbm_paths
    rng = np.random.default_rng(7)
    ref = fbm_paths(0.3, 20, 20000, rng)[:, -1] ** 2
    truth = ref.mean()
    errs = {}
    for n in (25, 100):
        e = []
        for _ in range(200):
            paths = fbm_paths(0.3, 20, n, rng)
            g = EmpiricalMeasure([TimeSeries(np.arange(20.0), p ** 2) for p in paths])
            e.append(abs(expected_signature(g, 1).data[1] - truth))
        errs[n] = np.median(e)
    assert 0.3 <= errs[100] / errs[25] <= 0.7
