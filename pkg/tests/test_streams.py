from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sigdr.errors import DataError
from sigdr.streams import (ChannelStats, Dataset, EmpiricalMeasure, TimeSeries, align,
                           lead_lag, lead_lag_time_augment, load_dataset, save_dataset,
                           subsample, time_augment, union_grid)


def test_timeseries_validation():
    with pytest.raises(ValueError):
        TimeSeries([0.0], [[1.0]])
    with pytest.raises(ValueError):
        TimeSeries([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        TimeSeries([0.0, 1.0], [1.0, np.nan])
    with pytest.raises(ValueError):
        TimeSeries([0.0, 1.0, 2.0], [1.0, 2.0])
    ts = TimeSeries([0.0, 1.0], [3.0, 4.0])
    assert ts.dim == 1 and len(ts) == 2


def test_measure_and_dataset_validation():
    a = TimeSeries([0, 1], [[0, 0], [1, 1]])
    b = TimeSeries([0, 1], [0, 1])
    with pytest.raises(ValueError):
        EmpiricalMeasure([])
    with pytest.raises(ValueError):
        EmpiricalMeasure([a, b])
    g = EmpiricalMeasure([a])
    with pytest.raises(ValueError):
        Dataset([g], [1.0, 2.0])
    with pytest.raises(ValueError):
        Dataset([g], [np.inf])


def test_time_augment_examples():
    out = time_augment(TimeSeries([0, 1], [5, 7]))
    np.testing.assert_array_equal(out.values, [[0, 5], [1, 7]])
    out = time_augment(TimeSeries([0, 2, 4], [1, 1, 1]))
    np.testing.assert_array_equal(out.values[:, 0], [0, 0.5, 1])
    np.testing.assert_array_equal(out.times, [0, 2, 4])


def test_lead_lag_examples():
    out = lead_lag(TimeSeries([0, 1, 2], [1, 5, 3]))
    np.testing.assert_array_equal(out.values[:, 0], [1, 5, 5, 3, 3])
    np.testing.assert_array_equal(out.values[:, 1], [1, 1, 5, 5, 3])
    np.testing.assert_array_equal(out.times, [1, 2, 3, 4, 5])
    const = lead_lag(TimeSeries([0, 1], [2.5, 2.5]))
    assert np.all(const.values == 2.5) and len(const) == 3


def test_lead_lag_multidim_ordering():
    x = np.array([[1.0, 10.0], [2.0, 20.0]])
    out = lead_lag(TimeSeries([0, 1], x))
    assert out.dim == 4
    np.testing.assert_array_equal(out.values, [[1, 1, 10, 10], [2, 1, 20, 10], [2, 2, 20, 20]])


def test_lead_lag_time_augment_keeps_time_monotone():
    ts = TimeSeries([0.0, 0.3, 1.0], [1.0, 5.0, 3.0])
    out = lead_lag_time_augment(ts)
    assert out.dim == 3
    np.testing.assert_allclose(out.values[:, 0], [0, 0.3, 0.3, 1, 1])
    assert np.all(np.diff(out.values[:, 0]) >= 0)


def test_subsample_examples(rng):
    ts = TimeSeries(np.arange(500.0), rng.standard_normal((500, 2)))
    assert subsample(ts, 0.0, rng) == ts
    lengths = [len(subsample(ts, 0.75, np.random.default_rng(s))) for s in range(200)]
    assert np.mean(lengths) == pytest.approx(2 + 498 * 0.25, rel=0.02)
    with pytest.raises(ValueError):
        subsample(TimeSeries([0, 1, 2], [0, 1, 2]), 0.5, rng)
    with pytest.raises(ValueError):
        subsample(ts, 1.0, rng)


@given(st.integers(3, 60), st.floats(0.0, 0.6), st.integers(0, 2**32 - 1))
def test_subsample_properties(length, rate, seed):
    ts = TimeSeries(np.cumsum(np.random.default_rng(seed).uniform(0.1, 1, length)),
                    np.random.default_rng(seed + 1).standard_normal(length))
    if length * (1 - rate) < 2:
        return
    a = subsample(ts, rate, np.random.default_rng(seed))
    b = subsample(ts, rate, np.random.default_rng(seed))
    assert a == b
    assert a.times[0] == ts.times[0] and a.times[-1] == ts.times[-1]
    assert np.all(np.isin(a.times, ts.times))
    assert np.all(np.diff(time_augment(a).values[:, 0]) > 0)


def test_align_union_grid():
    a = TimeSeries([0.0, 2.0], [0.0, 2.0])
    b = TimeSeries([0.0, 1.0, 3.0], [0.0, 5.0, 5.0])
    g = align(EmpiricalMeasure([a, b]))
    np.testing.assert_array_equal(union_grid(EmpiricalMeasure([a, b])), [0, 1, 2, 3])
    np.testing.assert_array_equal(g[0].values.ravel(), [0, 1, 2, 2])
    np.testing.assert_array_equal(g[1].values.ravel(), [0, 5, 5, 5])
    same = EmpiricalMeasure([a, a])
    assert align(same) is same


def test_channel_stats_roundtrip():
    g = EmpiricalMeasure([TimeSeries([0, 1, 2], [[1, 5], [2, 5], [3, 5]])])
    stats = ChannelStats.fit([g])
    out = stats.apply(g[0])
    np.testing.assert_allclose(out.values[:, 0].mean(), 0, atol=1e-15)
    np.testing.assert_allclose(out.values[:, 1], 0)   # zero std replaced by 1
    assert ChannelStats.from_dict(stats.to_dict()) == stats


def test_csv_roundtrip(tmp_path, rng):
    groups = [EmpiricalMeasure([TimeSeries(np.sort(rng.uniform(0, 10, 5 + i)),
                                           rng.standard_normal((5 + i, 2)))
                                for i in range(3)]) for _ in range(2)]
    ds = Dataset(groups, [1.5, -2.0], ["a", "b"])
    save_dataset(ds, tmp_path / "d.csv", tmp_path / "l.csv")
    back = load_dataset(tmp_path / "d.csv", tmp_path / "l.csv")
    assert back.group_ids == ["a", "b"]
    np.testing.assert_array_equal(back.labels, ds.labels)
    for g0, g1 in zip(ds.groups, back.groups):
        assert all(s0 == s1 for s0, s1 in zip(g0, g1))


def test_csv_unsorted_rows_and_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("group_id,series_id,time,dim_0\ng,0,2,3\ng,0,0,1\ng,0,1,2\n")
    ds = load_dataset(p)
    np.testing.assert_array_equal(ds.groups[0][0].values.ravel(), [1, 2, 3])
    p.write_text("group_id,series_id,time,dim_0\ng,0,1,3\ng,0,1,1\n")
    with pytest.raises(DataError, match="duplicate timestamp"):
        load_dataset(p)
    p.write_text("gid,time\n")
    with pytest.raises(DataError):
        load_dataset(p)
    p.write_text("group_id,series_id,time,dim_0\ng,0,0,1\ng,0,1,2\n")
    lab = tmp_path / "l.csv"
    lab.write_text("group_id,label\nother,1\n")
    with pytest.raises(DataError, match="no label"):
        load_dataset(p, lab)
