from __future__ import annotations

import json
import math

import numpy as np
import pytest

from sigdr.streams import load_dataset
from sigdr.synthdata import (CircuitConfig, GasConfig, RoughVolConfig, gen_circuit, gen_fbm,
                             gen_ideal_gas, gen_rough_vol, make_config, write_generated)
from sigdr.synthdata.circuit import circuit_series
from sigdr.synthdata.fbm import fbm_cov, fbm_paths, fgn
from sigdr.synthdata.gas import simulate
from sigdr.synthdata.roughvol import fou_paths


def same_dataset(a, b):
    return (np.array_equal(a.labels, b.labels) and a.group_ids == b.group_ids
            and all(s == t for g, h in zip(a.groups, b.groups) for s, t in zip(g, h)))


# ---- fBM

def test_fbm_single_path():
    ts = gen_fbm(0.3, 50, np.random.default_rng(0))
    assert len(ts) == 50 and ts.values[0, 0] == 0.0
    assert ts.times[0] == 0.0 and ts.times[-1] == 1.0
    with pytest.raises(ValueError):
        gen_fbm(1.0, 10, np.random.default_rng(0))


def test_brownian_case_increments():
    rng = np.random.default_rng(1)
    W = fbm_paths(0.5, 21, 10000, rng)
    inc = np.diff(W, axis=1)
    assert inc.var() == pytest.approx(1 / 20, rel=0.05)
    c = np.corrcoef(inc[:, 3], inc[:, 4])[0, 1]
    assert abs(c) < 0.05


@pytest.mark.parametrize("hurst", [0.2, 0.5, 0.8])
def test_terminal_variance(hurst):
    W = fbm_paths(hurst, 30, 10000, np.random.default_rng(2))
    assert W[:, -1].var() == pytest.approx(1.0, abs=0.05)


def test_cross_moment_h02():
    W = fbm_paths(0.2, 21, 10000, np.random.default_rng(3))
    expected = 0.5 * (0.5**0.4 + 1 - 0.5**0.4)
    assert np.mean(W[:, 10] * W[:, -1]) == pytest.approx(expected, abs=0.03)


def test_fbm_covariance_matrix():
    W = fbm_paths(0.3, 6, 40000, np.random.default_rng(4))
    t = np.linspace(0, 1, 6)
    np.testing.assert_allclose(np.cov(W[:, 1:].T, bias=True), fbm_cov(0.3, t[1:]), atol=0.03)


def test_cholesky_fallback(monkeypatch):
    import sigdr.synthdata.fbm as fbm
    monkeypatch.setattr(fbm, "_circulant_sqrt_eigs", lambda h, n: None)
    x = fgn(0.3, 50, 4000, np.random.default_rng(5))
    assert x.var() == pytest.approx(1.0, rel=0.05)
    monkeypatch.setattr(fbm, "CHOLESKY_MAX_LENGTH", 10)
    with pytest.raises(ArithmeticError):
        fgn(0.3, 50, 2, np.random.default_rng(5))


# ---- circuit

def test_circuit_shapes_and_labels():
    ds = gen_circuit(CircuitConfig(M=4, N=3, seed=1))
    assert all(len(s) == 500 and s.dim == 2 for g in ds.groups for s in g)
    assert np.all((ds.labels >= math.pi / 8) & (ds.labels <= math.pi / 2))
    assert same_dataset(ds, gen_circuit(CircuitConfig(M=4, N=3, seed=1)))
    assert not same_dataset(ds, gen_circuit(CircuitConfig(M=4, N=3, seed=2)))


def test_zero_phase_direct_construction():
    cfg = CircuitConfig(M=1, N=1)
    ts = circuit_series(0.0, cfg)
    np.testing.assert_array_equal(ts.values[:, 0], ts.values[:, 1])


def test_circuit_subsampling():
    ds = gen_circuit(CircuitConfig(M=2, N=5, drop_rate=0.5, seed=3))
    lengths = {len(s) for g in ds.groups for s in g}
    assert len(lengths) > 1 and max(lengths) < 500
    assert all(s.times[0] == 0.0 for g in ds.groups for s in g)


def test_circuit_config_validation():
    with pytest.raises(ValueError):
        CircuitConfig(M=0)
    with pytest.raises(ValueError):
        CircuitConfig(phase_range=(0.0, 1.0))
    with pytest.raises(ValueError):
        CircuitConfig(drop_rate=1.0)


# ---- gas

def test_gas_energy_conservation_and_box():
    cfg = GasConfig(M=1, N=10, radius_factor=0.65, steps=120, seed=4)
    run = simulate(cfg, math.sqrt(500.0), np.random.default_rng(0))
    e0, e1 = run.energy
    assert abs(e1 - e0) / e0 <= 1e-9
    r = cfg.radius
    assert run.positions.min() >= r - 1e-12
    assert run.positions.max() <= cfg.box_side - r + 1e-12
    assert run.collisions > 0


def test_gas_zero_temperature_is_static():
    cfg = GasConfig(M=1, N=8, steps=20)
    run = simulate(cfg, 0.0, np.random.default_rng(0))
    assert np.all(run.positions == run.positions[0])


def test_gas_more_collisions_when_denser():
    few = gen_ideal_gas(GasConfig(M=3, N=10, radius_factor=0.35, seed=9), return_runs=True)[1]
    many = gen_ideal_gas(GasConfig(M=3, N=10, radius_factor=0.65, seed=9), return_runs=True)[1]
    assert sum(r.collisions for r in many) > sum(r.collisions for r in few)


def test_gas_dataset():
    cfg = GasConfig(M=3, N=5, steps=30, seed=2)
    ds = gen_ideal_gas(cfg)
    assert len(ds) == 3 and all(len(g) == 5 and g.dim == 3 for g in ds.groups)
    assert np.all((ds.labels >= 1) & (ds.labels <= 1000))
    assert same_dataset(ds, gen_ideal_gas(cfg))
    for g in ds.groups:
        for s in g:
            assert s.values.min() >= cfg.radius - 1e-12
            assert s.values.max() <= cfg.box_side - cfg.radius + 1e-12


def test_gas_validation():
    with pytest.raises(ValueError, match="too large"):
        GasConfig(N=20, radius_factor=2.0)
    with pytest.raises(ValueError):
        GasConfig(dt=0.0)
    assert make_config("gas", {"radius_factor": "many"}).radius_factor == 0.65


def test_gas_placement_failure(monkeypatch):
    import sigdr.synthdata.gas as gas
    monkeypatch.setattr(gas, "MAX_PLACEMENT_ATTEMPTS", 1)
    cfg = GasConfig(M=1, N=27, radius_factor=0.9)
    with pytest.raises(RuntimeError, match="could not place"):
        for s in range(50):
            simulate(cfg, 1.0, np.random.default_rng(s))


# ---- rough volatility

def test_rough_vol_positive_and_ranges():
    cfg = RoughVolConfig(M=5, N=4, seed=3)
    ds = gen_rough_vol(cfg)
    assert all(np.all(s.values > 0) and len(s) == 200 for g in ds.groups for s in g)
    assert np.all((ds.labels >= 1e-6) & (ds.labels <= 1))
    assert same_dataset(ds, gen_rough_vol(cfg))


def test_rough_vol_deterministic_fixed_point():
    cfg = RoughVolConfig(M=2, N=2, fou_vol=0.0, p0=0.7, fou_mean=0.7)
    ds = gen_rough_vol(cfg)
    for g in ds.groups:
        for s in g:
            np.testing.assert_allclose(s.values, math.exp(0.7), rtol=1e-15)


def test_rough_vol_stationary_mean():
    a, nu = 1.0, 0.3
    cfg = RoughVolConfig(length=2000, horizon=400.0, fou_vol=nu, fou_mean=0.5, p0=0.5,
                         hurst=0.5)
    P = fou_paths(a, cfg, 1, np.random.default_rng(6))[0]
    assert abs(P.mean() - 0.5) <= 3 * nu / math.sqrt(2 * a * cfg.horizon)


def test_rough_vol_validation():
    with pytest.raises(ValueError):
        RoughVolConfig(hurst=0.0)
    with pytest.raises(ValueError):
        RoughVolConfig(mean_reversion_range=(1.0, 0.5))


# ---- files

def test_write_generated(tmp_path):
    ds, cfg = write_generated(tmp_path, "circuit", {"M": 2, "N": 2}, seed=5)
    back = load_dataset(tmp_path / "dataset.csv", tmp_path / "labels.csv")
    assert same_dataset(ds, back)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["generator"] == "circuit" and manifest["seed"] == 5
    with pytest.raises(ValueError):
        make_config("nope")
    with pytest.raises(ValueError):
        make_config("circuit", {"bogus": 1})
