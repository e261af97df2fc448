"""Seeded synthetic dataset generators."""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from sigdr.streams import save_dataset
from sigdr.synthdata.circuit import CircuitConfig, gen_circuit
from sigdr.synthdata.fbm import fbm_paths, gen_fbm
from sigdr.synthdata.gas import PRESETS, GasConfig, gen_ideal_gas
from sigdr.synthdata.roughvol import RoughVolConfig, gen_rough_vol

GENERATORS = {
    "circuit": (CircuitConfig, gen_circuit),
    "gas": (GasConfig, gen_ideal_gas),
    "rough_vol": (RoughVolConfig, gen_rough_vol),
}


def make_config(name: str, params: dict | None = None, seed: int | None = None):
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    cls = GENERATORS[name][0]
    params = dict(params or {})
    if name == "gas" and isinstance(params.get("radius_factor"), str):
        params["radius_factor"] = PRESETS[params["radius_factor"]]
    for key in ("phase_range", "temp_range", "mean_reversion_range"):
        if key in params:
            params[key] = tuple(params[key])
    if seed is not None:
        params["seed"] = seed
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None


def generate(name: str, params: dict | None = None, seed: int | None = None):
    cfg = make_config(name, params, seed)
    return GENERATORS[name][1](cfg), cfg


def write_generated(out_dir, name: str, params: dict | None = None, seed: int | None = None):
    """Generate and write dataset.csv, labels.csv and manifest.json under ``out_dir``."""
    ds, cfg = generate(name, params, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out / "dataset.csv", out / "labels.csv")
    manifest = {"generator": name, "config": asdict(cfg), "seed": cfg.seed,
                "groups": len(ds.groups)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ds, cfg


__all__ = [
    "CircuitConfig", "GasConfig", "RoughVolConfig", "GENERATORS", "PRESETS",
    "fbm_paths", "gen_circuit", "gen_fbm", "gen_ideal_gas", "gen_rough_vol",
    "generate", "make_config", "write_generated",
]
