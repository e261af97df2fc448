"""Experiment configuration, repeated train/test runs and report files."""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from sigdr import __version__
from sigdr._backend import BACKEND
from sigdr.errors import DataError, NumericalError
from sigdr.pipeline import (MethodSettings, Preprocessing, build_representation,
                            default_grid, normalize_method)
from sigdr.regress import cv_search, metrics
from sigdr.streams import load_dataset
from sigdr.synthdata import generate

log = logging.getLogger(__name__)

# preprocessing applied when a config does not say otherwise
DATASET_PREPROCESSING = {
    "circuit": {"standardize": True, "path_scale": 0.5},
    "gas": {"standardize": True, "time_augment": True, "lead_lag": True, "path_scale": 5.0},
    "rough_vol": {"standardize": True, "time_augment": True, "path_scale": 10.0},
}


def load_schema() -> dict:
    text = resources.files("sigdr").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    dataset: dict
    method: str
    preprocessing: dict = field(default_factory=dict)
    refinement: int = 0
    ses: dict = field(default_factory=dict)
    rbf_length: int | None = None
    grid: dict = field(default_factory=dict)
    folds: int = 5
    repeats: int = 5
    train_fraction: float = 0.8
    seed: int = 0
    out: str | None = None
    sweep: dict | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(raw, load_schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"invalid config at {where}: {exc.message}") from None
        cfg = cls(**copy.deepcopy(raw))
        cfg.method = normalize_method(cfg.method)
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset, "method": self.method,
            "preprocessing": self.preprocessing, "refinement": self.refinement,
            "ses": self.ses, "rbf_length": self.rbf_length, "grid": self.grid,
            "folds": self.folds, "repeats": self.repeats,
            "train_fraction": self.train_fraction, "seed": self.seed, "out": self.out,
            "sweep": self.sweep,
        }

    def settings(self) -> MethodSettings:
        flags = dict(DATASET_PREPROCESSING.get(self.dataset.get("generator"), {}))
        flags.update(self.preprocessing)
        return MethodSettings(
            prep=Preprocessing(**flags),
            refinement=int(self.refinement),
            ses_rescale=bool(self.ses.get("rescale", False)),
            ses_time_augment=bool(self.ses.get("time_augment", False)),
            rbf_length=self.rbf_length,
        )

    def full_grid(self) -> dict:
        grid = default_grid(self.method)
        for k, v in self.grid.items():
            if k not in grid:
                raise ConfigError(f"grid key {k!r} does not apply to method {self.method}")
            grid[k] = list(v)
        return grid


def resolve_dataset(spec: dict, seed: int, override: dict | None = None):
    """Dataset plus a fingerprint: SHA-256 of the CSV bytes or of the generator config."""
    if "generator" in spec:
        params = dict(spec.get("params", {}))
        params.update(override or {})
        params.setdefault("seed", seed)
        try:
            ds, cfg = generate(spec["generator"], params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"generator {spec['generator']}: {exc}") from None
        blob = json.dumps({"generator": spec["generator"], "config": repr(cfg)}, sort_keys=True)
        return ds, hashlib.sha256(blob.encode()).hexdigest()
    if override:
        raise ConfigError("sweeps need a generated dataset")
    try:
        ds = load_dataset(spec["csv"], spec["labels"])
        digest = hashlib.sha256(Path(spec["csv"]).read_bytes()).hexdigest()
    except OSError as exc:
        raise DataError(f"cannot read dataset: {exc}") from None
    return ds, digest


def split_indices(n: int, train_fraction: float, seed: int, repeat: int):
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, 2), n - 1)
    if n_train < 2 or n - n_train < 1:
        raise ConfigError(f"{n} groups cannot be split with train fraction {train_fraction}")
    perm = np.random.default_rng([seed, repeat, 0]).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def run_repeat(ds, cfg: ExperimentConfig, repeat: int, threads=None) -> dict:
    tr, te = split_indices(len(ds), cfg.train_fraction, cfg.seed, repeat)
    timing = {}
    t0 = time.perf_counter()
    try:
        rep = build_representation(cfg.method, ds, tr, cfg.settings(), threads)
    except NumericalError as exc:
        raise NumericalError(f"repeat {repeat}, representation stage: {exc}") from None
    t1 = time.perf_counter()
    timing["representation_seconds"] = t1 - t0
    folds = min(cfg.folds, len(tr))
    try:
        search = cv_search(rep, ds.labels, tr, cfg.full_grid(), folds,
                           [cfg.seed, repeat, 1], threads)
    except NumericalError as exc:
        raise NumericalError(f"repeat {repeat}, grid search stage: {exc}") from None
    t2 = time.perf_counter()
    timing["cv_seconds"] = t2 - t1
    model, _ = rep.fit(search.params, tr, ds.labels)
    pred = rep.predict(search.params, model, tr, te)
    t3 = time.perf_counter()
    timing["fit_seconds"] = t3 - t2
    y = ds.labels[te]
    scores = metrics(y, pred, mape=bool(np.all(y != 0)))
    return {
        "repeat": repeat,
        "mse": scores["mse"],
        "mape": scores.get("mape"),
        "best_params": search.params,
        "cv_mse": search.score,
        "failed_grid_points": search.failures,
        "train_ids": [ds.group_ids[i] for i in tr],
        "test_ids": [ds.group_ids[i] for i in te],
        "predictions": [float(v) for v in pred],
        "timing": timing,
    }


def _aggregate(repeats: list) -> dict:
    mse = np.array([r["mse"] for r in repeats])
    out = {"mse_mean": float(mse.mean()), "mse_std": float(mse.std())}
    mape = [r["mape"] for r in repeats]
    if all(v is not None for v in mape):
        out["mape_mean"] = float(np.mean(mape))
        out["mape_std"] = float(np.std(mape))
    else:
        out["mape_mean"] = out["mape_std"] = None
    return out


def run_experiment(cfg: ExperimentConfig, threads=None) -> dict:
    """Repeated split / grid-search / refit / test runs, for every sweep value."""
    start = time.perf_counter()
    values = cfg.sweep["values"] if cfg.sweep else [None]
    runs = []
    for value in values:
        override = {cfg.sweep["param"]: value} if cfg.sweep else None
        t0 = time.perf_counter()
        ds, fingerprint = resolve_dataset(cfg.dataset, cfg.seed, override)
        gen_seconds = time.perf_counter() - t0
        repeats = [run_repeat(ds, cfg, r, threads) for r in range(cfg.repeats)]
        run = {"sweep_value": value, "dataset_sha256": fingerprint, "groups": len(ds),
               "repeats": repeats, "timing": {"dataset_seconds": gen_seconds}}
        run.update(_aggregate(repeats))
        runs.append(run)
    return {
        "version": __version__,
        "backend": BACKEND,
        # the output directory does not affect results; keep reports comparable
        "config": {k: v for k, v in cfg.to_dict().items() if k != "out"},
        "grid": cfg.full_grid(),
        "sweep_param": cfg.sweep["param"] if cfg.sweep else None,
        "runs": runs,
        "timing": {"total_seconds": time.perf_counter() - start},
    }


def strip_timing(obj):
    """Copy of a report without any ``timing`` entries."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != "timing"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def emit_report(report: dict, out_dir) -> dict:
    """Write report.json, summary.csv and (for sweeps) curve.csv; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "summary": out / "summary.csv"}
    paths["report"].write_text(report_json(report))
    sweep = report.get("sweep_param")
    with paths["summary"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(([sweep] if sweep else []) + ["repeat", "mse", "mape", "fit_seconds"])
        for run in report["runs"]:
            for r in run["repeats"]:
                fit = sum(r.get("timing", {}).values())
                w.writerow(([run["sweep_value"]] if sweep else [])
                           + [r["repeat"], repr(r["mse"]),
                              "" if r["mape"] is None else repr(r["mape"]), f"{fit:.6f}"])
    if sweep:
        paths["curve"] = out / "curve.csv"
        with paths["curve"].open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([sweep, "mse_mean", "mse_std", "mape_mean", "mape_std", "repeats"])
            for run in report["runs"]:
                w.writerow([run["sweep_value"], repr(run["mse_mean"]), repr(run["mse_std"]),
                            "" if run["mape_mean"] is None else repr(run["mape_mean"]),
                            "" if run["mape_std"] is None else repr(run["mape_std"]),
                            len(run["repeats"])])
    return paths


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())
