"""Command line entry point: ``sigdr {generate,features,gram,fit,run,bench}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from sigdr.errors import DataError, NumericalError
from sigdr.experiment import (ConfigError, ExperimentConfig, emit_report,
                              resolve_dataset, run_experiment)
from sigdr.parallel import set_threads

log = logging.getLogger("sigdr")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _load_raw(args) -> dict:
    raw: dict = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    if getattr(args, "data", None):
        if not getattr(args, "labels", None) and args.command in ("fit", "run"):
            raise ConfigError("--data needs --labels for fitting")
        raw["dataset"] = {"csv": args.data, "labels": args.labels or ""}
    elif getattr(args, "generator", None):
        raw["dataset"] = {"generator": args.generator, "params": {}}
    for item in getattr(args, "param", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
        ds = raw.setdefault("dataset", {})
        if "generator" not in ds:
            raise ConfigError("--param applies to generated datasets only")
        ds.setdefault("params", {})[key] = _parse_value(value)
    if getattr(args, "drop_rate", None) is not None:
        ds = raw.get("dataset", {})
        if "generator" not in ds:
            raise ConfigError("--drop-rate applies to generated datasets only")
        ds.setdefault("params", {})["drop_rate"] = args.drop_rate
        if raw.get("sweep") and raw["sweep"].get("param") == "drop_rate":
            raw["sweep"] = None
    if getattr(args, "method", None):
        raw["method"] = args.method
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "refinement", None) is not None:
        raw["refinement"] = args.refinement
    if getattr(args, "out", None):
        raw["out"] = args.out
    if "dataset" not in raw:
        raise ConfigError("no dataset: give --config, --data/--labels or --generator")
    return raw


def _config(args) -> ExperimentConfig:
    raw = _load_raw(args)
    raw.setdefault("method", "ses")
    return ExperimentConfig.from_dict(raw)


def _out_dir(args, cfg=None) -> Path:
    out = args.out or (cfg.out if cfg is not None else None) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_generate(args) -> int:
    from sigdr.synthdata import write_generated
    raw = _load_raw(args)
    ds = raw["dataset"]
    if "generator" not in ds:
        raise ConfigError("generate needs a generator dataset source")
    seed = raw.get("seed", 0)
    out = _out_dir(args)
    data, cfg = write_generated(out, ds["generator"], ds.get("params"), seed)
    print(f"wrote {len(data)} groups to {out / 'dataset.csv'} (labels.csv, manifest.json)")
    return EXIT_OK


def _dataset(cfg):
    spec = dict(cfg.dataset)
    if "csv" in spec and not spec.get("labels"):
        from sigdr.streams import load_dataset
        import hashlib
        try:
            return load_dataset(spec["csv"]), hashlib.sha256(Path(spec["csv"]).read_bytes()).hexdigest()
        except OSError as exc:
            raise DataError(f"cannot read dataset: {exc}") from None
    return resolve_dataset(spec, cfg.seed)


def cmd_features(args) -> int:
    from sigdr.measures import write_feature_csv
    from sigdr.pipeline import SESRepresentation
    cfg = _config(args)
    ds, _ = _dataset(cfg)
    settings = cfg.settings()
    prep = settings.prep.__class__(settings.prep.standardize, settings.prep.time_augment,
                                   settings.prep.lead_lag, None).fit(ds.groups)
    from sigdr.streams import align
    groups = [prep.transform_group(align(g)) for g in ds.groups]
    rep = SESRepresentation(groups, settings.ses_rescale, settings.ses_time_augment)
    F = rep.features(args.n, args.m)
    out = _out_dir(args, cfg) / "features.csv"
    write_feature_csv(out, ds.group_ids, F)
    print(f"wrote {F.shape[0]} x {F.shape[1]} SES features to {out}")
    return EXIT_OK


def cmd_gram(args) -> int:
    from sigdr.regress import baseline_rbf_gram
    from sigdr.sigkernel import GramMatrix, mmd_matrix, sigma_from_lengthscale, write_gram_csv
    cfg = _config(args)
    ds, _ = _dataset(cfg)
    settings = cfg.settings()
    if cfg.method == "ses":
        raise ConfigError("gram needs --method kes or dr-rbf")
    if cfg.method == "kes":
        prep = settings.prep.fit(ds.groups)
        groups = [prep.transform_group(g) for g in ds.groups]
        G = GramMatrix(mmd_matrix(groups, settings.refinement), "mmd_sq",
                       refinement=settings.refinement, group_ids=ds.group_ids)
        if args.l2 is not None:
            G = G.to_kernel(sigma_from_lengthscale(args.l2))
    else:
        if args.l1 is None or args.l2 is None:
            raise ConfigError("dr-rbf gram needs --l1 and --l2")
        prep = settings.prep.__class__(standardize=settings.prep.standardize).fit(ds.groups)
        G = baseline_rbf_gram([prep.transform_group(g) for g in ds.groups], args.l1, args.l2,
                              settings.rbf_length)
        G.group_ids = ds.group_ids
    out = _out_dir(args, cfg) / "gram.csv"
    write_gram_csv(out, G)
    print(f"wrote {G.kind} matrix ({len(G)} groups) to {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    from sigdr.pipeline import build_representation
    from sigdr.regress import cv_search
    cfg = _config(args)
    ds, fingerprint = _dataset(cfg)
    idx = np.arange(len(ds))
    rep = build_representation(cfg.method, ds, idx, cfg.settings())
    search = cv_search(rep, ds.labels, idx, cfg.full_grid(), min(cfg.folds, len(ds)),
                       [cfg.seed, 0, 1])
    _, payload = rep.fit(search.params, idx, ds.labels)
    model = {
        "method": cfg.method,
        "hyperparameters": search.params,
        "cv_mse": search.score,
        "model": payload,
        "preprocessing": rep.preprocessing.to_dict(),
        "refinement": cfg.refinement,
        "dataset_sha256": fingerprint,
        "train_ids": ds.group_ids,
    }
    out = _out_dir(args, cfg) / "model.json"
    out.write_text(json.dumps(model, indent=2, sort_keys=True) + "\n")
    print(f"best {search.params} (cv mse {search.score:.6g}); wrote {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    report = run_experiment(cfg)
    out = _out_dir(args, cfg)
    paths = emit_report(report, out)
    for run in report["runs"]:
        tag = "" if run["sweep_value"] is None else f"{report['sweep_param']}={run['sweep_value']} "
        print(f"{tag}mse {run['mse_mean']:.6g} +- {run['mse_std']:.3g} over "
              f"{len(run['repeats'])} repeats")
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from sigdr.bench import format_bench, run_bench
    res = run_bench(seed=args.seed or 0, quick=args.quick)
    print(format_bench(res))
    if args.out:
        out = _out_dir(args) / "bench.json"
        out.write_text(json.dumps(res, indent=2, sort_keys=True) + "\n")
        print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads (default: SIGDR_THREADS or all cores)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="dataset CSV")
    data.add_argument("--labels", help="labels CSV")
    data.add_argument("--generator", choices=["circuit", "gas", "rough_vol"])
    data.add_argument("--param", action="append", metavar="KEY=VALUE",
                      help="generator parameter (repeatable)")
    data.add_argument("--drop-rate", type=float, dest="drop_rate")

    method = argparse.ArgumentParser(add_help=False)
    method.add_argument("--method", choices=["ses", "kes", "dr-rbf"])
    method.add_argument("--refinement", type=int)

    p = argparse.ArgumentParser(prog="sigdr", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common, data], help="write a synthetic dataset")
    f = sub.add_parser("features", parents=[common, data, method], help="SES feature matrix")
    f.add_argument("--n", type=int, default=2, help="inner (PES) level")
    f.add_argument("--m", type=int, default=2, help="outer level")
    g = sub.add_parser("gram", parents=[common, data, method], help="KES or DR-RBF Gram matrix")
    g.add_argument("--l1", type=float)
    g.add_argument("--l2", type=float, help="lengthscale; KES writes squared MMD when omitted")
    sub.add_parser("fit", parents=[common, data, method], help="grid-search CV and fit")
    sub.add_parser("run", parents=[common, data, method], help="repeated train/test experiment")
    b = sub.add_parser("bench", parents=[common], help="scaling and backend timings")
    b.add_argument("--quick", action="store_true")
    return p


COMMANDS = {"generate": cmd_generate, "features": cmd_features, "gram": cmd_gram,
            "fit": cmd_fit, "run": cmd_run, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = args.threads
        if threads is None and os.environ.get("SIGDR_THREADS"):
            threads = int(os.environ["SIGDR_THREADS"])
        set_threads(threads)
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
