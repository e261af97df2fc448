"""Preprocessing and per-method representations shared by CV, fitting and the CLI.

A representation does the expensive, hyperparameter-light work once (signature
features, the MMD matrix, baseline distances) over every group of a dataset,
using preprocessing statistics fitted on the training groups only. Cheap heads
(KRR, Lasso) are then fitted for each grid point.
"""
from __future__ import annotations

import threading
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from sigdr.measures import ses_feature_matrix
from sigdr.regress import (krr_fit, lasso_fit, rbf_group_distances, stack_series)
from sigdr.sigkernel import mmd_matrix
from sigdr.streams import (ChannelStats, EmpiricalMeasure, TimeSeries, align, lead_lag,
                           lead_lag_time_augment, time_augment)

METHODS = ("ses", "kes", "dr-rbf")
_ALIASES = {"ses": "ses", "kes": "kes", "dr-rbf": "dr-rbf", "dr_rbf": "dr-rbf",
            "drrbf": "dr-rbf"}

_DECADES = [10.0**k for k in range(-3, 4)]
_LASSO_DECADES = [10.0**k for k in range(-5, 6)]


def normalize_method(method: str) -> str:
    key = str(method).strip().lower()
    if key not in _ALIASES:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return _ALIASES[key]


def default_grid(method: str) -> dict:
    method = normalize_method(method)
    if method == "kes":
        return {"l2": list(_DECADES), "alpha": list(_DECADES)}
    if method == "dr-rbf":
        return {"l1": list(_DECADES), "l2": list(_DECADES), "alpha": list(_DECADES)}
    return {"n": [2, 3], "m": [2], "alpha": list(_LASSO_DECADES)}


@dataclass(frozen=True)
class Preprocessing:
    standardize: bool = True
    time_augment: bool = False
    lead_lag: bool = False
    # KES only: rescale inputs so the median training path length equals this
    path_scale: float | None = None

    def fit(self, groups) -> "FittedPreprocessing":
        groups = list(groups)
        dim = groups[0].dim
        stats = ChannelStats.fit(groups) if self.standardize else ChannelStats.identity(dim)
        fitted = FittedPreprocessing(self, stats, 1.0)
        if self.path_scale:
            lengths = [path_length(s) for g in groups for s in fitted.transform_group(g)]
            med = float(np.median(lengths))
            if med > 0:
                fitted = FittedPreprocessing(self, stats, med / float(self.path_scale))
        return fitted


def path_length(ts: TimeSeries) -> float:
    return float(np.sum(np.linalg.norm(np.diff(ts.values, axis=0), axis=1)))


@dataclass(frozen=True)
class FittedPreprocessing:
    flags: Preprocessing
    stats: ChannelStats
    scale: float = 1.0

    def transform(self, ts: TimeSeries) -> TimeSeries:
        ts = self.stats.apply(ts)
        if self.flags.lead_lag and self.flags.time_augment:
            ts = lead_lag_time_augment(ts)
        elif self.flags.lead_lag:
            ts = lead_lag(ts)
        elif self.flags.time_augment:
            ts = time_augment(ts)
        if self.scale != 1.0:
            ts = TimeSeries(ts.times, ts.values / self.scale)
        return ts

    def transform_group(self, group: EmpiricalMeasure) -> EmpiricalMeasure:
        return EmpiricalMeasure([self.transform(s) for s in group])

    def to_dict(self) -> dict:
        return {"flags": asdict(self.flags), "stats": self.stats.to_dict(), "scale": self.scale}


@dataclass(frozen=True)
class MethodSettings:
    """Everything besides the searched grid that shapes a method's inputs."""

    prep: Preprocessing = field(default_factory=Preprocessing)
    refinement: int = 0
    ses_rescale: bool = False
    ses_time_augment: bool = False
    rbf_length: int | None = None


# ---------------------------------------------------------------- heads

def _krr_predictions(G, params_list, fit_idx, val_idx, y):
    Gff = G[np.ix_(fit_idx, fit_idx)]
    Gvf = G[np.ix_(val_idx, fit_idx)]
    out = []
    for p in params_list:
        model = krr_fit(Gff, y[fit_idx], p["alpha"], center=True)
        out.append(Gvf @ model.dual_weights + model.offset)
    return out


def standardize_columns(F, fit_idx):
    """Column mean/std on the fitting rows; constant columns are dropped."""
    mu = F[fit_idx].mean(axis=0)
    sd = F[fit_idx].std(axis=0)
    keep = sd > 1e-12 * np.maximum(1.0, np.abs(mu))
    return mu, np.where(keep, sd, 1.0), keep


def _lasso_path(F, alphas, fit_idx, val_idx, y):
    """Warm-started Lasso fits from the largest penalty down; returns (models, preds)."""
    mu, sd, keep = standardize_columns(F, fit_idx)
    Xf = ((F[fit_idx] - mu) / sd)[:, keep]
    Xv = ((F[val_idx] - mu) / sd)[:, keep]
    order = sorted(range(len(alphas)), key=lambda i: -alphas[i])
    preds, models = [None] * len(alphas), [None] * len(alphas)
    w = None
    for i in order:
        model = lasso_fit(Xf, y[fit_idx], alphas[i], warm_start=w, warn=False)
        w = model.weights
        models[i] = model
        preds[i] = model.predict(Xv)
    return models, preds, (mu, sd, keep)


# ---------------------------------------------------------------- representations

class KESRepresentation:
    method = "kes"

    def __init__(self, groups, refinement=0, threads=None):
        self.D = mmd_matrix(groups, refinement, threads)

    def gram(self, l2):
        return np.exp(-self.D / (2.0 * l2 * l2))

    def batches(self, points):
        return _group_points(points, ("l2",))

    def evaluate(self, params_list, fit_idx, val_idx, y):
        G = self.gram(params_list[0]["l2"])
        return _krr_predictions(G, params_list, fit_idx, val_idx, y)

    def fit(self, params, train_idx, y):
        G = self.gram(params["l2"])
        model = krr_fit(G[np.ix_(train_idx, train_idx)], y[train_idx], params["alpha"],
                        center=True)
        return model, {"dual_weights": model.dual_weights.tolist(), "offset": model.offset,
                       "jitter": model.jitter}

    def predict(self, params, model, train_idx, idx):
        G = self.gram(params["l2"])
        return G[np.ix_(idx, train_idx)] @ model.dual_weights + model.offset


class RBFRepresentation:
    method = "dr-rbf"

    def __init__(self, groups, length):
        series = [s for g in groups for s in g]
        self.sizes = [len(g) for g in groups]
        Z = stack_series(series, length)
        self.sq = squareform(pdist(Z, "sqeuclidean"))
        self._cache = {}
        self._lock = threading.Lock()

    def distances(self, l1):
        with self._lock:
            if l1 not in self._cache:
                self._cache[l1] = rbf_group_distances(self.sq, self.sizes, l1)
            return self._cache[l1]

    def gram(self, l1, l2):
        return np.exp(-self.distances(l1) / (2.0 * l2 * l2))

    def batches(self, points):
        return _group_points(points, ("l1", "l2"))

    def evaluate(self, params_list, fit_idx, val_idx, y):
        G = self.gram(params_list[0]["l1"], params_list[0]["l2"])
        return _krr_predictions(G, params_list, fit_idx, val_idx, y)

    def fit(self, params, train_idx, y):
        G = self.gram(params["l1"], params["l2"])
        model = krr_fit(G[np.ix_(train_idx, train_idx)], y[train_idx], params["alpha"],
                        center=True)
        return model, {"dual_weights": model.dual_weights.tolist(), "offset": model.offset,
                       "jitter": model.jitter}

    def predict(self, params, model, train_idx, idx):
        G = self.gram(params["l1"], params["l2"])
        return G[np.ix_(idx, train_idx)] @ model.dual_weights + model.offset


class SESRepresentation:
    method = "ses"

    def __init__(self, groups, rescale=False, time_augment=False, threads=None):
        self.groups = groups
        self.kw = {"rescale": rescale, "time_augment": time_augment}
        self.threads = threads
        self._cache = {}
        self._lock = threading.Lock()

    def features(self, n, m):
        key = (int(n), int(m))
        with self._lock:
            if key not in self._cache:
                self._cache[key] = ses_feature_matrix(self.groups, key[0], key[1],
                                                      self.threads, **self.kw)
            return self._cache[key]

    def batches(self, points):
        return _group_points(points, ("n", "m"))

    def evaluate(self, params_list, fit_idx, val_idx, y):
        F = self.features(params_list[0]["n"], params_list[0]["m"])
        _, preds, _ = _lasso_path(F, [p["alpha"] for p in params_list], fit_idx, val_idx, y)
        return preds

    def fit(self, params, train_idx, y):
        F = self.features(params["n"], params["m"])
        models, _, (mu, sd, keep) = _lasso_path(F, [params["alpha"]], train_idx, train_idx, y)
        model = models[0]
        # fold column scaling into raw-feature weights
        w = np.zeros(F.shape[1])
        w[keep] = model.weights / sd[keep]
        intercept = model.intercept - float(w @ mu)
        raw = type(model)(w, intercept, model.alpha, model.converged, model.sweeps)
        return raw, {"weights": w.tolist(), "intercept": intercept,
                     "converged": model.converged, "sweeps": model.sweeps,
                     "nonzero": int(np.count_nonzero(w))}

    def predict(self, params, model, train_idx, idx):
        return model.predict(self.features(params["n"], params["m"])[idx])


def _group_points(points, keys):
    out, index = [], {}
    for p in points:
        k = tuple(p[key] for key in keys)
        if k not in index:
            index[k] = len(out)
            out.append([])
        out[index[k]].append(p)
    return out


def build_representation(method, dataset, train_idx, settings: MethodSettings,
                         threads=None):
    """Fit preprocessing on ``train_idx`` and build the representation for all groups."""
    method = normalize_method(method)
    train_groups = [dataset.groups[i] for i in train_idx]
    if method == "dr-rbf":
        prep = Preprocessing(standardize=settings.prep.standardize).fit(train_groups)
        groups = [prep.transform_group(g) for g in dataset.groups]
        length = settings.rbf_length or max(len(s) for g in train_groups for s in g)
        rep = RBFRepresentation(groups, length)
    elif method == "kes":
        prep = settings.prep.fit(train_groups)
        groups = [prep.transform_group(g) for g in dataset.groups]
        rep = KESRepresentation(groups, settings.refinement, threads)
    else:
        flags = Preprocessing(settings.prep.standardize, settings.prep.time_augment,
                              settings.prep.lead_lag, None)
        prep = flags.fit(train_groups)
        groups = [prep.transform_group(align(g)) for g in dataset.groups]
        rep = SESRepresentation(groups, settings.ses_rescale, settings.ses_time_augment,
                                threads)
    rep.preprocessing = prep
    return rep
