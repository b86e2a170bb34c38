"""Posterior-predictive group classification and leave-one-out driver.

Given a fitted chain, the probability that a new unit observed at a known
factor level belongs to group u is the posterior mean of the per-draw ratio

    pi_u * p(y | parameters, group u) / sum_l pi_l * p(y | parameters, group l)

where p(y | ...) is the one-step-ahead predictive density of the fitted
model.  For the semiparametric model that predictive mixes the occupied
clusters (weights n_c) with one fresh-cluster term (weight M) whose atom is
integrated out against the base measure; the parametric reference model and
the discriminant baseline each contribute a single Gaussian.  Labels are the
argmax of the averaged probabilities, ties broken by the lowest group index.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _gibbs
from ._kernels import logsumexp_1d
from .bpref import lda_fit, lda_predict_proba, run_bp_chain
from .domain import SCHEMA_VERSION, BpState, design_row, z_apply
from .dpmm import run_chain
from .randmat import RngStream, mvn_logpdf

__all__ = [
    "ClassificationReport",
    "classify_dataset",
    "classify_label",
    "classify_probabilities",
    "loocv",
    "predictive_group_density",
    "resolve_priors",
]


def predictive_group_density(draw, y, level, group):
    """Predictive density of a new unit in `group` at `level`, one draw.

    For a BspState this is the urn-marginalized mixture

        sum_c n_c/(n+M) N_p(y | B x_u + block(alpha_c), Sigma_u + tau)
            +    M/(n+M) N_p(y | B x_u, Sigma_u + tau + R_block(level))

    where x_u is the one-hot design row of the group, block() extracts the
    level's p-vector from an atom and R_block the matching diagonal block of
    R.  For a BpState the single alpha replaces the mixture and there is no
    innovation term.  Plain dense-matrix arithmetic, used as the reference
    route for the vectorized chain classifier.
    """
    y = np.asarray(y, dtype=float)
    p = y.shape[0]
    m = draw.Sigma.shape[0]
    if not 1 <= group <= m:
        raise ValueError(f"group {group} out of range 1..{m}")
    x_u = design_row(group, m)
    base = draw.B @ x_u
    within = draw.Sigma[group - 1] + draw.tau
    if isinstance(draw, BpState):
        mean = base + z_apply(level, draw.alpha, p)
        return float(np.exp(mvn_logpdf(y, mean, within)))
    sizes = draw.cluster_sizes()
    n = draw.theta.shape[0]
    terms = np.empty(len(sizes) + 1)
    for j, (label, n_c) in enumerate(sorted(sizes.items())):
        mean = base + z_apply(level, draw.atoms[label], p)
        terms[j] = np.log(n_c) + mvn_logpdf(y, mean, within)
    sl = slice((level - 1) * p, level * p)
    terms[-1] = np.log(draw.M) + mvn_logpdf(y, base, within + draw.R[sl, sl])
    return float(np.exp(logsumexp_1d(terms, terms.shape[0]) - np.log(n + draw.M)))


def _chain_group_logdens(chain, y, level):
    """(draws, m) log predictive densities for one observation."""
    a = chain.arrays
    m = chain.dims["m"]
    Xg = np.eye(m)
    y = np.ascontiguousarray(y, dtype=float)
    if chain.model == "bp":
        return _gibbs.bp_group_logdens(y, level - 1, Xg, a["B"], a["alpha"],
                                       a["Sigma"], a["tau"])
    return _gibbs.bsp_group_logdens(y, level - 1, Xg, a["B"],
                                    a["n_clusters"], a["atoms"], a["counts"],
                                    a["Sigma"], a["tau"], a["R"], a["M"],
                                    chain.dims["n"])


def classify_probabilities(chain, y, level, priors):
    """Posterior group probabilities for one observation.

    Each recorded draw contributes the normalized vector
    pi_u p_u / sum_l pi_l p_l, computed in log space so a draw whose
    densities all underflow still yields an exact ratio; the result is the
    plain average over draws and sums to 1 within 1e-9.
    """
    priors = np.asarray(priors, dtype=float)
    m = chain.dims["m"]
    if priors.shape != (m,) or np.any(priors < 0):
        raise ValueError(f"priors must be {m} nonnegative weights")
    total = priors.sum()
    if not np.isclose(total, 1.0, atol=1e-8):
        raise ValueError("priors must sum to 1")
    logdens = _chain_group_logdens(chain, np.asarray(y, dtype=float), level)
    with np.errstate(divide="ignore"):
        logw = logdens + np.log(priors / total)
    logw -= logw.max(axis=1, keepdims=True)
    ratios = np.exp(logw)
    ratios /= ratios.sum(axis=1, keepdims=True)
    return ratios.mean(axis=0)


def classify_label(probabilities):
    """1-based argmax of a probability vector; ties go to the lowest index."""
    probabilities = np.asarray(probabilities, dtype=float)
    if probabilities.ndim != 1 or probabilities.shape[0] == 0:
        raise ValueError("probabilities must be a nonempty vector")
    return int(np.argmax(probabilities)) + 1


def resolve_priors(priors, data):
    """Turn 'empirical' / 'uniform' / explicit weights into a vector."""
    if isinstance(priors, str):
        if priors == "empirical":
            counts = np.asarray(data.group_counts(), dtype=float)
            return counts / counts.sum()
        if priors == "uniform":
            return np.full(data.m, 1.0 / data.m)
        raise ValueError(f"unknown priors rule {priors!r}")
    return np.asarray(priors, dtype=float)


@dataclass
class ClassificationReport:
    """Per-unit group probabilities plus the usual error summaries.

    `predicted` and `true_labels` are 1-based group codes; `true_labels` is
    None when the classified data were unlabeled.  Confusion rows are indexed
    by the true group, columns by the predicted one.
    """

    probabilities: np.ndarray
    predicted: np.ndarray
    true_labels: np.ndarray | None
    group_labels: tuple
    model: str
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        self.predicted = np.asarray(self.predicted, dtype=int)
        n, m = self.probabilities.shape
        if self.predicted.shape != (n,):
            raise ValueError("one predicted label per probability row required")
        sums = self.probabilities.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("probability rows must sum to 1 within 1e-9")
        if self.true_labels is not None:
            self.true_labels = np.asarray(self.true_labels, dtype=int)
            if self.true_labels.shape != (n,):
                raise ValueError("true_labels length must match units")
        self.group_labels = tuple(self.group_labels)
        if len(self.group_labels) != m:
            raise ValueError("one group label per class required")

    @property
    def n(self):
        return self.probabilities.shape[0]

    @property
    def m(self):
        return self.probabilities.shape[1]

    def confusion(self):
        """m x m counts, rows true group, columns predicted group."""
        if self.true_labels is None:
            raise ValueError("no true labels recorded")
        table = np.zeros((self.m, self.m), dtype=int)
        for t, g in zip(self.true_labels, self.predicted):
            table[t - 1, g - 1] += 1
        return table

    def error_rate(self):
        table = self.confusion()
        return 1.0 - np.trace(table) / table.sum()

    def per_class_error(self):
        """Misclassification rate within each true group; NaN if unseen."""
        table = self.confusion()
        totals = table.sum(axis=1)
        with np.errstate(invalid="ignore"):
            rates = 1.0 - np.diag(table) / totals
        return np.where(totals > 0, rates, np.nan)

    def to_jsonable(self):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "model": self.model,
            "method": self.method,
            "group_labels": list(self.group_labels),
            "probabilities": self.probabilities.tolist(),
            "predicted": self.predicted.tolist(),
            "meta": self.meta,
        }
        if self.true_labels is not None:
            doc["true_labels"] = self.true_labels.tolist()
            doc["confusion"] = self.confusion().tolist()
            doc["error_rate"] = self.error_rate()
            per_class = self.per_class_error()
            doc["per_class_error"] = [None if np.isnan(r) else r
                                      for r in per_class]
        return doc

    def save(self, path):
        """Write the report JSON; with labels, also `<stem>.confusion.csv`."""
        path = Path(path)
        path.write_text(json.dumps(self.to_jsonable(), indent=2,
                                   sort_keys=True) + "\n")
        if self.true_labels is not None:
            self.save_confusion_csv(
                path.with_name(path.stem + ".confusion.csv"))

    def save_confusion_csv(self, path):
        table = self.confusion()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["true\\predicted", *self.group_labels])
            for u, row in enumerate(table):
                writer.writerow([self.group_labels[u], *row.tolist()])

    @classmethod
    def load(cls, path):
        doc = json.loads(Path(path).read_text())
        true = doc.get("true_labels")
        return cls(probabilities=np.asarray(doc["probabilities"]),
                   predicted=np.asarray(doc["predicted"]),
                   true_labels=None if true is None else np.asarray(true),
                   group_labels=tuple(doc["group_labels"]),
                   model=doc["model"], method=doc["method"],
                   meta=doc.get("meta", {}))


def _align_codes(chain_labels, data_labels, kind):
    """Map data codes onto chain codes by label; None when already aligned."""
    chain_labels = tuple(chain_labels)
    data_labels = tuple(data_labels)
    if chain_labels == data_labels:
        return None
    if set(chain_labels) != set(data_labels):
        raise ValueError(f"chain {kind} labels {chain_labels} do not match "
                         f"the data's {data_labels}")
    return np.array([chain_labels.index(label) + 1
                     for label in data_labels])


def _check_group_design(data):
    # the group densities rebuild each group's design as a one-hot row, so
    # the data must use exactly that coding
    if data.q != data.m or not np.allclose(
            data.x, np.eye(data.m)[data.group - 1], atol=1e-12):
        raise ValueError("classification requires the one-hot group design "
                         "(each x row the indicator of the unit's group)")


def classify_dataset(chain, data, priors="empirical"):
    """Classify every unit of `data` with a fitted chain.

    Group and level codes are reconciled with the chain by label, so a file
    whose labels appear in a different order still classifies correctly; the
    report is expressed in the chain's coding.  Explicit prior weights are
    interpreted in the chain's group order.
    """
    if chain.dims["p"] != data.p or chain.dims["k"] != data.k \
            or chain.dims["m"] != data.m:
        raise ValueError("chain and data dimensions disagree")
    g_remap = _align_codes(chain.group_labels, data.group_labels, "group")
    l_remap = _align_codes(chain.level_labels, data.level_labels, "level")
    _check_group_design(data)
    pi = resolve_priors(priors, data)
    if g_remap is not None and isinstance(priors, str):
        aligned = np.empty_like(pi)
        aligned[g_remap - 1] = pi
        pi = aligned
    probs = np.empty((data.n, data.m))
    for i in range(data.n):
        lvl = int(data.level[i]) if l_remap is None \
            else int(l_remap[data.level[i] - 1])
        probs[i] = classify_probabilities(chain, data.y[i], lvl, pi)
    predicted = np.fromiter((classify_label(row) for row in probs),
                            dtype=int, count=data.n)
    true = data.group if g_remap is None else g_remap[data.group - 1]
    return ClassificationReport(
        probabilities=probs, predicted=predicted, true_labels=true,
        group_labels=chain.group_labels, model=chain.model,
        method="training", meta={"priors": pi.tolist()})


def _fit_chain(model, data, hyper, settings, r_update, stream):
    if model == "bsp":
        return run_chain(data, hyper, settings, r_update=r_update,
                         stream=stream)
    return run_bp_chain(data, hyper, settings, r_update=r_update,
                        stream=stream)


def _loocv_fold(args):
    """One fold: refit without unit i, classify unit i.

    Module-level so process pools can pickle it; returns (i, probabilities).
    """
    (i, model, data, hyper, settings, r_update, priors, seed) = args
    try:
        keep = np.array([j for j in range(data.n) if j != i])
        train = data.subset(keep)
        y_i = data.y[i]
        level_i = int(data.level[i])
        if model == "lda":
            fitted = lda_fit(train)
            if isinstance(priors, str) and priors == "uniform":
                fitted = replace(fitted,
                                 log_priors=np.full(data.m, -np.log(data.m)))
            return i, lda_predict_proba(fitted, y_i[None, :])[0]
        stream = RngStream(seed).split(i)
        chain = _fit_chain(model, train, hyper, settings, r_update, stream)
        pi = resolve_priors(priors, train)
        return i, classify_probabilities(chain, y_i, level_i, pi)
    except Exception as exc:
        raise RuntimeError(f"leave-one-out fold {i} failed: {exc}") from exc


def loocv(data, hyper, settings, model="bsp", r_update="atoms",
          priors="empirical", workers=None, fast=False):
    """Leave-one-out cross-validation; one refit per unit unless `fast`.

    Fold i trains on the other n-1 units with the stream split(i) of the
    settings seed, then classifies unit i using priors resolved against the
    training fold.  `workers` follows the AUTHMIX_WORKERS environment
    variable (default 1); folds are independent, so the report does not
    depend on the worker count.  `fast=True` skips the refits and reuses one
    full-data fit for every unit, a plug-in approximation that typically
    understates the error.
    """
    if model not in ("bsp", "bp", "lda"):
        raise ValueError(f"unknown model tag {model!r}")
    if data.n < 2:
        raise ValueError("leave-one-out needs at least 2 units")
    if model != "lda":
        if hyper is None:
            raise ValueError("hyperparameters required for model fits")
        _check_group_design(data)
    if fast:
        report = _fast_loocv(data, hyper, settings, model, r_update, priors)
        report.meta["priors_rule"] = priors if isinstance(priors, str) else "explicit"
        return report
    if workers is None:
        workers = int(os.environ.get("AUTHMIX_WORKERS", "1"))
    tasks = [(i, model, data, hyper, settings, r_update, priors,
              settings.seed if settings is not None else 0)
             for i in range(data.n)]
    probs = np.empty((data.n, data.m))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_loocv_fold, tasks))
    else:
        results = [_loocv_fold(task) for task in tasks]
    for i, row in results:
        probs[i] = row
    predicted = np.fromiter((classify_label(row) for row in probs),
                            dtype=int, count=data.n)
    return ClassificationReport(
        probabilities=probs, predicted=predicted, true_labels=data.group,
        group_labels=data.group_labels, model=model, method="loocv",
        meta={"priors_rule": priors if isinstance(priors, str) else "explicit",
              "folds": data.n})


def _fast_loocv(data, hyper, settings, model, r_update, priors):
    """Plug-in approximation: classify all units with one full-data fit."""
    if model == "lda":
        fitted = lda_fit(data)
        if isinstance(priors, str) and priors == "uniform":
            fitted = replace(fitted,
                             log_priors=np.full(data.m, -np.log(data.m)))
        probs = lda_predict_proba(fitted, data.y)
        predicted = np.fromiter((classify_label(row) for row in probs),
                                dtype=int, count=data.n)
        return ClassificationReport(
            probabilities=probs, predicted=predicted, true_labels=data.group,
            group_labels=data.group_labels, model=model, method="loocv-fast",
            meta={})
    chain = _fit_chain(model, data, hyper, settings, r_update,
                       RngStream(settings.seed))
    report = classify_dataset(chain, data, priors=priors)
    return ClassificationReport(
        probabilities=report.probabilities, predicted=report.predicted,
        true_labels=report.true_labels, group_labels=report.group_labels,
        model=model, method="loocv-fast", meta=dict(report.meta))
