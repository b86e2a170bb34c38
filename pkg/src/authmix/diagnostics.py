"""Model-comparison scores and sampler-validation oracles.

Scores: conditional predictive ordinates with their summed log (LPML),
three deviance information criteria, and ROC/AUC for classifier output.
All of them use the conditional likelihood f(y_i | draw) = N_p(y_i; B x_i +
theta_i, Sigma_{g_i}), the only likelihood computable from stored draws
without re-marginalizing the random effects; negative effective-parameter
counts are reported as computed, never clipped.

Oracles: a stick-breaking truncation sampler and sequential urn partition
sampler (forward simulators independent of the Gibbs code), an exhaustive
set-partition posterior for tiny instances, and a two-sided simulation
harness comparing prior-predictive draws against sweep-and-resimulate
draws of the same joint distribution (all scalar functionals should agree
within Monte Carlo error when the transition kernel is correct).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _gibbs
from .bpref import run_bp_chain
from .domain import BpState, BspState, McmcSettings, z_apply
from .dpmm import run_chain
from .randmat import (RngStream, gamma_sample, inverse_wishart_sample,
                      mvn_logpdf, mvn_sample)

__all__ = [
    "DicResult",
    "DiscreteMeasure",
    "GewekeResult",
    "RocCurve",
    "cpo_lpml",
    "crp_partition",
    "default_functionals",
    "dic",
    "enumerate_partition_posterior",
    "geweke_harness",
    "macro_auc",
    "partition_frequencies",
    "roc_curve",
    "roc_curves_ovr",
    "stick_breaking_truncation",
]


def _logmeanexp_sorted(values):
    """log(mean(exp(values))), summed in sorted order.

    Sorting first makes the result exactly invariant under permutations of
    the input, which the score definitions below promise.
    """
    v = np.sort(np.asarray(values, dtype=float))
    top = v[-1]
    if not np.isfinite(top):
        return float(top)
    return float(top + math.log(np.exp(v - top).sum()) - math.log(v.size))


def _chain_loglik(chain, data):
    """(draws, n) conditional log likelihood matrix."""
    if chain.dims["p"] != data.p or chain.dims["m"] != data.m \
            or chain.dims["n"] != data.n:
        raise ValueError("chain and data dimensions disagree")
    a = chain.arrays
    Y = np.ascontiguousarray(data.y, dtype=float)
    X = np.ascontiguousarray(data.x, dtype=float)
    grp = np.ascontiguousarray(data.group - 1, dtype=np.int64)
    return _gibbs.conditional_loglik(Y, X, grp, a["B"], a["theta"], a["Sigma"])


def cpo_lpml(chain, data):
    """Conditional predictive ordinates and their summed log.

    CPO_i is the harmonic mean of the per-draw conditional likelihoods of
    unit i, computed in log space; LPML is the sum of log CPO_i taken in
    sorted order, so it is exactly invariant under reordering draws or
    units.  Higher is better.
    """
    loglik = _chain_loglik(chain, data)
    n = loglik.shape[1]
    log_cpo = np.empty(n)
    for i in range(n):
        log_cpo[i] = -_logmeanexp_sorted(-loglik[:, i])
    lpml = float(np.sort(log_cpo).sum())
    return np.exp(log_cpo), lpml


@dataclass
class DicResult:
    """One deviance information criterion evaluation; lower dic is better.

    p_d can legitimately come out negative for plug-in constructions on
    multimodal posteriors; it is reported as computed.
    """

    variant: int
    dic: float
    p_d: float
    dbar: float
    dhat: float

    def to_jsonable(self):
        return {"variant": self.variant, "dic": self.dic, "p_d": self.p_d,
                "dbar": self.dbar, "dhat": self.dhat}


def dic(chain, data, variant):
    """Deviance information criterion, plug-in chosen by `variant`.

    1 plugs componentwise posterior means of (B, theta, Sigma) into the
    deviance, 2 plugs in the stored draw with the highest likelihood, and 3
    replaces the plug-in deviance with -2 sum_i log of the posterior-mean
    density of y_i.  All variants share dic = dbar + p_d, p_d = dbar - dhat.
    """
    if variant not in (1, 2, 3):
        raise ValueError("variant must be 1, 2 or 3")
    loglik = _chain_loglik(chain, data)
    deviance = -2.0 * loglik.sum(axis=1)
    dbar = float(deviance.mean())
    if variant == 1:
        a = chain.arrays
        Y = np.ascontiguousarray(data.y, dtype=float)
        X = np.ascontiguousarray(data.x, dtype=float)
        grp = np.ascontiguousarray(data.group - 1, dtype=np.int64)
        plug = _gibbs.conditional_loglik(
            Y, X, grp,
            np.ascontiguousarray(a["B"].mean(axis=0))[None],
            np.ascontiguousarray(a["theta"].mean(axis=0))[None],
            np.ascontiguousarray(a["Sigma"].mean(axis=0))[None])
        dhat = float(-2.0 * plug[0].sum())
    elif variant == 2:
        dhat = float(deviance.min())
    else:
        n = loglik.shape[1]
        log_fhat = np.empty(n)
        for i in range(n):
            log_fhat[i] = _logmeanexp_sorted(loglik[:, i])
        dhat = float(-2.0 * log_fhat.sum())
    p_d = dbar - dhat
    return DicResult(variant=variant, dic=dbar + p_d, p_d=p_d,
                     dbar=dbar, dhat=dhat)


@dataclass
class RocCurve:
    """Operating points over all score thresholds plus the trapezoid AUC.

    `points` has one (false positive rate, true positive rate) row per
    threshold; thresholds are +inf followed by the distinct scores in
    descending order (ties grouped), so the curve steps from (0, 0) to
    (1, 1).  The AUC numerator is accumulated in integer arithmetic, making
    it exactly the pairwise comparison statistic with ties counted half.
    """

    points: np.ndarray
    thresholds: np.ndarray
    auc: float
    positive_label: object

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fpr", "tpr"])
            for fpr, tpr in self.points:
                writer.writerow([repr(float(fpr)), repr(float(tpr))])


def roc_curve(scores, labels, positive):
    """ROC over all thresholds of the form score >= t.

    Rank-based, so the curve and AUC are exactly invariant under strictly
    increasing transforms of the scores.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    pos = labels == positive
    n_pos = int(pos.sum())
    n_neg = int(scores.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present to form a ROC curve")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = pos[order]
    # last index of every tie group, scanning in descending score order
    boundary = np.nonzero(np.diff(sorted_scores))[0]
    cut = np.append(boundary, scores.size - 1)
    tp = np.cumsum(sorted_pos)[cut]
    fp = (cut + 1) - tp
    tp = np.concatenate(([0], tp)).astype(np.int64)
    fp = np.concatenate(([0], fp)).astype(np.int64)
    auc_num = 0
    for j in range(1, tp.size):
        auc_num += int(fp[j] - fp[j - 1]) * int(tp[j] + tp[j - 1])
    auc = auc_num / (2 * n_pos * n_neg)
    points = np.column_stack((fp / n_neg, tp / n_pos))
    thresholds = np.concatenate(([np.inf], sorted_scores[cut]))
    return RocCurve(points=points, thresholds=thresholds, auc=float(auc),
                    positive_label=positive)


def roc_curves_ovr(probabilities, labels):
    """One-vs-rest ROC per class, scored by that class's probability column.

    Returns {class code: RocCurve} for 1-based class codes; every class must
    appear in `labels`.
    """
    probabilities = np.asarray(probabilities, dtype=float)
    labels = np.asarray(labels, dtype=int)
    curves = {}
    for u in range(1, probabilities.shape[1] + 1):
        curves[u] = roc_curve(probabilities[:, u - 1], labels, u)
    return curves


def macro_auc(curves):
    """Unweighted mean AUC of a one-vs-rest curve collection."""
    return float(np.mean([c.auc for c in curves.values()]))


@dataclass
class DiscreteMeasure:
    """Finitely many weighted atoms; weights nonnegative, summing to 1."""

    weights: np.ndarray
    atoms: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.atoms = np.asarray(self.atoms, dtype=float)
        if self.weights.ndim != 1 or self.atoms.shape[0] != self.weights.size:
            raise ValueError("one atom per weight required")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")


def stick_breaking_truncation(M, g0_sampler, truncation, stream):
    """Forward-simulate a truncated stick-breaking measure.

    Breaks `truncation - 1` sticks with Beta(1, M) fractions and assigns the
    leftover stick to the final atom so the weights sum to 1; atoms are
    independent draws from `g0_sampler(stream)`.  Validation oracle only,
    independent of the marginalized sampler.
    """
    if truncation < 1:
        raise ValueError("truncation must be at least 1")
    if M <= 0:
        raise ValueError("concentration must be positive")
    weights = np.empty(truncation)
    remaining = 1.0
    for h in range(truncation - 1):
        frac = stream.generator.beta(1.0, M)
        weights[h] = frac * remaining
        remaining *= 1.0 - frac
    # the broken weights can round to a hair above 1 at deep truncations
    weights[truncation - 1] = max(0.0, 1.0 - weights[:truncation - 1].sum())
    atoms = np.stack([np.atleast_1d(np.asarray(g0_sampler(stream),
                                               dtype=float))
                      for _ in range(truncation)])
    return DiscreteMeasure(weights=weights, atoms=atoms)


def crp_partition(M, n, stream):
    """Sequential urn draw of a partition of n items.

    Item i joins an existing cluster with probability proportional to its
    size, or opens a new one with weight M; labels are first-appearance
    order, so the result is already canonical.
    """
    config = np.zeros(n, dtype=np.int64)
    sizes = [1]
    for i in range(1, n):
        u = stream.generator.random() * (i + M)
        acc = 0.0
        chosen = len(sizes)
        for c, s_c in enumerate(sizes):
            acc += s_c
            if u < acc:
                chosen = c
                break
        if chosen == len(sizes):
            sizes.append(1)
        else:
            sizes[chosen] += 1
        config[i] = chosen
    return config


def _set_partitions(n):
    """All partitions of range(n) as canonical first-appearance label tuples."""
    labels = [0] * n

    def rec(i, used):
        if i == n:
            yield tuple(labels)
            return
        for c in range(used + 1):
            labels[i] = c
            yield from rec(i + 1, max(used, c + 1))

    if n == 0:
        return
    yield from rec(1, 1)


def enumerate_partition_posterior(theta, levels, tau, R, M):
    """Exact partition posterior on a tiny instance by full enumeration.

    Conditional on the given random effects and covariances, each partition
    rho has probability proportional to M^{|rho|} prod_c (|c|-1)! m_c where
    m_c is the marginal density of the cluster's stacked effects, mean zero
    and covariance Z R Z' + I (x) tau from integrating its shared atom
    against the base measure.  Feasible only for a handful of units; this is
    the ground truth the reassignment sweeps are checked against.
    """
    theta = np.asarray(theta, dtype=float)
    levels = np.asarray(levels, dtype=int)
    n, p = theta.shape
    if n > 8:
        raise ValueError("enumeration is meant for tiny instances (n <= 8)")
    pk = R.shape[0]
    log_weights = []
    parts = list(_set_partitions(n))
    for part in parts:
        K = max(part) + 1
        lw = K * math.log(M)
        for c in range(K):
            members = [i for i in range(n) if part[i] == c]
            s = len(members)
            lw += math.lgamma(s)
            Z = np.zeros((s * p, pk))
            for a, i in enumerate(members):
                off = (levels[i] - 1) * p
                Z[a * p:(a + 1) * p, off:off + p] = np.eye(p)
            cov = Z @ R @ Z.T + np.kron(np.eye(s), tau)
            vec = theta[members].ravel()
            lw += mvn_logpdf(vec, np.zeros(s * p), cov)
        log_weights.append(lw)
    log_weights = np.asarray(log_weights)
    probs = np.exp(log_weights - log_weights.max())
    probs /= probs.sum()
    return dict(zip(parts, probs))


def partition_frequencies(theta, levels, tau, R, M, sweeps, stream):
    """Empirical partition frequencies from reassignment-and-atom sweeps.

    Runs `sweeps` iterations of the cluster moves with (tau, R, M) held
    fixed, counting each visited partition in canonical form; the companion
    of enumerate_partition_posterior.
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    lev0 = np.ascontiguousarray(np.asarray(levels, dtype=np.int64) - 1)
    n, p = theta.shape
    k = R.shape[0] // p
    config = np.zeros(n, dtype=np.int64)
    atoms = np.zeros((n, R.shape[0]))
    counts = np.zeros(n, dtype=np.int64)
    counts[0] = n
    Kbox = np.ones(1, dtype=np.int64)
    raw = _gibbs.run_cluster_partition_counts(
        theta, lev0, k, np.ascontiguousarray(tau, dtype=float),
        np.ascontiguousarray(R, dtype=float), float(M), int(sweeps),
        config, atoms, counts, Kbox, stream.generator)
    freqs = {}
    for code in np.nonzero(raw)[0]:
        digits = []
        rem = int(code)
        for _ in range(n):
            digits.append(rem % n)
            rem //= n
        freqs[tuple(digits)] = raw[code] / sweeps
    return freqs


def _design_matrix(template):
    return np.ascontiguousarray(template.x, dtype=float)


def _prior_draw_bsp(template, hyper, stream):
    """One joint draw of all parameters from the prior, partition included."""
    p, q, k = template.p, template.q, hyper.k
    pk = p * k
    Lam = inverse_wishart_sample(hyper.t0, hyper.L0, stream)
    beta0 = np.stack([mvn_sample(hyper.alpha0, hyper.tau0, stream)
                      for _ in range(q)])
    B = np.column_stack([mvn_sample(beta0[j], Lam, stream)
                         for j in range(q)])
    Sigma = np.stack([inverse_wishart_sample(hyper.nu0, hyper.Q0, stream)
                      for _ in range(template.m)])
    tau = inverse_wishart_sample(hyper.gamma0, hyper.Phi0, stream)
    R = inverse_wishart_sample(hyper.r0, hyper.R0, stream)
    M = gamma_sample(hyper.a1, hyper.a2, stream)
    config = crp_partition(M, template.n, stream)
    atoms = {c: mvn_sample(np.zeros(pk), R, stream)
             for c in range(int(config.max()) + 1)}
    theta = np.stack([
        mvn_sample(z_apply(int(template.level[i]), atoms[int(config[i])], p),
                   tau, stream)
        for i in range(template.n)])
    return BspState(B=B, theta=theta, config=config, atoms=atoms, Sigma=Sigma,
                    tau=tau, R=R, beta0=beta0, Lambda=Lam, M=M)


def _prior_draw_bp(template, hyper, stream):
    p, q = template.p, template.q
    pk = hyper.R0.shape[0]
    Lam = inverse_wishart_sample(hyper.t0, hyper.L0, stream)
    beta0 = np.stack([mvn_sample(hyper.alpha0, hyper.tau0, stream)
                      for _ in range(q)])
    B = np.column_stack([mvn_sample(beta0[j], Lam, stream)
                         for j in range(q)])
    Sigma = np.stack([inverse_wishart_sample(hyper.nu0, hyper.Q0, stream)
                      for _ in range(template.m)])
    tau = inverse_wishart_sample(hyper.gamma0, hyper.Phi0, stream)
    R = inverse_wishart_sample(hyper.r0, hyper.R0, stream)
    alpha = mvn_sample(np.zeros(pk), R, stream)
    theta = np.stack([
        mvn_sample(z_apply(int(template.level[i]), alpha, p), tau, stream)
        for i in range(template.n)])
    return BpState(B=B, theta=theta, alpha=alpha, Sigma=Sigma, tau=tau, R=R,
                   beta0=beta0, Lambda=Lam)


def _sim_responses(template, state, stream):
    X = _design_matrix(template)
    y = np.empty((template.n, template.p))
    for i in range(template.n):
        u = int(template.group[i])
        y[i] = mvn_sample(state.B @ X[i] + state.theta[i],
                          state.Sigma[u - 1], stream)
    return y


def default_functionals(model):
    """Named scalar functionals of (state, responses), 23 shared + extras.

    Chosen to touch every updated block: covariance entries and log
    determinants, fixed effects and their hyper means, random effects,
    responses, a response-effect cross moment, and for the mixture model the
    concentration, cluster count and the atom of the first unit.
    """
    def logdet(mat):
        return float(np.linalg.slogdet(mat)[1])

    funcs = {
        "tau_00": lambda s, y: s.tau[0, 0],
        "tau_01": lambda s, y: s.tau[0, 1],
        "tau_logdet": lambda s, y: logdet(s.tau),
        "Sigma1_00": lambda s, y: s.Sigma[0][0, 0],
        "Sigma1_11": lambda s, y: s.Sigma[0][1, 1],
        "Sigma1_logdet": lambda s, y: logdet(s.Sigma[0]),
        "Lambda_00": lambda s, y: s.Lambda[0, 0],
        "Lambda_logdet": lambda s, y: logdet(s.Lambda),
        "R_00": lambda s, y: s.R[0, 0],
        "R_trace": lambda s, y: float(np.trace(s.R)),
        "R_logdet": lambda s, y: logdet(s.R),
        "B_00": lambda s, y: s.B[0, 0],
        "B_10": lambda s, y: s.B[1, 0],
        "B_00_sq": lambda s, y: s.B[0, 0] ** 2,
        "beta0_00": lambda s, y: s.beta0[0, 0],
        "beta0_01": lambda s, y: s.beta0[0, 1],
        "theta_00": lambda s, y: s.theta[0, 0],
        "theta_00_sq": lambda s, y: s.theta[0, 0] ** 2,
        "theta_mean": lambda s, y: float(s.theta.mean()),
        "y_00": lambda s, y: y[0, 0],
        "y_00_sq": lambda s, y: y[0, 0] ** 2,
        "y_mean": lambda s, y: float(y.mean()),
        "y_theta_cross": lambda s, y: y[0, 0] * s.theta[0, 0],
    }
    if model == "bsp":
        funcs.update({
            "M": lambda s, y: s.M,
            "log_M": lambda s, y: math.log(s.M),
            "n_clusters": lambda s, y: float(s.n_clusters()),
            "n_clusters_sq": lambda s, y: float(s.n_clusters()) ** 2,
            "atom_unit0_0": lambda s, y: s.atoms[int(s.config[0])][0],
        })
    elif model == "bp":
        funcs.update({
            "alpha_0": lambda s, y: s.alpha[0],
            "alpha_last": lambda s, y: s.alpha[-1],
            "alpha_0_sq": lambda s, y: s.alpha[0] ** 2,
            "alpha_cross": lambda s, y: s.alpha[0] * s.alpha[1],
        })
    else:
        raise ValueError(f"unknown model tag {model!r}")
    return funcs


@dataclass
class GewekeResult:
    """Two-sided simulation comparison; |z| beyond ~4 flags a broken move."""

    names: tuple
    z: np.ndarray
    mean_prior: np.ndarray
    mean_chain: np.ndarray
    se_prior: np.ndarray
    se_chain: np.ndarray
    draws: int

    def max_abs_z(self):
        return float(np.max(np.abs(self.z))) if self.z.size else 0.0

    def passed(self, limit=4.0):
        return bool(np.all(np.abs(self.z) < limit))

    def to_jsonable(self):
        return {"draws": self.draws,
                "functionals": {
                    name: {"z": float(self.z[j]),
                           "mean_prior": float(self.mean_prior[j]),
                           "mean_chain": float(self.mean_chain[j]),
                           "se_prior": float(self.se_prior[j]),
                           "se_chain": float(self.se_chain[j])}
                    for j, name in enumerate(self.names)}}


def _batch_means_se(series, nbatches=100):
    """Standard error of an autocorrelated series by batch means."""
    n = series.size
    nb = min(nbatches, n // 2)
    if nb < 2:
        return float(series.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    width = n // nb
    used = series[:nb * width].reshape(nb, width)
    means = used.mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(nb))


def geweke_harness(model, template, hyper, draws=50000, seed=0,
                   functionals=None, chain_hyper=None):
    """Joint-distribution check of the transition kernel on a tiny instance.

    Side one draws (parameters, responses) from the prior predictive,
    independently each time.  Side two starts from one prior draw and
    alternates a full Gibbs sweep with re-simulating the responses, which
    leaves the same joint distribution invariant.  Each functional gets a
    z-score for the difference of its two means, with the chain side's
    standard error taken by batch means; a correct sampler keeps all |z|
    small (< 4 is the customary band at these sizes).

    `chain_hyper` deliberately mis-specifies side two only, for tests that
    confirm the harness catches an inconsistent kernel; leave it None
    otherwise.  Only the template's shape, design and labels are used, its
    responses are ignored.
    """
    if model not in ("bsp", "bp"):
        raise ValueError(f"unknown model tag {model!r}")
    funcs = default_functionals(model) if functionals is None else functionals
    names = tuple(funcs)
    calls = [funcs[name] for name in names]
    nf = len(names)
    prior_stream = RngStream(seed).split(1)
    chain_stream = RngStream(seed).split(2)
    draw_prior = _prior_draw_bsp if model == "bsp" else _prior_draw_bp

    vals_prior = np.empty((draws, nf))
    for t in range(draws):
        state = draw_prior(template, hyper, prior_stream)
        y = _sim_responses(template, state, prior_stream)
        for j, call in enumerate(calls):
            vals_prior[t, j] = call(state, y)

    state0 = draw_prior(template, hyper, chain_stream)
    y0 = _sim_responses(template, state0, chain_stream)
    data0 = replace(template, y=y0)
    settings = McmcSettings(iterations=draws, burn_in=0, thinning=1,
                            seed=seed)
    side_hyper = hyper if chain_hyper is None else chain_hyper
    if model == "bsp":
        chain = run_chain(data0, side_hyper, settings, initial=state0,
                          resim=True, stream=chain_stream)
    else:
        chain = run_bp_chain(data0, side_hyper, settings, initial=state0,
                             resim=True, stream=chain_stream)
    ys = chain.arrays["y"]
    vals_chain = np.empty((draws, nf))
    for t in range(draws):
        state = chain.state(t)
        y = ys[t]
        for j, call in enumerate(calls):
            vals_chain[t, j] = call(state, y)

    mean_prior = vals_prior.mean(axis=0) if draws else np.empty(nf)
    mean_chain = vals_chain.mean(axis=0) if draws else np.empty(nf)
    se_prior = (vals_prior.std(axis=0, ddof=1) / math.sqrt(draws)
                if draws > 1 else np.zeros(nf))
    se_chain = np.array([_batch_means_se(vals_chain[:, j])
                         for j in range(nf)])
    diff = mean_prior - mean_chain
    denom = np.sqrt(se_prior ** 2 + se_chain ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(denom > 0, diff / denom,
                     np.where(diff == 0, 0.0, np.inf))
    return GewekeResult(names=names, z=z, mean_prior=mean_prior,
                        mean_chain=mean_chain, se_prior=se_prior,
                        se_chain=se_chain, draws=draws)
