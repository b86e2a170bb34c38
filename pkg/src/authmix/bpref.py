"""Parametric reference models: the single-atom Bayes sampler and LDA.

The single-atom model keeps the mixed-model structure but replaces the
random measure with one shared atom alpha ~ N(0, R); it is exactly the
mixture model conditioned on everyone sharing one cluster, and its alpha
update is the same atom conditional with an all-units cluster.  All other
updates are the shared kernels.

LDA is the classical baseline: class means, one pooled covariance with the
n - m divisor, empirical class priors, and Gaussian discriminant scores.
It sees only the responses (levels are ignored).
"""

import dataclasses

import numpy as np

from . import _gibbs
from .domain import BpState, PosteriorChain
from .dpmm import check_compatible, _data_arrays
from .randmat import FactorizationError, RngStream, spd_cholesky

_R_MODES = {"atoms": 0, "units": 1}


def initial_bp_state(data, hyper):
    p, q, pk = data.p, data.q, hyper.R0.shape[0]
    return BpState(
        B=np.zeros((p, q)),
        theta=data.y.copy(),
        alpha=np.zeros(pk),
        Sigma=np.stack([np.eye(p)] * data.m),
        tau=np.eye(p),
        R=np.eye(pk),
        beta0=np.zeros((q, p)),
        Lambda=np.eye(p),
    )


def alpha_posterior(state, data):
    """Mean and covariance of the shared-atom conditional."""
    Y, X, lev, grp = _data_arrays(data)
    tau = np.ascontiguousarray(state.tau)
    R = np.ascontiguousarray(state.R)
    tau_inv, ldt, R_inv, *_ = _gibbs.level_caches(tau, R, data.k)
    config0 = np.zeros(data.n, dtype=np.int64)
    A, b = _gibbs.atom_suffstats(np.ascontiguousarray(state.theta), lev,
                                 config0, 0, tau_inv, R_inv)
    cov = np.linalg.inv(A)
    cov = 0.5 * (cov + cov.T)
    return cov @ b, cov


def bp_sweep(state, data, hyper, rng, r_update="atoms"):
    """One full sweep of the single-atom sampler; returns the new state."""
    check_compatible(data, hyper)
    Y, X, lev, grp = _data_arrays(data)
    B = np.ascontiguousarray(state.B.copy())
    theta = np.ascontiguousarray(state.theta.copy())
    alpha = np.ascontiguousarray(state.alpha.copy())
    Sigma = np.ascontiguousarray(state.Sigma.copy())
    tau = np.ascontiguousarray(state.tau.copy())
    R = np.ascontiguousarray(state.R.copy())
    beta0 = np.ascontiguousarray(state.beta0.copy())
    Lam = np.ascontiguousarray(state.Lambda.copy())
    config0 = np.zeros(data.n, dtype=np.int64)
    atoms1 = np.zeros((1, alpha.shape[0]))
    _gibbs.bp_sweep(Y, X, lev, grp, data.k, data.m, B, theta, alpha, Sigma,
                    tau, R, beta0, Lam,
                    np.ascontiguousarray(hyper.alpha0),
                    np.ascontiguousarray(hyper.tau0),
                    np.ascontiguousarray(hyper.Q0), hyper.nu0,
                    np.ascontiguousarray(hyper.L0), hyper.t0,
                    np.ascontiguousarray(hyper.R0), hyper.r0,
                    np.ascontiguousarray(hyper.Phi0), hyper.gamma0,
                    _R_MODES[r_update], config0, atoms1, rng.generator)
    return BpState(B=B, theta=theta, alpha=alpha, Sigma=Sigma, tau=tau, R=R,
                   beta0=beta0, Lambda=Lam)


def run_bp_chain(data, hyper, settings, r_update="atoms", initial=None,
                 resim=False, stream=None):
    """Run the single-atom sampler; same recording semantics as run_chain."""
    check_compatible(data, hyper)
    if r_update not in _R_MODES:
        raise ValueError(f"r_update must be one of {sorted(_R_MODES)}")
    state = initial if initial is not None else initial_bp_state(data, hyper)
    rng = (stream if stream is not None else RngStream(settings.seed)).generator
    n, p, q, k, m = data.n, data.p, data.q, data.k, data.m
    pk = hyper.R0.shape[0]
    Y, X, lev, grp = _data_arrays(data)
    Y = Y.copy()
    B = np.ascontiguousarray(state.B.copy())
    theta = np.ascontiguousarray(state.theta.copy())
    alpha = np.ascontiguousarray(state.alpha.copy())
    Sigma = np.ascontiguousarray(state.Sigma.copy())
    tau = np.ascontiguousarray(state.tau.copy())
    R = np.ascontiguousarray(state.R.copy())
    beta0 = np.ascontiguousarray(state.beta0.copy())
    Lam = np.ascontiguousarray(state.Lambda.copy())
    C = settings.draw_count
    out = {
        "B": np.zeros((C, p, q)), "theta": np.zeros((C, n, p)),
        "alpha": np.zeros((C, pk)), "Sigma": np.zeros((C, m, p, p)),
        "tau": np.zeros((C, p, p)), "R": np.zeros((C, pk, pk)),
        "beta0": np.zeros((C, q, p)), "Lambda": np.zeros((C, p, p)),
    }
    out_Y = np.zeros((C, n, p)) if resim else np.zeros((1, 1, 1))
    iter_box = np.zeros(1, dtype=np.int64)
    try:
        recorded = _gibbs.run_bp(
            Y, X, lev, grp, k, m, B, theta, alpha, Sigma, tau, R, beta0, Lam,
            np.ascontiguousarray(hyper.alpha0),
            np.ascontiguousarray(hyper.tau0),
            np.ascontiguousarray(hyper.Q0), hyper.nu0,
            np.ascontiguousarray(hyper.L0), hyper.t0,
            np.ascontiguousarray(hyper.R0), hyper.r0,
            np.ascontiguousarray(hyper.Phi0), hyper.gamma0,
            _R_MODES[r_update], settings.iterations, settings.burn_in,
            settings.thinning, 1 if resim else 0,
            out["B"], out["theta"], out["alpha"], out["Sigma"], out["tau"],
            out["R"], out["beta0"], out["Lambda"], out_Y, iter_box, rng)
    except np.linalg.LinAlgError as err:
        raise FactorizationError(
            f"chain aborted at iteration {int(iter_box[0])}: {err}") from err
    assert recorded == C
    if resim:
        out["y"] = out_Y
    return PosteriorChain("bp", settings, {"p": p, "q": q, "k": k, "m": m, "n": n},
                          out, r_update, data.group_labels, data.level_labels)


@dataclasses.dataclass
class LdaModel:
    """Gaussian discriminant with one pooled covariance."""

    means: np.ndarray
    cov: np.ndarray
    log_priors: np.ndarray
    group_labels: tuple

    @property
    def m(self):
        return self.means.shape[0]


def lda_fit(data):
    """Fit class means and the pooled within-class covariance (n - m divisor)."""
    n, p, m = data.n, data.p, data.m
    if n - m < 1:
        raise ValueError("need at least one residual degree of freedom (n > m)")
    means = np.empty((m, p))
    S = np.zeros((p, p))
    counts = data.group_counts()
    if (counts == 0).any():
        empty = [data.group_labels[u] for u in range(m) if counts[u] == 0]
        raise ValueError(f"groups with no units: {empty}")
    for u in range(m):
        rows = data.y[data.group == u + 1]
        means[u] = rows.mean(axis=0)
        centered = rows - means[u]
        S += centered.T @ centered
    cov = S / (n - m)
    try:
        spd_cholesky(cov, name="pooled covariance")
    except FactorizationError as err:
        raise FactorizationError(
            f"{err}; the pooled covariance is singular, reduce the response "
            f"dimension or use more units") from err
    return LdaModel(means=means, cov=cov, log_priors=np.log(counts / n),
                    group_labels=data.group_labels)


def lda_predict_proba(model, y):
    """Posterior class probabilities for rows of y, shape (n, m)."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    L = spd_cholesky(model.cov, name="pooled covariance")
    logdet = 2.0 * np.log(np.diag(L)).sum()
    p = y.shape[1]
    scores = np.empty((y.shape[0], model.m))
    for u in range(model.m):
        diff = np.linalg.solve(L, (y - model.means[u]).T)
        maha = (diff ** 2).sum(axis=0)
        scores[:, u] = model.log_priors[u] - 0.5 * (
            p * np.log(2 * np.pi) + logdet + maha)
    scores -= scores.max(axis=1, keepdims=True)
    probs = np.exp(scores)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs
