"""Gibbs sampler for the semiparametric mixed model.

The model: responses y_i = B x_i + theta_i + e_i with group-specific
residual covariances, random effects theta_i = (level block of atom_i) +
innovation, and the per-unit atoms drawn from a discrete random measure so
that units sharing an atom form clusters.  The atom measure has
concentration M and stacked-normal base distribution N(0, R); weights are
shared across levels while atom blocks differ by level.

Every update function takes a state and returns a new state, drawing from
the given RngStream; the heavy lifting happens in the compiled kernels of
`_gibbs`, which `run_chain` drives directly on packed arrays.  Cluster
labels on returned states are always renumbered to 0..K-1; labels carry no
meaning, so this is the same state.

`update_R` supports two scale conventions: mode "atoms" (default) sums one
outer product per occupied cluster, mode "units" one per unit, duplicating
shared atoms.  `run_chain(fix_m=...)` freezes the concentration, which is a
validation hook (a frozen tiny M with a single starting cluster must
reproduce the single-atom reference model).
"""

import dataclasses

import numpy as np

from . import _gibbs
from .domain import BspState, Dataset, Hyperparameters, PosteriorChain
from .randmat import FactorizationError, RngStream

_R_MODES = {"atoms": 0, "units": 1}


def check_compatible(data, hyper):
    if hyper.p != data.p or hyper.k != data.k:
        raise ValueError(
            f"hyperparameters sized for p={hyper.p}, k={hyper.k}; "
            f"data has p={data.p}, k={data.k}")


@dataclasses.dataclass
class ReassignWorkspace:
    """Reassignment quantities for one unit, with the unit held out.

    labels lists the competing clusters in weight order; log_weights has one
    extra final entry for opening a fresh cluster.  D is the fresh-atom
    posterior covariance at the unit's level and alpha_tilde its mean.
    """

    labels: list
    log_weights: np.ndarray
    D: np.ndarray
    alpha_tilde: np.ndarray

    def probabilities(self):
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()


def _pack(state, data):
    n = data.n
    pk = state.R.shape[0]
    labels = sorted(state.atoms)
    index = {c: j for j, c in enumerate(labels)}
    config = np.array([index[c] for c in state.config.tolist()], dtype=np.int64)
    atoms = np.zeros((n, pk))
    counts = np.zeros(n, dtype=np.int64)
    for c, j in index.items():
        atoms[j] = state.atoms[c]
    for c in config:
        counts[c] += 1
    return labels, config, atoms, counts


def _unpack(state, config, atoms, counts, K, **replacements):
    atoms_dict = {c: atoms[c].copy() for c in range(K)}
    return dataclasses.replace(state, config=config.copy(), atoms=atoms_dict,
                               **replacements)


def _data_arrays(data):
    Y = np.ascontiguousarray(data.y)
    X = np.ascontiguousarray(data.x)
    lev = np.ascontiguousarray(data.level - 1)
    grp = np.ascontiguousarray(data.group - 1)
    return Y, X, lev, grp


def initial_state(data, hyper):
    """Deterministic start: one cluster at the origin, identity covariances,
    random effects at the raw responses, concentration at its prior mean."""
    p, q, pk = data.p, data.q, hyper.R0.shape[0]
    return BspState(
        B=np.zeros((p, q)),
        theta=data.y.copy(),
        config=np.zeros(data.n, dtype=np.int64),
        atoms={0: np.zeros(pk)},
        Sigma=np.stack([np.eye(p)] * data.m),
        tau=np.eye(p),
        R=np.eye(pk),
        beta0=np.zeros((q, p)),
        Lambda=np.eye(p),
        M=hyper.a1 / hyper.a2,
    )


def reassign_workspace(state, data, i):
    """Log reassignment weights for unit i computed with i held out."""
    Y, X, lev, grp = _data_arrays(data)
    labels, config, atoms, counts = _pack(state, data)
    K = len(labels)
    tau = np.ascontiguousarray(state.tau)
    R = np.ascontiguousarray(state.R)
    tau_inv, ldt, R_inv, ldR, LA, D, ldD = _gibbs.level_caches(tau, R, data.k)
    c_before = config[i]
    K2 = _gibbs.remove_unit(i, config, atoms, counts, K)
    logw = np.empty(data.n + 1)
    v = _gibbs.reassign_logweights(i, np.ascontiguousarray(state.theta), lev,
                                   atoms, counts, K2, state.M, tau_inv, ldt,
                                   ldR, D, ldD, logw)
    # map compact slots back to the caller's labels; a removed singleton
    # drops out, and the slot swap moves the last label into its place
    slot_labels = list(labels)
    if K2 < K:
        removed = slot_labels[c_before]
        slot_labels[c_before] = slot_labels[K - 1]
        slot_labels.remove(removed)
    l = data.level[i] - 1
    alpha_tilde = _gibbs.fresh_atom_mean(v, D, l, data.p)
    return ReassignWorkspace(labels=slot_labels[:K2],
                             log_weights=logw[:K2 + 1].copy(),
                             D=np.asarray(D[l]).copy(),
                             alpha_tilde=np.asarray(alpha_tilde))


def dp_step1_reassign(state, data, i, rng):
    """Draw a new cluster for unit i (existing or fresh atom)."""
    Y, X, lev, grp = _data_arrays(data)
    labels, config, atoms, counts = _pack(state, data)
    tau = np.ascontiguousarray(state.tau)
    R = np.ascontiguousarray(state.R)
    tau_inv, ldt, R_inv, ldR, LA, D, ldD = _gibbs.level_caches(tau, R, data.k)
    logw = np.empty(data.n + 1)
    K = _gibbs.step1_reassign_unit(
        i, np.ascontiguousarray(state.theta), lev, config, atoms, counts,
        len(labels), state.M, tau_inv, ldt, ldR, LA, D, ldD, logw,
        rng.generator)
    return _unpack(state, config, atoms, counts, K)


def dp_step2_atoms(state, data, rng):
    """Refresh every occupied atom from its normal full conditional."""
    Y, X, lev, grp = _data_arrays(data)
    labels, config, atoms, counts = _pack(state, data)
    tau = np.ascontiguousarray(state.tau)
    R = np.ascontiguousarray(state.R)
    tau_inv, ldt, R_inv, ldR, LA, D, ldD = _gibbs.level_caches(tau, R, data.k)
    _gibbs.step2_update_atoms(np.ascontiguousarray(state.theta), lev, config,
                              atoms, len(labels), tau_inv, R_inv,
                              rng.generator)
    return _unpack(state, config, atoms, counts, len(labels))


def atom_posterior(state, data, cluster):
    """Mean and covariance of the atom conditional for one cluster label."""
    Y, X, lev, grp = _data_arrays(data)
    labels, config, atoms, counts = _pack(state, data)
    if cluster not in labels:
        raise KeyError(f"no cluster labeled {cluster!r}")
    tau = np.ascontiguousarray(state.tau)
    R = np.ascontiguousarray(state.R)
    tau_inv, ldt, R_inv, ldR, LA, D, ldD = _gibbs.level_caches(tau, R, data.k)
    A, b = _gibbs.atom_suffstats(np.ascontiguousarray(state.theta), lev,
                                 config, labels.index(cluster), tau_inv, R_inv)
    cov = np.linalg.inv(A)
    cov = 0.5 * (cov + cov.T)
    return cov @ b, cov


def update_random_effects(state, data, rng):
    Y, X, lev, grp = _data_arrays(data)
    labels, config, atoms, counts = _pack(state, data)
    theta = np.ascontiguousarray(state.theta.copy())
    tau = np.ascontiguousarray(state.tau)
    tau_inv, *_ = _gibbs.level_caches(tau, np.ascontiguousarray(state.R), data.k)
    _gibbs.update_random_effects(Y, X, lev, grp,
                                 np.ascontiguousarray(state.B), theta, config,
                                 atoms, np.ascontiguousarray(state.Sigma),
                                 tau_inv, data.m, rng.generator)
    return dataclasses.replace(state, theta=theta)


def update_fixed_effects(state, data, rng):
    Y, X, lev, grp = _data_arrays(data)
    B = np.ascontiguousarray(state.B.copy())
    _gibbs.update_fixed_effects(Y, X, grp, np.ascontiguousarray(state.theta),
                                B, np.ascontiguousarray(state.Sigma),
                                np.ascontiguousarray(state.Lambda),
                                np.ascontiguousarray(state.beta0), data.m,
                                rng.generator)
    return dataclasses.replace(state, B=B)


def update_hyper_means(state, hyper, rng):
    beta0 = np.ascontiguousarray(state.beta0.copy())
    _gibbs.update_hyper_means(np.ascontiguousarray(state.B), beta0,
                              np.ascontiguousarray(state.Lambda),
                              np.ascontiguousarray(hyper.tau0),
                              np.ascontiguousarray(hyper.alpha0),
                              rng.generator)
    return dataclasses.replace(state, beta0=beta0)


def lambda_conditional(state, hyper):
    """(df, scale) of the inverse-Wishart conditional for Lambda."""
    df, scale = _gibbs.lambda_conditional(np.ascontiguousarray(state.B),
                                          np.ascontiguousarray(state.beta0),
                                          np.ascontiguousarray(hyper.L0),
                                          hyper.t0)
    return df, np.asarray(scale)


def update_Lambda(state, hyper, rng):
    Lam = np.ascontiguousarray(state.Lambda.copy())
    _gibbs.update_lambda(np.ascontiguousarray(state.B),
                         np.ascontiguousarray(state.beta0), Lam,
                         np.ascontiguousarray(hyper.L0), hyper.t0,
                         rng.generator)
    return dataclasses.replace(state, Lambda=Lam)


def residual_cov_conditional(state, data, hyper, group):
    """(df, scale) for the residual covariance of one group (1-based)."""
    Y, X, lev, grp = _data_arrays(data)
    df, scale = _gibbs.residual_cov_conditional(
        Y, X, grp, np.ascontiguousarray(state.B),
        np.ascontiguousarray(state.theta), np.ascontiguousarray(hyper.Q0),
        hyper.nu0, group - 1)
    return df, np.asarray(scale)


def update_residual_covs(state, data, hyper, rng):
    Y, X, lev, grp = _data_arrays(data)
    Sigma = np.ascontiguousarray(state.Sigma.copy())
    _gibbs.update_residual_covs(Y, X, grp, np.ascontiguousarray(state.B),
                                np.ascontiguousarray(state.theta), Sigma,
                                np.ascontiguousarray(hyper.Q0), hyper.nu0,
                                data.m, rng.generator)
    return dataclasses.replace(state, Sigma=Sigma)


def tau_conditional(state, data, hyper):
    Y, X, lev, grp = _data_arrays(data)
    labels, config, atoms, counts = _pack(state, data)
    df, scale = _gibbs.tau_conditional(np.ascontiguousarray(state.theta), lev,
                                       config, atoms,
                                       np.ascontiguousarray(hyper.Phi0),
                                       hyper.gamma0)
    return df, np.asarray(scale)


def update_tau(state, data, hyper, rng):
    df, scale = tau_conditional(state, data, hyper)
    from ._kernels import inverse_wishart_chol
    tau = inverse_wishart_chol(df, np.linalg.cholesky(scale), rng.generator)
    return dataclasses.replace(state, tau=np.asarray(tau))


def r_conditional(state, hyper, mode="atoms"):
    labels = sorted(state.atoms)
    index = {c: j for j, c in enumerate(labels)}
    n = state.config.shape[0]
    pk = state.R.shape[0]
    atoms = np.zeros((max(n, len(labels)), pk))
    for c, j in index.items():
        atoms[j] = state.atoms[c]
    config = np.array([index[c] for c in state.config.tolist()], dtype=np.int64)
    df, scale = _gibbs.r_conditional(atoms, config, len(labels), n,
                                     np.ascontiguousarray(hyper.R0), hyper.r0,
                                     _R_MODES[mode])
    return df, np.asarray(scale)


def update_R(state, hyper, rng, mode="atoms"):
    df, scale = r_conditional(state, hyper, mode)
    from ._kernels import inverse_wishart_chol
    R = inverse_wishart_chol(df, np.linalg.cholesky(scale), rng.generator)
    return dataclasses.replace(state, R=np.asarray(R))


def update_concentration(state, hyper, rng):
    """Auxiliary-variable refresh of M given the current cluster count."""
    n = state.config.shape[0]
    M = _gibbs.update_concentration(state.M, len(state.atoms), n,
                                    hyper.a1, hyper.a2, rng.generator)
    return dataclasses.replace(state, M=float(M))


def gibbs_sweep(state, data, hyper, rng, r_update="atoms", fix_m=None):
    """One full sweep in the documented update order; returns the new state."""
    check_compatible(data, hyper)
    Y, X, lev, grp = _data_arrays(data)
    labels, config, atoms, counts = _pack(state, data)
    B = np.ascontiguousarray(state.B.copy())
    theta = np.ascontiguousarray(state.theta.copy())
    Sigma = np.ascontiguousarray(state.Sigma.copy())
    tau = np.ascontiguousarray(state.tau.copy())
    R = np.ascontiguousarray(state.R.copy())
    beta0 = np.ascontiguousarray(state.beta0.copy())
    Lam = np.ascontiguousarray(state.Lambda.copy())
    Kbox = np.array([len(labels)], dtype=np.int64)
    Mbox = np.array([state.M if fix_m is None else float(fix_m)])
    logw = np.empty(data.n + 1)
    _gibbs.bsp_sweep(Y, X, lev, grp, data.k, data.m, B, theta, config, atoms,
                     counts, Kbox, Sigma, tau, R, beta0, Lam, Mbox,
                     np.ascontiguousarray(hyper.alpha0),
                     np.ascontiguousarray(hyper.tau0),
                     np.ascontiguousarray(hyper.Q0), hyper.nu0,
                     np.ascontiguousarray(hyper.L0), hyper.t0,
                     np.ascontiguousarray(hyper.R0), hyper.r0,
                     np.ascontiguousarray(hyper.Phi0), hyper.gamma0,
                     hyper.a1, hyper.a2, _R_MODES[r_update],
                     -1.0 if fix_m is None else float(fix_m), logw,
                     rng.generator)
    return _unpack(state, config, atoms, counts, int(Kbox[0]), B=B,
                   theta=theta, Sigma=Sigma, tau=tau, R=R, beta0=beta0,
                   Lambda=Lam, M=float(Mbox[0]))


def run_chain(data, hyper, settings, r_update="atoms", fix_m=None,
              initial=None, resim=False, stream=None):
    """Run the sampler and return the recorded chain.

    The chain is a pure function of (data, hyper, settings, r_update, fix_m,
    initial, stream); the default stream is RngStream(settings.seed).  With
    resim=True the responses are redrawn from the likelihood after every
    sweep and recorded under the array key "y" (joint-distribution
    validation); data is not modified.
    """
    check_compatible(data, hyper)
    if r_update not in _R_MODES:
        raise ValueError(f"r_update must be one of {sorted(_R_MODES)}")
    state = initial if initial is not None else initial_state(data, hyper)
    rng = (stream if stream is not None else RngStream(settings.seed)).generator
    n, p, q, k, m = data.n, data.p, data.q, data.k, data.m
    pk = hyper.R0.shape[0]
    Y, X, lev, grp = _data_arrays(data)
    Y = Y.copy()
    labels, config, atoms, counts = _pack(state, data)
    B = np.ascontiguousarray(state.B.copy())
    theta = np.ascontiguousarray(state.theta.copy())
    Sigma = np.ascontiguousarray(state.Sigma.copy())
    tau = np.ascontiguousarray(state.tau.copy())
    R = np.ascontiguousarray(state.R.copy())
    beta0 = np.ascontiguousarray(state.beta0.copy())
    Lam = np.ascontiguousarray(state.Lambda.copy())
    Kbox = np.array([len(labels)], dtype=np.int64)
    Mbox = np.array([state.M if fix_m is None else float(fix_m)])
    C = settings.draw_count
    out = {
        "B": np.zeros((C, p, q)), "theta": np.zeros((C, n, p)),
        "config": np.zeros((C, n), dtype=np.int64),
        "n_clusters": np.zeros(C, dtype=np.int64),
        "atoms": np.zeros((C, n, pk)),
        "counts": np.zeros((C, n), dtype=np.int64),
        "Sigma": np.zeros((C, m, p, p)), "tau": np.zeros((C, p, p)),
        "R": np.zeros((C, pk, pk)), "beta0": np.zeros((C, q, p)),
        "Lambda": np.zeros((C, p, p)), "M": np.zeros(C),
    }
    out_Y = np.zeros((C, n, p)) if resim else np.zeros((1, 1, 1))
    iter_box = np.zeros(1, dtype=np.int64)
    try:
        recorded = _gibbs.run_bsp(
            Y, X, lev, grp, k, m, B, theta, config, atoms, counts, Kbox,
            Sigma, tau, R, beta0, Lam, Mbox,
            np.ascontiguousarray(hyper.alpha0),
            np.ascontiguousarray(hyper.tau0),
            np.ascontiguousarray(hyper.Q0), hyper.nu0,
            np.ascontiguousarray(hyper.L0), hyper.t0,
            np.ascontiguousarray(hyper.R0), hyper.r0,
            np.ascontiguousarray(hyper.Phi0), hyper.gamma0,
            hyper.a1, hyper.a2, _R_MODES[r_update],
            -1.0 if fix_m is None else float(fix_m),
            settings.iterations, settings.burn_in, settings.thinning,
            1 if resim else 0,
            out["B"], out["theta"], out["config"], out["n_clusters"],
            out["atoms"], out["counts"], out["Sigma"], out["tau"], out["R"],
            out["beta0"], out["Lambda"], out["M"], out_Y, iter_box, rng)
    except np.linalg.LinAlgError as err:
        raise FactorizationError(
            f"chain aborted at iteration {int(iter_box[0])}: {err}") from err
    assert recorded == C
    if resim:
        out["y"] = out_Y
    meta = {}
    if fix_m is not None:
        meta["fix_m"] = float(fix_m)
    return PosteriorChain("bsp", settings, {"p": p, "q": q, "k": k, "m": m, "n": n},
                          out, r_update, data.group_labels, data.level_labels,
                          meta)
