"""Compiled Gibbs sweeps for the mixture and single-atom mixed models.

Packed representation used by every kernel here (all arrays float64 and
C-contiguous unless noted):

* Y (n, p), X (n, q): responses and fixed covariates,
* lev, grp (n,) int64: 0-based level and group codes,
* config (n,) int64: 0-based compact cluster labels in [0, K),
* atoms (n, pk): row c is the stacked atom of cluster c (rows >= K unused),
* counts (n,) int64: cluster sizes, counts[c] > 0 exactly for c < K,
* Kbox, Mbox: one-element arrays carrying the cluster count and the
  concentration across calls.

When a reassignment empties a cluster, the last cluster is moved into the
freed slot so labels stay compact; labels carry no meaning beyond identity.

One sweep runs, in order: reassignment of every unit, atom refresh, random
effects, fixed effects, fixed-effect prior means, their covariance, the
group residual covariances, the innovation covariance, the atom covariance,
and the concentration update.  All draws come from the single Generator
passed in, so a chain is a pure function of (data, start state, stream).
"""

import numpy as np
from numba import njit

from ._kernels import (LOG_2PI, chol_inverse, chol_logdet, chol_solve,
                       categorical_from_log, logsumexp_1d, mvn_logpdf_chol,
                       mvn_sample_chol, mvn_sample_prec_chol,
                       inverse_wishart_chol)


@njit(cache=True)
def level_caches(tau, R, k):
    """Per-sweep factorizations shared by reassignment and atom draws.

    For each level l, A_l = R^{-1} + (block l of tau^{-1}); D_l = A_l^{-1}
    is both the posterior covariance of a fresh atom for a unit at level l
    and the matrix in the integrated new-cluster weight.
    """
    p = tau.shape[0]
    pk = R.shape[0]
    Ltau = np.linalg.cholesky(tau)
    tau_inv = chol_inverse(Ltau)
    logdet_tau = chol_logdet(Ltau)
    LR = np.linalg.cholesky(R)
    R_inv = chol_inverse(LR)
    logdet_R = chol_logdet(LR)
    LA = np.empty((k, pk, pk))
    D = np.empty((k, pk, pk))
    ldD = np.empty(k)
    for l in range(k):
        A = R_inv.copy()
        off = l * p
        for a in range(p):
            for b in range(p):
                A[off + a, off + b] += tau_inv[a, b]
        LAl = np.linalg.cholesky(A)
        LA[l] = LAl
        D[l] = chol_inverse(LAl)
        ldD[l] = -chol_logdet(LAl)
    return tau_inv, logdet_tau, R_inv, logdet_R, LA, D, ldD


@njit(cache=True)
def remove_unit(i, config, atoms, counts, K):
    """Take unit i out of its cluster; compacts labels if it was a singleton."""
    n = config.shape[0]
    c_old = config[i]
    counts[c_old] -= 1
    if counts[c_old] == 0:
        K -= 1
        if c_old != K:
            atoms[c_old] = atoms[K]
            counts[c_old] = counts[K]
            for j in range(n):
                if config[j] == K:
                    config[j] = c_old
        counts[K] = 0
    return K


@njit(cache=True)
def reassign_logweights(i, theta, lev, atoms, counts, K, M,
                        tau_inv, logdet_tau, logdet_R, D, ldD, logw):
    """Unnormalized log reassignment weights for unit i (already removed).

    Slot c < K: n_c * N(theta_i; atom block, tau).  Slot K: M times the
    marginal of theta_i with a fresh atom integrated out, which the matrix
    identities reduce to the quadratic form through D at unit i's level.
    Returns v = tau_inv theta_i for reuse by the fresh-atom draw.
    """
    p = theta.shape[1]
    l = lev[i]
    off = l * p
    v = np.empty(p)
    qf = 0.0
    for a in range(p):
        s = 0.0
        for b in range(p):
            s += tau_inv[a, b] * theta[i, b]
        v[a] = s
        qf += s * theta[i, a]
    for c in range(K):
        qc = 0.0
        for a in range(p):
            s = 0.0
            for b in range(p):
                s += tau_inv[a, b] * (theta[i, b] - atoms[c, off + b])
            qc += (theta[i, a] - atoms[c, off + a]) * s
        logw[c] = np.log(counts[c] * 1.0) - 0.5 * (p * LOG_2PI + logdet_tau + qc)
    qn = qf
    for a in range(p):
        s = 0.0
        for b in range(p):
            s += D[l, off + a, off + b] * v[b]
        qn -= v[a] * s
    logw[K] = np.log(M) - 0.5 * (p * LOG_2PI + logdet_tau + logdet_R - ldD[l] + qn)
    return v


@njit(cache=True)
def fresh_atom_mean(v, D, l, p):
    """Posterior mean of a fresh atom for a unit at level l, D_l z' tau^{-1} theta."""
    pk = D.shape[1]
    off = l * p
    mean = np.empty(pk)
    for r in range(pk):
        s = 0.0
        for a in range(p):
            s += D[l, r, off + a] * v[a]
        mean[r] = s
    return mean


@njit(cache=True)
def step1_reassign_unit(i, theta, lev, config, atoms, counts, K, M,
                        tau_inv, logdet_tau, logdet_R, LA, D, ldD, logw, rng):
    """Reassign unit i to an existing or fresh cluster; returns the new K."""
    p = theta.shape[1]
    K = remove_unit(i, config, atoms, counts, K)
    v = reassign_logweights(i, theta, lev, atoms, counts, K, M, tau_inv,
                            logdet_tau, logdet_R, D, ldD, logw)
    choice = categorical_from_log(logw, K + 1, rng.random())
    if choice == K:
        l = lev[i]
        mean = fresh_atom_mean(v, D, l, p)
        atoms[K] = mvn_sample_prec_chol(mean, LA[l], rng)
        counts[K] = 1
        config[i] = K
        return K + 1
    config[i] = choice
    counts[choice] += 1
    return K


@njit(cache=True)
def atom_suffstats(theta, lev, config, c, tau_inv, R_inv):
    """Precision A and linear term b of the atom conditional for cluster c:
    atom | rest ~ N(A^{-1} b, A^{-1})."""
    n, p = theta.shape
    pk = R_inv.shape[0]
    A = R_inv.copy()
    b = np.zeros(pk)
    for i in range(n):
        if config[i] == c:
            off = lev[i] * p
            for a in range(p):
                s = 0.0
                for d in range(p):
                    s += tau_inv[a, d] * theta[i, d]
                b[off + a] += s
            for a in range(p):
                for d in range(p):
                    A[off + a, off + d] += tau_inv[a, d]
    return A, b


@njit(cache=True)
def step2_update_atoms(theta, lev, config, atoms, K, tau_inv, R_inv, rng):
    for c in range(K):
        A, b = atom_suffstats(theta, lev, config, c, tau_inv, R_inv)
        LAc = np.linalg.cholesky(A)
        mean = chol_solve(LAc, b)
        atoms[c] = mvn_sample_prec_chol(mean, LAc, rng)


@njit(cache=True)
def update_random_effects(Y, X, lev, grp, B, theta, config, atoms, Sigma,
                          tau_inv, m, rng):
    n, p = Y.shape
    LQ = np.empty((m, p, p))
    Sinv = np.empty((m, p, p))
    for u in range(m):
        Sinv[u] = chol_inverse(np.linalg.cholesky(Sigma[u]))
        LQ[u] = np.linalg.cholesky(tau_inv + Sinv[u])
    bvec = np.empty(p)
    for i in range(n):
        u = grp[i]
        off = lev[i] * p
        resid = Y[i] - B @ X[i]
        c = config[i]
        for a in range(p):
            s = 0.0
            for d in range(p):
                s += tau_inv[a, d] * atoms[c, off + d] + Sinv[u, a, d] * resid[d]
            bvec[a] = s
        mean = chol_solve(LQ[u], bvec)
        theta[i] = mvn_sample_prec_chol(mean, LQ[u], rng)


@njit(cache=True)
def update_fixed_effects(Y, X, grp, theta, B, Sigma, Lam, beta0, m, rng):
    """Column-wise draw of B, each column conditional on the freshest others."""
    n, p = Y.shape
    q = X.shape[1]
    Lam_inv = chol_inverse(np.linalg.cholesky(Lam))
    Sinv = np.empty((m, p, p))
    for u in range(m):
        Sinv[u] = chol_inverse(np.linalg.cholesky(Sigma[u]))
    Bx = np.empty((n, p))
    for i in range(n):
        Bx[i] = B @ X[i]
    su = np.empty((m, p))
    sxx = np.empty(m)
    oldcol = np.empty(p)
    bvec = np.empty(p)
    for j in range(q):
        for u in range(m):
            sxx[u] = 0.0
            for a in range(p):
                su[u, a] = 0.0
        for i in range(n):
            xij = X[i, j]
            if xij != 0.0:
                u = grp[i]
                sxx[u] += xij * xij
                for a in range(p):
                    su[u, a] += xij * (Y[i, a] - theta[i, a] - Bx[i, a] + xij * B[a, j])
        A = Lam_inv.copy()
        for a in range(p):
            s = 0.0
            for d in range(p):
                s += Lam_inv[a, d] * beta0[j, d]
            bvec[a] = s
        for u in range(m):
            for a in range(p):
                for d in range(p):
                    A[a, d] += sxx[u] * Sinv[u, a, d]
            for a in range(p):
                s = 0.0
                for d in range(p):
                    s += Sinv[u, a, d] * su[u, d]
                bvec[a] += s
        LAj = np.linalg.cholesky(A)
        mean = chol_solve(LAj, bvec)
        for a in range(p):
            oldcol[a] = B[a, j]
        newcol = mvn_sample_prec_chol(mean, LAj, rng)
        for a in range(p):
            B[a, j] = newcol[a]
        for i in range(n):
            xij = X[i, j]
            if xij != 0.0:
                for a in range(p):
                    Bx[i, a] += xij * (newcol[a] - oldcol[a])


@njit(cache=True)
def update_hyper_means(B, beta0, Lam, tau0, alpha0, rng):
    p, q = B.shape
    Lam_inv = chol_inverse(np.linalg.cholesky(Lam))
    tau0_inv = chol_inverse(np.linalg.cholesky(tau0))
    LD = np.linalg.cholesky(Lam_inv + tau0_inv)
    bvec = np.empty(p)
    for j in range(q):
        for a in range(p):
            s = 0.0
            for d in range(p):
                s += Lam_inv[a, d] * B[d, j] + tau0_inv[a, d] * alpha0[d]
            bvec[a] = s
        mean = chol_solve(LD, bvec)
        beta0[j] = mvn_sample_prec_chol(mean, LD, rng)


@njit(cache=True)
def lambda_conditional(B, beta0, L0, t0):
    p, q = B.shape
    scale = L0.copy()
    for j in range(q):
        for a in range(p):
            for d in range(p):
                scale[a, d] += (B[a, j] - beta0[j, a]) * (B[d, j] - beta0[j, d])
    return q + t0, scale


@njit(cache=True)
def update_lambda(B, beta0, Lam, L0, t0, rng):
    df, scale = lambda_conditional(B, beta0, L0, t0)
    Lam[:, :] = inverse_wishart_chol(df, np.linalg.cholesky(scale), rng)


@njit(cache=True)
def residual_cov_conditional(Y, X, grp, B, theta, Q0, nu0, u):
    n, p = Y.shape
    scale = Q0.copy()
    cnt = 0
    for i in range(n):
        if grp[i] == u:
            cnt += 1
            r = Y[i] - B @ X[i] - theta[i]
            for a in range(p):
                for d in range(p):
                    scale[a, d] += r[a] * r[d]
    return cnt + nu0, scale


@njit(cache=True)
def update_residual_covs(Y, X, grp, B, theta, Sigma, Q0, nu0, m, rng):
    for u in range(m):
        df, scale = residual_cov_conditional(Y, X, grp, B, theta, Q0, nu0, u)
        Sigma[u] = inverse_wishart_chol(df, np.linalg.cholesky(scale), rng)


@njit(cache=True)
def tau_conditional(theta, lev, config, atoms, Phi0, gamma0):
    n, p = theta.shape
    scale = Phi0.copy()
    for i in range(n):
        off = lev[i] * p
        c = config[i]
        for a in range(p):
            ra = theta[i, a] - atoms[c, off + a]
            for d in range(p):
                scale[a, d] += ra * (theta[i, d] - atoms[c, off + d])
    return n + gamma0, scale


@njit(cache=True)
def r_conditional(atoms, config, K, n, R0, r0, units_mode):
    """Atom covariance conditional.  Mode 0 sums one outer product per
    distinct atom (df K + r0); mode 1 sums one per unit (df n + r0)."""
    pk = R0.shape[0]
    scale = R0.copy()
    if units_mode == 1:
        for i in range(n):
            c = config[i]
            for a in range(pk):
                for d in range(pk):
                    scale[a, d] += atoms[c, a] * atoms[c, d]
        return n + r0, scale
    for c in range(K):
        for a in range(pk):
            for d in range(pk):
                scale[a, d] += atoms[c, a] * atoms[c, d]
    return K + r0, scale


@njit(cache=True)
def update_concentration(M, K, n, a1, a2, rng):
    """Mixture-of-gammas refresh of the concentration via one auxiliary beta."""
    eta = rng.beta(M + 1.0, n * 1.0)
    rate = a2 - np.log(eta)
    odds = (a1 + K - 1.0) / (n * rate)
    if rng.random() * (1.0 + odds) < odds:
        shape = a1 + K
    else:
        shape = a1 + K - 1.0
    return rng.gamma(shape, 1.0 / rate)


@njit(cache=True)
def resim_data(Y, X, grp, B, theta, Sigma, m, rng):
    """Redraw responses from the likelihood at the current parameters."""
    n, p = Y.shape
    Ls = np.empty((m, p, p))
    for u in range(m):
        Ls[u] = np.linalg.cholesky(Sigma[u])
    for i in range(n):
        mean = B @ X[i] + theta[i]
        Y[i] = mvn_sample_chol(mean, Ls[grp[i]], rng)


@njit(cache=True)
def bsp_sweep(Y, X, lev, grp, k, m,
              B, theta, config, atoms, counts, Kbox, Sigma, tau, R, beta0,
              Lam, Mbox, alpha0, tau0, Q0, nu0, L0, t0, R0, r0, Phi0, gamma0,
              a1, a2, r_units, fix_m, logw, rng):
    n, p = Y.shape
    tau_inv, ldt, R_inv, ldR, LA, D, ldD = level_caches(tau, R, k)
    K = Kbox[0]
    M = Mbox[0]
    for i in range(n):
        K = step1_reassign_unit(i, theta, lev, config, atoms, counts, K, M,
                                tau_inv, ldt, ldR, LA, D, ldD, logw, rng)
    step2_update_atoms(theta, lev, config, atoms, K, tau_inv, R_inv, rng)
    update_random_effects(Y, X, lev, grp, B, theta, config, atoms, Sigma,
                          tau_inv, m, rng)
    update_fixed_effects(Y, X, grp, theta, B, Sigma, Lam, beta0, m, rng)
    update_hyper_means(B, beta0, Lam, tau0, alpha0, rng)
    update_lambda(B, beta0, Lam, L0, t0, rng)
    update_residual_covs(Y, X, grp, B, theta, Sigma, Q0, nu0, m, rng)
    df_t, scale_t = tau_conditional(theta, lev, config, atoms, Phi0, gamma0)
    tau[:, :] = inverse_wishart_chol(df_t, np.linalg.cholesky(scale_t), rng)
    df_r, scale_r = r_conditional(atoms, config, K, n, R0, r0, r_units)
    R[:, :] = inverse_wishart_chol(df_r, np.linalg.cholesky(scale_r), rng)
    if fix_m < 0.0:
        M = update_concentration(M, K, n, a1, a2, rng)
    Kbox[0] = K
    Mbox[0] = M


@njit(cache=True)
def run_bsp(Y, X, lev, grp, k, m,
            B, theta, config, atoms, counts, Kbox, Sigma, tau, R, beta0, Lam,
            Mbox, alpha0, tau0, Q0, nu0, L0, t0, R0, r0, Phi0, gamma0, a1, a2,
            r_units, fix_m, iterations, burn_in, thinning, resim,
            out_B, out_theta, out_config, out_natoms, out_atoms, out_counts,
            out_Sigma, out_tau, out_R, out_beta0, out_Lam, out_M, out_Y,
            iter_box, rng):
    n = Y.shape[0]
    logw = np.empty(n + 1)
    idx = 0
    for t in range(1, iterations + 1):
        iter_box[0] = t
        bsp_sweep(Y, X, lev, grp, k, m, B, theta, config, atoms, counts, Kbox,
                  Sigma, tau, R, beta0, Lam, Mbox, alpha0, tau0, Q0, nu0, L0,
                  t0, R0, r0, Phi0, gamma0, a1, a2, r_units, fix_m, logw, rng)
        if resim == 1:
            resim_data(Y, X, grp, B, theta, Sigma, m, rng)
        if t > burn_in and (t - burn_in) % thinning == 0:
            K = Kbox[0]
            out_B[idx] = B
            out_theta[idx] = theta
            out_config[idx] = config
            out_natoms[idx] = K
            for c in range(K):
                out_atoms[idx, c] = atoms[c]
                out_counts[idx, c] = counts[c]
            out_Sigma[idx] = Sigma
            out_tau[idx] = tau
            out_R[idx] = R
            out_beta0[idx] = beta0
            out_Lam[idx] = Lam
            out_M[idx] = Mbox[0]
            if resim == 1:
                out_Y[idx] = Y
            idx += 1
    return idx


@njit(cache=True)
def bp_sweep(Y, X, lev, grp, k, m,
             B, theta, alpha, Sigma, tau, R, beta0, Lam,
             alpha0, tau0, Q0, nu0, L0, t0, R0, r0, Phi0, gamma0,
             r_units, config0, atoms1, rng):
    """One sweep of the single-atom model: the atom draw replaces the
    reassignment and atom-refresh steps, everything else is shared."""
    n, p = Y.shape
    tau_inv, ldt, R_inv, ldR, LA, D, ldD = level_caches(tau, R, k)
    A, b = atom_suffstats(theta, lev, config0, 0, tau_inv, R_inv)
    LAc = np.linalg.cholesky(A)
    mean = chol_solve(LAc, b)
    alpha[:] = mvn_sample_prec_chol(mean, LAc, rng)
    atoms1[0] = alpha
    update_random_effects(Y, X, lev, grp, B, theta, config0, atoms1, Sigma,
                          tau_inv, m, rng)
    update_fixed_effects(Y, X, grp, theta, B, Sigma, Lam, beta0, m, rng)
    update_hyper_means(B, beta0, Lam, tau0, alpha0, rng)
    update_lambda(B, beta0, Lam, L0, t0, rng)
    update_residual_covs(Y, X, grp, B, theta, Sigma, Q0, nu0, m, rng)
    df_t, scale_t = tau_conditional(theta, lev, config0, atoms1, Phi0, gamma0)
    tau[:, :] = inverse_wishart_chol(df_t, np.linalg.cholesky(scale_t), rng)
    df_r, scale_r = r_conditional(atoms1, config0, 1, n, R0, r0, r_units)
    R[:, :] = inverse_wishart_chol(df_r, np.linalg.cholesky(scale_r), rng)


@njit(cache=True)
def run_bp(Y, X, lev, grp, k, m,
           B, theta, alpha, Sigma, tau, R, beta0, Lam,
           alpha0, tau0, Q0, nu0, L0, t0, R0, r0, Phi0, gamma0,
           r_units, iterations, burn_in, thinning, resim,
           out_B, out_theta, out_alpha, out_Sigma, out_tau, out_R, out_beta0,
           out_Lam, out_Y, iter_box, rng):
    n = Y.shape[0]
    pk = alpha.shape[0]
    config0 = np.zeros(n, dtype=np.int64)
    atoms1 = np.empty((1, pk))
    idx = 0
    for t in range(1, iterations + 1):
        iter_box[0] = t
        bp_sweep(Y, X, lev, grp, k, m, B, theta, alpha, Sigma, tau, R, beta0,
                 Lam, alpha0, tau0, Q0, nu0, L0, t0, R0, r0, Phi0, gamma0,
                 r_units, config0, atoms1, rng)
        if resim == 1:
            resim_data(Y, X, grp, B, theta, Sigma, m, rng)
        if t > burn_in and (t - burn_in) % thinning == 0:
            out_B[idx] = B
            out_theta[idx] = theta
            out_alpha[idx] = alpha
            out_Sigma[idx] = Sigma
            out_tau[idx] = tau
            out_R[idx] = R
            out_beta0[idx] = beta0
            out_Lam[idx] = Lam
            if resim == 1:
                out_Y[idx] = Y
            idx += 1
    return idx


@njit(cache=True)
def run_cluster_partition_counts(theta, lev, k, tau, R, M, nsweeps,
                                 config, atoms, counts, Kbox, rng):
    """Reassignment and atom sweeps only, with tau, R, M held fixed.

    After every sweep the partition is canonicalized by first appearance
    and counted as a base-n code; used against the exhaustive enumeration.
    """
    n, p = theta.shape
    logw = np.empty(n + 1)
    ncodes = 1
    for _ in range(n):
        ncodes *= n
    out = np.zeros(ncodes, dtype=np.int64)
    relab = np.empty(n, dtype=np.int64)
    for s in range(nsweeps):
        tau_inv, ldt, R_inv, ldR, LA, D, ldD = level_caches(tau, R, k)
        K = Kbox[0]
        for i in range(n):
            K = step1_reassign_unit(i, theta, lev, config, atoms, counts, K,
                                    M, tau_inv, ldt, ldR, LA, D, ldD, logw, rng)
        Kbox[0] = K
        step2_update_atoms(theta, lev, config, atoms, K, tau_inv, R_inv, rng)
        for c in range(n):
            relab[c] = -1
        nxt = 0
        code = 0
        powr = 1
        for i in range(n):
            c = config[i]
            if relab[c] < 0:
                relab[c] = nxt
                nxt += 1
            code += relab[c] * powr
            powr *= n
        out[code] += 1
    return out


@njit(cache=True)
def bsp_group_logdens(yy, lvl, Xg, Bd, natd, atd, ctd, Sigd, taud, Rd, Md,
                      n_train):
    """Log predictive density of one observation for every (draw, group).

    Mixes the occupied clusters (weights n_c) with one integrated fresh
    cluster (weight M, covariance inflated by the level block of R), all
    normalized by n + M.
    """
    C = Bd.shape[0]
    mm = Xg.shape[0]
    p = yy.shape[0]
    out = np.empty((C, mm))
    nmax = atd.shape[1]
    lw = np.empty(nmax + 1)
    meanu = np.empty(p)
    off = lvl * p
    Rll = np.empty((p, p))
    for c in range(C):
        for a in range(p):
            for d in range(p):
                Rll[a, d] = Rd[c, off + a, off + d]
        K = natd[c]
        for u in range(mm):
            cov1 = Sigd[c, u] + taud[c]
            L1 = np.linalg.cholesky(cov1)
            L2 = np.linalg.cholesky(cov1 + Rll)
            meanb = Bd[c] @ Xg[u]
            for j in range(K):
                for a in range(p):
                    meanu[a] = meanb[a] + atd[c, j, off + a]
                lw[j] = np.log(ctd[c, j] * 1.0) + mvn_logpdf_chol(yy, meanu, L1)
            lw[K] = np.log(Md[c]) + mvn_logpdf_chol(yy, meanb, L2)
            out[c, u] = logsumexp_1d(lw, K + 1) - np.log(n_train + Md[c])
    return out


@njit(cache=True)
def bp_group_logdens(yy, lvl, Xg, Bd, alphad, Sigd, taud):
    """Single-atom counterpart: one Gaussian per (draw, group), no mixing."""
    C = Bd.shape[0]
    mm = Xg.shape[0]
    p = yy.shape[0]
    out = np.empty((C, mm))
    meanu = np.empty(p)
    off = lvl * p
    for c in range(C):
        for u in range(mm):
            L = np.linalg.cholesky(Sigd[c, u] + taud[c])
            meanb = Bd[c] @ Xg[u]
            for a in range(p):
                meanu[a] = meanb[a] + alphad[c, off + a]
            out[c, u] = mvn_logpdf_chol(yy, meanu, L)
    return out


@njit(cache=True)
def conditional_loglik(Y, X, grp, Bd, thetad, Sigd):
    """Matrix of log f(y_i | draw c) = N(y_i; B x_i + theta_i, Sigma_g)."""
    C = Bd.shape[0]
    n, p = Y.shape
    m = Sigd.shape[1]
    out = np.empty((C, n))
    for c in range(C):
        Ls = np.empty((m, p, p))
        for u in range(m):
            Ls[u] = np.linalg.cholesky(Sigd[c, u])
        for i in range(n):
            mean = Bd[c] @ X[i] + thetad[c, i]
            out[c, i] = mvn_logpdf_chol(Y[i], mean, Ls[grp[i]])
    return out
