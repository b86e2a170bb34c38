"""Compiled linear-algebra and sampling primitives.

Everything in this module is nopython-compiled and works on plain float64
arrays.  The public wrappers in `randmat` and the Gibbs sweeps in `_gibbs`
both call into these functions, so each mathematical kernel has exactly one
implementation.

Random draws take a `numpy.random.Generator` argument; numba compiles the
Generator methods directly, and the draw order inside each function is fixed,
so a given (seed, stream) pair always yields the same output.
"""

import numpy as np
from numba import njit

LOG_2PI = float(np.log(2.0 * np.pi))


@njit(cache=True)
def solve_lower(L, b):
    """Forward substitution for lower-triangular L."""
    n = L.shape[0]
    x = np.empty(n)
    for i in range(n):
        s = b[i]
        for j in range(i):
            s -= L[i, j] * x[j]
        x[i] = s / L[i, i]
    return x


@njit(cache=True)
def solve_lower_t(L, b):
    """Back substitution solving L.T x = b for lower-triangular L."""
    n = L.shape[0]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, n):
            s -= L[j, i] * x[j]
        x[i] = s / L[i, i]
    return x


@njit(cache=True)
def chol_solve(L, b):
    """Solve (L L.T) x = b."""
    return solve_lower_t(L, solve_lower(L, b))


@njit(cache=True)
def tri_inv_lower(L):
    """Inverse of a lower-triangular matrix."""
    n = L.shape[0]
    inv = np.zeros((n, n))
    for j in range(n):
        inv[j, j] = 1.0 / L[j, j]
        for i in range(j + 1, n):
            s = 0.0
            for k in range(j, i):
                s -= L[i, k] * inv[k, j]
            inv[i, j] = s / L[i, i]
    return inv


@njit(cache=True)
def chol_inverse(L):
    """(L L.T)^{-1} from the lower Cholesky factor; exactly symmetric."""
    Linv = tri_inv_lower(L)
    return Linv.T @ Linv


@njit(cache=True)
def chol_logdet(L):
    s = 0.0
    for i in range(L.shape[0]):
        s += np.log(L[i, i])
    return 2.0 * s


@njit(cache=True)
def quad_form(a, v):
    """v.T a v for square a."""
    n = v.shape[0]
    s = 0.0
    for i in range(n):
        r = 0.0
        for j in range(n):
            r += a[i, j] * v[j]
        s += v[i] * r
    return s


@njit(cache=True)
def mvn_logpdf_chol(y, mean, L):
    """Gaussian log density with covariance given by its lower factor L."""
    p = y.shape[0]
    e = solve_lower(L, y - mean)
    q = 0.0
    for i in range(p):
        q += e[i] * e[i]
    return -0.5 * (p * LOG_2PI + chol_logdet(L) + q)


@njit(cache=True)
def mvn_sample_chol(mean, L, rng):
    """Draw N(mean, L L.T)."""
    p = mean.shape[0]
    z = np.empty(p)
    for i in range(p):
        z[i] = rng.standard_normal()
    return mean + L @ z


@njit(cache=True)
def mvn_sample_prec_chol(mean, L, rng):
    """Draw N(mean, A^{-1}) where L = chol(A); avoids forming A^{-1}."""
    p = mean.shape[0]
    z = np.empty(p)
    for i in range(p):
        z[i] = rng.standard_normal()
    return mean + solve_lower_t(L, z)


@njit(cache=True)
def bartlett_lower(df, dim, rng):
    """Lower-triangular Bartlett factor: A A.T ~ Wishart(df, I).

    Fixed draw order (diagonal chi-square, then the sub-diagonal normals,
    row by row) keeps the output a deterministic function of the stream.
    """
    A = np.zeros((dim, dim))
    for i in range(dim):
        A[i, i] = np.sqrt(rng.chisquare(df - i))
        for j in range(i):
            A[i, j] = rng.standard_normal()
    return A


@njit(cache=True)
def wishart_sample_chol(df, L_scale, rng):
    """Wishart(df, scale) draw given L_scale = chol(scale)."""
    A = bartlett_lower(df, L_scale.shape[0], rng)
    F = L_scale @ A
    return F @ F.T


@njit(cache=True)
def inverse_wishart_chol(df, L_scale, rng):
    """Inverse-Wishart(df, scale) draw given L_scale = chol(scale).

    Parameterized so the mean is scale / (df - dim - 1) for df > dim + 1.
    Inverts a Wishart(df, scale^{-1}) draw built from T A with T = L^{-T},
    which satisfies T T.T = scale^{-1}.
    """
    dim = L_scale.shape[0]
    T = tri_inv_lower(L_scale).T
    A = bartlett_lower(df, dim, rng)
    F = T @ A
    W = F @ F.T
    X = chol_inverse(np.linalg.cholesky(W))
    return X


@njit(cache=True)
def categorical_from_log(logw, nw, u):
    """Index draw from unnormalized log-weights logw[:nw] using one uniform u.

    Max-shifted before exponentiation, so arbitrarily small weights never
    underflow the draw and rescaling every weight by a common factor leaves
    the sampled distribution unchanged.
    """
    mx = logw[0]
    for i in range(1, nw):
        if logw[i] > mx:
            mx = logw[i]
    tot = 0.0
    for i in range(nw):
        tot += np.exp(logw[i] - mx)
    target = u * tot
    acc = 0.0
    for i in range(nw):
        acc += np.exp(logw[i] - mx)
        if target <= acc:
            return i
    return nw - 1


@njit(cache=True)
def logsumexp_1d(v, nv):
    mx = v[0]
    for i in range(1, nv):
        if v[i] > mx:
            mx = v[i]
    s = 0.0
    for i in range(nv):
        s += np.exp(v[i] - mx)
    return mx + np.log(s)
