"""Seeded random streams and matrix-variate sampling kernels.

Streams are counter-based: ``RngStream(seed, stream_id)`` wraps a
``numpy.random.Generator`` driven by the Philox4x64 bit generator keyed by
``(seed, stream_id)``.  Distinct stream ids give statistically independent
sequences for the same seed, which is what lets cross-validation folds run
in parallel while staying reproducible.  ``split`` derives child ids through
a splitmix64 mix of the parent id and the child index, so a (seed, path of
split indices) pair always names the same stream.

Conventions used throughout the package:

* inverse-Wishart(df, scale) has mean scale / (df - dim - 1); sampling goes
  through a Bartlett-factor Wishart draw of the inverted scale,
* gamma(shape, rate) uses the rate convention, mean shape / rate,
* covariance inputs are symmetrized as (A + A.T) / 2 before factorization,
  and a Cholesky pivot below 1e-12 times the largest diagonal entry is
  treated as a failure.
"""

import numpy as np

from . import _kernels

GENERATOR = "Philox4x64 keyed by (seed, stream_id)"

_MIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _splitmix64(x):
    x = (x + _MIX_GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class RngStream:
    """One independently seeded random stream.

    The generator is created lazily and is stateful once drawn from; build a
    fresh RngStream (same seed and stream_id) to replay a sequence.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._gen = None

    @property
    def generator(self):
        if self._gen is None:
            key = np.array([self.seed & _MASK64, self.stream_id & _MASK64],
                           dtype=np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def split(self, index):
        """Child stream number `index`; deterministic in (seed, path)."""
        if index < 0:
            raise ValueError("split index must be nonnegative")
        child = _splitmix64((self.stream_id * _MIX_GAMMA + index + 1) & _MASK64)
        return RngStream(self.seed, child)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


class FactorizationError(np.linalg.LinAlgError):
    """Raised when a matrix that must be SPD fails its Cholesky test."""


def symmetrize(a):
    a = np.asarray(a, dtype=np.float64)
    return 0.5 * (a + a.T)


def spd_cholesky(a, name="matrix"):
    """Lower Cholesky factor of a symmetrized SPD matrix.

    Raises FactorizationError naming the offending matrix when the input is
    not positive definite, or when any pivot falls below 1e-12 times the
    largest diagonal entry.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise FactorizationError(f"{name} is not square: shape {a.shape}")
    a = symmetrize(a)
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as err:
        raise FactorizationError(f"{name} is not positive definite: {err}") from err
    piv = np.diag(L) ** 2
    if piv.min() < 1e-12 * max(a.diagonal().max(), 0.0):
        raise FactorizationError(
            f"{name} is numerically singular (pivot {piv.min():.3e})")
    return L


def check_spd(a, name="matrix"):
    """Validate and return the symmetrized SPD matrix."""
    a = symmetrize(a)
    spd_cholesky(a, name=name)
    return a


def mvn_logpdf(y, mean, cov, name="cov"):
    """Multivariate normal log density; Cholesky based, no explicit inverse."""
    y = np.asarray(y, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    L = spd_cholesky(cov, name=name)
    return float(_kernels.mvn_logpdf_chol(np.ascontiguousarray(y),
                                          np.ascontiguousarray(mean), L))


def mvn_sample(mean, cov, rng, name="cov"):
    """Draw from N(mean, cov)."""
    mean = np.ascontiguousarray(mean, dtype=np.float64)
    L = spd_cholesky(cov, name=name)
    return _kernels.mvn_sample_chol(mean, L, rng.generator)


def wishart_sample(df, scale, rng, name="scale"):
    """Wishart(df, scale) draw via the Bartlett decomposition; E = df * scale."""
    dim = np.asarray(scale).shape[0]
    if df < dim:
        raise ValueError(f"wishart df {df} below dimension {dim}")
    L = spd_cholesky(scale, name=name)
    return _kernels.wishart_sample_chol(float(df), L, rng.generator)


def inverse_wishart_sample(df, scale, rng, name="scale"):
    """Inverse-Wishart(df, scale) draw; E = scale / (df - dim - 1)."""
    dim = np.asarray(scale).shape[0]
    if df <= dim - 1:
        raise ValueError(f"inverse-wishart df {df} must exceed dim - 1 = {dim - 1}")
    L = spd_cholesky(scale, name=name)
    return _kernels.inverse_wishart_chol(float(df), L, rng.generator)


def gamma_sample(shape, rate, rng):
    """Gamma(shape, rate) draw, mean shape / rate."""
    if shape <= 0 or rate <= 0:
        raise ValueError("gamma shape and rate must be positive")
    return float(rng.generator.gamma(shape, 1.0 / rate))


def beta_sample(a, b, rng):
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters must be positive")
    return float(rng.generator.beta(a, b))
