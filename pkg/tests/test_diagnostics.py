"""Model-comparison scores against closed forms, rank statistics against the
pairwise definition, and the sampler-validation harnesses against both a
correct and a deliberately broken kernel."""

import csv
import math

import numpy as np
import pytest

from authmix import (Dataset, McmcSettings, PosteriorChain, RngStream,
                     cpo_lpml, dic, geweke_harness, macro_auc, roc_curve,
                     roc_curves_ovr)
from authmix.diagnostics import (DiscreteMeasure, crp_partition,
                                 enumerate_partition_posterior,
                                 partition_frequencies,
                                 stick_breaking_truncation)
from authmix.randmat import mvn_logpdf

from conftest import make_data, make_hyper


def bp_chain_for_densities(theta, sigma_values, n, p=1):
    """BP chain whose conditional density is N(y; theta, sigma) per draw."""
    C = theta.shape[0]
    arrays = {
        "B": np.zeros((C, p, 1)),
        "theta": theta,
        "alpha": np.zeros((C, p)),
        "Sigma": sigma_values,
        "tau": np.tile(np.eye(p), (C, 1, 1)),
        "R": np.tile(np.eye(p), (C, 1, 1)),
        "beta0": np.zeros((C, 1, p)),
        "Lambda": np.tile(np.eye(p), (C, 1, 1)),
    }
    settings = McmcSettings(iterations=C, burn_in=0, thinning=1)
    dims = {"p": p, "q": 1, "k": 1, "m": 1, "n": n}
    return PosteriorChain("bp", settings, dims, arrays)


def unit_dataset(y):
    y = np.atleast_2d(np.asarray(y, dtype=float).reshape(-1, 1))
    n = y.shape[0]
    return Dataset(y=y, x=np.ones((n, 1)), group=np.ones(n, dtype=int),
                   level=np.ones(n, dtype=int), k=1, m=1)


def test_cpo_harmonic_mean_hand_example():
    # densities 1 and 1/3 by construction: Sigma = 1/(2 pi) makes
    # N(0; 0, Sigma) = 1, and 9/(2 pi) makes it 1/3; harmonic mean is 1/2
    theta = np.zeros((2, 1, 1))
    sigma = np.array([1.0 / (2 * np.pi), 9.0 / (2 * np.pi)])
    sigma = sigma.reshape(2, 1, 1, 1)
    chain = bp_chain_for_densities(theta, sigma, n=1)
    data = unit_dataset([0.0])
    cpo, lpml = cpo_lpml(chain, data)
    assert cpo[0] == pytest.approx(0.5, abs=1e-12)
    assert lpml == pytest.approx(math.log(0.5), abs=1e-12)


def test_lpml_is_permutation_invariant_bitwise():
    rng = np.random.default_rng(3)
    C, n = 6, 4
    theta = rng.standard_normal((C, n, 1))
    sigma = np.tile(np.eye(1), (C, 1, 1, 1))
    data = unit_dataset(np.zeros(n))
    base = bp_chain_for_densities(theta, sigma, n=n)
    cpo0, lpml0 = cpo_lpml(base, data)
    draw_perm = rng.permutation(C)
    unit_perm = rng.permutation(n)
    shuffled = bp_chain_for_densities(theta[draw_perm][:, unit_perm],
                                      sigma, n=n)
    cpo1, lpml1 = cpo_lpml(shuffled, data)
    assert lpml1 == lpml0
    assert np.array_equal(np.sort(cpo0), np.sort(cpo1))


def test_cpo_matches_conjugate_closed_form():
    # y_i ~ N(mu, 1), mu ~ N(0, 1); the held-out predictive density is
    # available in closed form, and the posterior for mu can be sampled
    # exactly, so the harmonic-mean identity is tested without any MCMC
    y = np.array([0.3, -1.1, 0.8, 1.9, -0.4])
    n = y.size
    C = 50000
    post_var = 1.0 / (1.0 + n)
    post_mean = y.sum() * post_var
    mu = post_mean + math.sqrt(post_var) * RngStream(17).generator.standard_normal(C)
    theta = np.repeat(mu, n).reshape(C, n, 1)
    sigma = np.tile(np.eye(1), (C, 1, 1, 1))
    chain = bp_chain_for_densities(theta, sigma, n=n)
    cpo, _ = cpo_lpml(chain, unit_dataset(y))
    for i in range(n):
        loo_var = 1.0 / n
        loo_mean = (y.sum() - y[i]) * loo_var
        exact = math.exp(mvn_logpdf(y[i:i + 1], [loo_mean],
                                    [[1.0 + loo_var]]))
        assert abs(cpo[i] - exact) / exact < 0.03


def test_dic_collapses_on_a_degenerate_chain():
    theta = np.full((8, 3, 1), 0.4)
    sigma = np.tile(1.7 * np.eye(1), (8, 1, 1, 1))
    chain = bp_chain_for_densities(theta, sigma, n=3)
    data = unit_dataset([0.1, 0.5, -0.2])
    for variant in (1, 2, 3):
        out = dic(chain, data, variant)
        assert abs(out.p_d) < 1e-8, variant
        assert out.dic == pytest.approx(out.dbar, abs=1e-8)


def test_dic_effective_parameters_nonnegative_for_2_and_3():
    rng = np.random.default_rng(9)
    theta = rng.standard_normal((40, 3, 1))
    sigma = np.tile(np.eye(1), (40, 1, 1, 1)) * rng.uniform(0.5, 2.0, (40, 1, 1, 1))
    chain = bp_chain_for_densities(theta, sigma, n=3)
    data = unit_dataset([0.1, 0.5, -0.2])
    assert dic(chain, data, 2).p_d >= 0.0
    assert dic(chain, data, 3).p_d >= 0.0  # Jensen
    with pytest.raises(ValueError):
        dic(chain, data, 4)


def mann_whitney_doubled(scores, labels, positive):
    """2 * U accumulated in integers (1 per tie, 2 per strict win)."""
    pos = scores[labels == positive]
    neg = scores[labels != positive]
    u2 = 0
    for a in pos:
        for b in neg:
            if a > b:
                u2 += 2
            elif a == b:
                u2 += 1
    return u2, pos.size, neg.size


def test_auc_equals_mann_whitney_exactly_on_random_instances():
    rng = np.random.default_rng(12)
    for trial in range(100):
        n = int(rng.integers(5, 41))
        # coarse grid forces plenty of ties
        scores = rng.integers(0, 6, n).astype(float) / 3.0
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        u2, n_pos, n_neg = mann_whitney_doubled(scores, labels, 1)
        curve = roc_curve(scores, labels, 1)
        assert curve.auc == u2 / (2 * n_pos * n_neg), trial


def test_auc_exact_under_monotone_transforms():
    rng = np.random.default_rng(13)
    scores = rng.integers(0, 8, 60).astype(float)
    labels = rng.integers(0, 2, 60)
    labels[:2] = [0, 1]
    a = roc_curve(scores, labels, 1)
    b = roc_curve(np.exp(scores / 3.0) + 5.0, labels, 1)
    assert b.auc == a.auc
    assert np.array_equal(a.points, b.points)


def test_roc_endpoints_and_extremes():
    perfect = roc_curve(np.array([0.9, 0.8, 0.2, 0.1]),
                        np.array([1, 1, 0, 0]), 1)
    assert perfect.auc == 1.0
    assert np.array_equal(perfect.points[0], [0.0, 0.0])
    assert np.array_equal(perfect.points[-1], [1.0, 1.0])
    assert perfect.thresholds[0] == np.inf
    flat = roc_curve(np.ones(6), np.array([1, 0, 1, 0, 1, 0]), 1)
    assert flat.auc == 0.5
    assert np.array_equal(flat.points, [[0.0, 0.0], [1.0, 1.0]])
    reversed_ = roc_curve(np.array([0.1, 0.2, 0.8, 0.9]),
                          np.array([1, 1, 0, 0]), 1)
    assert reversed_.auc == 0.0
    monotone = roc_curve(np.linspace(0, 1, 30) ** 2,
                         (np.arange(30) % 2), 1)
    assert np.all(np.diff(monotone.points[:, 0]) >= 0)
    assert np.all(np.diff(monotone.points[:, 1]) >= 0)


def test_roc_requires_both_classes_and_matching_shapes():
    with pytest.raises(ValueError, match="both classes"):
        roc_curve(np.array([0.1, 0.2]), np.array([1, 1]), 1)
    with pytest.raises(ValueError, match="equal-length"):
        roc_curve(np.array([0.1, 0.2]), np.array([1]), 1)


def test_roc_csv(tmp_path):
    curve = roc_curve(np.array([0.9, 0.4, 0.6, 0.1]),
                      np.array([1, 0, 1, 0]), 1)
    path = tmp_path / "roc.csv"
    curve.save_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["fpr", "tpr"]
    assert len(rows) == 1 + curve.points.shape[0]
    assert float(rows[1][0]) == curve.points[0, 0]


def test_one_vs_rest_curves_and_macro_average():
    rng = np.random.default_rng(14)
    probs = rng.dirichlet(np.ones(3), 50)
    labels = rng.integers(1, 4, 50)
    for u in (1, 2, 3):
        labels[u] = u  # every class present
    curves = roc_curves_ovr(probs, labels)
    assert set(curves) == {1, 2, 3}
    assert curves[2].positive_label == 2
    assert macro_auc(curves) == pytest.approx(
        np.mean([curves[u].auc for u in (1, 2, 3)]))


class _StubStream:
    """Deterministic stand-in for RngStream in stick-breaking tests."""

    class _Gen:
        def beta(self, a, b):
            return 0.5

    def __init__(self):
        self.generator = self._Gen()


def test_stick_breaking_halves_with_stubbed_beta():
    measure = stick_breaking_truncation(
        1.0, lambda stream: np.zeros(1), 3, _StubStream())
    assert np.allclose(measure.weights, [0.5, 0.25, 0.25])
    single = stick_breaking_truncation(
        1.0, lambda stream: np.zeros(1), 1, _StubStream())
    assert np.array_equal(single.weights, [1.0])
    with pytest.raises(ValueError):
        stick_breaking_truncation(0.0, lambda s: np.zeros(1), 3, _StubStream())
    with pytest.raises(ValueError):
        stick_breaking_truncation(1.0, lambda s: np.zeros(1), 0, _StubStream())


def test_discrete_measure_validates_weights():
    with pytest.raises(ValueError, match="probability"):
        DiscreteMeasure(weights=np.array([0.6, 0.6]), atoms=np.zeros((2, 1)))
    with pytest.raises(ValueError, match="atom"):
        DiscreteMeasure(weights=np.array([1.0]), atoms=np.zeros((2, 1)))


def test_stick_breaking_agrees_with_urn_on_cluster_counts():
    # two independent routes to the same prior: atoms needed for 0.99 of the
    # stick mass vs occupied clusters in the sequential urn, both at n = 100
    M, n, reps = 1.0, 100, 200
    stick_stream = RngStream(31)
    eff = []
    for _ in range(reps):
        measure = stick_breaking_truncation(M, lambda s: np.zeros(1), 500,
                                            stick_stream)
        w = np.sort(measure.weights)[::-1]
        eff.append(int(np.searchsorted(np.cumsum(w), 0.99) + 1))
    urn_stream = RngStream(32)
    ks = [len(np.unique(crp_partition(M, n, urn_stream)))
          for _ in range(reps)]
    assert abs(np.mean(eff) - np.mean(ks)) / np.mean(ks) < 0.10


def test_crp_partition_is_canonical_and_seedable():
    a = crp_partition(2.0, 12, RngStream(5))
    b = crp_partition(2.0, 12, RngStream(5))
    assert np.array_equal(a, b)
    assert a[0] == 0
    seen = []
    for c in a:
        if c not in seen:
            seen.append(c)
    assert seen == sorted(seen)  # first-appearance labels


def test_partition_enumeration_two_unit_hand_check():
    theta = np.array([[0.4], [-0.9]])
    tau = np.array([[0.7]])
    R = np.array([[1.3]])
    M = 0.8
    post = enumerate_partition_posterior(theta, [1, 1], tau, R, M)
    together = math.log(M) + mvn_logpdf(
        theta.ravel(), np.zeros(2),
        np.full((2, 2), R[0, 0]) + tau[0, 0] * np.eye(2))
    apart = 2 * math.log(M) + sum(
        mvn_logpdf(theta[i], [0.0], R + tau) for i in range(2))
    z = math.exp(together) + math.exp(apart)
    assert post[(0, 0)] == pytest.approx(math.exp(together) / z, abs=1e-12)
    assert post[(0, 1)] == pytest.approx(math.exp(apart) / z, abs=1e-12)
    assert sum(post.values()) == pytest.approx(1.0, abs=1e-12)


def test_partition_sampler_matches_enumeration():
    theta = np.array([[0.5], [-1.4], [2.2]])
    levels = [1, 1, 1]
    tau = np.array([[1.0]])
    R = np.array([[1.0]])
    M = 1.0
    exact = enumerate_partition_posterior(theta, levels, tau, R, M)
    freq = partition_frequencies(theta, levels, tau, R, M, 20000,
                                 RngStream(7))
    tv = 0.5 * sum(abs(exact[part] - freq.get(part, 0.0)) for part in exact)
    assert tv < 0.05
    assert set(freq) <= set(exact)


def test_enumeration_refuses_large_instances():
    with pytest.raises(ValueError, match="n <= 8"):
        enumerate_partition_posterior(np.zeros((9, 1)), [1] * 9,
                                      np.eye(1), np.eye(1), 1.0)


@pytest.fixture(scope="module")
def geweke_setup():
    template = make_data(n=6, p=2, k=2, m=1, seed=0)
    hyper = make_hyper(2, 2, nu0=8.0, t0=8.0, gamma0=8.0, r0=10.0,
                       a1=2.0, a2=2.0)
    return template, hyper


def test_geweke_accepts_correct_kernels(geweke_setup):
    template, hyper = geweke_setup
    for model in ("bsp", "bp"):
        result = geweke_harness(model, template, hyper, draws=1500, seed=1)
        assert len(result.names) >= 20
        assert result.max_abs_z() < 6.0, (model, result.max_abs_z())
        assert result.passed(limit=6.0)


def test_geweke_flags_a_mismatched_kernel(geweke_setup):
    template, hyper = geweke_setup
    broken = make_hyper(2, 2, nu0=8.0, t0=8.0, gamma0=8.0, r0=10.0,
                        a1=2.0, a2=2.0, Phi0=25.0)
    result = geweke_harness("bp", template, hyper, draws=4000, seed=2,
                            chain_hyper=broken)
    assert result.max_abs_z() > 5.0


def test_geweke_with_no_functionals_is_empty(geweke_setup):
    template, hyper = geweke_setup
    result = geweke_harness("bp", template, hyper, draws=50, seed=3,
                            functionals={})
    assert result.z.size == 0
    assert result.max_abs_z() == 0.0
    assert result.passed()
    with pytest.raises(ValueError, match="model"):
        geweke_harness("qda", template, hyper, draws=10)
