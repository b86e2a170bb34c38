import numpy as np
import pytest

from authmix import Dataset, Hyperparameters, McmcSettings, RngStream

VERDICT_LINES = []


@pytest.fixture(scope="session")
def verdict_log():
    """Shared sink for the long-horizon suite's one-line verdicts."""
    return VERDICT_LINES


def pytest_terminal_summary(terminalreporter):
    if VERDICT_LINES:
        terminalreporter.section("validation criteria")
        for line in VERDICT_LINES:
            terminalreporter.write_line(line)


def make_hyper(p=2, k=2, **overrides):
    """Proper, weakly informative settings sized for (p, k)."""
    spec = {"alpha0": 0.0, "tau0": 1.0, "Q0": 1.0, "nu0": p + 2,
            "L0": 1.0, "t0": p + 2, "R0": 1.0, "r0": p * k + 2,
            "Phi0": 1.0, "gamma0": p + 2, "a1": 1.0, "a2": 1.0}
    spec.update(overrides)
    return Hyperparameters.from_spec(spec, p, k)


def make_data(n=12, p=2, k=2, m=2, seed=0, spread=2.0):
    """Gaussian toy data: group u sits at spread * (u - 1) in every coordinate,
    groups and levels cycle so no cell is empty once n >= m * k."""
    rng = RngStream(seed).generator
    group = np.arange(n) % m + 1
    level = (np.arange(n) // m) % k + 1
    y = rng.standard_normal((n, p)) + spread * (group - 1)[:, None]
    x = np.eye(m)[group - 1]
    return Dataset(y=y, x=x, group=group, level=level, k=k, m=m)


@pytest.fixture(scope="session")
def hyper22():
    return make_hyper(2, 2)


@pytest.fixture(scope="session")
def data12():
    return make_data(12)


@pytest.fixture(scope="session")
def short_settings():
    return McmcSettings(iterations=300, burn_in=100, thinning=2, seed=3)


@pytest.fixture(scope="session")
def bsp_chain(data12, hyper22, short_settings):
    from authmix import run_chain
    return run_chain(data12, hyper22, short_settings)


@pytest.fixture(scope="session")
def bp_chain(data12, hyper22, short_settings):
    from authmix import run_bp_chain
    return run_bp_chain(data12, hyper22, short_settings)
