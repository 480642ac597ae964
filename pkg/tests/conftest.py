import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bias_lab import datagen

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_separable(rng, D, N, push=0.1):
    """Gaussian samples labelled by a random hyperplane and pushed off it."""
    from bias_lab.dataset import Dataset
    w = rng.standard_normal(D)
    X = rng.standard_normal((N, D))
    y = np.sign(X @ w)
    y[y == 0] = 1.0
    X += push * y[:, None] * w / np.linalg.norm(w)
    return Dataset(X, y)


@pytest.fixture(scope="session")
def gaussian_data():
    return datagen.generate(datagen.GenSpec(D=6, N=12, seed=0))


@pytest.fixture(scope="session")
def sparse_data():
    return datagen.generate(datagen.GenSpec(D=8, N=16, seed=7, kind="fourier_sparse", k_active=2))


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""
    lines = pytestconfig.stash.setdefault(_ACCEPTANCE, [])

    def log(criterion, passed, detail):
        line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append((criterion, line))
        print(line)
        return passed

    return log


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda item: item[0]):
            terminalreporter.write_line(line)
