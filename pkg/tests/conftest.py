import numpy as np
import pytest

from glasslocal import MixtureSpec, rng


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion at the end of the run."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture(scope="session")
def sk():
    return MixtureSpec.sk()


@pytest.fixture(scope="session")
def mixed():
    return MixtureSpec(((2, 0.5), (3, 0.7), (4, 0.2)))


@pytest.fixture()
def gen():
    return np.random.default_rng(20260810)


def planted_instance(spec, n, beta, t, seed):
    """Planted disorder plus the matched observation y = t x + sqrt(t) z."""
    from glasslocal import gen_planted

    x = np.where(rng.stream(seed, "x").uniform(size=n) < 0.5, -1.0, 1.0)
    g = gen_planted(spec, n, beta, x, seed)
    z = rng.stream(seed, "noise").standard_normal(n)
    y = t * x + np.sqrt(t) * z
    return g, x, y
