import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stokesdtn import jets
from stokesdtn.geometry import BoundaryNormalMetric
from stokesdtn.jets import JetSpace

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_metric(n, K, seed, scale=0.2, mu_scale=0.3, nvars=None):
    """Identity plus a seeded symmetric perturbation, with a positive random viscosity."""
    rng = np.random.default_rng(seed)
    sp = JetSpace(nvars or n, K)
    p = sp.random(rng, (n - 1, n - 1), scale=scale)
    h = sp.identity(n - 1) + 0.5 * (p + p.T)
    mu = jets.exp(sp.random(rng, scale=mu_scale))
    return BoundaryNormalMetric.from_tangential(h, mu)


def flat_metric(n, K, mu=1.0):
    sp = JetSpace(n, K)
    return BoundaryNormalMetric.from_tangential(sp.identity(n - 1), sp.constant(mu))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance summary lines, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
