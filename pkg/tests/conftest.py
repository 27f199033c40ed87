import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from vdlab.laxcore import CouplingParams, PhasePoint

settings.register_profile(
    "vdlab",
    deadline=None,
    derandomize=True,
    database=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("vdlab")


def _ok_couplings(mn):
    mu, nu = mn
    return min(abs(np.sin(mu)), abs(np.sin(nu)), abs(np.sin(2 * mu - nu))) > 0.1


couplings = st.tuples(
    st.floats(-3.0, 3.0, allow_nan=False),
    st.floats(-3.0, 3.0, allow_nan=False),
).filter(_ok_couplings).map(lambda mn: CouplingParams(*mn))


@st.composite
def phase_points(draw, n_min=1, n_max=4, theta_max=2.0):
    n = draw(st.integers(n_min, n_max))
    gaps = draw(st.lists(st.floats(0.2, 1.2), min_size=n, max_size=n))
    theta = draw(st.lists(st.floats(-theta_max, theta_max), min_size=n, max_size=n))
    return PhasePoint(np.cumsum(gaps)[::-1], theta)


@pytest.fixture
def example_n1():
    return PhasePoint([0.8], [0.3]), CouplingParams(0.6, 0.9)


@pytest.fixture
def example_n2():
    return PhasePoint([1.5, 0.7], [0.4, -0.3]), CouplingParams(0.7, 0.5)
