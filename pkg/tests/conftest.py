import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from app.core import DiscriminationProblem
from app.objectives import parse_objective
from app.waveforms import constant_waveforms

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")

priors = st.floats(min_value=0.01, max_value=0.5)
overlaps = st.floats(min_value=0.0, max_value=0.99)
problems = st.builds(DiscriminationProblem, prior=priors, overlap=overlaps)


@pytest.fixture
def problem():
    return DiscriminationProblem(prior=0.3, overlap=0.5)


@pytest.fixture
def error():
    return parse_objective("error")


@pytest.fixture
def ambiguity():
    return parse_objective("ambiguity")


@pytest.fixture
def unit_gap():
    """s1 - s0 = 1 on [0, 1/2]: energy 1/2, overlap exp(-1/4)."""
    return constant_waveforms(gap=1.0, duration=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
