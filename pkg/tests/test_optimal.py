import math

import numpy as np
import pytest
from hypothesis import assume, given

from app.core import DiscriminationProblem, is_eligible, not_too_skewed
from app.errors import OutOfScopeError, UnsupportedObjectiveError
from app.objectives import bhattacharyya, parse_objective
from app.optimal import (
    Regime,
    certainty_probability,
    helstrom,
    min_error_angle,
    min_error_projection,
    minimax_value,
    projection_error,
    theorem_pure_value,
    unambiguous_povm,
)
from tests.conftest import problems


def test_helstrom_textbook_value(error):
    solution = theorem_pure_value(DiscriminationProblem(prior=0.5, overlap=0.6), error)
    assert solution.value == pytest.approx(0.1, abs=1e-12)
    assert solution.regime is Regime.PROJECTION


def test_orthogonal_states_have_zero_entropy():
    solution = theorem_pure_value(DiscriminationProblem(prior=0.5, overlap=0.0), parse_objective("entropy"))
    assert solution.value == pytest.approx(0.0, abs=1e-12)


def test_very_skewed_concave_is_out_of_scope(ambiguity):
    with pytest.raises(OutOfScopeError) as info:
        theorem_pure_value(DiscriminationProblem(prior=0.1, overlap=0.9), ambiguity)
    assert info.value.reason == "very-skewed"


def test_neither_class_is_unsupported():
    with pytest.raises(UnsupportedObjectiveError):
        theorem_pure_value(DiscriminationProblem(prior=0.4, overlap=0.5), parse_objective("renyi:0.75"))


@given(problems)
def test_projection_error_matches_helstrom(problem):
    assert min_error_projection(problem).value == pytest.approx(helstrom(problem), abs=1e-10)


@given(problems)
def test_min_error_angle_is_stationary(problem):
    phi = min_error_angle(problem)
    best = projection_error(problem, phi)
    assert best == pytest.approx(helstrom(problem), abs=1e-12)
    for step in (-1e-3, 1e-3):
        assert projection_error(problem, phi + step) >= best - 1e-15


@given(problems)
def test_projection_backward_channel_is_symmetric(problem):
    posteriors = min_error_projection(problem).distribution.posteriors
    assert len(posteriors) == 2
    assert posteriors.sum() == pytest.approx(1.0, abs=1e-10)


@given(problems)
def test_unambiguous_backward_channel_is_an_erasure(problem):
    assume(not_too_skewed(problem))
    dist = unambiguous_povm(problem).distribution
    uncertain = 0.0
    for q, p in dist.entries:
        closest = min((0.0, 0.5, 1.0), key=lambda v: abs(v - p))
        assert p == pytest.approx(closest, abs=1e-10)
        if closest == 0.5:
            uncertain += q
    b_star = bhattacharyya(problem.prior) * problem.overlap
    assert uncertain == pytest.approx(2 * b_star, abs=1e-10)
    assert certainty_probability(problem) == pytest.approx(1 - 2 * b_star, abs=1e-12)


def test_unambiguous_value_for_ambiguity(ambiguity):
    problem = DiscriminationProblem(prior=0.4, overlap=0.5)
    solution = theorem_pure_value(problem, ambiguity)
    assert solution.regime is Regime.THREE_ELEMENT
    assert solution.value == pytest.approx(2 * math.sqrt(0.24) * 0.5, abs=1e-12)
    assert len(solution.povm) == 3


def test_very_skewed_unambiguous_is_a_projection(ambiguity):
    problem = DiscriminationProblem(prior=0.1, overlap=0.9)
    solution = unambiguous_povm(problem, ambiguity)
    assert solution.regime is Regime.VERY_SKEWED
    assert len(solution.povm) == 2
    with pytest.raises(OutOfScopeError):
        certainty_probability(problem)


def test_boundary_drops_the_vanishing_certainty_outcome():
    # pi/(1-pi) = c^2: the operator certifying X=1 has zero weight
    problem = DiscriminationProblem(prior=0.2, overlap=0.5)
    dist = unambiguous_povm(problem).distribution
    assert len(dist.probs) == 2
    assert sorted(dist.posteriors) == pytest.approx([0.0, 0.5], abs=1e-10)


def test_bhattacharyya_optimum_is_b_star():
    problem = DiscriminationProblem(prior=0.3, overlap=0.7)
    solution = theorem_pure_value(problem, parse_objective("bhattacharyya"))
    assert solution.value == pytest.approx(bhattacharyya(0.3) * 0.7, abs=1e-12)
    assert solution.b_star == pytest.approx(bhattacharyya(0.3) * 0.7)


def test_identical_states(error):
    problem = DiscriminationProblem(prior=0.3, overlap=1.0)
    solution = theorem_pure_value(problem, error)
    assert solution.value == pytest.approx(0.3, abs=1e-12)
    assert len(solution.povm) == 1


def test_minimax_is_uniform_prior(error):
    assert minimax_value(0.6, error).value == pytest.approx(0.1, abs=1e-12)


def test_solution_payload(error):
    payload = theorem_pure_value(DiscriminationProblem(prior=0.25, overlap=0.4), error).to_dict()
    for key in ("prior", "overlap", "objective", "regime", "value", "b_star", "povm",
                "outcome_probs", "posteriors", "transition_matrix", "mutual_information"):
        assert key in payload
    assert np.array(payload["transition_matrix"]).sum(axis=1) == pytest.approx([1.0, 1.0])


@pytest.mark.parametrize("spec, prior", [
    ("error", 0.3),
    ("entropy", 0.3),
    ("renyi:2", 0.2),
    ("ambiguity", 0.5),
    ("renyi:0.25", 0.5),
])
def test_optimal_value_grows_with_overlap(spec, prior):
    g = parse_objective(spec)
    values = [theorem_pure_value(DiscriminationProblem(prior=prior, overlap=c), g).value
              for c in np.linspace(0.0, 0.99, 34)]
    assert np.all(np.diff(values) >= -1e-12)


@given(problems)
def test_unambiguous_povm_is_eligible(problem):
    assume(not_too_skewed(problem))
    assert is_eligible(problem, unambiguous_povm(problem).povm)
