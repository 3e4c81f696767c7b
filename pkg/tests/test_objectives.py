import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.errors import ValidationError
from app.objectives import (
    ConvexityClass,
    ObjectiveFn,
    bhattacharyya,
    binary_entropy,
    check_admissible,
    classify,
    inverse_bhattacharyya,
    inverse_jensen,
    is_concave_relative,
    is_convex_relative,
    jensen_bound_concave,
    jensen_bound_convex,
    min_entropy,
    parse_objective,
    renyi,
)


def test_pointwise_values():
    assert bhattacharyya(0.5) == 0.5
    assert bhattacharyya(0.0) == 0.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(math.log(2))
    assert min_entropy(0.5) == pytest.approx(math.log(2))
    assert parse_objective("ambiguity")(0.0) == 0.0
    assert parse_objective("ambiguity")(0.3) == 1.0


@given(st.floats(min_value=0.0, max_value=0.5))
def test_inverse_bhattacharyya_recovers_small_root(p):
    assert inverse_bhattacharyya(bhattacharyya(p)) == pytest.approx(p, abs=1e-12)


@pytest.mark.parametrize("spec, name", [
    ("error", "error"),
    ("Entropy", "entropy"),
    ("renyi:2", "renyi:2"),
    ("renyi:0.25", "renyi:0.25"),
    ("renyi:inf", "renyi:inf"),
])
def test_parse_objective_names(spec, name):
    assert parse_objective(spec).name == name


@pytest.mark.parametrize("spec", ["renyi:abc", "renyi:-1", "gini", ""])
def test_parse_objective_rejects(spec):
    with pytest.raises(ValidationError):
        parse_objective(spec)


def test_renyi_special_orders():
    p = np.linspace(0.01, 0.99, 11)
    assert renyi(1)(p) == pytest.approx(binary_entropy(p))
    assert renyi(math.inf)(p) == pytest.approx(min_entropy(p))
    assert renyi(2)(0.3) == pytest.approx(-math.log(0.3 ** 2 + 0.7 ** 2))


@pytest.mark.parametrize("spec", ["error", "entropy", "ambiguity", "bhattacharyya", "renyi:0.5", "renyi:inf"])
def test_builtins_are_admissible(spec):
    assert check_admissible(parse_objective(spec)).admissible


def test_check_admissible_reports_violations():
    skewed = ObjectiveFn(name="skewed", func=lambda p: p)
    report = check_admissible(skewed)
    assert not report.admissible
    assert "symmetry" in report.violations

    shifted = ObjectiveFn(name="shifted", func=lambda p: 1.0 + 0.0 * p)
    assert "normalization" in check_admissible(shifted).violations


def test_classify_rejects_non_admissible():
    with pytest.raises(ValidationError):
        classify(ObjectiveFn(name="skewed", func=lambda p: p))


@pytest.mark.parametrize("spec, expected", [
    ("error", ConvexityClass.CONVEX),
    ("entropy", ConvexityClass.CONVEX),
    ("bhattacharyya", ConvexityClass.CONVEX),
    ("ambiguity", ConvexityClass.CONCAVE),
])
def test_classify_builtins(spec, expected):
    assert classify(parse_objective(spec)) is expected


@pytest.mark.parametrize("alpha", [1, 1.5, 2, 4, 10, math.inf, 0.9, 0.95, 0.99])
def test_classify_convex_renyi_orders(alpha):
    assert classify(renyi(alpha)) is ConvexityClass.CONVEX


@pytest.mark.parametrize("alpha", [0, 0.1, 0.25, 0.5])
def test_classify_concave_renyi_orders(alpha):
    assert classify(renyi(alpha)) is ConvexityClass.CONCAVE


@pytest.mark.parametrize("alpha", [0.6, 0.75])
def test_classify_intermediate_orders(alpha):
    assert classify(renyi(alpha)) is ConvexityClass.NEITHER


def test_renyi_objectives_carry_their_order():
    assert renyi(0.9).order == 0.9
    assert parse_objective("entropy").order == 1.0
    assert parse_objective("error").order is None


@pytest.mark.parametrize("alpha, expected", [
    (2, ConvexityClass.CONVEX),
    (0.25, ConvexityClass.CONCAVE),
])
def test_classify_by_finite_differences(alpha, expected):
    wrapped = ObjectiveFn(name="wrapped", func=renyi(alpha).func)
    assert classify(wrapped) is expected


def test_support_test_on_pairs(error, ambiguity):
    grid = np.linspace(0.0, 0.5, 201)
    assert is_convex_relative(error, bhattacharyya, grid)
    assert is_concave_relative(ambiguity, bhattacharyya, grid)
    assert not is_convex_relative(ambiguity, bhattacharyya, grid)


def test_jensen_bounds(error, ambiguity):
    assert jensen_bound_convex(error, 0.5) == pytest.approx(0.5)
    assert jensen_bound_convex(error, 0.0) == 0.0
    assert jensen_bound_concave(ambiguity, 0.3) == pytest.approx(0.6)
    with pytest.raises(ValidationError):
        jensen_bound_convex(error, 0.6)


def test_inverse_jensen_chord_bound():
    result = inverse_jensen(np.square, [0.0, 1.0], 0.0, 1.0)
    assert result.bound == pytest.approx(0.5)
    assert result.empirical == pytest.approx(0.5)
    assert result.holds

    result = inverse_jensen(np.square, [0.2, 0.4, 0.9], 0.0, 1.0, weights=[1, 2, 1])
    assert result.holds
    assert result.empirical <= result.bound


def test_inverse_jensen_rejects_samples_outside_interval():
    with pytest.raises(ValidationError):
        inverse_jensen(np.square, [1.5], 0.0, 1.0)


def test_renyi_half_is_log_one_plus_twice_b():
    p = np.linspace(0.0, 0.5, 51)
    assert renyi(0.5)(p) == pytest.approx(np.log1p(2.0 * bhattacharyya(p)), abs=1e-12)


def test_log_likelihood_ratio_dominates_linear_bound():
    p = np.linspace(1e-4, 0.5, 2001)
    assert np.all(np.log((1.0 - p) / p) >= 2.0 * (1.0 - 2.0 * p) - 1e-12)


@pytest.mark.parametrize("spec", ["error", "entropy", "renyi:2", "ambiguity", "renyi:0.25"])
def test_jensen_bounds_grow_with_mean_b(spec):
    g = parse_objective(spec)
    bound = jensen_bound_concave if classify(g) is ConvexityClass.CONCAVE else jensen_bound_convex
    values = [bound(g, b) for b in np.linspace(0.0, 0.5, 41)]
    assert np.all(np.diff(values) >= -1e-12)
