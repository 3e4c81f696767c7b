import numpy as np
import pytest

from app.errors import ValidationError
from app.verify import SUITES, SuiteOptions, run_suite

QUICK = SuiteOptions(
    samples=50, kmax=12, alpha_points=101, series_order=15, grid=2, tuples=500,
    angle_resolution=90, refine_iters=2, objectives=("error", "ambiguity"),
)


@pytest.mark.parametrize("name", ["lemma1", "renyi-pk", "renyi-series", "local-db", "helstrom", "backward", "classify"])
def test_suite_passes(name):
    result = run_suite(name, QUICK)
    assert result.ok, result.frame[~result.frame["ok"]].head().to_string()
    assert len(result.frame) > 0
    assert result.summary["failures"] == 0


@pytest.fixture(scope="module")
def theorem2_result():
    return run_suite("theorem2", QUICK)


def test_theorem2_suite_on_small_grid(theorem2_result):
    frame = theorem2_result.frame
    assert theorem2_result.ok, frame[~frame["ok"]].to_string()
    assert set(frame["objective"]) == {"error", "ambiguity"}
    assert set(frame["J"]) == {2, 3, 4}
    # the very skewed corner (pi=0.05, c=0.99) is skipped for the concave objective
    assert (frame["objective"] == "error").sum() == 4 * 3
    assert (frame["objective"] == "ambiguity").sum() == 3 * 3
    assert (frame["gap"] >= -1e-6).all()


def test_two_outcomes_fall_short_for_ambiguity(theorem2_result):
    frame = theorem2_result.frame
    pairs = frame[(frame["objective"] == "ambiguity") & (frame["J"] == 2) & (frame["overlap"] > 0)]
    assert len(pairs) == 1
    assert (pairs["check"] == "strictly-above").all()
    assert (pairs["gap"] > 0).all()


def test_four_outcomes_never_beat_three(theorem2_result):
    frame = theorem2_result.frame.set_index(["objective", "prior", "overlap", "J"])
    three = frame.xs(3, level="J")
    four = frame.xs(4, level="J")
    best_three = np.minimum(three["oracle"], three["theory"])
    assert (four["oracle"] >= best_three - 1e-6).all()


def test_theorem2_rejects_neither_class():
    with pytest.raises(ValidationError):
        run_suite("theorem2", SuiteOptions(grid=2, objectives=("renyi:0.75",)))


def test_unknown_suite():
    with pytest.raises(ValidationError):
        run_suite("lemma9")


def test_suite_registry_names():
    assert {"lemma1", "theorem2", "renyi-pk", "renyi-series", "local-db"} <= set(SUITES)


def test_result_payload():
    payload = run_suite("classify", QUICK).to_dict()
    assert payload["suite"] == "classify"
    assert payload["ok"] is True
    assert payload["rows"] == 13
