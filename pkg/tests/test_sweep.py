import numpy as np
import pytest

from app.errors import ValidationError
from app.sweep import SweepSpec, run_sweep
from app.utils import parse_range


def test_grid_cardinality_and_values():
    spec = SweepSpec(priors=parse_range("0.1:0.5:9"), overlaps=parse_range("0.1:0.9:9"), objectives=("error",))
    frame = run_sweep(spec)
    assert len(frame) == 81
    assert (frame["status"] == "ok").all()
    assert np.allclose(frame["value"], frame["helstrom"], atol=1e-10)


def test_out_of_scope_cells_keep_their_row():
    spec = SweepSpec(priors=(0.1, 0.5), overlaps=(0.9,), objectives=("error", "ambiguity"))
    frame = run_sweep(spec).set_index(["prior", "objective"])
    assert frame.loc[(0.1, "ambiguity"), "status"] == "very-skewed"
    assert np.isnan(frame.loc[(0.1, "ambiguity"), "value"])
    assert frame.loc[(0.5, "ambiguity"), "value"] == pytest.approx(0.9)


def test_neither_class_rows():
    frame = run_sweep(SweepSpec(priors=(0.3,), overlaps=(0.5,), objectives=("renyi:0.75",)))
    assert frame["status"].tolist() == ["neither"]


def test_energy_axis_with_monte_carlo():
    spec = SweepSpec(priors=(0.5,), energies=(0.5,), objectives=("error",), monte_carlo=True, trials=300, tau=1e-3)
    row = run_sweep(spec).iloc[0]
    assert row["overlap"] == pytest.approx(np.exp(-0.25))
    assert row["mc_theory"] == pytest.approx(row["value"], abs=1e-12)
    assert abs(row["mc_estimate"] - row["value"]) < 0.02


def test_spec_needs_exactly_one_axis():
    with pytest.raises(ValidationError):
        SweepSpec(priors=(0.5,), objectives=("error",))
    with pytest.raises(ValidationError):
        SweepSpec(priors=(0.5,), objectives=("error",), overlaps=(0.1,), energies=(0.1,))


@pytest.mark.parametrize("text, expected", [("0:1:3", (0.0, 0.5, 1.0)), ("0.2", (0.2,)), ("0.1,0.3", (0.1, 0.3))])
def test_parse_range(text, expected):
    assert parse_range(text) == pytest.approx(expected)


@pytest.mark.parametrize("text", ["0:1", "a:b:3", "0:1:0", ""])
def test_parse_range_rejects(text):
    with pytest.raises(ValidationError):
        parse_range(text)
