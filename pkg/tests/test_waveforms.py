import logging

import numpy as np
import pytest

from app.errors import ValidationError
from app.waveforms import (
    WaveformPair,
    constant_waveforms,
    load_signal_table,
    load_waveforms,
    preprocess,
)


def test_piecewise_energy_and_sampling():
    w = WaveformPair(breakpoints=[0.0, 0.25], s0=[0.0, 0.0], s1=[1.0, 2.0], duration=0.5)
    assert w.energy() == pytest.approx(0.25 * 1.0 + 0.25 * 4.0)
    s0, s1 = w.sample(0.125)
    assert s1.tolist() == [1.0, 1.0, 2.0, 2.0]
    assert s0.tolist() == [0.0] * 4


def test_preprocess_flips_pieces():
    w = preprocess([0.0, 0.5], [1.0, 0.0], [0.0, 1.0], 1.0)
    assert w.s0.tolist() == [-1.0, 0.0]
    assert w.s1.tolist() == [-0.0, 1.0]
    assert np.all(w.s1 >= w.s0)


@pytest.mark.parametrize("kwargs", [
    dict(breakpoints=[0.1], s0=[0.0], s1=[1.0], duration=1.0),
    dict(breakpoints=[0.0, 0.0], s0=[0.0, 0.0], s1=[1.0, 1.0], duration=1.0),
    dict(breakpoints=[0.0], s0=[0.0], s1=[1.0], duration=0.0),
    dict(breakpoints=[0.0], s0=[1.0], s1=[0.0], duration=1.0),
    dict(breakpoints=[0.0], s0=[np.inf], s1=[1.0], duration=1.0),
    dict(breakpoints=[0.0, 0.5], s0=[0.0], s1=[1.0], duration=1.0),
])
def test_invalid_waveforms(kwargs):
    with pytest.raises(ValidationError):
        WaveformPair(**kwargs)


def test_negative_gap_rejected():
    with pytest.raises(ValidationError):
        constant_waveforms(gap=-1.0, duration=1.0)


def test_uneven_step_is_logged(caplog):
    w = constant_waveforms(gap=1.0, duration=1.0)
    with caplog.at_level(logging.WARNING):
        assert w.steps(0.3) == 3
    assert "not a multiple" in caplog.text


def test_load_waveform_file(tmp_path):
    path = tmp_path / "pair.txt"
    path.write_text("T 0.5\n# t s0 s1\n0.0 0.0 1.0\n0.25 1.0 0.5  # flipped\n")
    w = load_waveforms(path)
    assert w.duration == 0.5
    assert w.s0.tolist() == [0.0, -1.0]
    assert w.s1.tolist() == [1.0, -0.5]


@pytest.mark.parametrize("text", ["0.0 0.0 1.0\n", "T 0.5\n", "T 0.5\n0.0 x 1.0\n", "T 0.5\n0.0 1.0\n"])
def test_malformed_waveform_files(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ValidationError):
        load_waveforms(path)


def test_missing_file_is_a_validation_error(tmp_path):
    with pytest.raises(ValidationError):
        load_waveforms(tmp_path / "missing.txt")


def test_signal_table(tmp_path):
    path = tmp_path / "ell.txt"
    path.write_text("0.0 -1.0\n0.2 0.5\n")
    table = load_signal_table(path)
    assert table(0, 0.1, 0.0, 1.0, None, None) == -1.0
    assert table(0, 0.2, 0.0, 1.0, None, None) == 0.5
    assert table.name.startswith("custom:")

    path.write_text("0.2 1.0\n0.1 0.0\n")
    with pytest.raises(ValidationError):
        load_signal_table(path)
