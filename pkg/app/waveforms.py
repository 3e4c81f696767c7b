"""
Piecewise-constant waveform pairs and the plain-text files that describe them.

Waveform file:

    T 0.5
    # t  s0  s1
    0.0  0.0  1.0
    0.25 0.0  0.5

Each `t s0 s1` line starts a constant piece that lasts until the next line
(or T). A custom local-signal table has the same layout with `t ell` lines
and no T header.
"""
import logging
from dataclasses import dataclass

import numpy as np

from app.errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WaveformPair:
    breakpoints: np.ndarray
    s0: np.ndarray
    s1: np.ndarray
    duration: float

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.breakpoints, dtype=float))
        s0 = np.atleast_1d(np.asarray(self.s0, dtype=float))
        s1 = np.atleast_1d(np.asarray(self.s1, dtype=float))
        duration = float(self.duration)

        if not (t.shape == s0.shape == s1.shape) or t.size == 0:
            raise ValidationError("breakpoints, s0 and s1 must be non-empty and of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(s0)) and np.all(np.isfinite(s1))):
            raise ValidationError("waveforms must be finite")
        if not np.isfinite(duration) or duration <= 0:
            raise ValidationError(f"duration must be positive, got {duration}")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0) or t[-1] >= duration:
            raise ValidationError("breakpoints must start at 0, increase strictly and stay below T")
        if np.any(s1 < s0):
            raise ValidationError("waveforms must satisfy s1 >= s0; run preprocess() first")

        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "s1", s1)
        object.__setattr__(self, "duration", duration)

    def steps(self, tau):
        n = int(round(self.duration / tau))
        if n < 1:
            raise ValidationError(f"tau={tau} is longer than the duration {self.duration}")
        if abs(n * tau - self.duration) > 1e-9 * self.duration:
            logger.warning("T=%g is not a multiple of tau=%g; simulating %d steps", self.duration, tau, n)
        return n

    def sample(self, tau):
        """Values (s0[k], s1[k]) at the step starts t_k = k tau."""
        times = np.arange(self.steps(tau)) * tau
        idx = np.searchsorted(self.breakpoints, times, side="right") - 1
        return self.s0[idx], self.s1[idx]

    def energy(self):
        """Integral of (s1 - s0)^2 over [0, T]."""
        lengths = np.diff(np.append(self.breakpoints, self.duration))
        return float(np.sum((self.s1 - self.s0) ** 2 * lengths))


def preprocess(breakpoints, s0, s1, duration):
    """
    Flip the sign of both waveforms on the pieces where s1 < s0. A common
    phase shift of pi is available to the receiver, so this loses nothing.
    """
    s0 = np.asarray(s0, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    flip = s1 < s0
    if np.any(flip):
        logger.info("Phase-flipping %d waveform piece(s) so that s1 >= s0", int(flip.sum()))
    sign = np.where(flip, -1.0, 1.0)
    return WaveformPair(breakpoints=breakpoints, s0=sign * s0, s1=sign * s1, duration=duration)


def constant_waveforms(gap, duration, s0=0.0):
    """s0(t) = s0, s1(t) = s0 + gap on [0, duration]."""
    if gap < 0:
        raise ValidationError(f"gap must be nonnegative, got {gap}")
    return WaveformPair(breakpoints=[0.0], s0=[s0], s1=[s0 + gap], duration=duration)


def _data_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.readlines()
    except OSError as e:
        raise ValidationError(f"cannot read {path}: {e}") from e
    for number, line in enumerate(raw, start=1):
        text = line.split("#", 1)[0].strip()
        if text:
            yield number, text.split()


def _floats(number, fields, path):
    try:
        return [float(f) for f in fields]
    except ValueError:
        raise ValidationError(f"{path}:{number}: expected numbers, got '{' '.join(fields)}'") from None


def load_waveforms(path):
    lines = list(_data_lines(path))
    if not lines or lines[0][1][0].upper() != "T" or len(lines[0][1]) != 2:
        raise ValidationError(f"{path}: first line must be 'T <duration>'")
    duration = _floats(lines[0][0], lines[0][1][1:], path)[0]

    rows = []
    for number, fields in lines[1:]:
        if len(fields) != 3:
            raise ValidationError(f"{path}:{number}: expected 't s0 s1'")
        rows.append(_floats(number, fields, path))
    if not rows:
        raise ValidationError(f"{path}: no waveform samples")

    table = np.array(rows)
    return preprocess(table[:, 0], table[:, 1], table[:, 2], duration)


@dataclass(frozen=True, eq=False)
class SignalTable:
    """Open-loop local signal ell(t), piecewise constant."""

    breakpoints: np.ndarray
    values: np.ndarray
    name: str = "custom"

    def __call__(self, k, t, s0, s1, posterior, photons):
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return float(self.values[max(idx, 0)])


def load_signal_table(path):
    rows = []
    for number, fields in _data_lines(path):
        if len(fields) != 2:
            raise ValidationError(f"{path}:{number}: expected 't ell'")
        rows.append(_floats(number, fields, path))
    if not rows:
        raise ValidationError(f"{path}: no signal samples")
    table = np.array(rows)
    if np.any(np.diff(table[:, 0]) <= 0):
        raise ValidationError(f"{path}: times must increase strictly")
    return SignalTable(breakpoints=table[:, 0], values=table[:, 1], name=f"custom:{path}")
