"""
Objective functions of the posterior and their convexity relative to the
Bhattacharyya parameter b(p) = sqrt(p(1-p)).

An objective g is admissible when it is symmetric, vanishes at 0, is
nondecreasing on [0, 1/2] and finite at 1/2. Admissible objectives are
convex-admissible when g = phi(b) with phi convex nondecreasing, and
concave-admissible when phi is concave. Logarithms are natural.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import partial

import numpy as np
from scipy.ndimage import maximum_filter1d
from scipy.special import xlogy

from app.errors import ValidationError

logger = logging.getLogger(__name__)

CERTAINTY_TOL = 1e-12
SHANNON_WINDOW = 1e-6

# classify() defaults
FD_STEP = 1e-5
GRID_MARGIN = 1e-3
RATIO_TOL = 1e-5
SMOOTHNESS_TOL = 0.1
FLAT_TOL = 1e-8
NOISE_WINDOW = 9
NOISE_FACTOR = 4.0
SUPPORT_GRID = 401
SUPPORT_TOL = 1e-9


class ConvexityClass(str, Enum):
    CONVEX = "convex-admissible"
    CONCAVE = "concave-admissible"
    NEITHER = "neither"


@dataclass(frozen=True, eq=False)
class ObjectiveFn:
    name: str
    func: object
    # Renyi order when g is h_alpha; classify then uses the closed-form derivative ratio
    order: float = None

    def __call__(self, p):
        out = self.func(np.asarray(p, dtype=float))
        return out if np.ndim(out) else float(out)

    @property
    def value_at_half(self):
        return self(0.5)


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    violations: tuple
    worst: dict


@dataclass(frozen=True)
class InverseJensenResult:
    bound: float
    empirical: float
    holds: bool


# --- Pointwise functions ---

def bhattacharyya(p):
    p = np.asarray(p, dtype=float)
    out = np.sqrt(np.clip(p * (1.0 - p), 0.0, None))
    return out if np.ndim(out) else float(out)


def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    out = -xlogy(p, p) - xlogy(1.0 - p, 1.0 - p)
    return out if np.ndim(out) else float(out)


def error_probability(p):
    p = np.asarray(p, dtype=float)
    return np.minimum(p, 1.0 - p)


def ambiguity(p):
    """Indicator that the posterior is not a certainty."""
    p = np.asarray(p, dtype=float)
    return np.where((p > CERTAINTY_TOL) & (p < 1.0 - CERTAINTY_TOL), 1.0, 0.0)


def inverse_bhattacharyya(b):
    """The root p <= 1/2 of sqrt(p(1-p)) = b."""
    b = np.asarray(b, dtype=float)
    out = 2.0 * b * b / (1.0 + np.sqrt(np.clip(1.0 - 4.0 * b * b, 0.0, None)))
    return out if np.ndim(out) else float(out)


def min_entropy(p):
    """-log(1 - e(p))."""
    return -np.log1p(-error_probability(p))


def _renyi_regular(p, alpha):
    return np.log(p ** alpha + (1.0 - p) ** alpha) / (1.0 - alpha)


def _renyi_func(alpha):
    if alpha == 0.0:
        return ambiguity
    if abs(alpha - 1.0) < SHANNON_WINDOW:
        return binary_entropy
    if np.isinf(alpha):
        return min_entropy
    return partial(_renyi_regular, alpha=alpha)


def format_alpha(alpha):
    return "inf" if np.isinf(alpha) else f"{alpha:g}"


def renyi(alpha):
    alpha = float(alpha)
    if np.isnan(alpha) or alpha < 0:
        raise ValidationError(f"Renyi order must be a nonnegative number or inf, got {alpha}")
    return ObjectiveFn(name=f"renyi:{format_alpha(alpha)}", func=_renyi_func(alpha), order=alpha)


_BUILTINS = {
    "error": error_probability,
    "entropy": binary_entropy,
    "ambiguity": ambiguity,
    "bhattacharyya": bhattacharyya,
}


def builtin_objective(name, alpha=None):
    if name == "renyi":
        if alpha is None:
            raise ValidationError("renyi needs an order alpha")
        return renyi(alpha)
    if name not in _BUILTINS:
        raise ValidationError(f"unknown objective '{name}'")
    return ObjectiveFn(name=name, func=_BUILTINS[name], order=1.0 if name == "entropy" else None)


def parse_objective(spec):
    """`error | entropy | ambiguity | bhattacharyya | renyi:<alpha>` with alpha a decimal or inf."""
    spec = str(spec).strip().lower()
    if spec.startswith("renyi:"):
        text = spec.split(":", 1)[1]
        try:
            alpha = float(text)
        except ValueError:
            raise ValidationError(f"malformed Renyi order '{text}'") from None
        return renyi(alpha)
    return builtin_objective(spec)


# --- Admissibility and classification ---

def check_admissible(g, grid_size=1001, tol=1e-9):
    """Scan a uniform grid of [0, 1] for the four admissibility properties."""
    if grid_size < 3:
        raise ValidationError("grid_size must be at least 3")
    p = np.linspace(0.0, 1.0, grid_size)
    values = np.asarray(g(p), dtype=float)
    mirrored = np.asarray(g(1.0 - p), dtype=float)
    half = values[p <= 0.5]

    worst = {
        "symmetry": float(np.nanmax(np.abs(values - mirrored))),
        "normalization": abs(float(g(0.0))),
        "monotonicity": float(max(0.0, -np.min(np.diff(half)))),
        "nonnegativity": float(max(0.0, -np.nanmin(values))),
    }
    violations = [name for name, gap in worst.items() if not gap <= tol]
    if not (np.all(np.isfinite(values)) and np.isfinite(g(0.5))):
        violations.append("boundedness")

    if violations:
        logger.debug("Objective %s violates %s", getattr(g, "name", g), ", ".join(violations))
    return AdmissibilityReport(admissible=not violations, violations=tuple(violations), worst=worst)


def _support_feasible(f_values, g_values, tol):
    """
    For every anchor x0 look for lambda >= 0 with
    f(x) - f(x0) >= lambda (g(x) - g(x0)) at every grid point x.
    """
    df = f_values[None, :] - f_values[:, None]
    dg = g_values[None, :] - g_values[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = df / dg
    upper = np.where(dg > tol, slope, np.inf).min(axis=1)
    lower = np.maximum(np.where(dg < -tol, slope, -np.inf).max(axis=1), 0.0)
    flat_ok = np.all(np.where(np.abs(dg) <= tol, df >= -tol, True), axis=1)
    slack = tol * (1.0 + np.abs(np.where(np.isfinite(upper), upper, 0.0)))
    return bool(np.all(flat_ok & (lower <= upper + slack)))


def is_convex_relative(f, g, grid, tol=SUPPORT_TOL):
    """f is convex relative to g on `grid` (f = phi(g), phi convex nondecreasing)."""
    x = np.asarray(grid, dtype=float)
    return _support_feasible(np.asarray(f(x), dtype=float), np.asarray(g(x), dtype=float), tol)


def is_concave_relative(f, g, grid, tol=SUPPORT_TOL):
    x = np.asarray(grid, dtype=float)
    return _support_feasible(-np.asarray(f(x), dtype=float), -np.asarray(g(x), dtype=float), tol)


def bhattacharyya_ratio(p):
    """b''/|b'| on (0, 1/2)."""
    b = bhattacharyya(p)
    return -1.0 / (2.0 * b * b * (1.0 - 2.0 * p))


def _classify_by_support(g):
    grid = np.linspace(0.0, 0.5, SUPPORT_GRID)
    if is_convex_relative(g, bhattacharyya, grid):
        return ConvexityClass.CONVEX
    if is_concave_relative(g, bhattacharyya, grid):
        return ConvexityClass.CONCAVE
    return ConvexityClass.NEITHER


def classify(g, grid_size=2001):
    """
    Compare g''/|g'| with b''/|b'| on (delta, 1/2 - delta).

    Renyi objectives use the closed-form ratio; any other g uses
    Richardson-combined central differences. Flat or kinked objectives,
    detected by first differences that disagree between steps h and 2h,
    go through the lambda-support test instead.
    """
    report = check_admissible(g)
    if not report.admissible:
        raise ValidationError(
            f"objective {getattr(g, 'name', g)} is not admissible: {', '.join(report.violations)}"
        )

    h = FD_STEP
    p = np.linspace(GRID_MARGIN, 0.5 - GRID_MARGIN, grid_size)
    centre = np.asarray(g(p), dtype=float)
    plus, minus = np.asarray(g(p + h), dtype=float), np.asarray(g(p - h), dtype=float)
    plus2, minus2 = np.asarray(g(p + 2 * h), dtype=float), np.asarray(g(p - 2 * h), dtype=float)

    d1 = (plus - minus) / (2 * h)
    d1_wide = (plus2 - minus2) / (4 * h)
    magnitude = np.maximum(np.abs(d1), np.abs(d1_wide))
    if np.any(magnitude < FLAT_TOL) or np.any(np.abs(d1 - d1_wide) > SMOOTHNESS_TOL * magnitude):
        logger.debug("Objective %s is flat or non-smooth; using the support test", getattr(g, "name", g))
        return _classify_by_support(g)

    ratio_b = bhattacharyya_ratio(p)
    order = getattr(g, "order", None)
    if order is not None and order > 0:
        from app.renyi import renyi_derivative_ratio

        gap = renyi_derivative_ratio(order, p) - ratio_b
        noise = 0.0
    else:
        # Richardson-combined differences; plain O(h^2) stencils are too coarse near p = delta.
        d2 = (plus - 2 * centre + minus) / (h * h)
        d2_wide = (plus2 - 2 * centre + minus2) / (4 * h * h)
        slope = (4 * d1 - d1_wide) / 3
        curvature = (4 * d2 - d2_wide) / 3
        gap = curvature / np.abs(slope) - ratio_b

        # near p = 1/2 g' vanishes and the h / 2h curvatures differ by rounding alone
        spread = maximum_filter1d(np.abs(d2 - d2_wide) / np.abs(slope), size=NOISE_WINDOW)
        rounding = 8 * np.finfo(float).eps * np.abs(centre) / (h * h * np.abs(slope))
        noise = rounding + NOISE_FACTOR * spread

    slack = RATIO_TOL * (1.0 + np.abs(ratio_b)) + noise
    if np.all(gap >= -slack):
        return ConvexityClass.CONVEX
    if np.all(gap <= slack):
        return ConvexityClass.CONCAVE
    return ConvexityClass.NEITHER


# --- Jensen-type bounds ---

def jensen_bound_convex(g, mean_b):
    """Lower bound g(p*) on E[g(p)] with b(p*) = E[b(p)]."""
    mean_b = float(mean_b)
    if not -1e-12 <= mean_b <= 0.5 + 1e-12:
        raise ValidationError(f"mean Bhattacharyya parameter must lie in [0, 1/2], got {mean_b}")
    return float(g(inverse_bhattacharyya(min(max(mean_b, 0.0), 0.5))))


def jensen_bound_concave(g, mean_b):
    """Lower bound 2 g(1/2) E[b(p)] on E[g(p)]."""
    return 2.0 * g.value_at_half * float(mean_b)


def inverse_jensen(phi, samples, a, b, weights=None):
    """
    Upper bound on E[phi(X)] for convex phi and X supported on [a, b]:
    ((E[X] - a) phi(b) + (b - E[X]) phi(a)) / (b - a).
    """
    if not a < b:
        raise ValidationError(f"need a < b, got [{a}, {b}]")
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValidationError("inverse_jensen needs at least one sample")
    span = 1e-12 * (b - a)
    if np.any(x < a - span) or np.any(x > b + span):
        raise ValidationError(f"samples fall outside [{a}, {b}]")

    w = np.full(x.shape, 1.0 / x.size) if weights is None else np.asarray(weights, dtype=float) / np.sum(weights)
    mean = float(w @ x)
    bound = ((mean - a) * phi(b) + (b - mean) * phi(a)) / (b - a)
    empirical = float(w @ np.asarray(phi(x), dtype=float))
    return InverseJensenResult(
        bound=float(bound),
        empirical=empirical,
        holds=empirical <= bound + 1e-12 * (1.0 + abs(bound)),
    )
