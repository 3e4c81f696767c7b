"""
Renyi-order machinery: the polynomial P_k(alpha), its generating function
Phi_alpha(t) = sum_k P_k(alpha) t^k / k!, and closed-form derivative ratios
h_alpha''/h_alpha' of the binary Renyi entropy.

Phi_alpha(t) >= 0 is the inequality that orders h_alpha relative to
h_beta; P_k(alpha) >= 0 for every k >= 3 is its term-by-term version.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pandas as pd
import sympy

from app.errors import NumericalRangeError, ValidationError
from app.objectives import SHANNON_WINDOW

logger = logging.getLogger(__name__)

ALPHA = sympy.Symbol("alpha")
EXP_LIMIT = 700.0
PK_TOL = 1e-9


@dataclass(frozen=True)
class PkReport:
    frame: pd.DataFrame
    worst_margin: float
    ok: bool


def _check_order(k, alpha):
    if int(k) != k or k < 0:
        raise ValidationError(f"k must be a nonnegative integer, got {k}")
    if not alpha >= 0:
        raise ValidationError(f"alpha must be nonnegative, got {alpha}")


def pk_terms(k, alpha):
    """The nine summands of P_k(alpha) in their displayed order (k >= 1)."""
    a = alpha
    return [
        k * (a - 1) * (2 * a) ** (k - 1),
        k * a * (2 * a - 1) ** (k - 1),
        -(2 * a) ** k,
        -(2 * a - 1) ** k,
        (a + 1) ** k,
        -(a - 1) ** k,
        -2 * k * a ** (k - 1),
        k * a,
        1,
    ]


def pk_eval(k, alpha):
    """
    P_k(alpha). Zero for k <= 2, where the Taylor coefficients of Phi vanish.
    Integral alpha is summed in exact integer arithmetic, anything else with
    math.fsum.
    """
    _check_order(k, alpha)
    k = int(k)
    if k <= 2:
        return 0.0
    alpha = float(alpha)
    if alpha.is_integer():
        return float(sum(pk_terms(k, int(alpha))))
    return math.fsum(pk_terms(k, alpha))


def pk_scale(k, alpha):
    """Sum of absolute summands; the cancellation scale of pk_eval."""
    if k <= 2:
        return 1.0
    return math.fsum(abs(term) for term in pk_terms(int(k), float(alpha)))


@lru_cache(maxsize=None)
def pk_polynomial(k):
    """P_k as an expanded integer polynomial in alpha."""
    if k <= 2:
        return sympy.Poly(0, ALPHA)
    return sympy.Poly(sympy.expand(sum(pk_terms(k, ALPHA))), ALPHA)


@lru_cache(maxsize=None)
def pk_quotient(k):
    """
    Coefficients (highest degree first) of Q_k = P_k / (alpha - 1), by
    Horner deflation of the expanded P_k.
    """
    coeffs = [int(c) for c in pk_polynomial(k).all_coeffs()]
    if len(coeffs) == 1:
        return (0,) if coeffs[0] == 0 else ()
    quotient = [coeffs[0]]
    for c in coeffs[1:-1]:
        quotient.append(c + quotient[-1])
    remainder = coeffs[-1] + quotient[-1]
    if remainder != 0:
        raise ArithmeticError(f"alpha = 1 is not a root of P_{k} (remainder {remainder})")
    return tuple(quotient)


def qk_eval(k, alpha):
    value = 0.0
    for c in pk_quotient(k):
        value = value * alpha + c
    return value


def phi_eval(alpha, t):
    """Phi_alpha(t) from its closed form."""
    if alpha < 0 or t < 0:
        raise ValidationError(f"alpha and t must be nonnegative, got alpha={alpha}, t={t}")
    a, t = float(alpha), float(t)
    if max(2 * a, a + 1) * t > EXP_LIMIT:
        raise NumericalRangeError(f"Phi_alpha(t) overflows for alpha={a}, t={t}")
    return math.fsum([
        ((a - 1) * t - 1) * math.exp(2 * a * t),
        (a * t - 1) * math.exp((2 * a - 1) * t),
        math.exp((a + 1) * t),
        -2 * t * math.exp(a * t),
        -math.exp((a - 1) * t),
        (a * t + 1) * math.exp(t),
        (a - 1) * t + 1,
    ])


def _exp_coeff(gamma, k, factorials):
    # [t^k] exp(gamma t)
    return gamma ** k / factorials[k]


def _t_exp_coeff(gamma, k, factorials):
    # [t^k] t exp(gamma t)
    if k == 0:
        return Fraction(0)
    return gamma ** (k - 1) / factorials[k - 1]


def phi_series_coeffs(alpha, K):
    """Taylor coefficients of Phi_alpha at t = 0, k = 0..K, by exact rational arithmetic."""
    if K < 0:
        raise ValidationError(f"K must be nonnegative, got {K}")
    a = Fraction(float(alpha))
    factorials = [math.factorial(k) for k in range(K + 1)]
    coeffs = []
    for k in range(K + 1):
        c = (
            (a - 1) * _t_exp_coeff(2 * a, k, factorials) - _exp_coeff(2 * a, k, factorials)
            + a * _t_exp_coeff(2 * a - 1, k, factorials) - _exp_coeff(2 * a - 1, k, factorials)
            + _exp_coeff(a + 1, k, factorials)
            - 2 * _t_exp_coeff(a, k, factorials)
            - _exp_coeff(a - 1, k, factorials)
            + a * _t_exp_coeff(Fraction(1), k, factorials) + _exp_coeff(Fraction(1), k, factorials)
        )
        if k == 0:
            c += 1
        elif k == 1:
            c += a - 1
        coeffs.append(float(c))
    return coeffs


def verify_pk_nonneg(k_max, alpha_grid):
    """Evaluate P_k on the grid for 3 <= k <= k_max and flag any value below -1e-9 * scale."""
    if k_max < 3:
        raise ValidationError(f"k_max must be at least 3, got {k_max}")
    rows = []
    for k in range(3, int(k_max) + 1):
        for alpha in alpha_grid:
            value = pk_eval(k, alpha)
            scale = pk_scale(k, alpha)
            rows.append({"k": k, "alpha": float(alpha), "value": value, "scale": scale, "margin": value / scale})
    frame = pd.DataFrame(rows, columns=["k", "alpha", "value", "scale", "margin"])
    frame["ok"] = frame["value"] >= -PK_TOL * frame["scale"]

    worst = float(frame["margin"].min())
    logger.info("P_k check: k <= %d over %d orders, worst margin %.3e", k_max, len(alpha_grid), worst)
    return PkReport(frame=frame, worst_margin=worst, ok=bool(frame["ok"].all()))


def renyi_derivative_ratio(alpha, p):
    """h_alpha''(p) / h_alpha'(p) on (0, 1/2) for alpha > 0, from closed-form derivatives."""
    alpha = float(alpha)
    if not alpha > 0:
        raise ValidationError(f"derivative ratio needs alpha > 0, got {alpha}")
    p = np.asarray(p, dtype=float)
    q = 1.0 - p
    if np.isinf(alpha):
        return 1.0 / q
    if abs(alpha - 1.0) < SHANNON_WINDOW:
        return -1.0 / (p * q * np.log(q / p))
    s = p ** alpha + q ** alpha
    ds = alpha * (p ** (alpha - 1) - q ** (alpha - 1))
    d2s = alpha * (alpha - 1) * (p ** (alpha - 2) + q ** (alpha - 2))
    return d2s / ds - ds / s


def verify_relative_convexity(alpha, beta, p_grid, tol=1e-9):
    """True iff h_alpha''/h_alpha' >= h_beta''/h_beta' at every grid point of (0, 1/2)."""
    p = np.asarray(p_grid, dtype=float)
    if np.any(p <= 0) or np.any(p >= 0.5):
        raise ValidationError("p_grid must lie inside (0, 1/2)")
    ratio_a = renyi_derivative_ratio(alpha, p)
    ratio_b = renyi_derivative_ratio(beta, p)
    return bool(np.all(ratio_a >= ratio_b - tol * (1.0 + np.abs(ratio_b))))
