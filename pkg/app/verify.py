"""
Invariant suites behind `main.py verify`.

Each suite returns a VerificationResult whose frame has one row per checked
case and a boolean `ok` column; the suite passes when every row does.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from app.core import DiscriminationProblem, not_too_skewed, outcome_distribution
from app.dolinar import dolinar_signal, local_delta_b
from app.errors import ValidationError
from app.objectives import (
    ConvexityClass,
    bhattacharyya,
    classify,
    parse_objective,
    renyi,
)
from app.optimal import helstrom, min_error_projection, theorem_pure_value, unambiguous_povm
from app.oracle import SearchSpec, brute_force_optimum, eligible_continuum_sample, random_povm
from app.renyi import phi_series_coeffs, pk_eval, pk_scale, verify_pk_nonneg

logger = logging.getLogger(__name__)

LEMMA1_TOL = 1e-9
EXACT_TOL = 1e-10
ORACLE_ABOVE_TOL = 5e-4
# the J=4 grid has fewer points per angle axis
ORACLE_ABOVE_TOLS = {2: ORACLE_ABOVE_TOL, 3: ORACLE_ABOVE_TOL, 4: 4 * ORACLE_ABOVE_TOL}
ORACLE_FAMILIES = (2, 3, 4)
ORACLE_BELOW_TOL = 1e-6
SERIES_TOL = 1e-10
LOCAL_TOL = 1e-12
LOCAL_EQ_TOL = 1e-10

CONVEX_OBJECTIVES = ("error", "entropy", "renyi:2", "renyi:4")
CONCAVE_OBJECTIVES = ("ambiguity", "renyi:0.5", "renyi:0.25")
SERIES_ORDERS = (0.25, 0.5, 2.0, 5.0)

# order -> expected class, including the intermediate orders
CLASSIFICATION_TABLE = {
    1.0: ConvexityClass.CONVEX,
    1.5: ConvexityClass.CONVEX,
    2.0: ConvexityClass.CONVEX,
    4.0: ConvexityClass.CONVEX,
    10.0: ConvexityClass.CONVEX,
    math.inf: ConvexityClass.CONVEX,
    0.0: ConvexityClass.CONCAVE,
    0.1: ConvexityClass.CONCAVE,
    0.25: ConvexityClass.CONCAVE,
    0.5: ConvexityClass.CONCAVE,
    0.6: ConvexityClass.NEITHER,
    0.75: ConvexityClass.NEITHER,
    0.9: ConvexityClass.CONVEX,
}


@dataclass(frozen=True)
class SuiteOptions:
    samples: int = 200
    kmax: int = 40
    alpha_points: int = 2001
    alpha_max: float = 10.0
    series_order: int = 25
    grid: int = 10
    tuples: int = 10_000
    seed: int = 0
    angle_resolution: int = 720
    refine_iters: int = 3
    workers: int = 1
    objectives: tuple = field(default=CONVEX_OBJECTIVES + CONCAVE_OBJECTIVES)


@dataclass(frozen=True, eq=False)
class VerificationResult:
    name: str
    frame: pd.DataFrame
    ok: bool
    summary: dict

    def to_dict(self):
        return {"suite": self.name, "ok": self.ok, "rows": len(self.frame), **self.summary}


def _result(name, frame, **summary):
    ok = bool(frame["ok"].all()) if len(frame) else True
    failures = int((~frame["ok"]).sum()) if len(frame) else 0
    if ok:
        logger.info("Suite %s passed (%d cases)", name, len(frame))
    else:
        logger.warning("Suite %s: %d of %d cases failed", name, failures, len(frame))
    return VerificationResult(name=name, frame=frame, ok=ok, summary={"failures": failures, **summary})


def _problem_grid(n, prior_range=(0.05, 0.5), overlap_range=(0.0, 0.99)):
    for prior in np.linspace(*prior_range, n):
        for overlap in np.linspace(*overlap_range, n):
            yield DiscriminationProblem(prior=float(prior), overlap=float(overlap))


def _bhattacharyya_average(problem, povm):
    dist = outcome_distribution(problem, povm)
    return float(dist.probs @ bhattacharyya(dist.posteriors))


# --- Suites ---

def lemma1_suite(options):
    """
    Eligible measurements all achieve sum_j q_j b(p_j) = c b(pi); arbitrary
    full-rank measurements never do better.
    """
    problems = list(_problem_grid(5))
    per_problem = max(1, math.ceil(options.samples / len(problems)))
    rng = np.random.default_rng(options.seed)
    rows = []

    for i, problem in enumerate(problems):
        target = problem.overlap * bhattacharyya(problem.prior)
        for povm in eligible_continuum_sample(problem, per_problem, seed=options.seed + i):
            value = _bhattacharyya_average(problem, povm)
            rows.append({
                "kind": "eligible", "prior": problem.prior, "overlap": problem.overlap, "J": len(povm),
                "value": value, "target": target, "margin": value - target,
                "ok": abs(value - target) < LEMMA1_TOL,
            })
        for _ in range(per_problem):
            povm = random_povm(rng, int(rng.integers(2, 5)))
            value = _bhattacharyya_average(problem, povm)
            rows.append({
                "kind": "random", "prior": problem.prior, "overlap": problem.overlap, "J": len(povm),
                "value": value, "target": target, "margin": value - target,
                "ok": value >= target - LEMMA1_TOL,
            })

    frame = pd.DataFrame(rows)
    eligible = frame[frame["kind"] == "eligible"]
    return _result("lemma1", frame, max_eligible_gap=float(eligible["margin"].abs().max()))


def _theorem2_row(g, kind, problem, J, theory, found):
    gap = found.fun - theory
    attains = J >= 3 or kind is ConvexityClass.CONVEX
    if attains:
        check = "attains"
        ok = -ORACLE_BELOW_TOL <= gap <= ORACLE_ABOVE_TOLS[J]
    elif g.name == "ambiguity" and 0.0 < problem.overlap < 1.0:
        # two outcomes cannot certify both hypotheses
        check = "strictly-above"
        ok = gap > 0.0
    else:
        check = "lower-bound"
        ok = gap >= -ORACLE_BELOW_TOL
    return {
        "objective": g.name, "class": kind.value, "prior": problem.prior, "overlap": problem.overlap,
        "J": J, "theory": theory, "oracle": found.fun, "gap": gap, "check": check, "ok": ok,
    }


def theorem2_suite(options):
    """
    Closed-form optimum against the brute-force oracle on a (pi, c) grid, for
    J = 2, 3 and 4 outcomes. Every family stays above the closed form; the
    family that contains the optimal measurement reaches it, and four
    outcomes never beat three.
    """
    rows = []
    for spec in options.objectives:
        g = parse_objective(spec)
        kind = classify(g)
        if kind is ConvexityClass.NEITHER:
            raise ValidationError(f"theorem2 needs convex- or concave-admissible objectives, got {spec}")

        for problem in _problem_grid(options.grid):
            if kind is ConvexityClass.CONCAVE and not not_too_skewed(problem):
                continue
            logger.debug("Processing %s at pi=%.4g, c=%.4g", spec, problem.prior, problem.overlap)
            theory = theorem_pure_value(problem, g).value
            found = {}
            for J in ORACLE_FAMILIES:
                search = SearchSpec(
                    J=J,
                    angle_resolution=options.angle_resolution,
                    refine_iters=options.refine_iters,
                    workers=options.workers,
                )
                found[J] = brute_force_optimum(problem, g, search)
                rows.append(_theorem2_row(g, kind, problem, J, theory, found[J]))

            best_three = min(found[3].fun, theory)
            rows[-1]["ok"] = rows[-1]["ok"] and found[4].fun >= best_three - ORACLE_BELOW_TOL

    frame = pd.DataFrame(rows)
    return _result(
        "theorem2", frame,
        max_gap=float(frame["gap"].max()) if len(frame) else 0.0,
        min_gap=float(frame["gap"].min()) if len(frame) else 0.0,
    )


def renyi_pk_suite(options):
    alphas = np.linspace(0.0, options.alpha_max, options.alpha_points)
    report = verify_pk_nonneg(options.kmax, alphas)
    frame = report.frame

    # P_k(1) = 0 and P_0..P_2 = 0 identically
    extra = [
        {"k": k, "alpha": 1.0, "value": pk_eval(k, 1.0), "scale": pk_scale(k, 1.0), "margin": 0.0,
         "ok": abs(pk_eval(k, 1.0)) <= LOCAL_TOL * pk_scale(k, 1.0)}
        for k in range(3, options.kmax + 1)
    ]
    extra += [
        {"k": k, "alpha": float(a), "value": pk_eval(k, a), "scale": 1.0, "margin": 0.0, "ok": pk_eval(k, a) == 0.0}
        for k in range(3) for a in (0.0, 0.5, 1.0, 2.0)
    ]
    frame = pd.concat([frame, pd.DataFrame(extra)], ignore_index=True)
    return _result("renyi-pk", frame, worst_margin=report.worst_margin)


def renyi_series_suite(options):
    """Taylor coefficients of Phi_alpha against P_k(alpha)/k!."""
    rows = []
    for alpha in SERIES_ORDERS:
        coeffs = phi_series_coeffs(alpha, options.series_order)
        for k, coeff in enumerate(coeffs):
            expected = pk_eval(k, alpha) / math.factorial(k)
            scale = max(abs(expected), pk_scale(k, alpha) / math.factorial(k))
            error = abs(coeff - expected)
            rows.append({
                "alpha": alpha, "k": k, "coefficient": coeff, "expected": expected,
                "relative_error": error / scale, "ok": error <= SERIES_TOL * scale,
            })
    frame = pd.DataFrame(rows)
    return _result("renyi-series", frame, max_relative_error=float(frame["relative_error"].max()))


def local_db_suite(options):
    """
    Local Bhattacharyya improvement never exceeds b(p)(s1-s0)^2 / 2 and
    reaches it exactly when ell lies outside (-s1, -s0); the Dolinar signal
    maps the posterior after a photon to 1 - p.
    """
    rng = np.random.default_rng(options.seed)
    rows = []
    for _ in range(options.tuples):
        p = float(rng.uniform(0.0, 1.0))
        s0, s1 = np.sort(rng.uniform(-2.0, 2.0, size=2))
        ell = float(rng.uniform(-3.0, 3.0))

        db = local_delta_b(p, s0, s1, ell)
        bound = 0.5 * bhattacharyya(p) * (s1 - s0) ** 2
        outside = not (-s1 < ell < -s0)
        ok = db <= bound + LOCAL_TOL and (not outside or abs(db - bound) <= LOCAL_EQ_TOL)

        flip_error = 0.0
        if abs(p - 0.5) > 1e-3 and s1 - s0 > 1e-6:
            signal = dolinar_signal(s0, s1, p)
            lam0, lam1 = (s0 + signal) ** 2, (s1 + signal) ** 2
            flip_error = abs(p * lam1 / ((1 - p) * lam0 + p * lam1) - (1 - p))
            ok = ok and flip_error <= LOCAL_EQ_TOL

        rows.append({
            "p": p, "s0": s0, "s1": s1, "ell": ell, "delta_b": db, "bound": bound,
            "outside": outside, "flip_error": flip_error, "ok": ok,
        })
    frame = pd.DataFrame(rows)
    return _result("local-db", frame, max_flip_error=float(frame["flip_error"].max()))


def helstrom_suite(options):
    rows = []
    for problem in _problem_grid(20):
        value = min_error_projection(problem).value
        expected = helstrom(problem)
        rows.append({
            "prior": problem.prior, "overlap": problem.overlap, "value": value, "helstrom": expected,
            "error": abs(value - expected), "ok": abs(value - expected) <= EXACT_TOL,
        })
    frame = pd.DataFrame(rows)
    return _result("helstrom", frame, max_error=float(frame["error"].max()))


def backward_suite(options):
    """
    Backward channels of the two optimal measurements: a symmetric channel
    (p_0 + p_1 = 1) for the projection, an erasure channel with posteriors
    in {0, 1/2, 1} for the unambiguous POVM.
    """
    rows = []
    for problem in _problem_grid(20):
        posteriors = min_error_projection(problem).distribution.posteriors
        symmetric = abs(posteriors.sum() - 1.0) if len(posteriors) == 2 else 0.0
        row = {"prior": problem.prior, "overlap": problem.overlap, "symmetry_error": symmetric,
               "erasure_error": 0.0, "uncertain_error": 0.0}

        if not_too_skewed(problem):
            dist = unambiguous_povm(problem).distribution
            nearest = np.array([0.0, 0.5, 1.0])[np.argmin(np.abs(dist.posteriors[:, None] - [0.0, 0.5, 1.0]), axis=1)]
            row["erasure_error"] = float(np.max(np.abs(dist.posteriors - nearest)))
            uncertain = float(dist.probs[nearest == 0.5].sum())
            row["uncertain_error"] = abs(uncertain - 2 * bhattacharyya(problem.prior) * problem.overlap)

        row["ok"] = max(row["symmetry_error"], row["erasure_error"], row["uncertain_error"]) <= EXACT_TOL
        rows.append(row)
    return _result("backward", pd.DataFrame(rows))


def classify_suite(options):
    rows = []
    for alpha, expected in CLASSIFICATION_TABLE.items():
        g = renyi(alpha)
        found = classify(g)
        rows.append({"objective": g.name, "expected": expected.value, "found": found.value, "ok": found is expected})
    return _result("classify", pd.DataFrame(rows))


SUITES = {
    "lemma1": lemma1_suite,
    "theorem2": theorem2_suite,
    "renyi-pk": renyi_pk_suite,
    "renyi-series": renyi_series_suite,
    "local-db": local_db_suite,
    "helstrom": helstrom_suite,
    "backward": backward_suite,
    "classify": classify_suite,
}


def run_suite(name, options=None):
    if name not in SUITES:
        raise ValidationError(f"unknown suite '{name}'; choose from {', '.join(SUITES)}")
    options = options or SuiteOptions()
    logger.info("Running suite %s", name)
    return SUITES[name](options)
