"""
Closed-form optimal measurements for two pure states.

Convex-admissible objectives are minimised by the minimum-error
(Helstrom) projection, concave-admissible ones by the three-outcome
unambiguous POVM; in both cases the optimal value depends on the problem
only through b* = b(pi) * c.
"""
import logging
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from app.core import (
    DiscriminationProblem,
    Povm,
    PovmElement,
    complete_povm,
    expected_objective,
    mutual_information,
    not_too_skewed,
    outcome_distribution,
    projection_povm,
    state_vectors,
    transition_matrix,
)
from app.errors import OutOfScopeError, UnsupportedObjectiveError
from app.objectives import (
    ConvexityClass,
    bhattacharyya,
    builtin_objective,
    classify,
    jensen_bound_concave,
    jensen_bound_convex,
)

logger = logging.getLogger(__name__)

VALUE_TOL = 1e-9


class Regime(str, Enum):
    PROJECTION = "projection"
    THREE_ELEMENT = "three-element"
    VERY_SKEWED = "very-skewed-projection"


@dataclass(frozen=True, eq=False)
class OptimalSolution:
    problem: DiscriminationProblem
    povm: Povm
    value: float
    distribution: object
    regime: Regime
    objective: str

    @property
    def b_star(self):
        return bhattacharyya(self.problem.prior) * self.problem.overlap

    def to_dict(self):
        payload = {
            "prior": self.problem.prior,
            "overlap": self.problem.overlap,
            "objective": self.objective,
            "regime": self.regime.value,
            "value": self.value,
            "b_star": self.b_star,
            "povm": self.povm.describe(),
        }
        payload.update(self.distribution.to_dict())
        payload["transition_matrix"] = transition_matrix(self.problem, self.povm).tolist()
        payload["mutual_information"] = mutual_information(self.distribution)
        return payload


def _solution(problem, povm, regime, g):
    dist = outcome_distribution(problem, povm)
    return OptimalSolution(
        problem=problem,
        povm=povm,
        value=expected_objective(dist, g),
        distribution=dist,
        regime=regime,
        objective=g.name,
    )


def helstrom(problem):
    """Minimum error probability 1/2 [1 - sqrt(1 - 4 pi (1-pi) c^2)]."""
    pi, c = problem.prior, problem.overlap
    return 0.5 * (1.0 - np.sqrt(max(0.0, 1.0 - 4.0 * pi * (1.0 - pi) * c * c)))


def min_error_angle(problem):
    """Rotation phi of the projection bisector: tan(phi) = (1 - 2 pi) cot(theta)."""
    return float(np.arctan2((1.0 - 2.0 * problem.prior) * problem.overlap, np.sin(problem.theta)))


def projection_error(problem, phi):
    """Error probability of the projection whose bisector is rotated by phi/2."""
    pi, theta = problem.prior, problem.theta
    return 0.5 * ((1.0 - pi) * (1.0 - np.sin(theta + phi)) + pi * (1.0 - np.sin(theta - phi)))


def min_error_projection(problem, g=None):
    """
    The Helstrom projection. Outcome 0 decides X=0; its posterior p_0 and
    that of outcome 1 satisfy p_0 + p_1 = 1. Identical states (c = 1)
    give the trivial single-outcome measurement.
    """
    g = g or builtin_objective("error")
    if problem.overlap == 1.0:
        povm = Povm((PovmElement(np.eye(2)),))
    else:
        phi = min_error_angle(problem)
        povm = projection_povm(-0.25 * np.pi + 0.5 * phi)
    return _solution(problem, povm, Regime.PROJECTION, g)


def unambiguous_povm(problem, g=None):
    """
    Three-outcome POVM: a_0 |psi_0><psi_0| with psi_0 orthogonal to s1
    certifies X=0, a_1 |psi_1><psi_1| with psi_1 orthogonal to s0 certifies
    X=1, and the rank-1 remainder is inconclusive with posterior 1/2.
    Very skewed problems get the projection onto {psi_0, s1} instead.
    """
    g = g or builtin_objective("ambiguity")
    pi, c = problem.prior, problem.overlap
    s0, s1 = state_vectors(problem)
    cos_half, sin_half = s1
    psi0 = np.array([sin_half, -cos_half])
    psi1 = np.array([sin_half, cos_half])

    if not not_too_skewed(problem):
        logger.debug("pi=%.6g, c=%.6g is very skewed; projecting onto the basis of s1", pi, c)
        povm = Povm((PovmElement.rank1(1.0, psi0), PovmElement.rank1(1.0, s1)))
        return _solution(problem, povm, Regime.VERY_SKEWED, g)

    sin_sq = np.sin(problem.theta) ** 2
    if sin_sq == 0.0:
        povm = Povm((PovmElement(np.eye(2)),))
        return _solution(problem, povm, Regime.THREE_ELEMENT, g)

    odds = np.sqrt(pi / (1.0 - pi))
    a0 = (1.0 - odds * c) / sin_sq
    a1 = max(0.0, (1.0 - c / odds) / sin_sq)
    povm = complete_povm([PovmElement.rank1(a0, psi0), PovmElement.rank1(a1, psi1)])
    return _solution(problem, povm, Regime.THREE_ELEMENT, g)


def certainty_probability(problem):
    """Probability 1 - 2 b(pi) c of a conclusive unambiguous outcome."""
    if not not_too_skewed(problem):
        raise OutOfScopeError("unambiguous optimum is not defined for very skewed problems", "very-skewed")
    return 1.0 - 2.0 * bhattacharyya(problem.prior) * problem.overlap


def theorem_pure_value(problem, g):
    """
    Optimal expected objective and a measurement achieving it:
    g(p*) with b(p*) = b(pi) c for convex-admissible g (Helstrom projection),
    2 b(pi) c g(1/2) for concave-admissible g (unambiguous POVM).
    """
    kind = classify(g)
    b_star = bhattacharyya(problem.prior) * problem.overlap

    if kind is ConvexityClass.NEITHER:
        raise UnsupportedObjectiveError(f"objective {g.name} is neither convex- nor concave-admissible")

    if kind is ConvexityClass.CONVEX:
        solution = min_error_projection(problem, g)
        value = jensen_bound_convex(g, b_star)
    else:
        if not not_too_skewed(problem):
            raise OutOfScopeError(
                f"pi={problem.prior:g}, c={problem.overlap:g} is very skewed; no optimality claim for {g.name}",
                "very-skewed",
            )
        solution = unambiguous_povm(problem, g)
        value = jensen_bound_concave(g, b_star)

    if abs(solution.value - value) > VALUE_TOL:
        logger.warning(
            "Closed form %.12g and measured value %.12g disagree for %s at pi=%g, c=%g",
            value, solution.value, g.name, problem.prior, problem.overlap,
        )
    return replace(solution, value=value)


def minimax_value(c, g):
    """The uniform-prior optimum, which is the minimax rule."""
    return theorem_pure_value(DiscriminationProblem(prior=0.5, overlap=c), g)
