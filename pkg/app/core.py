"""
Two pure states on the real plane, measurements on that plane, and the
posterior distributions a measurement induces.

The states are placed symmetrically about the x-axis at angles -theta/2
(s0) and +theta/2 (s1) with cos(theta) = c, so every problem is fixed by
the prior pi = Pr(X=1) and the overlap c. All objects here are immutable.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from app.errors import ValidationError
from app.objectives import binary_entropy

logger = logging.getLogger(__name__)

PSD_TOL = 1e-9
COMPLETENESS_TOL = 1e-9
DROP_TOL = 1e-12
ELIGIBILITY_TOL = 1e-8
RANK_TOL = 1e-9


@dataclass(frozen=True)
class DiscriminationProblem:
    prior: float
    overlap: float

    def __post_init__(self):
        prior = float(self.prior)
        overlap = float(self.overlap)
        if not np.isfinite(prior) or not 0.0 < prior <= 0.5:
            raise ValidationError(
                f"prior must lie in (0, 1/2], got {prior}; swap the state labels for priors above 1/2"
            )
        if not np.isfinite(overlap) or not 0.0 <= overlap <= 1.0:
            raise ValidationError(f"overlap must lie in [0, 1], got {overlap}")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "overlap", overlap)

    @property
    def theta(self):
        """Angle between the two state vectors."""
        return float(np.arccos(self.overlap))


@dataclass(frozen=True, eq=False)
class PovmElement:
    """
    One measurement operator E_j. Rank-1 elements also keep their weight
    and unit direction so that quadratic forms are evaluated exactly.
    """

    matrix: np.ndarray
    weight: float = None
    direction: np.ndarray = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.shape != (2, 2) or not np.all(np.isfinite(matrix)):
            raise ValidationError(f"POVM element must be a finite 2x2 matrix, got shape {matrix.shape}")
        if abs(matrix[0, 1] - matrix[1, 0]) > PSD_TOL:
            raise ValidationError("POVM element is not symmetric")
        matrix = 0.5 * (matrix + matrix.T)
        if np.linalg.eigvalsh(matrix)[0] < -PSD_TOL:
            raise ValidationError("POVM element is not positive semi-definite")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def rank1(cls, weight, direction):
        weight = float(weight)
        if weight < -PSD_TOL:
            raise ValidationError(f"rank-1 weight must be nonnegative, got {weight}")
        weight = max(weight, 0.0)
        direction = np.asarray(direction, dtype=float)
        norm = np.hypot(direction[0], direction[1])
        if norm == 0.0:
            raise ValidationError("rank-1 direction must be nonzero")
        if abs(norm - 1.0) > 1e-12:
            direction = direction / norm
        return cls(matrix=weight * np.outer(direction, direction), weight=weight, direction=direction)

    @classmethod
    def from_angle(cls, weight, angle):
        return cls.rank1(weight, (np.cos(angle), np.sin(angle)))

    @property
    def is_rank1(self):
        return self.direction is not None

    @property
    def angle(self):
        """Direction angle in [0, pi) of a rank-1 element (None otherwise)."""
        if self.direction is None:
            return None
        return float(np.mod(np.arctan2(self.direction[1], self.direction[0]), np.pi))

    def quadratic(self, u, v):
        """<u|E|v> for real vectors u and v."""
        if self.direction is not None:
            return self.weight * float(self.direction @ u) * float(self.direction @ v)
        return float(u @ self.matrix @ v)

    def describe(self):
        """JSON-ready view: weight and angle, plus the matrix when the element is not rank 1."""
        if self.direction is not None:
            return {"weight": self.weight, "angle": self.angle}
        eigvals, eigvecs = np.linalg.eigh(self.matrix)
        entry = {"weight": float(eigvals[1]), "angle": float(np.mod(np.arctan2(eigvecs[1, 1], eigvecs[0, 1]), np.pi))}
        if eigvals[0] > RANK_TOL:
            entry["matrix"] = self.matrix.tolist()
        return entry


@dataclass(frozen=True, eq=False)
class Povm:
    elements: tuple

    def __post_init__(self):
        elements = tuple(self.elements)
        if not elements:
            raise ValidationError("a POVM needs at least one element")
        total = sum(e.matrix for e in elements)
        residual = float(np.max(np.abs(total - np.eye(2))))
        if residual > COMPLETENESS_TOL:
            raise ValidationError(f"POVM is incomplete: max |sum E_j - I| = {residual:.3e}")
        object.__setattr__(self, "elements", elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def describe(self):
        return [e.describe() for e in self.elements]


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Outcome probabilities q_j and posteriors p_j = Pr(X=1 | j) of the kept outcomes."""

    probs: np.ndarray
    posteriors: np.ndarray
    outcomes: tuple = field(default=())

    @classmethod
    def from_entries(cls, entries):
        entries = list(entries)
        probs = np.array([q for q, _ in entries], dtype=float)
        posteriors = np.array([p for _, p in entries], dtype=float)
        if np.any(probs <= 0) or abs(probs.sum() - 1.0) > COMPLETENESS_TOL:
            raise ValidationError("outcome probabilities must be positive and sum to one")
        if np.any(posteriors < 0) or np.any(posteriors > 1):
            raise ValidationError("posteriors must lie in [0, 1]")
        return cls(probs=probs, posteriors=posteriors, outcomes=tuple(range(len(entries))))

    @property
    def entries(self):
        return [(float(q), float(p)) for q, p in zip(self.probs, self.posteriors)]

    @property
    def prior(self):
        return float(self.probs @ self.posteriors)

    def to_dict(self):
        return {
            "outcome_probs": self.probs.tolist(),
            "posteriors": self.posteriors.tolist(),
        }


# --- Operations ---

def state_vectors(problem):
    """Return (s0, s1) at angles -theta/2 and +theta/2."""
    half = 0.5 * problem.theta
    cos_half, sin_half = np.cos(half), np.sin(half)
    return np.array([cos_half, -sin_half]), np.array([cos_half, sin_half])


def not_too_skewed(problem):
    """pi/(1-pi) >= c^2, the region where the three-outcome unambiguous POVM exists."""
    return problem.prior / (1.0 - problem.prior) >= problem.overlap ** 2 - 1e-12


def transition_matrix(problem, povm):
    """q[i, j] = <s_i|E_j|s_i>."""
    s0, s1 = state_vectors(problem)
    return np.array([[e.quadratic(s, s) for e in povm] for s in (s0, s1)])


def outcome_distribution(problem, povm):
    q = transition_matrix(problem, povm)
    prior = problem.prior
    probs = (1.0 - prior) * q[0] + prior * q[1]

    keep = probs >= DROP_TOL
    if not np.all(keep):
        logger.debug("Dropping %d zero-probability outcome(s)", int(np.sum(~keep)))

    kept = probs[keep]
    posteriors = np.clip(prior * q[1, keep] / kept, 0.0, 1.0)
    return OutcomeDistribution(
        probs=kept,
        posteriors=posteriors,
        outcomes=tuple(int(j) for j in np.flatnonzero(keep)),
    )


def expected_objective(dist, g):
    """Sum_j q_j g(p_j)."""
    return float(dist.probs @ np.asarray(g(dist.posteriors), dtype=float))


def is_eligible(problem, povm, tol=ELIGIBILITY_TOL):
    """
    True iff every element attains Cauchy-Schwarz equality
    <s0|E|s0><s1|E|s1> = <s0|E|s1>^2 with a nonnegative cross term.
    """
    s0, s1 = state_vectors(problem)
    for element in povm:
        a = element.quadratic(s0, s0)
        d = element.quadratic(s1, s1)
        x = element.quadratic(s0, s1)
        if abs(a * d - x * x) > tol or x < -tol:
            return False
    return True


def projection_povm(angle):
    """Two-outcome projection whose first basis vector sits at `angle`."""
    first = np.array([np.cos(angle), np.sin(angle)])
    second = np.array([-first[1], first[0]])
    return Povm((PovmElement.rank1(1.0, first), PovmElement.rank1(1.0, second)))


def rank1_povm(weights, angles):
    """Rank-1 elements w_j v(angle_j) v(angle_j)^T completed by the remainder I - sum."""
    return complete_povm([PovmElement.from_angle(w, a) for w, a in zip(weights, angles)])


def complete_povm(elements):
    """
    Append the remainder I - sum(elements) when it is nonzero; it must be
    PSD and is stored as a rank-1 element when its small eigenvalue is ~0.
    """
    elements = list(elements)
    remainder = np.eye(2) - sum(e.matrix for e in elements)
    if np.max(np.abs(remainder)) <= COMPLETENESS_TOL:
        return Povm(tuple(elements))

    eigvals, eigvecs = np.linalg.eigh(0.5 * (remainder + remainder.T))
    if eigvals[0] < -PSD_TOL:
        raise ValidationError(f"remainder I - sum is not PSD (min eigenvalue {eigvals[0]:.3e})")
    if eigvals[0] <= RANK_TOL:
        # Rank-1 remainder: keep it as such so posteriors stay exact.
        elements.append(PovmElement.rank1(eigvals[1], eigvecs[:, 1]))
    else:
        elements.append(PovmElement(remainder))
    return Povm(tuple(elements))


def mutual_information(dist):
    """h(pi) - sum_j q_j h(p_j) in nats."""
    return float(binary_entropy(dist.prior) - dist.probs @ binary_entropy(dist.posteriors))


def map_decisions(dist):
    """MAP decision per outcome (1 iff p_j > 1/2) and the resulting error probability."""
    decisions = (dist.posteriors > 0.5).astype(int)
    error = float(dist.probs @ np.minimum(dist.posteriors, 1.0 - dist.posteriors))
    return decisions, error
