"""
Brute-force search over rank-1 POVM families, independent of the closed
forms in app.optimal.

    J=2  projections, one basis angle
    J=3  three directions; weights are the unique solution of sum w v v^T = I
    J=4  four directions and the weight of the fourth; the other three
         weights solve the completeness constraint

Solving the weights from completeness keeps every candidate exactly on the
feasible set, so the value error is set by the angle grid alone. Every
angle axis also carries the four directions along and orthogonal to the
states, without which objectives that reward certainty (ambiguity) are
invisible to a finite grid.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeResult

from app.core import Povm, PovmElement, is_eligible, projection_povm
from app.errors import SearchError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_ANGLE_RESOLUTION = 720
DEFAULT_WEIGHT_RESOLUTION = 64
DEFAULT_REFINE_ITERS = 3
DEFAULT_CELL_BUDGET = 2 ** 18
SHRINK = 4
CHUNK = 2 ** 16
WEIGHT_TOL = 1e-12
AREA_TOL = 1e-12
RESIDUAL_TOL = 1e-10
DROP_TOL = 1e-12
MAX_TRIES = 200


@dataclass(frozen=True)
class SearchSpec:
    """
    Grid settings for brute_force_optimum.

    weight_resolution only applies to J=4, whose fourth weight is the one
    gridded weight, and is capped at 8 values per pass. J=3 weights are
    solved from completeness and J=2 has none.
    """

    J: int = 2
    angle_resolution: int = DEFAULT_ANGLE_RESOLUTION
    weight_resolution: int = DEFAULT_WEIGHT_RESOLUTION
    refine_iters: int = DEFAULT_REFINE_ITERS
    cell_budget: int = DEFAULT_CELL_BUDGET
    workers: int = 1

    def __post_init__(self):
        if self.J not in (2, 3, 4):
            raise ValidationError(f"J must be 2, 3 or 4, got {self.J}")
        if self.angle_resolution < 8 or self.weight_resolution < 8:
            raise ValidationError("angle and weight resolutions must be at least 8")
        if self.refine_iters < 0 or self.workers < 1:
            raise ValidationError("refine_iters must be >= 0 and workers >= 1")

    def coarse_counts(self):
        """Points per angle axis and per weight axis in the first pass."""
        if self.J == 2:
            return self.angle_resolution, 0
        if self.J == 3:
            return min(self.angle_resolution, max(8, int(round(self.cell_budget ** (1 / 3))))), 0
        n_w = min(self.weight_resolution, 8)
        return min(self.angle_resolution, max(8, int((self.cell_budget / n_w) ** 0.25))), n_w


def special_angles(problem):
    """Directions of s0, s1 and their orthogonal complements, in [0, pi)."""
    half = 0.5 * problem.theta
    return np.mod(np.array([-half, half, 0.5 * np.pi - half, 0.5 * np.pi + half]), np.pi)


# --- Vectorised evaluation ---

def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _family_weights(angles, extra_weight=None):
    """
    Weights w_1..w_3 with sum_j w_j v_j v_j^T = I - w_4 v_4 v_4^T.
    Writing v v^T = (I + R(2 beta))/2 this is the barycentric position of
    -w_4 z_4 / (2 - w_4) in the triangle z_j = exp(2 i beta_j).
    """
    zx, zy = np.cos(2 * angles), np.sin(2 * angles)
    if extra_weight is None:
        px = py = np.zeros(angles.shape[0])
        mass = 2.0
    else:
        mass = 2.0 - extra_weight
        px = -extra_weight * zx[:, 3] / mass
        py = -extra_weight * zy[:, 3] / mass

    x1, x2, x3 = zx[:, 0], zx[:, 1], zx[:, 2]
    y1, y2, y3 = zy[:, 0], zy[:, 1], zy[:, 2]
    area = _cross(x2 - x1, y2 - y1, x3 - x1, y3 - y1)
    # collinear points: the rounding-level area would give finite but meaningless weights
    area = np.where(np.abs(area) < AREA_TOL, np.nan, area)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.stack([
            _cross(x2 - px, y2 - py, x3 - px, y3 - py),
            _cross(x3 - px, y3 - py, x1 - px, y1 - py),
            _cross(x1 - px, y1 - py, x2 - px, y2 - py),
        ], axis=1) / area[:, None]
    weights = mass * lam if extra_weight is None else mass[:, None] * lam
    if extra_weight is not None:
        weights = np.concatenate([weights, extra_weight[:, None]], axis=1)
    return weights


def _elements(J, params):
    """Directions (n, J) and weights (n, J) for a batch of parameter vectors."""
    if J == 2:
        angles = np.stack([params[:, 0], params[:, 0] + 0.5 * np.pi], axis=1)
        return angles, np.ones_like(angles)
    if J == 3:
        angles = params[:, :3]
        return angles, _family_weights(angles)
    angles = params[:, :4]
    return angles, _family_weights(angles, params[:, 4])


def completeness_residual(angles, weights):
    """max |sum_j w_j v_j v_j^T - I| per row; NaN where a weight is undefined."""
    c, s = np.cos(angles), np.sin(angles)
    residual = np.stack([
        np.sum(weights * c * c, axis=1) - 1.0,
        np.sum(weights * c * s, axis=1),
        np.sum(weights * s * s, axis=1) - 1.0,
    ])
    return np.max(np.abs(residual), axis=0)


def _feasible(angles, weights):
    with np.errstate(invalid="ignore"):
        return np.all(weights >= -WEIGHT_TOL, axis=1) & (completeness_residual(angles, weights) <= RESIDUAL_TOL)


def evaluate_family(prior, theta, g, J, params):
    """Expected objective for each parameter row; +inf where the weights are infeasible."""
    angles, weights = _elements(J, params)
    feasible = _feasible(angles, weights)
    weights = np.clip(np.nan_to_num(weights, nan=0.0), 0.0, None)

    q0 = weights * np.cos(angles + 0.5 * theta) ** 2
    q1 = weights * np.cos(angles - 0.5 * theta) ** 2
    probs = (1.0 - prior) * q0 + prior * q1
    kept = probs >= DROP_TOL
    posteriors = np.divide(prior * q1, probs, out=np.zeros_like(probs), where=kept)
    posteriors = np.clip(posteriors, 0.0, 1.0)
    contrib = np.where(kept, probs * np.asarray(g(posteriors), dtype=float), 0.0)
    return np.where(feasible, contrib.sum(axis=1), np.inf)


def _evaluate_chunk(task):
    prior, theta, g, J, axes, start, stop = task
    shape = tuple(len(a) for a in axes)
    coords = np.unravel_index(np.arange(start, stop), shape)
    params = np.stack([axis[c] for axis, c in zip(axes, coords)], axis=1)
    values = evaluate_family(prior, theta, g, J, params)
    j = int(np.argmin(values))
    return float(values[j]), params[j]


def _grid_pass(problem, g, J, axes, executor):
    total = int(np.prod([len(a) for a in axes]))
    tasks = [
        (problem.prior, problem.theta, g, J, axes, start, min(start + CHUNK, total))
        for start in range(0, total, CHUNK)
    ]
    results = executor.map(_evaluate_chunk, tasks) if executor else map(_evaluate_chunk, tasks)

    best_value, best_params = np.inf, None
    for value, params in results:
        # strict comparison keeps the first incumbent in canonical order
        if value < best_value:
            best_value, best_params = value, params
    return best_value, best_params, total


def _angle_axis(centre, width, count, specials):
    if centre is None:
        base = np.linspace(0.0, np.pi, count, endpoint=False)
    else:
        base = np.mod(np.linspace(centre - 0.5 * width, centre + 0.5 * width, count), np.pi)
    return np.unique(np.concatenate([base, specials]))


def _weight_axis(centre, width, count):
    if centre is None:
        return np.linspace(0.0, 1.0, count)
    return np.unique(np.clip(np.linspace(centre - 0.5 * width, centre + 0.5 * width, count), 0.0, 1.0))


def build_povm(J, params):
    if J == 2:
        return projection_povm(params[0])
    angles, weights = _elements(J, np.asarray(params, dtype=float)[None, :])
    weights = np.clip(weights[0], 0.0, None)
    return Povm(tuple(PovmElement.from_angle(w, a) for w, a in zip(weights, angles[0])))


def brute_force_optimum(problem, g, spec=None):
    """
    Grid search for the minimal expected objective over the J-outcome
    family, refined `spec.refine_iters` times by shrinking the box around
    the incumbent by a factor of 4.
    """
    spec = spec or SearchSpec()
    J = spec.J
    n_angle, n_weight = spec.coarse_counts()
    specials = special_angles(problem)
    angle_dims = {2: 1, 3: 3, 4: 4}[J]

    angle_width, weight_width = np.pi, 1.0
    incumbent = None
    best_value, best_params, nfev = np.inf, None, 0

    executor = ProcessPoolExecutor(max_workers=spec.workers) if spec.workers > 1 else None
    try:
        for iteration in range(spec.refine_iters + 1):
            axes = [
                _angle_axis(None if incumbent is None else incumbent[d], angle_width, n_angle, specials)
                for d in range(angle_dims)
            ]
            if J == 4:
                axes.append(_weight_axis(None if incumbent is None else incumbent[4], weight_width, n_weight))

            value, params, cells = _grid_pass(problem, g, J, axes, executor)
            nfev += cells
            if params is not None and value < best_value:
                best_value, best_params = value, params
            if best_params is None:
                break
            incumbent = best_params
            logger.debug("Oracle J=%d pass %d: %d cells, incumbent %.12g", J, iteration, cells, best_value)

            angle_width /= SHRINK
            weight_width /= SHRINK
    finally:
        if executor is not None:
            executor.shutdown()

    if best_params is None or not np.isfinite(best_value):
        raise SearchError(f"no feasible J={J} POVM at the requested resolution")

    return OptimizeResult(
        x=best_params,
        fun=float(best_value),
        povm=build_povm(J, best_params),
        J=J,
        nfev=nfev,
        nit=spec.refine_iters + 1,
        success=True,
        status=0,
        message="Grid complete",
    )


# --- Random measurements ---

def _draw_family(rng, J, half, reach):
    """One parameter vector of the J-family using allowed directions only, or None."""
    if J == 2:
        # both basis vectors allowed <=> half <= |beta| <= reach
        return np.array([rng.choice([-1.0, 1.0]) * rng.uniform(half, reach)])
    params = rng.uniform(-reach, reach, size=J)
    if J == 4:
        params = np.append(params, rng.uniform(0.0, 1.0))
    angles, weights = _elements(J, params[None, :])
    if _feasible(angles, weights)[0] and np.all(weights >= 0.0):
        return params
    return None


def eligible_continuum_sample(problem, n, seed=0):
    """
    Random eligible POVMs with J in {2, 3, 4} built from allowed directions.
    A J=3/4 draw that keeps missing the completeness constraint (states
    close to orthogonal leave little room) falls back to a projection.
    """
    if n < 0:
        raise ValidationError(f"n must be nonnegative, got {n}")
    if problem.overlap == 1.0:
        logger.warning("Identical states admit only trivial eligible measurements")
        return [Povm((PovmElement(np.eye(2)),)) for _ in range(n)]

    rng = np.random.default_rng(seed)
    half = 0.5 * problem.theta
    reach = 0.5 * np.pi - half
    samples = []
    while len(samples) < n:
        J = int(rng.integers(2, 5))
        params = None
        for _ in range(MAX_TRIES):
            params = _draw_family(rng, J, half, reach)
            if params is not None:
                break
        if params is None:
            J, params = 2, _draw_family(rng, 2, half, reach)

        povm = build_povm(J, params)
        if not is_eligible(problem, povm):
            raise SearchError(f"drew a non-eligible J={J} POVM for pi={problem.prior:g}, c={problem.overlap:g}")
        samples.append(povm)
    return samples


def random_povm(rng, J):
    """Full-rank random POVM: E_j = S^-1/2 A_j S^-1/2 with A_j = L_j L_j^T and S = sum A_j."""
    factors = np.tril(rng.normal(size=(J, 2, 2)))
    blocks = factors @ np.transpose(factors, (0, 2, 1))
    eigvals, eigvecs = np.linalg.eigh(blocks.sum(axis=0))
    root_inv = eigvecs @ np.diag(eigvals ** -0.5) @ eigvecs.T
    return Povm(tuple(PovmElement(root_inv @ a @ root_inv) for a in blocks))
