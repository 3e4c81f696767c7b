"""
Cartesian-grid experiment: closed-form optimum (and optionally a
Monte-Carlo receiver run) for every (pi, overlap or energy, objective) cell.
"""
import itertools
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from app.core import DiscriminationProblem
from app.dolinar import SimConfig, simulate
from app.errors import DiscriminationError, OutOfScopeError, UnsupportedObjectiveError, ValidationError
from app.objectives import ConvexityClass, classify, parse_objective
from app.optimal import helstrom, theorem_pure_value
from app.waveforms import constant_waveforms

logger = logging.getLogger(__name__)

COLUMNS = [
    "prior", "overlap", "energy", "objective", "class", "status", "regime",
    "value", "b_star", "helstrom", "mc_estimate", "mc_std_error", "mc_theory",
]


@dataclass(frozen=True)
class SweepSpec:
    priors: tuple
    objectives: tuple
    overlaps: tuple = None
    energies: tuple = None
    monte_carlo: bool = False
    duration: float = 0.5
    tau: float = 1e-3
    trials: int = 2000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if (self.overlaps is None) == (self.energies is None):
            raise ValidationError("give exactly one of overlaps or energies")
        if not self.priors or not self.objectives:
            raise ValidationError("priors and objectives must be non-empty")
        if self.energies is not None and min(self.energies) < 0:
            raise ValidationError("energies must be nonnegative")

    def cells(self):
        """(prior, overlap, energy) in canonical row order."""
        if self.overlaps is not None:
            return [(p, c, None) for p, c in itertools.product(self.priors, self.overlaps)]
        return [(p, float(np.exp(-0.5 * e)), e) for p, e in itertools.product(self.priors, self.energies)]


def _monte_carlo(spec, prior, energy, g, kind):
    w = constant_waveforms(gap=np.sqrt(energy / spec.duration), duration=spec.duration)
    strategy = "convex" if kind is ConvexityClass.CONVEX else "concave"
    cfg = SimConfig(tau=spec.tau, trials=spec.trials, seed=spec.seed, strategy=strategy, workers=spec.workers)
    report = simulate(w, prior, cfg, g)
    return report.estimate, report.std_error, report.theory


def run_sweep(spec):
    """
    Returns a DataFrame with one row per (cell, objective). Cells outside
    the theorem's scope keep their row with a `status` reason and NaN values.
    """
    objectives = [parse_objective(name) for name in spec.objectives]
    classes = {}
    for g in objectives:
        try:
            classes[g.name] = classify(g)
        except ValidationError as e:
            raise ValidationError(f"cannot sweep {g.name}: {e}") from e

    rows = []
    for prior, overlap, energy in spec.cells():
        problem = DiscriminationProblem(prior=prior, overlap=overlap)
        logger.debug("Processing cell pi=%.4g, c=%.4g", prior, overlap)
        for g in objectives:
            kind = classes[g.name]
            row = dict.fromkeys(COLUMNS, np.nan)
            row.update({
                "prior": problem.prior, "overlap": problem.overlap, "energy": energy,
                "objective": g.name, "class": kind.value, "status": "ok", "regime": "",
                "helstrom": helstrom(problem),
            })
            # 1. Closed form
            try:
                solution = theorem_pure_value(problem, g)
                row.update({"regime": solution.regime.value, "value": solution.value, "b_star": solution.b_star})
            except (OutOfScopeError, UnsupportedObjectiveError) as e:
                row["status"] = e.reason
                rows.append(row)
                continue

            # 2. Receiver simulation at the matching energy
            if spec.monte_carlo and kind is not ConvexityClass.NEITHER:
                cell_energy = energy if energy is not None else -2.0 * np.log(max(overlap, 1e-300))
                try:
                    row["mc_estimate"], row["mc_std_error"], row["mc_theory"] = _monte_carlo(
                        spec, problem.prior, cell_energy, g, kind
                    )
                except DiscriminationError as e:
                    logger.warning("Monte-Carlo skipped at pi=%g, c=%g: %s", prior, overlap, e)
                    row["status"] = f"mc-{e.reason}"
            rows.append(row)

    logger.info("Sweep finished: %d rows", len(rows))
    return pd.DataFrame(rows, columns=COLUMNS)
