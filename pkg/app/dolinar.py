"""
Discrete-time Monte-Carlo simulation of a feedback photon-counting receiver
for two coherent-state waveforms.

On step k the receiver adds a local signal ell[k] to the incoming field and
counts at most one photon, with Pr(photon | X=i) = lambda_i tau and
lambda_i = (s_i[k] + ell[k])^2. The posterior p = Pr(X=1 | history) is
updated by Bayes' rule after every step.

Two strategies are built in:
    convex   Dolinar signal tracking b(p[k]) = b(p_start) exp(-Delta[k]/2)
    concave  null the unlikely hypothesis until the posterior reaches 1/2,
             then alternate nulling s0 and s1, halting on the first photon
Any callable ell(k, t, s0, s1, posterior, photons) can be simulated as well.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from app.errors import (
    ConfigError,
    ImpossibleEventError,
    OutOfScopeError,
    UnsupportedObjectiveError,
    ValidationError,
)
from app.objectives import (
    ConvexityClass,
    bhattacharyya,
    classify,
    inverse_bhattacharyya,
    jensen_bound_concave,
    jensen_bound_convex,
)

logger = logging.getLogger(__name__)

MAX_STEP_RATE = 0.1
GUARD_RATE = 0.09
DEFAULT_DELTA_GUARD = 1e-6
DEFAULT_BATCH = 2000
HISTOGRAM_BINS = 20
STRATEGIES = ("convex", "concave", "custom")


@dataclass(frozen=True)
class SimConfig:
    tau: float
    trials: int
    seed: int = 0
    strategy: str = "convex"
    delta_guard: float = DEFAULT_DELTA_GUARD
    signal: object = None
    batch_size: int = DEFAULT_BATCH
    workers: int = 1

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {', '.join(STRATEGIES)}, got {self.strategy}")
        if self.strategy == "custom" and not callable(self.signal):
            raise ConfigError("the custom strategy needs a signal callable")
        if not 0 < self.delta_guard <= 1e-2:
            raise ConfigError(f"delta_guard must lie in (0, 1e-2], got {self.delta_guard}")
        if self.batch_size < 1 or self.workers < 1:
            raise ConfigError("batch_size and workers must be positive")


@dataclass(frozen=True)
class ConvexState:
    b_start: float
    delta: float
    photons: object


@dataclass(frozen=True)
class ConcaveState:
    prior: float
    delta: float
    steps_in_b: int


@dataclass(frozen=True)
class ConcaveStep:
    ell: float
    halt_posterior: float
    in_stage_b: bool


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    ell: np.ndarray
    photons: np.ndarray
    posterior: np.ndarray
    hypothesis: int

    @property
    def terminal(self):
        return float(self.posterior[-1])


@dataclass(frozen=True, eq=False)
class SimulationReport:
    strategy: str
    objective: str
    prior: float
    tau: float
    n_trials: int
    seed: int
    estimate: float
    std_error: float
    theory: float
    theory_reason: str
    energy: float
    mean_b: float
    b_std: float
    mean_posterior: float
    posterior_std_error: float
    halted_fraction: float
    guard_used: float
    terminal_histogram: dict
    trials: pd.DataFrame = field(repr=False, default=None)

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "objective": self.objective,
            "prior": self.prior,
            "tau": self.tau,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "theory": self.theory,
            "theory_reason": self.theory_reason,
            "energy": self.energy,
            "mean_b": self.mean_b,
            "b_std": self.b_std,
            "mean_posterior": self.mean_posterior,
            "posterior_std_error": self.posterior_std_error,
            "halted_fraction": self.halted_fraction,
            "guard_used": self.guard_used,
            "terminal_histogram": self.terminal_histogram,
        }


# --- Channel and local analysis ---

def coherent_overlap(w):
    """c = exp(-1/2 integral (s1 - s0)^2), so c^2 is the squared state overlap."""
    return float(np.exp(-0.5 * w.energy()))


def energy_gap(w, tau):
    """Delta[k] = sum_{j<k} (s1[j] - s0[j])^2 tau for k = 0..N."""
    s0, s1 = w.sample(tau)
    return np.concatenate([[0.0], np.cumsum((s1 - s0) ** 2 * tau)])


def dolinar_signal(s0, s1, p):
    """
    Local signal that makes a photon reflect the posterior p -> 1 - p:
    ell = (s0 (1-p) - s1 p) / (2p - 1).
    """
    p = np.asarray(p, dtype=float)
    if np.any(p == 0.5):
        raise ValidationError("the Dolinar signal is singular at p = 1/2; start from 1/2 - delta")
    out = (s0 * (1.0 - p) - s1 * p) / (2.0 * p - 1.0)
    return out if np.ndim(out) else float(out)


def _bayes(p, lam0, lam1, tau, photon):
    mean = (1.0 - p) * lam0 + p * lam1
    clicked = np.divide(p * lam1, mean, out=np.array(p, dtype=float, copy=True), where=mean > 0)
    silent = p * (1.0 - lam1 * tau) / (1.0 - mean * tau)
    return np.where(photon, clicked, silent)


def posterior_update(p, lambda0, lambda1, tau, photon):
    """Pr(X=1) after one step of the binary photon channel."""
    if lambda0 < 0 or lambda1 < 0:
        raise ValidationError("rates must be nonnegative")
    if max(lambda0, lambda1) * tau >= 1:
        raise ConfigError(f"step too coarse: lambda tau = {max(lambda0, lambda1) * tau:g} >= 1")
    mean = (1.0 - p) * lambda0 + p * lambda1
    if photon and mean == 0:
        raise ImpossibleEventError("a photon was observed on a step with zero total rate")
    return float(_bayes(p, lambda0, lambda1, tau, photon))


def local_delta_b(p, s0, s1, ell):
    """
    First-order expected decrease of b(p) per unit time under local signal ell:
    lambda_bar / (2 b(p)) (sqrt((1-p) p1) - sqrt(p (1-p1)))^2 with p1 the
    posterior after a photon.
    """
    b = bhattacharyya(p)
    lam0 = (s0 + ell) ** 2
    lam1 = (s1 + ell) ** 2
    mean = (1.0 - p) * lam0 + p * lam1
    if b == 0.0 or mean == 0.0:
        return 0.0
    p1 = p * lam1 / mean
    return float(mean / (2.0 * b) * (np.sqrt((1.0 - p) * p1) - np.sqrt(p * (1.0 - p1))) ** 2)


# --- Strategies ---

def convex_strategy_step(state, s0, s1):
    """
    Dolinar signal at the root of b(p) = b_start exp(-Delta/2): the smaller
    root after an even number of photons, the larger after an odd number.
    """
    small = inverse_bhattacharyya(state.b_start * np.exp(-0.5 * state.delta))
    p = np.where(np.asarray(state.photons) % 2 == 0, small, 1.0 - small)
    return dolinar_signal(s0, s1, p)


def concave_threshold(prior):
    return float(np.log((1.0 - prior) / prior))


def concave_strategy_step(state, s0, s1):
    """
    Stage (a) while Delta < log((1-pi)/pi): null s1, a photon proves X=0.
    Stage (b): alternate nulling s0 (photon proves X=1) and s1.
    """
    if state.delta < concave_threshold(state.prior):
        return ConcaveStep(ell=-s1, halt_posterior=0.0, in_stage_b=False)
    if state.steps_in_b % 2 == 0:
        return ConcaveStep(ell=-s0, halt_posterior=1.0, in_stage_b=True)
    return ConcaveStep(ell=-s1, halt_posterior=0.0, in_stage_b=True)


def convex_start(prior, s0k, s1k, tau, delta_guard):
    """
    Starting root for the convex strategy and the guard actually used.
    Dolinar rates grow like 1/(1-2p)^2, so p_start is kept low enough that
    max(lambda_0, lambda_1) tau stays below GUARD_RATE.
    """
    d_max = float(np.max(s1k - s0k)) if len(s0k) else 0.0
    r = d_max * np.sqrt(tau / GUARD_RATE)
    if r >= 1.0:
        raise ConfigError(f"tau={tau:g} is too coarse for a signal gap of {d_max:g}")
    cap = min(0.5 - delta_guard, (1.0 - r) / (2.0 - r))
    p_start = min(prior, cap)

    guard_used = 0.0
    if p_start < prior:
        guard_used = 0.5 - p_start
        if guard_used > delta_guard * (1 + 1e-9):
            logger.warning(
                "Convex strategy starts at p=%.6g instead of %.6g to keep the photon rate bounded",
                p_start, prior,
            )
    return p_start, guard_used


class _Plan:
    """Per-batch signal schedule shared by all trials of a batch."""

    def __init__(self, cfg, prior, s0k, s1k, delta):
        self.cfg = cfg
        self.prior = prior
        self.s0k, self.s1k, self.delta = s0k, s1k, delta
        self.tau = cfg.tau
        self.guard_used = 0.0
        self.stage_b_start = None
        if cfg.strategy == "convex":
            p_start, self.guard_used = convex_start(prior, s0k, s1k, cfg.tau, cfg.delta_guard)
            self.b_start = bhattacharyya(p_start)

    def signal(self, k, posterior, photons):
        s0, s1 = self.s0k[k], self.s1k[k]
        if self.cfg.strategy == "convex":
            return convex_strategy_step(ConvexState(self.b_start, self.delta[k], photons), s0, s1), None
        if self.cfg.strategy == "concave":
            steps_in_b = 0 if self.stage_b_start is None else k - self.stage_b_start
            step = concave_strategy_step(ConcaveState(self.prior, self.delta[k], steps_in_b), s0, s1)
            if step.in_stage_b and self.stage_b_start is None:
                self.stage_b_start = k
            return step.ell, step.halt_posterior
        ell = self.cfg.signal(k, k * self.tau, s0, s1, posterior, photons)
        return np.broadcast_to(np.asarray(ell, dtype=float), posterior.shape), None


def _draw(seed, trial, prior, n_steps):
    # counter-based substream per trial: results do not depend on batching
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    hypothesis = int(rng.random() < prior)
    return hypothesis, rng.random(n_steps)


def _run_batch(task):
    cfg, prior, s0k, s1k, delta, first, last, record = task
    n_steps = len(s0k)
    draws = [_draw(cfg.seed, trial, prior, n_steps) for trial in range(first, last)]
    hypotheses = np.array([h for h, _ in draws])
    uniforms = np.stack([u for _, u in draws])
    n = len(hypotheses)

    plan = _Plan(cfg, prior, s0k, s1k, delta)
    p = np.full(n, prior)
    photons = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    history = None
    if record:
        history = {"ell": np.zeros((n, n_steps)), "photons": np.zeros((n, n_steps), dtype=np.int8),
                   "posterior": np.zeros((n, n_steps + 1))}
        history["posterior"][:, 0] = p

    for k in range(n_steps):
        ell, halt_posterior = plan.signal(k, p, photons)
        lam0 = (s0k[k] + ell) ** 2
        lam1 = (s1k[k] + ell) ** 2
        mean_rate = (1.0 - p) * lam0 + p * lam1
        worst = float(np.max(np.where(active, mean_rate, 0.0))) * cfg.tau
        peak = float(np.max(np.where(active, np.maximum(lam0, lam1), 0.0))) * cfg.tau
        if worst > MAX_STEP_RATE or peak >= 1.0:
            raise ConfigError(
                f"tau={cfg.tau:g} too coarse at step {k}: lambda_bar tau = {worst:.3g}, max lambda tau = {peak:.3g}"
            )

        rate = np.where(hypotheses == 1, lam1, lam0)
        click = active & (uniforms[:, k] < rate * cfg.tau)
        p = np.where(active, _bayes(p, lam0, lam1, cfg.tau, click), p)
        photons += click
        if halt_posterior is not None and np.any(click):
            p[click] = halt_posterior
            active &= ~click

        if record:
            history["ell"][:, k] = ell
            history["photons"][:, k] = click
            history["posterior"][:, k + 1] = p

    halted = ~active
    if cfg.strategy == "concave" and plan.stage_b_start is not None:
        # the alternation returns the odds to 1 after every pair of steps
        p = np.where(halted, p, 0.5)
        if record:
            history["posterior"][~halted, -1] = 0.5

    return {
        "hypothesis": hypotheses,
        "photons": photons,
        "halted": halted,
        "terminal": p,
        "guard_used": plan.guard_used,
        "entered_stage_b": plan.stage_b_start is not None,
        "history": history,
    }


def _check_prior(prior):
    if not 0.0 < prior <= 0.5:
        raise ValidationError(f"prior must lie in (0, 1/2], got {prior}")


def simulate_trajectory(w, prior, cfg, trial=0):
    """One recorded trajectory, identical to trial `trial` of simulate()."""
    _check_prior(prior)
    s0k, s1k = w.sample(cfg.tau)
    delta = energy_gap(w, cfg.tau)
    out = _run_batch((cfg, prior, s0k, s1k, delta, trial, trial + 1, True))
    history = out["history"]
    return Trajectory(
        times=np.arange(len(s0k)) * cfg.tau,
        ell=history["ell"][0],
        photons=history["photons"][0],
        posterior=history["posterior"][0],
        hypothesis=int(out["hypothesis"][0]),
    )


def theoretical_bound(w, prior, g):
    """
    Optimal E[g(p(T))] over all receivers: g(p*) with b(p*) = b(pi) exp(-Delta(T)/2)
    for convex-admissible g, 2 b(pi) exp(-Delta(T)/2) g(1/2) for concave-admissible g
    provided Delta(T) >= log((1-pi)/pi).
    """
    kind = classify(g)
    energy = w.energy()
    b_star = bhattacharyya(prior) * np.exp(-0.5 * energy)
    if kind is ConvexityClass.NEITHER:
        raise UnsupportedObjectiveError(f"objective {g.name} is neither convex- nor concave-admissible")
    if kind is ConvexityClass.CONVEX:
        return jensen_bound_convex(g, b_star)
    if energy < concave_threshold(prior) - 1e-12:
        raise OutOfScopeError(
            f"energy {energy:g} is below log((1-pi)/pi) = {concave_threshold(prior):g}",
            "insufficient-energy",
        )
    return jensen_bound_concave(g, b_star)


def simulate(w, prior, cfg, g):
    """Run cfg.trials independent trajectories and summarise E[g(p(T))]."""
    _check_prior(prior)
    s0k, s1k = w.sample(cfg.tau)
    delta = energy_gap(w, cfg.tau)
    tasks = [
        (cfg, prior, s0k, s1k, delta, first, min(first + cfg.batch_size, cfg.trials), False)
        for first in range(0, cfg.trials, cfg.batch_size)
    ]
    logger.info("Simulating %d trials x %d steps (%s strategy, %d batches)",
                cfg.trials, len(s0k), cfg.strategy, len(tasks))

    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
            batches = list(executor.map(_run_batch, tasks))
    else:
        batches = [_run_batch(task) for task in tasks]

    terminal = np.concatenate([b["terminal"] for b in batches])
    halted = np.concatenate([b["halted"] for b in batches])
    values = np.asarray(g(terminal), dtype=float)
    b_values = bhattacharyya(terminal)
    n = len(terminal)

    def std_error(x):
        return float(np.std(x, ddof=1) / np.sqrt(n)) if n > 1 else 0.0

    if cfg.strategy == "concave" and not batches[0]["entered_stage_b"]:
        logger.warning("Energy never reached log((1-pi)/pi); the concave strategy stayed in stage (a)")

    try:
        theory, reason = theoretical_bound(w, prior, g), None
    except (OutOfScopeError, UnsupportedObjectiveError) as e:
        theory, reason = None, e.reason

    counts, edges = np.histogram(terminal, bins=HISTOGRAM_BINS, range=(0.0, 1.0))
    trials = pd.DataFrame({
        "trial": np.arange(n),
        "hypothesis": np.concatenate([b["hypothesis"] for b in batches]),
        "photons": np.concatenate([b["photons"] for b in batches]),
        "halted": halted,
        "terminal_posterior": terminal,
        "objective": values,
    })

    return SimulationReport(
        strategy=cfg.strategy if cfg.strategy != "custom" else getattr(cfg.signal, "name", "custom"),
        objective=g.name,
        prior=float(prior),
        tau=float(cfg.tau),
        n_trials=n,
        seed=int(cfg.seed),
        estimate=float(np.mean(values)),
        std_error=std_error(values),
        theory=theory,
        theory_reason=reason,
        energy=w.energy(),
        mean_b=float(np.mean(b_values)),
        b_std=float(np.std(b_values)),
        mean_posterior=float(np.mean(terminal)),
        posterior_std_error=std_error(terminal),
        halted_fraction=float(np.mean(halted)) if cfg.strategy == "concave" else 0.0,
        guard_used=float(batches[0]["guard_used"]),
        terminal_histogram={"edges": edges.tolist(), "counts": counts.tolist()},
        trials=trials,
    )
