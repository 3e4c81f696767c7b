"""
Command-line entry point.

    python main.py solve --pi 0.5 --overlap 0.6 --objective error
    python main.py classify --objective renyi:0.75
    python main.py verify --suite renyi-pk --kmax 40
    python main.py simulate --pi 0.5 --strategy convex --objective error --tau 1e-4
    python main.py sweep --pi 0.1:0.5:9 --overlap 0.1:0.9:9 --objective error

stdout carries only the JSON/CSV payload; logs go to stderr.
Exit codes: 0 ok, 1 failed verification, 2 outside the theorem's scope, 64 usage.
"""
import argparse
import logging
import sys
from dataclasses import replace

import pandas as pd

from app.core import DiscriminationProblem, map_decisions
from app.dolinar import DEFAULT_BATCH, DEFAULT_DELTA_GUARD, SimConfig, simulate
from app.errors import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, DiscriminationError, ValidationError
from app.objectives import check_admissible, classify, parse_objective
from app.optimal import helstrom, theorem_pure_value
from app.oracle import SearchSpec, brute_force_optimum
from app.report import generate_pdf_report
from app.sweep import SweepSpec, run_sweep
from app.utils import (
    FLOAT_FORMAT,
    frame_text,
    load_config,
    parse_range,
    payload_frame,
    payload_text,
    write_text,
)
from app.verify import SUITES, SuiteOptions, run_suite
from app.waveforms import constant_waveforms, load_signal_table, load_waveforms

logger = logging.getLogger("main")

DEFAULT_FORMATS = {"solve": "json", "classify": "json", "simulate": "json", "verify": "csv", "sweep": "csv"}


class UsageError(DiscriminationError):
    pass


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- Parser ---

def build_parser():
    common = CliParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default=None)
    common.add_argument("--output", default=None, help="write the payload here instead of stdout")
    common.add_argument("--config", default=None, help="file of flag = value lines")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("--verbose", action="store_true")
    noise.add_argument("--quiet", action="store_true")

    parser = CliParser(prog="main.py", description="Optimal measurements for two pure states.")
    sub = parser.add_subparsers(dest="command", parser_class=CliParser)

    p = sub.add_parser("solve", parents=[common], help="optimal measurement and value")
    p.add_argument("--pi", type=float)
    p.add_argument("--overlap", type=float)
    p.add_argument("--objective")
    p.add_argument("--oracle-j", type=int, default=0, help="also run the brute-force search with J outcomes")
    p.add_argument("--angle-resolution", type=int, default=720)

    p = sub.add_parser("classify", parents=[common], help="convexity class of an objective")
    p.add_argument("--objective")

    p = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    p.add_argument("--suite", choices=list(SUITES) + ["all"])
    p.add_argument("--samples", type=int, default=SuiteOptions.samples)
    p.add_argument("--kmax", type=int, default=SuiteOptions.kmax)
    p.add_argument("--alpha-points", type=int, default=SuiteOptions.alpha_points)
    p.add_argument("--series-order", type=int, default=SuiteOptions.series_order)
    p.add_argument("--grid", type=int, default=SuiteOptions.grid)
    p.add_argument("--tuples", type=int, default=SuiteOptions.tuples)
    p.add_argument("--angle-resolution", type=int, default=SuiteOptions.angle_resolution)
    p.add_argument("--refine-iters", type=int, default=SuiteOptions.refine_iters)
    p.add_argument("--objectives", default=None, help="comma list for the theorem2 suite")
    p.add_argument("--pdf", default=None, help="also write a PDF summary")

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo feedback receiver")
    p.add_argument("--pi", type=float)
    p.add_argument("--objective", default="error")
    p.add_argument("--strategy", default="convex", help="convex | concave | custom:<file>")
    p.add_argument("--waveform", default=None, help="waveform file; default constant gap")
    p.add_argument("--gap", type=float, default=1.0)
    p.add_argument("--duration", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=1e-4)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--delta-guard", type=float, default=DEFAULT_DELTA_GUARD)
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH)
    p.add_argument("--dump", default=None, help="per-trial CSV")

    p = sub.add_parser("sweep", parents=[common], help="grid of closed-form (and MC) values")
    p.add_argument("--pi")
    p.add_argument("--overlap", default=None)
    p.add_argument("--energy", default=None)
    p.add_argument("--objective", default="error", help="comma list")
    p.add_argument("--monte-carlo", action="store_true")
    p.add_argument("--duration", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=1e-3)
    p.add_argument("--trials", type=int, default=2000)

    return parser, sub


def parse_args(argv):
    """Parse twice: once to find --config, then with its values as defaults so flags win."""
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError(parser.format_help().rstrip())
    if args.config:
        config = load_config(args.config)
        subparser = sub.choices[args.command]
        known = {action.dest for action in subparser._actions}
        unknown = sorted(set(config) - known)
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        subparser.set_defaults(**config)
        args = parser.parse_args(argv)
    args.format = args.format or DEFAULT_FORMATS[args.command]
    return args


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command}: missing {', '.join(missing)}")


def _emit(args, payload=None, frame=None):
    if args.format == "csv":
        text = frame_text(frame if frame is not None else payload_frame(payload))
    else:
        text = payload_text(payload if payload is not None else frame.to_dict(orient="records"))
    write_text(text, args.output, sys.stdout)


# --- Subcommands ---

def cmd_solve(args):
    _require(args, "pi", "overlap", "objective")
    problem = DiscriminationProblem(prior=args.pi, overlap=args.overlap)
    g = parse_objective(args.objective)
    solution = theorem_pure_value(problem, g)

    payload = solution.to_dict()
    payload["helstrom"] = helstrom(problem)
    payload["map_error"] = map_decisions(solution.distribution)[1]
    if args.oracle_j:
        spec = SearchSpec(J=args.oracle_j, angle_resolution=args.angle_resolution, workers=args.workers)
        found = brute_force_optimum(problem, g, spec)
        payload["oracle"] = {"J": found.J, "value": found.fun, "gap": found.fun - solution.value,
                             "povm": found.povm.describe(), "nfev": found.nfev}
    _emit(args, payload=payload)
    return EXIT_OK


def cmd_classify(args):
    _require(args, "objective")
    g = parse_objective(args.objective)
    kind = classify(g)
    report = check_admissible(g)
    _emit(args, payload={"objective": g.name, "class": kind.value, "admissible": report.admissible})
    return EXIT_OK


def cmd_verify(args):
    _require(args, "suite")
    options = SuiteOptions(
        samples=args.samples, kmax=args.kmax, alpha_points=args.alpha_points, series_order=args.series_order,
        grid=args.grid, tuples=args.tuples, seed=args.seed, angle_resolution=args.angle_resolution,
        refine_iters=args.refine_iters, workers=args.workers,
    )
    if args.objectives:
        options = replace(options, objectives=tuple(s.strip() for s in args.objectives.split(",")))

    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = [run_suite(name, options) for name in names]

    if len(results) == 1:
        _emit(args, payload=results[0].to_dict() if args.format == "json" else None, frame=results[0].frame)
    else:
        summary = [r.to_dict() for r in results]
        _emit(args, payload={"suites": summary}, frame=pd.DataFrame(summary))

    if args.pdf:
        pdf = generate_pdf_report(
            f"Verification: {args.suite}",
            {r.name: r.frame for r in results},
            {r.name: "PASS" if r.ok else "FAIL" for r in results},
        )
        with open(args.pdf, "wb") as fh:
            fh.write(pdf)
        logger.info("Wrote %s", args.pdf)

    return EXIT_OK if all(r.ok for r in results) else EXIT_VIOLATION


def _sim_config(args):
    strategy, signal = args.strategy, None
    if strategy.startswith("custom:"):
        signal = load_signal_table(strategy.split(":", 1)[1])
        strategy = "custom"
    return SimConfig(
        tau=args.tau, trials=args.trials, seed=args.seed, strategy=strategy, delta_guard=args.delta_guard,
        signal=signal, batch_size=args.batch_size, workers=args.workers,
    )


def cmd_simulate(args):
    _require(args, "pi")
    if args.waveform:
        w = load_waveforms(args.waveform)
    else:
        w = constant_waveforms(gap=args.gap, duration=args.duration)
    g = parse_objective(args.objective)
    report = simulate(w, args.pi, _sim_config(args), g)

    if args.dump:
        report.trials.to_csv(args.dump, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.info("Wrote %d trials to %s", len(report.trials), args.dump)
    _emit(args, payload=report.to_dict())
    return EXIT_OK


def cmd_sweep(args):
    _require(args, "pi")
    if (args.overlap is None) == (args.energy is None):
        raise UsageError("sweep: give exactly one of --overlap or --energy")
    spec = SweepSpec(
        priors=parse_range(args.pi),
        overlaps=parse_range(args.overlap) if args.overlap is not None else None,
        energies=parse_range(args.energy) if args.energy is not None else None,
        objectives=tuple(s.strip() for s in args.objective.split(",")),
        monte_carlo=args.monte_carlo,
        duration=args.duration,
        tau=args.tau,
        trials=args.trials,
        seed=args.seed,
        workers=args.workers,
    )
    _emit(args, frame=run_sweep(spec))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "classify": cmd_classify,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv=None):
    try:
        args = parse_args(argv)
    except DiscriminationError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValidationError) as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DiscriminationError as e:
        logger.error("%s", e)
        if e.exit_code != EXIT_USAGE:
            write_text(payload_text(e.to_payload()), args.output, sys.stdout)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
