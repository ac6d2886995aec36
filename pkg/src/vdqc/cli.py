"""Command-line entry point: ``vdqc {thresholds, game, protocol, experiment}``.

Exit codes: 0 success, 1 invalid input, 2 infeasible under ``--strict``,
3 enumeration guard, 4 a bound check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bounds import BoundsDomainError, InfeasibleParameters, ThresholdInputs, alpha_from_q, min_rounds, threshold_report
from .circuitsim import CircuitParseError, acceptance_probability, parse_circuit
from .experiments import (
    ConfigError,
    OutOfRegime,
    OutOfRegimeWarning,
    apply_overrides,
    load_config,
    run_config,
    write_outputs,
)
from .game import EnumerationTooLarge, GameParams, exact_win_probability, monte_carlo_win_probability, parse_strategy
from .montecarlo import DEFAULT_SEED, block_rng, stream_id
from .protocol import ProtocolParams, plan_from_mask, run_protocol

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2
EXIT_GUARD = 3
EXIT_BOUND_FAILED = 4


def _error(message: str, code: int = EXIT_INVALID) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _print_json(obj: dict) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


def cmd_thresholds(args: argparse.Namespace) -> int:
    if args.alpha is not None and args.q is not None:
        return _error("give --alpha or --q, not both")
    try:
        alpha = alpha_from_q(args.q) if args.q is not None else (0.25 if args.alpha is None else args.alpha)
        if alpha <= 0:
            raise BoundsDomainError(f"alpha must lie in (0, 1/2), got {alpha!r}")
        N = args.n
        if N is None:
            N = min_rounds(alpha, args.delta, args.epsilon, args.target_p_noise)
        report = threshold_report(ThresholdInputs(N, alpha, args.delta, args.epsilon))
    except BoundsDomainError as exc:
        return _error(str(exc))
    except InfeasibleParameters as exc:
        return _error(str(exc), EXIT_INFEASIBLE)

    d = report.as_dict()
    order = ("N", "alpha", "delta", "epsilon", "A", "A_prime", "f", "g", "w", "noise_threshold", "feasible_A", "feasible_f")
    width = max(len(k) for k in order)
    for key in order:
        value = d[key]
        text = f"{value:.10g}" if isinstance(value, float) else str(value)
        print(f"{key:<{width}}  {text}")
    _print_json(d)
    if args.strict and not report.feasible:
        return _error("parameter point is infeasible (A < 100, f < 0.9 or no positive noise margin)", EXIT_INFEASIBLE)
    return EXIT_OK


# ---------------------------------------------------------------------------
# game
# ---------------------------------------------------------------------------


def _parse_set(text: str) -> frozenset[int]:
    return frozenset(int(x) for x in text.replace(",", " ").split())


def cmd_game(args: argparse.Namespace) -> int:
    try:
        params = GameParams(args.n, args.alpha, args.w, args.epsilon)
    except ValueError as exc:
        return _error(str(exc))

    if args.mode == "exact":
        if args.set is None:
            return _error("game exact needs --set")
        try:
            S = _parse_set(args.set)
            p = exact_win_probability(params, S)
        except EnumerationTooLarge as exc:
            return _error(str(exc), EXIT_GUARD)
        except ValueError as exc:
            return _error(str(exc))
        print(f"{p:.6f}")
        row = {"mode": "exact", "N": params.N, "alpha": params.alpha, "w": params.w,
               "epsilon": params.epsilon, "strategy": "fixed:" + ",".join(map(str, sorted(S))), "probability": p}
    else:
        try:
            if args.set is not None:
                strategy = parse_strategy("fixed:" + ",".join(map(str, sorted(_parse_set(args.set)))))
            else:
                strategy = parse_strategy(args.strategy, params.N)
            summary = monte_carlo_win_probability(params, strategy, args.trials, args.seed, workers=args.workers)
        except ValueError as exc:
            return _error(str(exc))
        print(f"{summary.point_estimate:.6f}  [{summary.ci_low:.6f}, {summary.ci_high:.6f}]  "
              f"({summary.successes}/{summary.trials}, {summary.level:.0%} {summary.method})")
        row = {"mode": "simulate", "N": params.N, "alpha": params.alpha, "w": params.w,
               "epsilon": params.epsilon, "strategy": strategy.label, **summary.as_dict()}
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(row), lineterminator="\n")
            writer.writeheader()
            writer.writerow(row)
    return EXIT_OK


# ---------------------------------------------------------------------------
# protocol
# ---------------------------------------------------------------------------


def cmd_protocol(args: argparse.Namespace) -> int:
    if (args.circuit is None) == (args.p_zero is None):
        return _error("give exactly one of --circuit or --p-zero")
    p_zero = args.p_zero
    if args.circuit is not None:
        try:
            circuit = parse_circuit(Path(args.circuit).read_text(encoding="utf-8"))
            p_zero = acceptance_probability(circuit)
        except CircuitParseError as exc:
            return _error(f"{args.circuit}: {exc}")
        except (OSError, ValueError) as exc:
            return _error(f"{args.circuit}: {exc}")
    try:
        w = args.w
        if w is None:
            report = threshold_report(ThresholdInputs(args.n, alpha_from_q(args.q), args.delta))
            w = report.w
        params = ProtocolParams(N=args.n, w=w, p_noise=args.p_noise, p_zero=min(max(p_zero, 0.0), 1.0), q=args.q)
        strategy = parse_strategy(args.attack, args.n)
    except (ValueError, BoundsDomainError) as exc:
        return _error(str(exc))

    label = params.instance_label.value
    print(f"p_zero = {params.p_zero:.6g}  instance = {label}  w = {params.w:.6g}")
    stream = stream_id("cli-protocol", params.N, strategy.label)
    kinds: dict[str, int] = {}
    for t in range(args.trials):
        rng = block_rng(args.seed, stream, t)
        mask = strategy.masks(rng, 1, params.N)[0]
        plan = plan_from_mask(mask) if mask.any() else None
        verdict, counts = run_protocol(params, plan, rng)
        kinds[str(verdict)] = kinds.get(str(verdict), 0) + 1
        if args.trials == 1 or args.verbose:
            print(json.dumps(counts.record(verdict), sort_keys=True))
    if args.trials > 1:
        for key in sorted(kinds):
            print(f"{key:<16} {kinds[key]:>8}  {kinds[key] / args.trials:.4f}")
    else:
        only = next(iter(kinds))
        print(only[:1].upper() + only[1:])
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------


def cmd_experiment(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
        config = apply_overrides(config, args.set or [])
        if args.seed is not None:
            config["seed"] = args.seed
        if args.trials is not None:
            config["trials"] = args.trials
        with warnings.catch_warnings():
            warnings.simplefilter("always", OutOfRegimeWarning)
            report = run_config(config, workers=args.workers, allow_out_of_regime=args.allow_out_of_regime or None)
    except (ConfigError, OutOfRegime, BoundsDomainError, InfeasibleParameters, ValueError, OSError) as exc:
        return _error(str(exc))
    for flag in report.out_of_regime:
        print(f"OUT OF REGIME: {flag}", file=sys.stderr)
    paths = write_outputs(report, config, args.out)
    for row in report.rows:
        print(f"{'PASS' if row.passed else 'FAIL'}  {row.strategy:<20} {row.successes}/{row.trials}  "
              f"estimate={row.estimate:.6g}  ci_high={row.ci_high:.6g}")
    for check in report.extra.get("oracle_checks", []):
        print(f"{'PASS' if check['agree'] else 'FAIL'}  oracle N={check['N']} exact={check['exact']:.6g} "
              f"estimate={check['estimate']:.6g}")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK if report.passed else EXIT_BOUND_FAILED


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdqc", description="Noise thresholds and verification experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thresholds", help="derived quantities A, A', f, g, w and the noise threshold")
    p.add_argument("--alpha", type=float)
    p.add_argument("--q", type=float, help="inherent error probability; sets alpha = (1-2q)/(2-2q)")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--n", type=int, help="round count; default is the least feasible N")
    p.add_argument("--target-p-noise", type=float, default=0.0)
    p.add_argument("--strict", action="store_true", help="exit 2 when the point is infeasible")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("game", help="the avoidance game")
    p.add_argument("mode", choices=("simulate", "exact"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--w", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--set", help="prover set, e.g. '1,2,3'")
    p.add_argument("--strategy", default="empty", help="empty | full | uniform:m | random:p | fixed:1,2")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV file for the result row")
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("protocol", help="run the multi-round protocol")
    p.add_argument("--circuit", help="circuit text file; its last-wire zero probability sets p_zero")
    p.add_argument("--p-zero", type=float)
    p.add_argument("--n", type=int, default=150_742)
    p.add_argument("--q", type=float, default=1 / 3)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--w", type=float, help="abort fraction; default derives from N, q and delta")
    p.add_argument("--p-noise", type=float, default=0.0)
    p.add_argument("--attack", default="empty", help="rounds given a non-benign attack: empty | full | uniform:m | ...")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("experiment", help="run an experiment config and write CSV/JSON (and SVG)")
    p.add_argument("config", help="JSON config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a top-level config key")
    p.add_argument("--out", default="results")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--allow-out-of-regime", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    np.seterr(all="ignore")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
