"""Reproducible Monte Carlo experiments for the abort, soundness and game bounds.

Every decision compares the upper end of a confidence interval (Wilson with
continuity correction, 99% by default) against ``delta``; a PASS means the
data are consistent with the bound, not that the bound is proved.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import platform
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema
import numpy as np

from . import __version__
from .bounds import (
    ThresholdInputs,
    alpha_from_q,
    exact_binomial_cdf,
    exact_binomial_sf,
    exact_hypergeom_cdf,
    exact_hypergeom_sf,
    hoeffding_lower_tail,
    hoeffding_upper_tail,
    hypergeom_tail_high,
    hypergeom_tail_low,
    lemma_min_rounds,
    coloring_threshold,
    min_rounds,
    threshold_report,
)
from .game import (
    AdversaryStrategy,
    EmptySet,
    FixedSet,
    FullSet,
    GameParams,
    SizeDistribution,
    UniformRandomOfSize,
    exact_win_probability,
    monte_carlo_win_probability,
)
from .montecarlo import DEFAULT_LEVEL, DEFAULT_SEED, TrialSummary, confidence_interval, summarize
from .protocol import InstanceLabel, ProtocolParams, protocol_event_rate

__all__ = [
    "CSV_COLUMNS",
    "EXPERIMENT_KINDS",
    "CONFIG_SCHEMA",
    "ConfigError",
    "OutOfRegime",
    "OutOfRegimeWarning",
    "ResultRow",
    "ExperimentReport",
    "confidence_interval",
    "honest_abort_experiment",
    "adversary_experiment",
    "lemma_validation",
    "tail_bound_validation",
    "threshold_curve",
    "run_config",
    "load_config",
    "apply_overrides",
    "validate_config",
    "write_outputs",
]

CSV_COLUMNS = (
    "experiment",
    "n_rounds",
    "alpha",
    "delta",
    "epsilon",
    "w",
    "p_noise",
    "strategy",
    "trials",
    "successes",
    "estimate",
    "ci_low",
    "ci_high",
    "pass",
)
EXPERIMENT_KINDS = ("honest-abort", "adversary-success", "lemma-validation", "tail-bounds", "threshold-curve")
DEFAULT_SIZE_FRACTIONS = tuple(i / 10 for i in range(11))
ORACLE_TOLERANCE_HALF_WIDTHS = 4.0
# oracle error target; exact CDFs within this of a bound are not violations
DOMINATION_SLACK = 1e-12


class ConfigError(ValueError):
    pass


class OutOfRegime(ValueError):
    """A parameter point violates the preconditions of the bound being tested."""


class OutOfRegimeWarning(UserWarning):
    pass


@dataclass
class ResultRow:
    experiment: str
    n_rounds: int | None
    alpha: float | None
    delta: float | None
    epsilon: float | None
    w: float | None
    p_noise: float | None
    strategy: str
    trials: int
    successes: int
    estimate: float
    ci_low: float
    ci_high: float
    passed: bool
    summary: TrialSummary | None = None

    def values(self) -> list:
        return [
            self.experiment,
            self.n_rounds,
            self.alpha,
            self.delta,
            self.epsilon,
            self.w,
            self.p_noise,
            self.strategy,
            self.trials,
            self.successes,
            self.estimate,
            self.ci_low,
            self.ci_high,
            self.passed,
        ]

    def as_dict(self) -> dict:
        d = dict(zip(CSV_COLUMNS, self.values()))
        if self.summary is not None:
            d["level"] = self.summary.level
            d["method"] = self.summary.method
        return d


@dataclass
class ExperimentReport:
    kind: str
    resolved: dict
    rows: list[ResultRow] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    out_of_regime: list[str] = field(default_factory=list)
    table: list[dict] | None = None

    @property
    def passed(self) -> bool:
        checks = self.extra.get("oracle_checks", [])
        return all(r.passed for r in self.rows) and all(c["agree"] for c in checks)

    def max_ci_high(self) -> float:
        return max(r.ci_high for r in self.rows)


def _flag(report_flags: list[str], message: str, allow: bool) -> None:
    if not allow:
        raise OutOfRegime(message)
    warnings.warn(message, OutOfRegimeWarning, stacklevel=3)
    report_flags.append(message)


def _mc_row(kind: str, summary: TrialSummary, delta: float, **point: Any) -> ResultRow:
    return ResultRow(
        experiment=kind,
        n_rounds=point.get("n_rounds"),
        alpha=point.get("alpha"),
        delta=delta,
        epsilon=point.get("epsilon"),
        w=point.get("w"),
        p_noise=point.get("p_noise"),
        strategy=point.get("strategy", ""),
        trials=summary.trials,
        successes=summary.successes,
        estimate=summary.point_estimate,
        ci_low=summary.ci_low,
        ci_high=summary.ci_high,
        passed=summary.ci_high <= delta,
        summary=summary,
    )


def _sizes(N: int, fractions: Iterable[float]) -> list[int]:
    out: list[int] = []
    for f in fractions:
        m = int(round(f * N))
        if m not in out:
            out.append(m)
    return out


# ---------------------------------------------------------------------------
# Protocol experiments
# ---------------------------------------------------------------------------


def _check_soundness_regime(inputs: ThresholdInputs, q: float, p_noise: float, allow: bool, flags: list[str]):
    report = threshold_report(inputs)
    if not report.feasible_A:
        _flag(flags, f"A = {report.A:.6g} < 100 at N = {inputs.N}", allow)
    if not report.feasible_f:
        _flag(flags, f"f = {report.f:.6g} < 0.9 at N = {inputs.N}", allow)
    if not p_noise < report.noise_threshold:
        _flag(flags, f"p_noise = {p_noise:.6g} is not below the noise threshold {report.noise_threshold:.6g}", allow)
    if inputs.alpha > alpha_from_q(q) + 1e-12:
        _flag(flags, f"alpha = {inputs.alpha} exceeds (1-2q)/(2-2q) = {alpha_from_q(q)} for q = {q}", allow)
    return report


def honest_abort_experiment(
    inputs: ThresholdInputs,
    q: float,
    p_noise: float,
    trials: int,
    seed: int = DEFAULT_SEED,
    *,
    workers: int = 1,
    level: float = DEFAULT_LEVEL,
    allow_out_of_regime: bool = True,
) -> ExperimentReport:
    """Abort rate of an honest prover with per-test-round failure probability ``p_noise``."""
    flags: list[str] = []
    report = _check_soundness_regime(inputs, q, p_noise, allow_out_of_regime, flags)
    w = report.w
    if w <= 0:
        raise OutOfRegime(f"w = {w!r} is not positive; the run is undefined")
    params = ProtocolParams(N=inputs.N, w=w, p_noise=p_noise, p_zero=1 - q, q=q)
    summary = protocol_event_rate(params, EmptySet(), "abort", trials, seed, workers=workers, level=level)
    row = _mc_row(
        "honest-abort",
        summary,
        inputs.delta,
        n_rounds=inputs.N,
        alpha=inputs.alpha,
        epsilon=inputs.epsilon,
        w=w,
        p_noise=p_noise,
        strategy="honest",
    )
    resolved = {"q": q, "p_zero": params.p_zero, **report.as_dict()}
    return ExperimentReport("honest-abort", resolved, [row], out_of_regime=flags)


def adversary_experiment(
    inputs: ThresholdInputs,
    q: float,
    strategies: Sequence[AdversaryStrategy],
    trials: int,
    seed: int = DEFAULT_SEED,
    *,
    p_noise: float = 0.0,
    p_zero: float | None = None,
    workers: int = 1,
    level: float = DEFAULT_LEVEL,
    allow_out_of_regime: bool = True,
) -> ExperimentReport:
    """Rate of "no abort and wrong verdict" for non-benign attacks on the rounds in ``S``.

    ``p_zero`` defaults to ``1 - q``, the YES instance closest to the promise gap.
    """
    p_zero = 1 - q if p_zero is None else p_zero
    params_label = ProtocolParams(N=inputs.N, w=1.0, p_noise=p_noise, p_zero=p_zero, q=q).instance_label
    if params_label == InstanceLabel.UNPROMISED:
        raise OutOfRegime(f"p_zero = {p_zero} violates the promise for q = {q}")
    flags: list[str] = []
    report = _check_soundness_regime(inputs, q, p_noise, allow_out_of_regime, flags)
    if report.w <= 0:
        raise OutOfRegime(f"w = {report.w!r} is not positive; the run is undefined")
    params = ProtocolParams(N=inputs.N, w=report.w, p_noise=p_noise, p_zero=p_zero, q=q)
    rows = []
    for strategy in strategies:
        summary = protocol_event_rate(params, strategy, "wrong", trials, seed, workers=workers, level=level)
        rows.append(
            _mc_row(
                "adversary-success",
                summary,
                inputs.delta,
                n_rounds=inputs.N,
                alpha=inputs.alpha,
                epsilon=inputs.epsilon,
                w=report.w,
                p_noise=p_noise,
                strategy=strategy.label,
            )
        )
    resolved = {"q": q, "p_zero": p_zero, "instance_label": params_label.value, **report.as_dict()}
    return ExperimentReport("adversary-success", resolved, rows, out_of_regime=flags)


# ---------------------------------------------------------------------------
# Avoidance-game bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaPoint:
    alpha: float
    delta: float
    epsilon: float = 0.0
    n_rounds: int | None = None
    w: float | None = None


@dataclass(frozen=True)
class OracleCorner:
    N: int
    alpha: float
    w: float
    epsilon: float
    S: frozenset[int]


DEFAULT_ORACLE_CORNERS = (
    OracleCorner(8, 0.25, 0.1, 0.0, frozenset({1, 2, 3})),
    OracleCorner(12, 0.25, 0.2, 0.0, frozenset({1, 2, 3, 4})),
    OracleCorner(12, 0.25, 0.2, 0.5, frozenset(range(1, 7))),
    OracleCorner(10, 0.1, 0.3, 0.25, frozenset(range(1, 11))),
)


def _resolve_lemma_point(point: LemmaPoint, allow: bool, flags: list[str]) -> tuple[GameParams, dict]:
    N = point.n_rounds if point.n_rounds is not None else lemma_min_rounds(point.alpha, point.delta, point.epsilon)
    report = threshold_report(ThresholdInputs(N, point.alpha, point.delta, point.epsilon))
    w_max = report.w
    w = w_max if point.w is None else point.w
    if not report.feasible_A:
        _flag(flags, f"A = {report.A:.6g} < 100 at N = {N}: the N bound fails", allow)
    if w > w_max:
        _flag(flags, f"w = {w!r} exceeds the admissible {w_max!r} at N = {N}", allow)
    if w <= 0:
        raise OutOfRegime(f"w = {w!r} is not positive at N = {N}")
    return GameParams(N, point.alpha, min(w, 1.0), point.epsilon), {**report.as_dict(), "w_used": w}


def default_lemma_strategies(N: int, fractions: Iterable[float] = DEFAULT_SIZE_FRACTIONS) -> list[AdversaryStrategy]:
    out: list[AdversaryStrategy] = [EmptySet(), FullSet()]
    out += [UniformRandomOfSize(m) for m in _sizes(N, fractions)]
    out.append(SizeDistribution.binomial(N, 0.5))
    return out


def lemma_validation(
    points: Sequence[LemmaPoint],
    trials: int,
    seed: int = DEFAULT_SEED,
    *,
    size_fractions: Iterable[float] = DEFAULT_SIZE_FRACTIONS,
    oracle_corners: Sequence[OracleCorner] = DEFAULT_ORACLE_CORNERS,
    oracle_trials: int = 100_000,
    workers: int = 1,
    level: float = DEFAULT_LEVEL,
    allow_out_of_regime: bool = False,
) -> ExperimentReport:
    """Monte Carlo win probability of every strategy at each point meeting the round and w bounds.

    PASS needs ``ci_high <= delta`` everywhere.  The small-``N`` oracle
    corners cannot satisfy the round bound, so they only check the
    simulator against exact enumeration.
    """
    flags: list[str] = []
    rows: list[ResultRow] = []
    resolved_points = []
    size_fractions = tuple(size_fractions)
    for point in points:
        params, resolved = _resolve_lemma_point(point, allow_out_of_regime, flags)
        resolved_points.append(resolved)
        for strategy in default_lemma_strategies(params.N, size_fractions):
            summary = monte_carlo_win_probability(params, strategy, trials, seed, workers=workers, level=level)
            rows.append(
                _mc_row(
                    "lemma-validation",
                    summary,
                    point.delta,
                    n_rounds=params.N,
                    alpha=params.alpha,
                    epsilon=params.epsilon,
                    w=params.w,
                    p_noise=None,
                    strategy=strategy.label,
                )
            )
    checks = []
    for corner in oracle_corners:
        gp = GameParams(corner.N, corner.alpha, corner.w, corner.epsilon)
        exact = exact_win_probability(gp, corner.S)
        mc = monte_carlo_win_probability(gp, FixedSet(corner.S), oracle_trials, seed, workers=workers, level=level)
        checks.append(
            {
                "N": corner.N,
                "alpha": corner.alpha,
                "w": corner.w,
                "epsilon": corner.epsilon,
                "S": sorted(corner.S),
                "exact": exact,
                "estimate": mc.point_estimate,
                "half_width": mc.half_width,
                "agree": abs(mc.point_estimate - exact) <= ORACLE_TOLERANCE_HALF_WIDTHS * mc.half_width,
                "extrapolation": True,
            }
        )
    return ExperimentReport(
        "lemma-validation",
        {"points": resolved_points, "size_fractions": list(size_fractions)},
        rows,
        extra={"oracle_checks": checks},
        out_of_regime=flags,
    )


# ---------------------------------------------------------------------------
# Closed-form checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailGrid:
    binom_n: tuple[int, ...] = tuple(range(10, 201, 10))
    binom_p: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(1, 10))
    hyper_pop: tuple[int, ...] = (10, 20, 30, 40, 50, 60)
    hyper_steps: int = 10

    def binomial_points(self):
        for n in self.binom_n:
            for p in self.binom_p:
                for k in range(n + 1):
                    yield n, p, k

    def hypergeom_triples(self):
        for Npop in self.hyper_pop:
            step = max(1, Npop // self.hyper_steps)
            for K in range(0, Npop + 1, step):
                for n in range(step, Npop + 1, step):
                    yield Npop, K, n


def tail_bound_validation(grid: TailGrid | None = None) -> ExperimentReport:
    """Exact binomial/hypergeometric tails against their closed-form bounds on a grid."""
    grid = grid or TailGrid()
    families = {name: {"points": 0, "violations": 0, "max_ratio": 0.0} for name in (
        "binomial-lower", "binomial-upper", "hypergeom-low", "hypergeom-high")}

    def record(name: str, exact: float, bound: float) -> None:
        fam = families[name]
        fam["points"] += 1
        if exact > bound + DOMINATION_SLACK:
            fam["violations"] += 1
        if bound > 0:
            fam["max_ratio"] = max(fam["max_ratio"], exact / bound)

    for n, p, k in grid.binomial_points():
        if k <= n * p:
            record("binomial-lower", exact_binomial_cdf(n, p, k), hoeffding_lower_tail(n, p, k))
        if k >= n * p:
            record("binomial-upper", exact_binomial_sf(n, p, k), hoeffding_upper_tail(n, p, k))
    for Npop, K, n in grid.hypergeom_triples():
        mean = n * K / Npop
        for lam in range(0, n + 1):
            if 0 < lam < mean:
                record("hypergeom-low", exact_hypergeom_cdf(Npop, K, n, lam), hypergeom_tail_low(Npop, K, n, lam))
            if lam > mean:
                record("hypergeom-high", exact_hypergeom_sf(Npop, K, n, lam), hypergeom_tail_high(Npop, K, n, lam))

    rows = []
    for name, fam in families.items():
        est = fam["violations"] / fam["points"] if fam["points"] else 0.0
        rows.append(
            ResultRow(
                experiment="tail-bounds",
                n_rounds=None,
                alpha=None,
                delta=None,
                epsilon=None,
                w=None,
                p_noise=None,
                strategy=name,
                trials=fam["points"],
                successes=fam["violations"],
                estimate=est,
                ci_low=est,
                ci_high=est,
                passed=fam["violations"] == 0,
            )
        )
    total = sum(f["points"] for f in families.values())
    return ExperimentReport(
        "tail-bounds",
        {"grid": {k: list(v) if isinstance(v, tuple) else v for k, v in grid.__dict__.items()}},
        rows,
        extra={"families": families, "total_points": total},
    )


CURVE_COLUMNS = ("N", "A", "f", "g", "noise_threshold", "coloring_k2", "coloring_k1")


def default_curve_ns() -> list[int]:
    return [int(round(10 ** (5 + i / 4))) for i in range(13)]


def threshold_curve(
    alpha: float, delta: float, epsilon: float = 0.0, n_values: Sequence[int] | None = None, q: float | None = None
) -> ExperimentReport:
    """Noise threshold against round count, with the k=1 and k=2 colouring comparators."""
    n_values = list(n_values or default_curve_ns())
    q = q if q is not None else _q_from_alpha(alpha)
    table = []
    for N in n_values:
        r = threshold_report(ThresholdInputs(int(N), alpha, delta, epsilon))
        table.append(
            {
                "N": int(N),
                "A": r.A,
                "f": r.f,
                "g": r.g,
                "noise_threshold": r.noise_threshold,
                "coloring_k2": coloring_threshold(2, q),
                "coloring_k1": coloring_threshold(1, q),
            }
        )
    ordered = sorted(table, key=lambda row: row["N"])
    steps = [b["noise_threshold"] - a["noise_threshold"] for a, b in zip(ordered, ordered[1:]) if b["N"] > a["N"]]
    monotone_violations = sum(1 for s in steps if s < 0)
    ceiling_violations = sum(1 for row in table if not row["noise_threshold"] < alpha)
    rows = [
        ResultRow("threshold-curve", None, alpha, delta, epsilon, None, None, "monotone-in-N",
                  max(1, len(steps)), monotone_violations, monotone_violations / max(1, len(steps)),
                  0.0, 0.0, monotone_violations == 0),
        ResultRow("threshold-curve", None, alpha, delta, epsilon, None, None, "below-alpha",
                  len(table), ceiling_violations, ceiling_violations / len(table),
                  0.0, 0.0, ceiling_violations == 0),
    ]
    for row in rows:
        row.ci_low = row.ci_high = row.estimate
    return ExperimentReport(
        "threshold-curve", {"alpha": alpha, "delta": delta, "epsilon": epsilon, "q": q}, rows, table=table
    )


def _q_from_alpha(alpha: float) -> float:
    # inverse of alpha = (1 - 2q) / (2 - 2q)
    return (1 - 2 * alpha) / (2 - 2 * alpha)


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

_PROB = {"type": "number", "minimum": 0, "maximum": 1}
CONFIG_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["experiment"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": list(EXPERIMENT_KINDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "trials": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "q": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "epsilon": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "n_rounds": {"type": ["integer", "null"], "minimum": 1},
        "target_p_noise": {"type": "number"},
        "p_noise": {"oneOf": [_PROB, {"type": "null"}]},
        "p_noise_fraction": {"type": "number", "minimum": 0},
        "p_zero": {"oneOf": [_PROB, {"type": "null"}]},
        "size_fractions": {"type": "array", "items": _PROB, "minItems": 1},
        "points": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["alpha", "delta"],
                "properties": {
                    "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                    "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                    "epsilon": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "n_rounds": {"type": ["integer", "null"], "minimum": 1},
                    "w": {"type": ["number", "null"], "exclusiveMinimum": 0, "maximum": 1},
                },
            },
        },
        "oracle_trials": {"type": "integer", "minimum": 1},
        "oracle_corners": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["N", "alpha", "w", "set"],
                "properties": {
                    "N": {"type": "integer", "minimum": 1, "maximum": 24},
                    "alpha": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
                    "w": _PROB,
                    "epsilon": _PROB,
                    "set": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                },
            },
        },
        "n_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "binom_n": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "binom_p": {"type": "array", "items": _PROB},
                "hyper_pop": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "hyper_steps": {"type": "integer", "minimum": 1},
            },
        },
        "allow_out_of_regime": {"type": "boolean"},
    },
}


def load_config(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None


def apply_overrides(config: dict, overrides: Iterable[str]) -> dict:
    """Apply flat ``key=value`` overrides; values are parsed as JSON when possible."""
    config = copy.deepcopy(config)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        config[key.strip()] = value
    return config


def validate_config(config: dict) -> None:
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None


def _resolve_alpha_q(config: dict) -> tuple[float, float]:
    q = config.get("q")
    alpha = config.get("alpha")
    if q is None and alpha is None:
        q = 1 / 3
    if alpha is None:
        alpha = alpha_from_q(q)
    if q is None:
        q = _q_from_alpha(alpha)
    if not math.isclose(alpha, alpha_from_q(q), rel_tol=0, abs_tol=1e-9):
        raise ConfigError(f"alpha = {alpha} and q = {q} disagree; alpha must equal (1-2q)/(2-2q)")
    return alpha, q


def run_config(config: dict, *, workers: int | None = None, allow_out_of_regime: bool | None = None) -> ExperimentReport:
    validate_config(config)
    kind = config["experiment"]
    seed = int(config.get("seed", DEFAULT_SEED))
    trials = int(config.get("trials", 1000))
    level = float(config.get("level", DEFAULT_LEVEL))
    workers = workers if workers is not None else int(config.get("workers", 1))
    allow = allow_out_of_regime if allow_out_of_regime is not None else bool(config.get("allow_out_of_regime", False))

    if kind == "tail-bounds":
        grid_cfg = config.get("grid", {})
        grid = TailGrid(**{k: tuple(v) if isinstance(v, list) else v for k, v in grid_cfg.items()})
        return tail_bound_validation(grid)

    if kind == "lemma-validation":
        alpha_default, _ = _resolve_alpha_q(config)
        points_cfg = config.get("points") or [
            {"alpha": alpha_default, "delta": config.get("delta", 0.2), "epsilon": config.get("epsilon", 0.0)}
        ]
        points = [LemmaPoint(p["alpha"], p["delta"], p.get("epsilon", 0.0), p.get("n_rounds"), p.get("w")) for p in points_cfg]
        corners_cfg = config.get("oracle_corners")
        corners = DEFAULT_ORACLE_CORNERS if corners_cfg is None else tuple(
            OracleCorner(c["N"], c["alpha"], c["w"], c.get("epsilon", 0.0), frozenset(c["set"])) for c in corners_cfg
        )
        return lemma_validation(
            points,
            trials,
            seed,
            size_fractions=config.get("size_fractions", DEFAULT_SIZE_FRACTIONS),
            oracle_corners=corners,
            oracle_trials=int(config.get("oracle_trials", 100_000)),
            workers=workers,
            level=level,
            allow_out_of_regime=allow,
        )

    alpha, q = _resolve_alpha_q(config)
    delta = float(config.get("delta", 0.2))
    epsilon = float(config.get("epsilon", 0.0))

    if kind == "threshold-curve":
        return threshold_curve(alpha, delta, epsilon, config.get("n_values"), q=q)

    N = config.get("n_rounds")
    if N is None:
        N = min_rounds(alpha, delta, epsilon, float(config.get("target_p_noise", 0.0)))
    inputs = ThresholdInputs(int(N), alpha, delta, epsilon)
    report = threshold_report(inputs)
    p_noise = config.get("p_noise")
    if p_noise is None:
        p_noise = float(config.get("p_noise_fraction", 0.8)) * max(report.noise_threshold, 0.0)

    if kind == "honest-abort":
        return honest_abort_experiment(
            inputs, q, p_noise, trials, seed, workers=workers, level=level, allow_out_of_regime=allow
        )
    if kind == "adversary-success":
        strategies = [UniformRandomOfSize(m) for m in _sizes(inputs.N, config.get("size_fractions", DEFAULT_SIZE_FRACTIONS))]
        return adversary_experiment(
            inputs,
            q,
            strategies,
            trials,
            seed,
            p_noise=p_noise,
            p_zero=config.get("p_zero"),
            workers=workers,
            level=level,
            allow_out_of_regime=allow,
        )
    raise ConfigError(f"unknown experiment {kind!r}")


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(v) for v in row.values()])
    return buf.getvalue()


def render_table_csv(table: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in table:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, frozenset):
        return sorted(obj)
    return obj


def render_json(report: ExperimentReport, config: dict) -> str:
    payload = {
        "experiment": report.kind,
        # worker count never changes results, so it stays out of the file
        "config": {k: v for k, v in config.items() if k != "workers"},
        "resolved": report.resolved,
        "rows": [r.as_dict() for r in report.rows],
        "extra": report.extra,
        "out_of_regime": report.out_of_regime,
        "pass": report.passed,
        "metadata": {
            "package": "vdqc",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "seed": config.get("seed", DEFAULT_SEED),
        },
    }
    if report.table is not None:
        payload["table"] = report.table
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def render_svg(table: Sequence[dict], alpha: float, width: int = 640, height: int = 400) -> str:
    """Static line plot of noise threshold against log10(N), with the k=1 and k=2 comparators."""
    pad = 50
    xs = [math.log10(r["N"]) for r in table]
    series = {
        "noise threshold": ([r["noise_threshold"] for r in table], "#1f77b4"),
        "k=1 comparator": ([r["coloring_k1"] for r in table], "#d62728"),
        "k=2 comparator": ([r["coloring_k2"] for r in table], "#2ca02c"),
    }
    y_lo = min(0.0, *(min(v) for v, _ in series.values()))
    y_hi = max(max(v) for v, _ in series.values()) * 1.05 or 1.0
    x_lo, x_hi = min(xs), max(xs)
    x_span = (x_hi - x_lo) or 1.0

    def px(x: float) -> float:
        return pad + (x - x_lo) / x_span * (width - 2 * pad)

    def py(y: float) -> float:
        return height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">log10(N)</text>',
        f'<text x="14" y="{height / 2:.1f}" font-size="12" transform="rotate(-90 14 {height / 2:.1f})" '
        f'text-anchor="middle">tolerable p_noise</text>',
    ]
    for x in range(math.ceil(x_lo), math.floor(x_hi) + 1):
        parts.append(f'<text x="{px(x):.1f}" y="{height - pad + 16}" text-anchor="middle" font-size="10">{x}</text>')
    for i in range(5):
        y = y_lo + (y_hi - y_lo) * i / 4
        parts.append(f'<text x="{pad - 6}" y="{py(y) + 3:.1f}" text-anchor="end" font-size="10">{y:.3f}</text>')
    for j, (name, (ys, color)) in enumerate(series.items()):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        parts.append(f'<text x="{width - pad - 140}" y="{pad + 14 * j}" font-size="11" fill="{color}">{name}</text>')
    parts.append(f'<!-- alpha = {alpha!r} -->')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_outputs(report: ExperimentReport, config: dict, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report.kind
    paths = [out / f"{stem}.csv", out / f"{stem}.json"]
    paths[0].write_text(render_csv(report.rows), encoding="utf-8")
    paths[1].write_text(render_json(report, config), encoding="utf-8")
    if report.table is not None:
        curve_csv = out / f"{stem}-table.csv"
        curve_csv.write_text(render_table_csv(report.table, CURVE_COLUMNS), encoding="utf-8")
        svg = out / f"{stem}.svg"
        svg.write_text(render_svg(report.table, report.resolved["alpha"]), encoding="utf-8")
        paths += [curve_csv, svg]
    return paths
