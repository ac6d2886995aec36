"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
The three Monte Carlo experiments run once per session (serial) and are
rerun with two workers for the reproducibility check.
"""

import json
import math
import time
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
import pytest

from vdqc.bounds import (
    ThresholdInputs,
    alpha_from_q,
    compute_A_prime,
    lemma_min_rounds,
    min_rounds,
    single_run_parameters,
    threshold_report,
)
from vdqc.circuitsim import (
    PauliKeys,
    PauliString,
    benign_invariance_check,
    classify_instance,
    parse_circuit,
    qotp_roundtrip,
    random_circuit,
    random_clifford_circuit,
)
from vdqc.experiments import load_config, render_csv, run_config, tail_bound_validation, threshold_curve
from vdqc.game import FixedSet, GameParams, exact_win_probability, monte_carlo_win_probability
from vdqc.protocol import InstanceLabel

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
MC_CONFIGS = {2: "honest-abort.json", 3: "adversary-success.json", 4: "lemma-validation.json"}
DELTA = 0.2


@pytest.fixture(scope="session")
def mc_runs():
    runs = {}
    for number, name in MC_CONFIGS.items():
        config = load_config(CONFIGS / name)
        t0 = time.perf_counter()
        report = run_config(config, workers=1)
        runs[number] = (config, report, render_csv(report.rows), time.perf_counter() - t0)
    return runs


def test_criterion_01_threshold_asymptote(record_criterion):
    t0 = time.perf_counter()
    alpha = alpha_from_q(1 / 3)
    grid = [int(round(10 ** (5 + i / 20))) for i in range(61)]
    rep = threshold_curve(alpha, 0.05, 0.0, grid)
    values = [row["noise_threshold"] for row in rep.table]
    monotone = all(b > a for a, b in zip(values, values[1:]))
    at_1e7 = threshold_report(ThresholdInputs(10**7, alpha, 0.05)).noise_threshold
    elapsed = time.perf_counter() - t0
    ok = monotone and at_1e7 >= 0.24 and elapsed < 1.0
    record_criterion(1, ok, f"monotone over {len(grid)} points={monotone}; threshold(1e7)={at_1e7:.6f}; {elapsed:.3f}s")
    assert ok


def test_criterion_02_honest_abort(mc_runs, record_criterion):
    config, report, _, secs = mc_runs[2]
    row = report.rows[0]
    expected_N = min_rounds(0.25, DELTA, 0.0, 0.0)
    expected_p = 0.8 * threshold_report(ThresholdInputs(expected_N, 0.25, DELTA)).noise_threshold
    ok = (
        row.n_rounds == expected_N
        and math.isclose(row.p_noise, expected_p, rel_tol=1e-12)
        and row.trials == 1000
        and row.summary.level == 0.99
        and row.summary.method == "wilson-cc"
        and row.ci_high <= DELTA
    )
    record_criterion(
        2, ok, f"N={row.n_rounds} p_noise={row.p_noise:.5f} aborts={row.successes}/{row.trials} "
        f"ci_high={row.ci_high:.5f} <= {DELTA} ({secs:.0f}s)"
    )
    assert ok


def test_criterion_03_adversary_sweep(mc_runs, record_criterion):
    config, report, _, secs = mc_runs[3]
    N = min_rounds(0.25, DELTA, 0.0, 0.0)
    sizes = [int(row.strategy.split(":")[1]) for row in report.rows]
    expected_sizes = [round(i * N / 10) for i in range(11)]
    worst = max(report.rows, key=lambda r: r.ci_high)
    ok = (
        sizes == expected_sizes
        and all(r.trials == 1000 and r.n_rounds == N for r in report.rows)
        and report.resolved["instance_label"] == InstanceLabel.YES.value
        and worst.ci_high <= DELTA
    )
    record_criterion(
        3, ok, f"{len(sizes)} sizes at N={N}; max ci_high={worst.ci_high:.5f} ({worst.strategy}, "
        f"{worst.successes}/{worst.trials}) ({secs:.0f}s)"
    )
    assert ok


def test_criterion_04_lemma_with_epsilon(mc_runs, record_criterion):
    config, report, _, secs = mc_runs[4]
    N = lemma_min_rounds(0.25, DELTA, 0.5)
    w = threshold_report(ThresholdInputs(N, 0.25, DELTA, 0.5)).w
    worst = max(report.rows, key=lambda r: r.ci_high)
    oracle_ok = all(c["agree"] for c in report.extra["oracle_checks"])
    ok = (
        all(r.n_rounds == N and math.isclose(r.w, w, rel_tol=1e-12) and r.epsilon == 0.5 for r in report.rows)
        and worst.ci_high <= DELTA
    )
    record_criterion(
        4, ok, f"N={N} w={w:.5f}; {len(report.rows)} strategies; max ci_high={worst.ci_high:.5f} "
        f"({worst.strategy}); small-N oracle corners agree={oracle_ok} ({secs:.0f}s)"
    )
    assert ok


def test_criterion_05_game_oracle_equivalence(record_criterion):
    worked = exact_win_probability(GameParams(2, 0.25, 0.2), {1})
    rng = np.random.default_rng(5)
    agree = 0
    for i in range(50):
        N = int(rng.integers(1, 13))
        params = GameParams(N, float(rng.uniform(0, 0.5)), float(rng.uniform(0, 1)), float(rng.choice([0.0, rng.uniform(0, 1)])))
        S = frozenset(int(x) + 1 for x in np.flatnonzero(rng.random(N) < rng.uniform(0.2, 1.0)))
        exact = exact_win_probability(params, S)
        mc = monte_carlo_win_probability(params, FixedSet(S), 10**6, 1000 + i)
        # a zero-width interval (all or nothing) agrees only on an exact match
        agree += abs(mc.point_estimate - exact) <= 3 * mc.half_width + 1e-15
    ok = agree >= 48 and abs(worked - 1 / 3) <= 1e-15
    record_criterion(5, ok, f"{agree}/50 within 3 half-widths; worked example = {worked!r}")
    assert ok


def test_criterion_06_tail_domination(record_criterion):
    t0 = time.perf_counter()
    rep = tail_bound_validation()
    elapsed = time.perf_counter() - t0
    violations = sum(f["violations"] for f in rep.extra["families"].values())
    points = rep.extra["total_points"]
    ok = points >= 10_000 and violations == 0 and elapsed < 30
    ratios = ", ".join(f"{k}={v['max_ratio']:.3f}" for k, v in rep.extra["families"].items())
    record_criterion(6, ok, f"{points} points, {violations} violations, max ratio {ratios}; {elapsed:.1f}s")
    assert ok


def test_criterion_07_a_prime(record_criterion):
    ap = compute_A_prime(100)
    grid = np.geomspace(100, 1e9, 2001)
    worst_float = 0.0
    worst_quad = 0.0
    for A in grid:
        x = compute_A_prime(float(A))
        worst_float = max(worst_float, abs(x * (1 / x - 1) ** 2 - 3 / A))
        worst_quad = max(worst_quad, abs(x * x - (2 + 3 / A) * x + 1))
    with localcontext() as ctx:
        ctx.prec = 40
        worst_rel_decimal = max(
            abs(x * (1 / x - 1) ** 2 * Decimal(A) / 3 - 1)
            for A in (Decimal(repr(float(a))) for a in grid[::50])
            for x in [compute_A_prime(A)]
        )
    with mpmath.workdps(40):
        ref = (2 + mpmath.mpf(3) / 100 - mpmath.sqrt((2 + mpmath.mpf(3) / 100) ** 2 - 4)) / 2
    ok = (
        abs(ap - 0.841151) <= 1e-5
        and abs(ap - float(ref)) <= 1e-15
        and ap >= 0.8
        and worst_float <= 1e-12
        and worst_quad <= 1e-12
    )
    record_criterion(
        7, ok, f"A'(100)={ap:.7f} (>= 0.8); residual max {worst_float:.1e} (fraction form), "
        f"{worst_quad:.1e} (quadratic form); decimal relative {float(worst_rel_decimal):.1e}"
    )
    assert ok


def test_criterion_08_single_run(record_criterion):
    sr = single_run_parameters(Fraction(1, 3))
    q = Fraction(1, 3)
    ok = sr.c == Fraction(8, 9) and sr.s == Fraction(7, 9) and sr.gap == Fraction(1, 9) == (1 - 2 * q) / 3
    record_criterion(8, ok, f"(c, s, gap) = ({sr.c}, {sr.s}, {sr.gap})")
    assert ok


def test_criterion_09_circuit_grounding(record_criterion):
    rng = np.random.default_rng(99)
    qotp = max(
        qotp_roundtrip(random_clifford_circuit(n, 40, rng), PauliKeys.random(n, rng))
        for n in rng.integers(1, 7, size=100)
    )
    benign = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        c = random_circuit(n, 30, rng)
        _, d = benign_invariance_check(c, PauliString.single(n, n - 1, "Z"))
        benign = max(benign, d)
    q = 1 / 3
    labels = (
        classify_instance(parse_circuit("I 0"), q),
        classify_instance(parse_circuit("X 0"), q),
        classify_instance(parse_circuit("H 0"), q),
    )
    anchors = labels == (InstanceLabel.YES, InstanceLabel.NO, InstanceLabel.UNPROMISED)
    ok = qotp <= 1e-10 and benign <= 1e-10 and anchors
    record_criterion(
        9, ok, f"QOTP max distance {qotp:.1e}; benign Z distance {benign:.1e}; "
        f"labels {[lab.value for lab in labels]}"
    )
    assert ok


def test_criterion_10_reproducibility(mc_runs, record_criterion):
    same = {}
    for number, (config, _, csv_serial, _) in mc_runs.items():
        rerun = run_config(json.loads(json.dumps(config)), workers=2)
        same[number] = render_csv(rerun.rows).encode() == csv_serial.encode()
    ok = all(same.values())
    record_criterion(10, ok, "byte-identical CSV with workers=1 vs workers=2: " + ", ".join(
        f"exp{n}={v}" for n, v in same.items()))
    assert ok
