"""Interleaved multi-round runs with majority voting and per-test-type abort.

Each of the ``N`` rounds is a computation, X-test or Z-test round with
probability 1/3 each.  Round behaviour is modelled at the level of
outcomes:

* a test round fails with probability ``p_noise`` unless it carries a
  non-benign Pauli attack, which fails it with certainty;
* a computation round returns the circuit's bit (0 with probability
  ``p_zero``) unless honest noise or a non-benign attack hits it, in which
  case it returns the corrupted bit.

Benign attacks leave both kinds of round exactly as an honest prover would.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import partial
from typing import Sequence

import numpy as np

from .game import AdversaryStrategy, EmptySet
from .montecarlo import DEFAULT_LEVEL, TrialSummary, block_size_for, estimate, stream_id


class RoundType(enum.IntEnum):
    COMPUTATION = 0
    X_TEST = 1
    Z_TEST = 2


class Attack(enum.IntEnum):
    HONEST = 0
    BENIGN = 1
    NON_BENIGN = 2


class InstanceLabel(str, enum.Enum):
    YES = "YES"
    NO = "NO"
    UNPROMISED = "UNPROMISED"


PROMISE_SLACK = 1e-12


def label_for(p_zero: float, q: float) -> InstanceLabel:
    """Promise class of a circuit whose last wire reads 0 with probability ``p_zero``.

    Both boundaries are inclusive, with ``PROMISE_SLACK`` absorbing float
    rounding such as ``2/3 < 1 - 1/3``.
    """
    if p_zero >= 1 - q - PROMISE_SLACK:
        return InstanceLabel.YES
    if p_zero <= q + PROMISE_SLACK:
        return InstanceLabel.NO
    return InstanceLabel.UNPROMISED


@dataclass(frozen=True)
class ProtocolParams:
    N: int
    w: float
    p_noise: float
    p_zero: float
    q: float = 1 / 3
    corruption: str = "wrong"  # or "uniform"

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not 0 < self.w <= 1:
            raise ValueError(f"w must lie in (0, 1], got {self.w!r}")
        for name in ("p_noise", "p_zero"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if not 0.0 <= self.q < 0.5:
            raise ValueError(f"q must lie in [0, 1/2), got {self.q!r}")
        if self.corruption not in ("wrong", "uniform"):
            raise ValueError(f"corruption must be 'wrong' or 'uniform', got {self.corruption!r}")

    @property
    def instance_label(self) -> InstanceLabel:
        return label_for(self.p_zero, self.q)

    @property
    def wrong_bit(self) -> int:
        # the bit that loses the majority vote for this circuit
        return 1 if self.p_zero >= 0.5 else 0


@dataclass(frozen=True)
class RoundResult:
    round_type: RoundType
    test_failed: bool | None = None
    output_bit: int | None = None

    def __post_init__(self) -> None:
        is_test = self.round_type != RoundType.COMPUTATION
        if is_test != (self.test_failed is not None) or is_test == (self.output_bit is not None):
            raise ValueError("test rounds carry test_failed, computation rounds carry output_bit")


@dataclass(frozen=True)
class Verdict:
    kind: str  # "accept" | "reject" | "abort"
    reason: str | None = None  # for aborts: "X", "Z" or "degenerate"

    def __str__(self) -> str:
        return self.kind if self.reason is None else f"{self.kind}({self.reason})"


ACCEPT = Verdict("accept")
REJECT = Verdict("reject")


@dataclass(frozen=True)
class RunCounts:
    n: int
    sc: int
    sx: int
    sz: int
    zeros: int
    failed_x: int
    failed_z: int
    corrupted: int = 0

    def record(self, verdict: Verdict) -> dict:
        row = asdict(self)
        row["verdict"] = str(verdict)
        return row


# ---------------------------------------------------------------------------
# Rounds
# ---------------------------------------------------------------------------


def sample_partition(N: int, rng: np.random.Generator) -> np.ndarray:
    """Round types as ``RoundType`` codes, one fair three-sided die roll per round."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return rng.integers(0, 3, size=N, dtype=np.int8)


def simulate_rounds(
    types: np.ndarray, params: ProtocolParams, attacks: np.ndarray | None, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised round outcomes.

    Returns ``(test_failed, output_bit, corrupted)``; entries that do not
    apply to a round's type are ``False`` / ``-1`` / ``False``.
    """
    types = np.asarray(types)
    shape = types.shape
    is_comp = types == RoundType.COMPUTATION
    non_benign = np.zeros(shape, dtype=bool) if attacks is None else np.asarray(attacks) == Attack.NON_BENIGN
    noise = rng.random(shape) < params.p_noise
    clean_bit = (rng.random(shape) >= params.p_zero).astype(np.int8)
    hit = noise | non_benign

    test_failed = ~is_comp & hit
    corrupted = is_comp & hit
    if params.corruption == "uniform":
        bad_bit = rng.integers(0, 2, size=shape, dtype=np.int8)
    else:
        bad_bit = np.full(shape, params.wrong_bit, dtype=np.int8)
    bits = np.where(corrupted, bad_bit, clean_bit)
    bits = np.where(is_comp, bits, np.int8(-1))
    return test_failed, bits, corrupted


def simulate_round(
    round_type: RoundType, params: ProtocolParams, attack: Attack, rng: np.random.Generator
) -> RoundResult:
    failed, bits, _ = simulate_rounds(np.array([round_type]), params, np.array([attack]), rng)
    if round_type == RoundType.COMPUTATION:
        return RoundResult(RoundType(round_type), output_bit=int(bits[0]))
    return RoundResult(RoundType(round_type), test_failed=bool(failed[0]))


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


def _at_least_fraction(failed: int, w: float | Fraction, size: int) -> bool:
    # exact rational comparison failed >= w * size (floats are exact binary rationals)
    return Fraction(failed) >= Fraction(w) * size


def verdict_from_counts(counts: RunCounts, w: float | Fraction) -> Verdict:
    if counts.sc == 0 or counts.sx == 0 or counts.sz == 0:
        return Verdict("abort", "degenerate")
    if _at_least_fraction(counts.failed_x, w, counts.sx):
        return Verdict("abort", "X")
    if _at_least_fraction(counts.failed_z, w, counts.sz):
        return Verdict("abort", "Z")
    return ACCEPT if 2 * counts.zeros >= counts.sc else REJECT


def tally(results: Sequence[RoundResult]) -> RunCounts:
    sc = sx = sz = zeros = fx = fz = 0
    for r in results:
        if r.round_type == RoundType.COMPUTATION:
            sc += 1
            zeros += r.output_bit == 0
        elif r.round_type == RoundType.X_TEST:
            sx += 1
            fx += bool(r.test_failed)
        else:
            sz += 1
            fz += bool(r.test_failed)
    return RunCounts(n=len(results), sc=sc, sx=sx, sz=sz, zeros=zeros, failed_x=fx, failed_z=fz)


def verdict(results: Sequence[RoundResult], w: float | Fraction) -> Verdict:
    if not results:
        raise ValueError("a run needs at least one round")
    return verdict_from_counts(tally(results), w)


def _counts_from_arrays(types, failed, bits, corrupted) -> RunCounts:
    is_x = types == RoundType.X_TEST
    is_z = types == RoundType.Z_TEST
    is_c = types == RoundType.COMPUTATION
    return RunCounts(
        n=int(types.size),
        sc=int(is_c.sum()),
        sx=int(is_x.sum()),
        sz=int(is_z.sum()),
        zeros=int((bits == 0).sum()),
        failed_x=int((failed & is_x).sum()),
        failed_z=int((failed & is_z).sum()),
        corrupted=int(corrupted.sum()),
    )


def run_protocol(
    params: ProtocolParams,
    plan: Sequence[Attack] | np.ndarray | None,
    rng: np.random.Generator,
    *,
    partition: np.ndarray | None = None,
) -> tuple[Verdict, RunCounts]:
    """One full run: partition, per-round outcomes, verdict.

    ``plan=None`` is the honest prover. ``partition`` fixes the round types
    instead of sampling them.
    """
    if plan is not None:
        plan = np.asarray(plan)
        if plan.shape != (params.N,):
            raise ValueError(f"attack plan must have length N={params.N}")
    types = sample_partition(params.N, rng) if partition is None else np.asarray(partition)
    if types.shape != (params.N,):
        raise ValueError(f"partition must have length N={params.N}")
    failed, bits, corrupted = simulate_rounds(types, params, plan, rng)
    counts = _counts_from_arrays(types, failed, bits, corrupted)
    return verdict_from_counts(counts, params.w), counts


def plan_from_mask(mask: np.ndarray) -> np.ndarray:
    """Attack plan with a non-benign Pauli on every round in ``mask``."""
    return np.where(np.asarray(mask, dtype=bool), Attack.NON_BENIGN, Attack.HONEST).astype(np.int8)


def min_corrupted_for_flip(C_size: int, q: float | Fraction) -> int:
    """Least number of corrupted computation rounds that can flip the majority.

    The smallest integer strictly above ``C_size * (1 - 2q) / (2 (1 - q))``.
    Float ``q`` is snapped to the nearest fraction with denominator up to
    ``10**12`` so that ``1/3`` behaves as a third.
    """
    if not 0 <= q < Fraction(1, 2):
        raise ValueError(f"q must lie in [0, 1/2), got {q!r}")
    if C_size < 0:
        raise ValueError("C_size must be non-negative")
    qf = q if isinstance(q, Fraction) else Fraction(q).limit_denominator(10**12)
    need = C_size * (1 - 2 * qf) / (2 * (1 - qf))
    return math.floor(need) + 1


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def _protocol_block(
    params: ProtocolParams, strategy: AdversaryStrategy, event: str, rng: np.random.Generator, rows: int
) -> int:
    hits = 0
    label = params.instance_label
    for _ in range(rows):
        mask = strategy.masks(rng, 1, params.N)[0]
        plan = plan_from_mask(mask) if mask.any() else None
        v, _ = run_protocol(params, plan, rng)
        if event == "abort":
            hits += v.kind == "abort"
        elif event == "wrong":
            wrong = (label == InstanceLabel.YES and v.kind == "reject") or (
                label == InstanceLabel.NO and v.kind == "accept"
            )
            hits += wrong
        elif event == "accept":
            hits += v.kind == "accept"
        else:
            raise ValueError(f"unknown event {event!r}")
    return hits


def protocol_event_rate(
    params: ProtocolParams,
    strategy: AdversaryStrategy | None,
    event: str,
    trials: int,
    seed: int,
    *,
    workers: int = 1,
    level: float = DEFAULT_LEVEL,
) -> TrialSummary:
    """Rate of ``event`` over independent runs.

    ``abort``: the verifier aborts. ``wrong``: no abort and the verdict
    contradicts the instance label. ``accept``: the verifier accepts.
    """
    if event == "wrong" and params.instance_label == InstanceLabel.UNPROMISED:
        raise ValueError("a wrong verdict is only defined for YES or NO instances")
    strategy = EmptySet() if strategy is None else strategy
    fn = partial(_protocol_block, params, strategy, event)
    return estimate(
        fn,
        trials,
        seed=seed,
        stream=stream_id("protocol", params.N, strategy.label, event),
        block_size=max(1, block_size_for(params.N) // 4),
        workers=workers,
        level=level,
    )
