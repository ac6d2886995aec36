"""The one-shot (alpha, w)-avoidance game with undetected-corruption coins.

The verifier hides a random set ``C`` (each of ``1..N`` joins independently
with probability 1/3); the prover picks ``S``.  Each element of ``S`` outside
``C`` is caught unless its epsilon-coin comes up 0.  The prover wins when

    a) |S & C| > alpha * |C|      and
    b) #{x in S - C : Y_x = 1} <= w * (N - |C|).

Elements are numbered from 1 as sets; boolean masks use column ``i`` for
element ``i + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from .bounds import exact_binomial_cdf
from .montecarlo import DEFAULT_LEVEL, TrialSummary, block_size_for, estimate, stream_id

MAX_EXACT_N = 24


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class GameParams:
    N: int
    alpha: float
    w: float
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not 0.0 <= self.alpha < 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2), got {self.alpha!r}")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"w must lie in [0, 1], got {self.w!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")


@dataclass(frozen=True)
class GameOutcome:
    C_size: int
    S_cap_C: int
    undetected_off_C: int
    prover_wins: bool


# ---------------------------------------------------------------------------
# Adversary strategies
# ---------------------------------------------------------------------------


def _uniform_subset_masks(rng: np.random.Generator, rows: int, N: int, m: int) -> np.ndarray:
    mask = np.zeros((rows, N), dtype=bool)
    if m <= 0:
        return mask
    if m >= N:
        mask[:] = True
        return mask
    keys = rng.random((rows, N))
    picked = np.argpartition(keys, m - 1, axis=1)[:, :m]
    np.put_along_axis(mask, picked, True, axis=1)
    return mask


class AdversaryStrategy:
    """How the prover chooses ``S``; random strategies are redrawn every trial."""

    label: str = "?"

    def masks(self, rng: np.random.Generator, rows: int, N: int) -> np.ndarray:
        raise NotImplementedError

    def choose(self, N: int, rng: np.random.Generator) -> frozenset[int]:
        row = self.masks(rng, 1, N)[0]
        return frozenset(int(i) + 1 for i in np.flatnonzero(row))


@dataclass(frozen=True)
class EmptySet(AdversaryStrategy):
    label = "empty"

    def masks(self, rng, rows, N):
        return np.zeros((rows, N), dtype=bool)


@dataclass(frozen=True)
class FullSet(AdversaryStrategy):
    label = "full"

    def masks(self, rng, rows, N):
        return np.ones((rows, N), dtype=bool)


@dataclass(frozen=True)
class FixedSet(AdversaryStrategy):
    elements: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", frozenset(int(x) for x in self.elements))
        if any(x < 1 for x in self.elements):
            raise ValueError("set elements are numbered from 1")

    @property
    def label(self) -> str:
        return "fixed:" + ",".join(str(x) for x in sorted(self.elements))

    def masks(self, rng, rows, N):
        if self.elements and max(self.elements) > N:
            raise ValueError(f"fixed set {sorted(self.elements)} is not a subset of 1..{N}")
        mask = np.zeros((rows, N), dtype=bool)
        mask[:, [x - 1 for x in self.elements]] = True
        return mask


@dataclass(frozen=True)
class UniformRandomOfSize(AdversaryStrategy):
    m: int = 0

    @property
    def label(self) -> str:
        return f"uniform:{self.m}"

    def masks(self, rng, rows, N):
        if not 0 <= self.m <= N:
            raise ValueError(f"size {self.m} is outside 0..{N}")
        return _uniform_subset_masks(rng, rows, N, self.m)


@dataclass(frozen=True)
class SizeDistribution(AdversaryStrategy):
    """Draw ``|S| = m`` with probability ``weights[m]``, then a uniform subset of that size."""

    weights: tuple[float, ...] = (1.0,)
    name: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(x) for x in self.weights))
        if any(x < 0 for x in self.weights) or not math.isclose(math.fsum(self.weights), 1.0, abs_tol=1e-9):
            raise ValueError("size weights must be non-negative and sum to 1")

    @classmethod
    def binomial(cls, N: int, p: float = 0.5) -> "SizeDistribution":
        """Sizes of a subset that keeps each element independently with probability ``p``."""
        weights = [math.exp(_log_binom_pmf(N, p, k)) for k in range(N + 1)]
        total = math.fsum(weights)
        return cls(tuple(x / total for x in weights), name=f"random:{p:g}")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return "sizes:" + "/".join(f"{x:g}" for x in self.weights)

    def masks(self, rng, rows, N):
        if len(self.weights) > N + 1:
            raise ValueError(f"weights cover sizes beyond N={N}")
        p = np.asarray(self.weights) / math.fsum(self.weights)
        sizes = rng.choice(len(p), size=rows, p=p)
        keys = rng.random((rows, N))
        ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
        return ranks < sizes[:, None]


def _log_binom_pmf(n: int, p: float, k: int) -> float:
    if p in (0.0, 1.0):
        return 0.0 if k == round(n * p) else -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) + k * math.log(p) + (n - k) * math.log1p(-p)


def parse_strategy(text: str, N: int | None = None) -> AdversaryStrategy:
    """``empty``, ``full``, ``fixed:1,2,3``, ``uniform:m``, or ``random:p`` (needs ``N``)."""
    kind, _, arg = text.partition(":")
    if kind == "empty":
        return EmptySet()
    if kind == "full":
        return FullSet()
    if kind == "fixed":
        return FixedSet(frozenset(int(x) for x in arg.split(",") if x.strip()))
    if kind == "uniform":
        return UniformRandomOfSize(int(arg))
    if kind == "random":
        if N is None:
            raise ValueError("random:p strategies need N")
        return SizeDistribution.binomial(N, float(arg or 0.5))
    raise ValueError(f"unknown strategy {text!r}")


# ---------------------------------------------------------------------------
# Single plays
# ---------------------------------------------------------------------------


def sample_C(N: int, rng: np.random.Generator) -> frozenset[int]:
    """Roll a fair three-sided die per element; face 0 puts it in ``C``."""
    if N <= 0:
        return frozenset()
    faces = rng.integers(0, 3, size=N)
    return frozenset(int(i) + 1 for i in np.flatnonzero(faces == 0))


def _sample_C_masks(rng: np.random.Generator, rows: int, N: int) -> np.ndarray:
    return rng.integers(0, 3, size=(rows, N), dtype=np.int8) == 0


def win_condition(params: GameParams, C_size: int, S_cap_C: int, undetected_off_C: int) -> bool:
    return S_cap_C > params.alpha * C_size and undetected_off_C <= params.w * (params.N - C_size)


def play(params: GameParams, S: Iterable[int], rng: np.random.Generator) -> GameOutcome:
    S = frozenset(S)
    if S and (min(S) < 1 or max(S) > params.N):
        raise ValueError(f"S must be a subset of 1..{params.N}")
    C = sample_C(params.N, rng)
    cap = len(S & C)
    # only coins off C can matter, so only those are flipped
    undetected = sum(1 for _ in sorted(S - C) if rng.random() < 1.0 - params.epsilon)
    return GameOutcome(
        C_size=len(C),
        S_cap_C=cap,
        undetected_off_C=undetected,
        prover_wins=win_condition(params, len(C), cap, undetected),
    )


def _play_block(params: GameParams, strategy: AdversaryStrategy, rng: np.random.Generator, rows: int) -> int:
    N = params.N
    S = strategy.masks(rng, rows, N)
    C = _sample_C_masks(rng, rows, N)
    c_size = C.sum(axis=1)
    cap = (S & C).sum(axis=1)
    off = S & ~C
    if params.epsilon > 0.0:
        off &= rng.random((rows, N)) < 1.0 - params.epsilon
    undetected = off.sum(axis=1)
    wins = (cap > params.alpha * c_size) & (undetected <= params.w * (N - c_size))
    return int(wins.sum())


# ---------------------------------------------------------------------------
# Exact oracle and Monte Carlo estimates
# ---------------------------------------------------------------------------


def exact_win_probability(params: GameParams, S: Iterable[int]) -> float:
    """Win probability by enumerating all ``2**N`` hidden sets (``N <= 24``)."""
    N = params.N
    if N > MAX_EXACT_N:
        raise EnumerationTooLarge(f"exact enumeration is limited to N <= {MAX_EXACT_N}, got N={N}")
    S = frozenset(S)
    if S and (min(S) < 1 or max(S) > N):
        raise ValueError(f"S must be a subset of 1..{N}")
    s = len(S)
    if s == 0:
        return 0.0
    s_bits = sum(1 << (x - 1) for x in S)

    # tally hidden sets by (|C|, |S & C|)
    tally = np.zeros((N + 1, s + 1), dtype=np.int64)
    chunk = 1 << 20
    for start in range(0, 1 << N, chunk):
        masks = np.arange(start, min(start + chunk, 1 << N), dtype=np.uint32)
        c_size = np.bitwise_count(masks).astype(np.int64)
        cap = np.bitwise_count(masks & np.uint32(s_bits)).astype(np.int64)
        np.add.at(tally, (c_size, cap), 1)

    terms = []
    for c in range(N + 1):
        log_weight = c * math.log(1 / 3) + (N - c) * math.log(2 / 3)
        for cap in range(min(c, s) + 1):
            count = int(tally[c, cap])
            if count == 0 or not cap > params.alpha * c:
                continue
            budget = math.floor(params.w * (N - c))
            p_b = exact_binomial_cdf(s - cap, 1.0 - params.epsilon, budget)
            if p_b > 0.0:
                terms.append(count * math.exp(log_weight) * p_b)
    return math.fsum(terms)


def monte_carlo_win_probability(
    params: GameParams,
    strategy: AdversaryStrategy,
    trials: int,
    seed: int,
    *,
    workers: int = 1,
    level: float = DEFAULT_LEVEL,
) -> TrialSummary:
    fn = partial(_play_block, params, strategy)
    return estimate(
        fn,
        trials,
        seed=seed,
        stream=stream_id("game", params.N, strategy.label),
        block_size=block_size_for(params.N),
        workers=workers,
        level=level,
    )


@dataclass(frozen=True)
class SweepResult:
    sizes: tuple[int, ...]
    summaries: tuple[TrialSummary, ...]

    @property
    def argmax(self) -> int:
        best = max(range(len(self.sizes)), key=lambda i: self.summaries[i].point_estimate)
        return self.sizes[best]

    @property
    def max_ci_high(self) -> float:
        return max(s.ci_high for s in self.summaries)


def strategy_sweep(
    params: GameParams,
    sizes: Sequence[int],
    trials: int,
    seed: int,
    *,
    workers: int = 1,
    level: float = DEFAULT_LEVEL,
) -> SweepResult:
    for m in sizes:
        if not 0 <= m <= params.N:
            raise ValueError(f"size {m} is outside 0..{params.N}")
    summaries = tuple(
        monte_carlo_win_probability(params, UniformRandomOfSize(int(m)), trials, seed, workers=workers, level=level)
        for m in sizes
    )
    return SweepResult(tuple(int(m) for m in sizes), summaries)
