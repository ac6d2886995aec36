"""Monte Carlo plumbing shared by the game, protocol and experiment modules.

Randomness is counter based: trials are grouped into fixed-size blocks and
block ``b`` of stream ``s`` under seed ``k`` always draws from
``Philox(key=(s, k), counter=b * 2**64)``.  Block size depends only on the
problem size, so any split of blocks across workers reproduces the serial
result exactly.
"""

from __future__ import annotations

import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable

import numpy as np
from scipy import stats

MASK64 = (1 << 64) - 1
DEFAULT_SEED = 20240611
DEFAULT_LEVEL = 0.99
# elements materialised per block (trials * N)
BLOCK_ELEMENTS = 1 << 18


@dataclass(frozen=True)
class TrialSummary:
    successes: int
    trials: int
    point_estimate: float
    ci_low: float
    ci_high: float
    level: float = DEFAULT_LEVEL
    method: str = "wilson-cc"
    seed: int | None = None
    wall_time: float = 0.0

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2.0

    def as_dict(self) -> dict:
        # wall_time is left out so that serialised results are reproducible
        return {
            "successes": self.successes,
            "trials": self.trials,
            "estimate": self.point_estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
            "method": self.method,
            "seed": self.seed,
        }


def confidence_interval(
    successes: int, trials: int, level: float = DEFAULT_LEVEL, method: str = "wilson-cc"
) -> tuple[float, float]:
    """Two-sided interval for a binomial proportion.

    ``wilson-cc`` is the Wilson score interval with continuity correction
    (Newcombe 1998, method 4); ``clopper-pearson`` is the exact beta interval.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in [0, {trials}], got {successes}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    n, x = trials, successes
    p = x / n
    if method == "clopper-pearson":
        a = 1.0 - level
        low = 0.0 if x == 0 else float(stats.beta.ppf(a / 2, x, n - x + 1))
        high = 1.0 if x == n else float(stats.beta.ppf(1 - a / 2, x + 1, n - x))
    elif method == "wilson-cc":
        z = NormalDist().inv_cdf(1.0 - (1.0 - level) / 2.0)
        z2 = z * z
        denom = 2.0 * (n + z2)
        if x == 0:
            low = 0.0
        else:
            rad = z2 - 2.0 - 1.0 / n + 4.0 * p * (n * (1.0 - p) + 1.0)
            low = (2 * n * p + z2 - 1.0 - z * math.sqrt(max(rad, 0.0))) / denom
        if x == n:
            high = 1.0
        else:
            rad = z2 + 2.0 - 1.0 / n + 4.0 * p * (n * (1.0 - p) - 1.0)
            high = (2 * n * p + z2 + 1.0 + z * math.sqrt(max(rad, 0.0))) / denom
    else:
        raise ValueError(f"unknown interval method {method!r}")
    low = min(max(low, 0.0), p)
    high = max(min(high, 1.0), p)
    return low, high


def summarize(
    successes: int,
    trials: int,
    *,
    level: float = DEFAULT_LEVEL,
    method: str = "wilson-cc",
    seed: int | None = None,
    wall_time: float = 0.0,
) -> TrialSummary:
    low, high = confidence_interval(successes, trials, level, method)
    return TrialSummary(
        successes=successes,
        trials=trials,
        point_estimate=successes / trials,
        ci_low=low,
        ci_high=high,
        level=level,
        method=method,
        seed=seed,
        wall_time=wall_time,
    )


def stream_id(*labels: object) -> int:
    """Stable 64-bit id for a named random stream."""
    text = "\x1f".join(repr(x) for x in labels)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    key = ((stream & MASK64) << 64) | (seed & MASK64)
    return np.random.Generator(np.random.Philox(key=key, counter=block << 64))


def block_size_for(n_elements: int) -> int:
    return max(1, BLOCK_ELEMENTS // max(1, n_elements))


BlockFn = Callable[[np.random.Generator, int], int]


def _run_block_range(fn: BlockFn, trials: int, block_size: int, seed: int, stream: int, blocks: range) -> int:
    total = 0
    for b in blocks:
        count = min(block_size, trials - b * block_size)
        total += int(fn(block_rng(seed, stream, b), count))
    return total


def run_trials(
    fn: BlockFn,
    trials: int,
    *,
    seed: int,
    stream: int,
    block_size: int,
    workers: int = 1,
) -> int:
    """Sum ``fn(rng, count)`` over all blocks; the result does not depend on ``workers``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_blocks = -(-trials // block_size)
    if workers <= 1 or n_blocks == 1:
        return _run_block_range(fn, trials, block_size, seed, stream, range(n_blocks))
    n_chunks = min(n_blocks, workers * 4)
    edges = [n_blocks * i // n_chunks for i in range(n_chunks + 1)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_block_range, fn, trials, block_size, seed, stream, range(edges[i], edges[i + 1]))
            for i in range(n_chunks)
        ]
        return sum(f.result() for f in futures)


def estimate(
    fn: BlockFn,
    trials: int,
    *,
    seed: int,
    stream: int,
    block_size: int,
    workers: int = 1,
    level: float = DEFAULT_LEVEL,
    method: str = "wilson-cc",
) -> TrialSummary:
    t0 = time.perf_counter()
    hits = run_trials(fn, trials, seed=seed, stream=stream, block_size=block_size, workers=workers)
    return summarize(hits, trials, level=level, method=method, seed=seed, wall_time=time.perf_counter() - t0)
