"""Concentration bounds, exact CDF oracles and the round-count threshold calculus.

Logarithms are natural throughout; every tail bound here is of the form
``exp(-2 * gap**2 * n)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from decimal import Decimal

__all__ = [
    "BoundsDomainError",
    "InfeasibleParameters",
    "ThresholdInputs",
    "ThresholdReport",
    "SingleRunParams",
    "hoeffding_lower_tail",
    "hoeffding_upper_tail",
    "hypergeom_tail_low",
    "hypergeom_tail_high",
    "exact_binomial_cdf",
    "exact_binomial_sf",
    "exact_hypergeom_cdf",
    "exact_hypergeom_sf",
    "compute_A",
    "compute_A_prime",
    "threshold_report",
    "min_rounds",
    "lemma_min_rounds",
    "alpha_from_q",
    "single_run_parameters",
    "coloring_threshold",
    "A_MIN",
    "F_MIN",
]

A_MIN = 100.0
F_MIN = 0.9


class BoundsDomainError(ValueError):
    """An argument lies outside the domain where the formula is stated."""


class InfeasibleParameters(Exception):
    """Inputs are well formed but fall outside the regime where the bounds apply."""


# ---------------------------------------------------------------------------
# Parameter types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdInputs:
    N: int
    alpha: float
    delta: float
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise BoundsDomainError(f"N must be a positive integer, got {self.N!r}")
        if not 0.0 <= self.alpha < 0.5:
            raise BoundsDomainError(f"alpha must lie in [0, 1/2), got {self.alpha!r}")
        if not 0.0 < self.delta < 0.5:
            raise BoundsDomainError(f"delta must lie in (0, 1/2), got {self.delta!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise BoundsDomainError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")


@dataclass(frozen=True)
class ThresholdReport:
    """Every derived quantity for one parameter point.

    ``noise_threshold`` is ``w - g``; with ``epsilon == 0`` that is ``f*alpha - g``.
    """

    inputs: ThresholdInputs
    A: float
    A_prime: float
    f: float
    g: float
    w: float
    noise_threshold: float
    feasible_A: bool
    feasible_f: bool

    @property
    def feasible(self) -> bool:
        return self.feasible_A and self.feasible_f and self.noise_threshold > 0

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("inputs"))
        return d


@dataclass(frozen=True)
class SingleRunParams:
    c: float
    s: float
    gap: float


# ---------------------------------------------------------------------------
# Hoeffding / hypergeometric tail bounds
# ---------------------------------------------------------------------------


def _check_prob(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise BoundsDomainError(f"p must lie in [0, 1], got {p!r}")


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise BoundsDomainError(f"n must be a positive integer, got {n!r}")


def hoeffding_lower_tail(n: int, p: float, k: float) -> float:
    """Upper bound on ``Pr[Binomial(n, p) <= k]`` for ``k <= n*p``."""
    _check_n(n)
    _check_prob(p)
    if k > n * p:
        raise BoundsDomainError(f"lower-tail bound needs k <= n*p, got k={k!r} > {n * p!r}")
    return math.exp(-2.0 * (n * p - k) ** 2 / n)


def hoeffding_upper_tail(n: int, p: float, k: float) -> float:
    """Upper bound on ``Pr[Binomial(n, p) >= k]`` for ``k >= n*p``."""
    _check_n(n)
    _check_prob(p)
    if k < n * p:
        raise BoundsDomainError(f"upper-tail bound needs k >= n*p, got k={k!r} < {n * p!r}")
    return math.exp(-2.0 * (n * p - k) ** 2 / n)


def _check_hypergeom(Npop: int, K: int, n: int) -> None:
    _check_n(Npop)
    if not (int(K) == K and 0 <= K <= Npop):
        raise BoundsDomainError(f"K must be an integer in [0, {Npop}], got {K!r}")
    if not (int(n) == n and 0 <= n <= Npop):
        raise BoundsDomainError(f"n must be an integer in [0, {Npop}], got {n!r}")


def hypergeom_tail_low(Npop: int, K: int, n: int, lam: float) -> float:
    """Upper bound on ``Pr[X <= lam]`` for ``X ~ Hypergeometric(Npop, K, n)``, ``0 < lam < nK/Npop``."""
    _check_hypergeom(Npop, K, n)
    mean = n * K / Npop
    if not 0.0 < lam < mean:
        raise BoundsDomainError(f"lam must lie in (0, {mean!r}), got {lam!r}")
    return math.exp(-2.0 * n * (K / Npop - lam / n) ** 2)


def hypergeom_tail_high(Npop: int, K: int, n: int, lam: float) -> float:
    """Upper bound on ``Pr[X >= lam]`` for ``X ~ Hypergeometric(Npop, K, n)``, ``lam > nK/Npop``."""
    _check_hypergeom(Npop, K, n)
    mean = n * K / Npop
    if not lam > mean:
        raise BoundsDomainError(f"lam must exceed {mean!r}, got {lam!r}")
    if n == 0:
        return 1.0
    return math.exp(-2.0 * n * (lam / n - K / Npop) ** 2)


# ---------------------------------------------------------------------------
# Exact oracles
# ---------------------------------------------------------------------------


def _sum_log_terms(logs: list[float]) -> float:
    if not logs:
        return 0.0
    top = max(logs)
    if top == -math.inf:
        return 0.0
    total = math.fsum(math.exp(t - top) for t in logs)
    return min(1.0, total * math.exp(top))


def _binom_log_pmf(n: int, p: float, i: int) -> float:
    # callers handle p in {0, 1}
    return (
        math.lgamma(n + 1)
        - math.lgamma(i + 1)
        - math.lgamma(n - i + 1)
        + i * math.log(p)
        + (n - i) * math.log1p(-p)
    )


def exact_binomial_cdf(n: int, p: float, k: int) -> float:
    """``Pr[Binomial(n, p) <= k]`` by log-space summation of the pmf (``math.fsum``)."""
    if int(n) != n or n < 0:
        raise BoundsDomainError(f"n must be a non-negative integer, got {n!r}")
    _check_prob(p)
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    k = int(k)
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    # sum the shorter side for accuracy
    if k <= n * p:
        return _sum_log_terms([_binom_log_pmf(n, p, i) for i in range(k + 1)])
    return max(0.0, 1.0 - _sum_log_terms([_binom_log_pmf(n, p, i) for i in range(k + 1, n + 1)]))


def exact_binomial_sf(n: int, p: float, k: int) -> float:
    """``Pr[Binomial(n, p) >= k]``."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    # Pr[X >= k] = Pr[n - X <= n - k], n - X ~ Binomial(n, 1 - p)
    return exact_binomial_cdf(n, 1.0 - p, n - int(k))


def _hypergeom_log_pmf(Npop: int, K: int, n: int, i: int) -> float:
    def log_comb(a: int, b: int) -> float:
        return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)

    return log_comb(K, i) + log_comb(Npop - K, n - i) - log_comb(Npop, n)


def exact_hypergeom_cdf(Npop: int, K: int, n: int, k: int) -> float:
    """``Pr[X <= k]`` for ``X ~ Hypergeometric(Npop, K, n)`` (``K`` marked items, ``n`` draws)."""
    _check_hypergeom(Npop, K, n)
    lo = max(0, n - (Npop - K))
    hi = min(n, K)
    if k < lo:
        return 0.0
    if k >= hi:
        return 1.0
    k = int(k)
    if k - lo <= hi - k:
        return _sum_log_terms([_hypergeom_log_pmf(Npop, K, n, i) for i in range(lo, k + 1)])
    upper = _sum_log_terms([_hypergeom_log_pmf(Npop, K, n, i) for i in range(k + 1, hi + 1)])
    return max(0.0, 1.0 - upper)


def exact_hypergeom_sf(Npop: int, K: int, n: int, k: int) -> float:
    """``Pr[X >= k]`` for ``X ~ Hypergeometric(Npop, K, n)``."""
    # drawing unmarked items: n - X ~ Hypergeometric(Npop, Npop - K, n)
    return exact_hypergeom_cdf(Npop, Npop - K, n, n - int(math.ceil(k)))


# ---------------------------------------------------------------------------
# Threshold calculus
# ---------------------------------------------------------------------------


def compute_A(N: int, alpha: float, delta: float) -> float:
    if alpha <= 0:
        raise BoundsDomainError("alpha must be positive for A to be defined")
    if not 0.0 < delta < 0.5:
        raise BoundsDomainError(f"delta must lie in (0, 1/2), got {delta!r}")
    return alpha * alpha * N / (6.0 * math.log(2.0 / delta))


def _a_prime(A):
    # smaller root of x**2 - (2 + e) x + 1 = 0 with e = 3/A, written to avoid
    # cancellation in (2 + e)**2 - 4 = e (4 + e)
    if isinstance(A, Decimal):
        e = Decimal(3) / A
        return 1 - ((e * (4 + e)).sqrt() - e) / 2
    e = 3.0 / A
    one_minus = (math.sqrt(e * (4.0 + e)) - e) / 2.0
    return 1.0 - one_minus


def compute_A_prime(A: float) -> float:
    """Root ``x in (0, 1)`` of ``x * (1/x - 1)**2 == 3/A``; only defined here for ``A >= 100``.

    A ``Decimal`` argument is evaluated in the active decimal context and
    returns a ``Decimal``; binary64 cannot hold the root to better than about
    ``1e-16 / sqrt(3/A)`` relative accuracy in ``1 - A'``.
    """
    if not math.isfinite(A) or A <= 0:
        raise BoundsDomainError(f"A must be a positive real, got {A!r}")
    if A < A_MIN:
        raise InfeasibleParameters(f"A = {A:.6g} is below the required minimum {A_MIN:g}")
    return _a_prime(A)


def threshold_report(inputs: ThresholdInputs) -> ThresholdReport:
    """Evaluate ``A``, ``A'``, ``f``, ``g``, ``w`` and the tolerable noise at one point.

    ``A`` carries the ``(1 - epsilon)**2`` factor of the undetected-corruption
    model, so ``epsilon = 0`` gives the plain values without coins. Infeasible
    points (``A < 100`` or ``f < 9/10``) are flagged, not raised.
    """
    eps = inputs.epsilon
    if eps >= 1.0:
        raise BoundsDomainError("epsilon = 1 leaves no detectable corruption; A is zero")
    A = (1.0 - eps) ** 2 * compute_A(inputs.N, inputs.alpha, inputs.delta)
    A_prime = _a_prime(A)
    root = A ** -0.5
    f = A_prime * (1.0 - root)
    g = root / 2.0
    w = f * (1.0 - eps) * inputs.alpha
    return ThresholdReport(
        inputs=inputs,
        A=A,
        A_prime=A_prime,
        f=f,
        g=g,
        w=w,
        noise_threshold=w - g,
        feasible_A=A >= A_MIN,
        feasible_f=f >= F_MIN,
    )


def _meets(N: int, alpha: float, delta: float, epsilon: float, target: float) -> bool:
    r = threshold_report(ThresholdInputs(N, alpha, delta, epsilon))
    return r.feasible_A and r.feasible_f and r.noise_threshold > target


def min_rounds(alpha: float, delta: float, epsilon: float = 0.0, target_p_noise: float = 0.0) -> int:
    """Smallest ``N`` whose report is feasible with ``noise_threshold > target_p_noise``."""
    if alpha <= 0:
        raise BoundsDomainError("alpha must be positive")
    ThresholdInputs(1, alpha, delta, epsilon)
    ceiling = (1.0 - epsilon) * alpha
    if target_p_noise >= ceiling:
        raise InfeasibleParameters(
            f"target {target_p_noise!r} is at or above the asymptotic ceiling {ceiling!r}; no finite N"
        )
    hi = 1
    while not _meets(hi, alpha, delta, epsilon, target_p_noise):
        hi *= 2
        if hi > 1 << 62:
            raise InfeasibleParameters("no N below 2**62 reaches the target")
    lo = hi // 2
    # invariant: lo fails (or is 0), hi meets
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _meets(mid, alpha, delta, epsilon, target_p_noise):
            hi = mid
        else:
            lo = mid
    if hi > 1 and _meets(hi - 1, alpha, delta, epsilon, target_p_noise):
        raise AssertionError("noise threshold is not monotone in N near the search result")
    return hi


def lemma_min_rounds(alpha: float, delta: float, epsilon: float = 0.0, A: float = A_MIN) -> int:
    """Least integer ``N >= 6 A log(2/delta) / ((1 - epsilon)**2 alpha**2)``."""
    if alpha <= 0:
        raise BoundsDomainError("alpha must be positive")
    if epsilon >= 1.0:
        raise BoundsDomainError("epsilon must be below 1")
    if A < A_MIN:
        raise InfeasibleParameters(f"A = {A!r} is below {A_MIN:g}")
    bound = 6.0 * A * math.log(2.0 / delta) / ((1.0 - epsilon) ** 2 * alpha * alpha)
    N = math.ceil(bound)
    # guard against the float product landing a hair below the bound
    while threshold_report(ThresholdInputs(N, alpha, delta, epsilon)).A < A:
        N += 1
    return N


def alpha_from_q(q: float) -> float:
    """Corruption fraction ``(2q - 1) / (2q - 2)`` for inherent error probability ``q``."""
    if not 0.0 <= q < 0.5:
        raise BoundsDomainError(f"q must lie in [0, 1/2), got {q!r}")
    return (1 - 2 * q) / (2 - 2 * q)


def single_run_parameters(q: float) -> SingleRunParams:
    if not 0.0 < q < 0.5:
        raise BoundsDomainError(f"q must lie in (0, 1/2), got {q!r}")
    # arithmetic stays exact for Fraction inputs
    c = 1 - q / 3
    s = (q + 2) / 3
    return SingleRunParams(c=c, s=s, gap=(1 - 2 * q) / 3)


def coloring_threshold(k: int, q: float) -> float:
    """Noise threshold of the k-colouring MBQC protocol, for comparison tables."""
    if int(k) != k or k < 1:
        raise BoundsDomainError(f"k must be an integer >= 1, got {k!r}")
    return alpha_from_q(q) / k
