import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from vdqc.montecarlo import (
    block_rng,
    block_size_for,
    confidence_interval,
    estimate,
    run_trials,
    stream_id,
    summarize,
)


def wilson_cc_reference(x, n, level):
    # direct transcription of the continuity-corrected score interval
    z = stats.norm.ppf(1 - (1 - level) / 2)
    p = x / n
    lo = 0.0 if x == 0 else (2 * n * p + z**2 - 1 - z * math.sqrt(z**2 - 2 - 1 / n + 4 * p * (n * (1 - p) + 1))) / (2 * (n + z**2))
    hi = 1.0 if x == n else (2 * n * p + z**2 + 1 + z * math.sqrt(z**2 + 2 - 1 / n + 4 * p * (n * (1 - p) - 1))) / (2 * (n + z**2))
    return max(0.0, lo), min(1.0, hi)


def test_interval_anchors():
    lo, hi = confidence_interval(0, 1000, 0.99)
    assert lo == 0.0 and hi < 0.01
    assert hi == pytest.approx(0.00755, abs=1e-5)
    assert confidence_interval(1000, 1000, 0.99)[1] == 1.0
    lo, hi = confidence_interval(500, 1000, 0.99)
    assert (lo + hi) / 2 == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("x,n", [(1, 10), (3, 50), (17, 1000), (499, 1000), (999, 1000)])
def test_wilson_matches_reference(x, n):
    assert confidence_interval(x, n, 0.99) == pytest.approx(wilson_cc_reference(x, n, 0.99), abs=1e-12)


def test_clopper_pearson():
    lo, hi = confidence_interval(0, 1000, 0.99, "clopper-pearson")
    assert lo == 0.0
    assert hi == pytest.approx(1 - 0.005 ** (1 / 1000), rel=1e-9)
    with pytest.raises(ValueError):
        confidence_interval(1, 10, method="bogus")


def test_interval_rejects_bad_input():
    for args in [(5, 4), (-1, 4), (0, 0)]:
        with pytest.raises(ValueError):
            confidence_interval(*args)
    with pytest.raises(ValueError):
        confidence_interval(1, 4, 1.0)


@settings(max_examples=300, deadline=None)
@given(n=st.integers(1, 10**6), frac=st.floats(0, 1), level=st.floats(0.5, 0.999),
       method=st.sampled_from(["wilson-cc", "clopper-pearson"]))
def test_summary_invariants(n, frac, level, method):
    x = int(frac * n)
    s = summarize(x, n, level=level, method=method)
    assert 0.0 <= s.ci_low <= s.point_estimate <= s.ci_high <= 1.0
    assert s.successes <= s.trials


def test_stream_ids_stable_and_distinct():
    assert stream_id("game", 12, "full") == stream_id("game", 12, "full")
    assert stream_id("game", 12, "full") != stream_id("game", 12, "empty")
    assert 0 <= stream_id("x") < 2**64


def test_block_rng_is_a_pure_function_of_its_key():
    a = block_rng(1, 2, 3).random(5)
    b = block_rng(1, 2, 3).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, block_rng(1, 2, 4).random(5))
    assert not np.array_equal(a, block_rng(2, 2, 3).random(5))


def _coin_block(rng, rows):
    return int((rng.random(rows) < 0.3).sum())


def test_worker_count_does_not_change_results():
    kw = dict(seed=99, stream=stream_id("t"), block_size=block_size_for(1000))
    serial = run_trials(_coin_block, 5000, workers=1, **kw)
    assert run_trials(_coin_block, 5000, workers=2, **kw) == serial
    assert run_trials(_coin_block, 5000, workers=3, **kw) == serial


def test_estimate_is_consistent():
    s = estimate(_coin_block, 20000, seed=5, stream=1, block_size=1000)
    assert s.ci_low <= 0.3 <= s.ci_high
    assert "wall_time" not in s.as_dict()
