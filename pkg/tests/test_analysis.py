import numpy as np
import pytest
from hypothesis import given, strategies as st

from elsmvr.analysis import (
    block_means, mean_stderr, nondecreasing, paired_gap, plateau_iteration, plateau_level,
    spearman_negative,
)


def test_paired_gap_detects_shift():
    rng = np.random.default_rng(0)
    base = rng.normal(5, 1, 10)
    g = paired_gap(base + 0.5 + rng.normal(0, 0.05, 10), base)
    assert g.positive and g.mean == pytest.approx(0.5, abs=0.05)
    assert not paired_gap(base, base + 0.1).positive
    assert paired_gap([1.0], [0.0]).lower == -np.inf
    assert paired_gap([2.0, 3.0], [1.0, 2.0]).positive


def test_mean_stderr():
    m, se = mean_stderr([1.0, 3.0])
    assert (m, se) == (2.0, 1.0)
    assert mean_stderr([4.0]) == (4.0, 0.0)


def test_plateau_of_saturating_curve():
    t = np.arange(3000)
    fast = 10 - 5 * np.exp(-t / 100)
    slow = 10 - 5 * np.exp(-t / 400)
    pf, ps = plateau_iteration(fast), plateau_iteration(slow)
    assert pf < ps < 3000
    assert plateau_iteration(np.linspace(0, 10, 3000)) == 3000
    assert plateau_iteration(np.ones(3000)) == 0
    assert plateau_level(fast, 500) == pytest.approx(10, abs=1e-3)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=100), st.integers(1, 10))
def test_block_means_shape(xs, b):
    m = block_means(xs, b)
    assert m.size == len(xs) // b


def test_trend_helpers():
    assert nondecreasing([1, 2, 2, 3])
    assert not nondecreasing([1, 2, 1.9])
    assert nondecreasing([1, 2, 1.9], slack=0.2)
    rho, p, neg = spearman_negative([1, 2, 3, 4, 5, 6], [6, 5, 4, 3, 2, 1])
    assert rho == pytest.approx(-1.0) and neg
    assert not spearman_negative([1, 2, 3, 4], [1, 2, 3, 4])[2]
