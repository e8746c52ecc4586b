import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from compound_sk.errors import DomainError
from compound_sk.estimation import (chernoff_exponent, class_log_likelihoods, decide,
                                    estimate_error_curve, estimate_marginal)
from compound_sk.source import CompoundSource, bsc, cascade_joint


def two_class_source(a=0.3, b=0.7):
    return CompoundSource([cascade_joint([1 - a, a], bsc(0.1), bsc(0.2)),
                           cascade_joint([1 - b, b], bsc(0.1), bsc(0.2))])


def test_single_class_always_zero():
    src = CompoundSource([cascade_joint([0.4, 0.6], bsc(0.1), bsc(0.2))])
    assert estimate_marginal([1, 0, 1, 1], src.classes).estimated_class == 0


def test_clear_majority():
    src = two_class_source()
    assert estimate_marginal([1] * 9 + [0], src.classes).estimated_class == 1
    assert estimate_marginal([0] * 9 + [1], src.classes).estimated_class == 0


def test_tie_goes_to_smallest_index():
    src = two_class_source()
    assert estimate_marginal([0, 1, 0, 1], src.classes).estimated_class == 0


def test_zero_mass_eliminates_class():
    src = CompoundSource([cascade_joint([1.0, 0.0], bsc(0.1), bsc(0.2)),
                          cascade_joint([0.5, 0.5], bsc(0.1), bsc(0.2))])
    res = estimate_marginal([0, 0, 0, 1], src.classes)
    assert res.estimated_class == 1 and res.log_likelihoods[0] == -math.inf


def test_impossible_everywhere():
    j = np.zeros((3, 2, 2))
    j[0, 0, 0] = j[1, 1, 1] = 0.5
    src = CompoundSource([j])
    with pytest.raises(DomainError):
        estimate_marginal([2, 0], src.classes)


@given(st.integers(0, 2 ** 20))
def test_likelihood_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    margs = [rng.dirichlet(np.ones(3)) for _ in range(3)]
    src = CompoundSource([cascade_joint(m, np.eye(3), np.eye(3)) for m in margs])
    counts = rng.integers(0, 6, size=3)
    ll = class_log_likelihoods(counts, src.classes)
    for k, cls in enumerate(src.classes):
        ref = sum(c * math.log(p) for c, p in zip(counts, cls.x_marginal) if c > 0)
        assert ll[k] == pytest.approx(ref, rel=1e-12, abs=1e-12)
    best = max(range(len(ll)), key=lambda k: (ll[k], -k))
    assert decide(ll) == best


def test_chernoff_symmetric_closed_form():
    # for mirror-image Bernoullis the minimum sits at lambda = 1/2
    assert chernoff_exponent([0.7, 0.3], [0.3, 0.7]) == pytest.approx(
        oracles.CHERNOFF_03_07, abs=1e-9)
    assert oracles.CHERNOFF_03_07 == pytest.approx(math.log(2 * math.sqrt(0.21)), abs=1e-12)


def test_chernoff_identical_is_zero():
    assert chernoff_exponent([0.2, 0.8], [0.2, 0.8]) == pytest.approx(0.0, abs=1e-12)


def test_error_curve_deterministic_and_decreasing():
    src = two_class_source()
    a = estimate_error_curve(src, 0, [10, 20, 40], 20000, seed=3)
    b = estimate_error_curve(src, 0, [10, 20, 40], 20000, seed=3)
    assert a == b
    assert a.error_rates[0] > a.error_rates[1] > a.error_rates[2]
    assert a.slope is not None and a.slope < 0
