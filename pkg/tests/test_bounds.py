import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from h22sigma import bounds
from h22sigma.bounds import BoundParams, EnvelopeNotValid, I_beta, beta_c, fit_decay_rate

from oracles import I_closed

BETA_GRID = np.geomspace(1e-3, 50.0, 20)


@pytest.mark.parametrize("b", BETA_GRID)
def test_I_beta_below_one_and_matches_bessel(b):
    val = I_beta(b)
    assert 0 < val < 1
    assert val == pytest.approx(I_closed(b), abs=1e-10)


def test_I_beta_examples():
    for b in (0.01, 0.05, 0.1):
        assert I_beta(b) <= math.sqrt(b) * math.log(1 / b)
    assert math.log(10) * math.sqrt(0.1) == pytest.approx(0.728, abs=1e-3)
    assert I_beta(100.0) > 0.98
    with pytest.raises(ValueError):
        I_beta(0.0)


def test_I_beta_increasing():
    vals = [I_beta(b) for b in BETA_GRID]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_beta_c():
    assert beta_c(1) == math.inf
    for d, cap in ((2, 1 / 9), (3, 1 / 25)):
        r = beta_c(d)
        assert 0 < r < cap
        assert abs(bounds.rate(d, r) - 1) <= 1e-9
    r3 = beta_c(3)
    assert abs(5 * I_beta(r3) * math.exp(4 * r3) - 1) <= 1e-9
    assert r3 < 0.04
    with pytest.raises(ValueError):
        beta_c(0)


def test_envelopes():
    bp = BoundParams(1, 1.0)
    r = I_beta(1.0)
    assert bp.rate == pytest.approx(r)
    assert bounds.theorem1_envelope(bp, 1.0, 1.0, 0) == pytest.approx(2 * bp.C0)
    for n in range(5):
        e0 = bounds.theorem1_envelope(bp, 0.5, 2.0, n)
        assert bounds.theorem1_envelope(bp, 0.5, 2.0, n + 1) == pytest.approx(r * e0, rel=1e-14)
        assert bounds.theorem1_envelope(bp, 0.5, 2.0, n + 1) < e0
    assert bounds.theorem2_envelope(bp, 0) == bp.C0
    assert BoundParams(1, 0.05).rate == pytest.approx(I_beta(0.05))
    assert BoundParams(1, 0.05).C0 == pytest.approx(2 * math.exp(1.1) / (1 - I_beta(0.05)))
    assert BoundParams(2, 0.003).rate < 1
    with pytest.raises(EnvelopeNotValid):
        bounds.theorem1_envelope(BoundParams(3, 0.05), 1.0, 1.0, 2)
    with pytest.raises(EnvelopeNotValid):
        bounds.theorem2_envelope(BoundParams(2, 0.1), 2)
    with pytest.raises(ValueError):
        bounds.theorem1_envelope(bp, 0.0, 1.0, 2)
    assert BoundParams(1, 1.0, C0=3.0).C0 == 3.0


def test_intro_condition_implies_localization():
    for d in (2, 3):
        ok = [b for b in np.geomspace(1e-6, 0.2, 400) if math.sqrt(b) * math.log(1 / b) <= 1 / (2 * d - 1)]
        assert ok
        assert max(bounds.rate(d, b) for b in ok) < 1.05


def test_fit_exact_geometric():
    pts = [(n, 3 * 0.5**n, 0.0) for n in range(6)]
    fit = fit_decay_rate(pts)
    assert fit.rate == pytest.approx(math.log(2))
    assert fit.intercept == pytest.approx(math.log(3))
    assert fit.rate_stderr == pytest.approx(0.0, abs=1e-12)


def test_fit_errors_and_exclusions():
    with pytest.raises(ValueError):
        fit_decay_rate([(0, 1.0, 0.1)])
    with pytest.warns(RuntimeWarning):
        fit = fit_decay_rate([(0, 1.0, 0.1), (1, 0.5, 0.05), (2, -0.1, 0.1), (3, 0.125, 0.01)])
    assert fit.n_excluded == 1 and fit.n_used == 3


@given(st.integers(0, 10_000))
def test_fit_recovers_noisy_rate(seed):
    rng = np.random.default_rng(seed)
    rate, rel = 0.7, 0.05
    pts = []
    for n in range(10):
        v = 2.0 * math.exp(-rate * n)
        pts.append((n, v * math.exp(rng.normal(0, rel)), v * rel))
    fit = fit_decay_rate(pts)
    # 4.5 sigma so the property holds across every hypothesis seed
    assert abs(fit.rate - rate) <= 4.5 * fit.rate_stderr
