import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kfplab import evolution as evo
from kfplab import rates

from conftest import make_ops

T = np.linspace(5, 20, 31)


@settings(max_examples=50, deadline=None)
@given(p=st.floats(-3, 1), c=st.floats(0.1, 10))
def test_power_recovery(p, c):
    fit = rates.fit_power(T, c * T**p)
    assert fit.exponent == pytest.approx(p, abs=1e-9)
    assert fit.coefficient == pytest.approx(c, rel=1e-8)
    assert fit.residual < 1e-9


def test_power_exp_separates_damping():
    t = np.geomspace(1e-3, 0.1, 12)
    fit = rates.fit_power_exp(t, 2 * t**-1.5 * np.exp(-30 * t))
    assert fit.exponent == pytest.approx(-1.5, abs=1e-9)
    assert fit.extra["rate"] == pytest.approx(30, rel=1e-8)
    # a plain log-log slope absorbs the damping
    assert rates.fit_power(t, 2 * t**-1.5 * np.exp(-30 * t)).exponent < -1.65


@settings(max_examples=30, deadline=None)
@given(q=st.floats(0.2, 1.2), c=st.floats(0.1, 3))
def test_stretched_recovery_and_certificate(q, c):
    y = 5 * np.exp(-c * T**q)
    fit = rates.fit_stretched_exp(T, y, q)
    assert fit.exponent == pytest.approx(c, rel=1e-8)
    assert rates.certify_q(T, y, q)["certified"]


def test_certificate_rejects_wrong_law():
    cert = rates.certify_q(T, np.exp(-0.7 * T), 1 / 3)
    assert not cert["certified"]
    assert cert["best_q"] == pytest.approx(0.5)  # the scan edge, 1.5 q


def test_exp_fit():
    fit = rates.fit_exp(T, 3 * np.exp(-0.25 * T))
    assert fit.law == "exp" and fit.exponent == pytest.approx(0.25)


def test_holdout_catches_slope_change():
    y = T**-0.5
    y[T > 16] *= (T[T > 16] / 16) ** -1.0
    assert rates.fit_power(T, y).residual > 0.05


def test_bad_samples():
    with pytest.raises(ValueError):
        rates.fit_power(T[:5], T[:5])
    with pytest.raises(ValueError):
        rates.fit_power(T, -T)


def _snapshots(ops, space, profile, times):
    return [evo.Field(space, ops.grid, np.outer(profile(space.x, t), ops.sqrtM), t) for t in times]


@pytest.fixture(scope="module")
def ops():
    return make_ops(2.0, 10.0, 61)


@pytest.mark.parametrize("q", [0.5, 1.0 / 3.0, 1.0])
def test_spatial_tail_recovers_q(ops, q):
    space = evo.SpaceGrid(200.0, 4096)
    snaps = _snapshots(ops, space, lambda x, t: np.exp(-2 * (np.sqrt(1 + x**2) + t) ** q), np.arange(5, 21.0))
    fit = rates.spatial_tail_fit(ops, snaps, 1.0, 1.0, floor=1e-300)
    assert fit.exponent == pytest.approx(q, abs=0.01)


def test_spatial_tail_unresolved_below_floor(ops):
    space = evo.SpaceGrid(50.0, 256)
    snaps = _snapshots(ops, space, lambda x, t: 1e-20 * np.exp(-np.abs(x)), np.arange(5, 21.0))
    fit = rates.spatial_tail_fit(ops, snaps, 1.0, 2.0)
    assert fit.law == "unresolved" and fit.extra["q_predicted"] == 1.0


def test_predicted_spatial_q():
    assert rates.predicted_spatial_q(1.0) == 0.5
    assert rates.predicted_spatial_q(0.75) == pytest.approx(1 / 3)
    assert rates.predicted_spatial_q(2.0) == 1.0


def test_heat_profile_and_variance(ops):
    space = evo.SpaceGrid(100.0, 2048)
    a = 1.3

    def heat(x, t):
        return np.exp(-x**2 / (4 * a * t)) / np.sqrt(4 * np.pi * a * t)

    snaps = _snapshots(ops, space, heat, np.arange(5, 21.0))
    cmp = rates.heat_profile_compare(ops, snaps, a, 1.0)
    assert cmp["shrinking"]
    assert rates.profile_variance(ops, snaps[-1]) == pytest.approx(2 * a * 20, rel=1e-6)
