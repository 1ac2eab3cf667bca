import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kfplab import evolution as evo

from conftest import make_ops


@pytest.fixture(scope="module")
def small():
    return make_ops(2.0, 8.0, 61)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (16, 5), elements=st.floats(-1e3, 1e3)))
def test_fft_round_trip(values):
    space = evo.SpaceGrid(4.0, 16)
    for real in (True, False):
        back = evo.modes_to_values(space, evo.values_to_modes(space, values, real), real)
        np.testing.assert_allclose(np.real(back), values, atol=1e-9)


def test_bump_support():
    x = np.linspace(-2, 2, 401)
    b = evo.bump(x)
    assert b[np.abs(x) >= 1].max() == 0.0 and evo.bump(0.0) == 1.0


@pytest.mark.parametrize("kind", ["fluid_bump", "micro_bump", "white_noise"])
def test_exact_mass_and_contraction(kind):
    # white noise puts O(1) data on the last node, where the boundary defect
    # of L sqrt(M) leaks mass; v_max = 10 pushes that below 1e-15
    small = make_ops(2.0, 10.0, 81)
    space = evo.SpaceGrid(8.0, 32)
    f0 = evo.initial_field(kind, small, space, seed=4)
    fields = evo.evolve_field(small, space, f0, np.linspace(0, 3, 7))
    m = np.array([evo.mass(small, f) for f in fields])
    n = np.array([evo.l2_norm(small, f) for f in fields])
    assert np.abs(m - m[0]).max() <= 1e-10 * max(abs(m[0]), 1.0)
    assert np.all(np.diff(n) <= 1e-12)
    if kind == "micro_bump":
        assert abs(m[0]) < 1e-12


def test_exact_matches_dense_expm(small):
    A = evo.generator(small, [0.7]).toarray()
    f0 = small.sqrtM.astype(complex)
    got = evo.propagate_mode(small, [0.7], f0, 1.3)
    np.testing.assert_allclose(got, sla.expm(1.3 * A) @ f0, atol=1e-12)


def test_crank_nicolson_second_order(small):
    f0 = (small.sqrtM + evo.micro_profile(small)).astype(complex)
    ref = evo.propagate_mode(small, [1.0], f0, 1.0)
    err = [np.linalg.norm(evo.propagate_mode(small, [1.0], f0, 1.0, "cn", dt) - ref) for dt in (0.05, 0.025, 0.0125)]
    ratios = np.array(err[:-1]) / np.array(err[1:])
    assert np.all((ratios >= 3.5) & (ratios <= 4.5))


def test_damped_semigroup_decays(small):
    f0 = small.sqrtM.astype(complex)
    f = evo.propagate_mode_damped(small, [0.0], f0, 2.0)
    assert np.linalg.norm(f) < np.linalg.norm(f0)


def test_exp_action(small):
    A = evo.generator(small, [0.3], damped=True)
    x0 = small.sqrtM.astype(complex)
    for times in (np.linspace(0, 1, 5), np.array([0.0, 0.1, 0.5, 1.2])):
        got = evo.exp_action(A, x0, times)
        want = np.array([sla.expm(t * A.toarray()) @ x0 for t in times])
        np.testing.assert_allclose(got, want, atol=1e-11)


def test_nonwrap_violation(small):
    space = evo.SpaceGrid(8.0, 32)
    f0 = evo.initial_field("fluid_bump", small, space)
    with pytest.raises(evo.NonWrapViolation):
        evo.evolve_modes(small, space, f0, [0.0, 20.0], wave_speed=1.0)


def test_thread_count_does_not_change_results(small):
    space = evo.SpaceGrid(8.0, 32)
    f0 = evo.initial_field("white_noise", small, space, seed=11)
    a = evo.evolve_modes(small, space, f0, [0.0, 0.5, 1.0], threads=1).fhat
    b = evo.evolve_modes(small, space, f0, [0.0, 0.5, 1.0], threads=2).fhat
    assert a.tobytes() == b.tobytes()


def test_predicted_wave_speed_heat_kernel():
    # for a = 1 and unit width the max over [5, 20] sits at t = 5
    assert evo.predicted_wave_speed(1.0, 5.0, 20.0) == pytest.approx(3.29 * np.sqrt(11.0) / 10.0)


def test_calibrate_wave_speed_gaussian(small):
    space = evo.SpaceGrid(64.0, 1024)
    t = 10.0
    prof = np.exp(-space.x**2 / (2 * 4.0))
    fld = evo.Field(space, small.grid, np.outer(prof, small.sqrtM), t)
    M = evo.calibrate_wave_speed(small, [fld])
    # 99.9% of a Gaussian density with variance 2 lies within 3.29 sqrt(2)
    assert 2 * M * t == pytest.approx(np.sqrt(1 + (3.29 * np.sqrt(2.0)) ** 2), abs=2 * space.dx)


def test_least_damped_velocity():
    assert evo.least_damped_velocity(make_ops(2.0, 10.0, 101)) == 0.0
    assert evo.least_damped_velocity(make_ops(1.0, 30.0, 101)) > 4.0
