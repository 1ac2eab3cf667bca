import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy import integrate

from kfplab import velocity_ops as vo

from conftest import make_ops


def phi0_oracle(gamma):
    val, _ = integrate.quad(lambda v: np.exp(-((1 + v * v) ** (gamma / 2)) / gamma), -np.inf, np.inf,
                            epsabs=1e-14, epsrel=1e-13)
    return np.log(val)


@pytest.mark.parametrize("gamma, v_max, n", [(2.0, 10.0, 201), (1.0, 30.0, 301), (0.5, 160.0, 801)])
def test_phi0_matches_quadrature(gamma, v_max, n):
    ops = make_ops(gamma, v_max, n)
    # the grid drops the tail beyond v_max, worth a few 1e-8 for gamma = 1/2
    assert ops.params.phi0 == pytest.approx(phi0_oracle(gamma), abs=1e-7)


def test_phi0_gaussian_closed_form(ops2):
    # integral of exp(-(1+v^2)/2) is sqrt(2 pi) e^{-1/2}
    assert ops2.params.phi0 == pytest.approx(0.5 * np.log(2 * np.pi) - 0.5, abs=1e-10)
    assert ops2.params.phi0 == pytest.approx(0.41894, abs=1e-5)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 1.5, 2.0, 3.0])
def test_pointwise_potential_matches_finite_differences(gamma):
    v = np.linspace(-6, 6, 97)
    h = 1e-4
    phi = lambda s: vo.confinement(s, gamma)
    d1 = (phi(v + h) - phi(v - h)) / (2 * h)
    d2 = (phi(v + h) - 2 * phi(v) + phi(v - h)) / h**2
    np.testing.assert_allclose(vo.pointwise_potential(np.abs(v), gamma), d1**2 / 4 - d2 / 2, atol=2e-6)


def test_harmonic_ladder(ops2):
    top = np.sort(np.linalg.eigvalsh(ops2.L_dense))[::-1][:3]
    h2 = ops2.grid.spacing**2
    np.testing.assert_allclose(top, [0.0, -1.0, -2.0], atol=4 * h2)


@settings(max_examples=25, deadline=None)
@given(gamma=st.floats(0.5, 2.5), half=st.integers(10, 40), dim=st.sampled_from([1, 2]))
def test_symmetric_and_nonpositive(gamma, half, dim):
    v_max = vo.suggest_v_max(gamma)
    n = 2 * half + 1 if dim == 1 else 2 * (half // 4) + 3
    ops = make_ops(gamma, v_max, n, dim)
    L = ops.L_dense
    assert np.abs(L - L.T).max() <= 1e-12 * np.abs(L).max()
    assert np.linalg.eigvalsh(L).max() <= 1e-8


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), gamma=st.sampled_from([0.5, 1.0, 2.0]))
def test_dirichlet_form_is_sum_of_squares(seed, gamma):
    # <L f, f> = -sum over edges (ghosts included) s_i s_j (f_i/s_i - f_j/s_j)^2 / h^2
    ops = make_ops(gamma, vo.suggest_v_max(gamma), 61)
    f = np.random.default_rng(seed).normal(size=ops.size)
    h = ops.grid.spacing
    s = ops.sqrtM
    axis = ops.grid.axis
    ghost = np.exp(-0.5 * (vo.confinement(axis[-1] + h, gamma) + ops.params.phi0))
    se = np.concatenate([[ghost], s, [ghost]])
    fe = np.concatenate([[0.0], f, [0.0]])
    u = fe / se
    form = -np.sum(se[:-1] * se[1:] * np.diff(u) ** 2) / h**2
    assert f @ ops.L_dense @ f == pytest.approx(form, rel=1e-10)


def test_kernel_residual_second_order():
    params = vo.PotentialParams(2.0)
    r = [vo.kernel_residual(vo.build_grid(10.0, n), params) for n in (101, 201, 401)]
    ratios = np.array(r[:-1]) / np.array(r[1:])
    assert np.all((ratios >= 3.4) & (ratios <= 4.6))


def test_discrete_kernel_is_exact_up_to_boundary(ops2):
    assert np.linalg.norm(ops2.L @ ops2.sqrtM) < 1e-8


@pytest.mark.parametrize("gamma", [0.5, 1.0, 1.5, 2.0])
def test_coercivity_positive(gamma):
    v_max = vo.suggest_v_max(gamma)
    ops = make_ops(gamma, v_max, 401 if gamma < 1 else 201)
    assert vo.coercivity_constant(ops) > 0
    assert vo.lambda_coercivity(ops) > 0


def test_sigma_norm_matches_gram(ops1):
    f = np.random.default_rng(3).normal(size=ops1.size) * ops1.sqrtM
    assert vo.sigma_norm(ops1, f) ** 2 == pytest.approx(f @ vo.sigma_gram(ops1) @ f, rel=1e-12)


def test_projections(ops2):
    assert np.abs(ops2.P0 @ ops2.P0 - ops2.P0).max() < 1e-12
    assert ops2.norm(ops2.sqrtM) == pytest.approx(1.0, abs=1e-13)
    f = np.cos(ops2.grid.axis)
    assert abs(ops2.inner(ops2.sqrtM, ops2.project1(f))) < 1e-13


def test_cutoff_shape():
    s = np.linspace(0, 3, 301)
    c = vo.cutoff(s)
    assert np.all(c[s <= 1] == 1.0) and np.all(c[s >= 2] == 0.0)
    assert np.all(np.diff(c) <= 0)


def test_grid_errors():
    with pytest.raises(vo.GridError):
        vo.build_grid(10.0, 200)
    with pytest.raises(vo.GridError):
        vo.build_operators(vo.build_grid(2.0, 41), vo.PotentialParams(0.5))


def test_boundary_rule():
    for gamma in (0.5, 1.0, 2.0):
        v_max = vo.suggest_v_max(gamma)
        edge = vo.boundary_sqrt_mass(vo.build_grid(v_max, 101), vo.PotentialParams(gamma)) ** 2
        assert edge <= vo.BOUNDARY_MASS_TOL


def test_ops_json_round_trip(ops2):
    data = json.loads(vo.ops_to_json(ops2))
    Lj = data["L"]
    L = sp.coo_matrix((Lj["val"], (Lj["row"], Lj["col"])), shape=Lj["shape"]).toarray()
    np.testing.assert_array_equal(L, ops2.L_dense)
