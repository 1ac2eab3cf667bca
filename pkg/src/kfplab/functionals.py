"""Weights, macroscopic fields and Lyapunov functionals.

Weights (one space dimension; x and v enter through <x> and <v>):

    c(x, v)      = 5 (d<x>)^q (1 - chi(z)) + [(1 - chi(z)) z + 3] <v>^g chi(z),
                   z = d <x> <v>^(g-3),  q = g / (3 - g)
    rho(t, x, v) = the same with <x> replaced by <x> - M t
    w(x, t)      = exp((<x> - M t) / (2 D))

Mode functionals for fhat(t, eta, .) with a = <sqrt(M), fhat>, b = <v sqrt(M), fhat>:

    E       = |fhat|^2 + k3 Re(i eta a conj(b)) / (1 + eta^2)
    E_tilde = E + k4 |W P1 fhat|^2   (|eta| <= 1)
            = E + k5 |W fhat|^2      (|eta| > 1),     W = exp(alpha <v>^g / 2)

with the dissipation inequalities

    dE/dt       + s rho_hat(eta) |fhat|^2_{g-1}    <= 0
    dE_tilde/dt + s rho_hat(eta) |W fhat|^2_{g-1}  <= 0,   rho_hat = min(1, eta^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import (Field, ModalTrajectory, ModePropagator, ProbeWeight, generator, modes_to_values,
                        velocity_norms)
from .velocity_ops import OperatorSet, bracket, cutoff

KAPPA_DEFAULT = 0.1
MAX_HALVINGS = 10


@dataclass(frozen=True)
class WeightParams:
    kind: str = "unit"
    D: float = 5.0
    alpha_weight: float = 0.04
    delta_weight: float = 0.5
    M: float = 1.0

    def __post_init__(self):
        if self.kind not in ("unit", "exp_x", "exp_c"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if min(self.D, self.alpha_weight, self.delta_weight, self.M) <= 0:
            raise ValueError("D, alpha_weight, delta_weight and M must be positive")

    def validate(self, gamma: float) -> None:
        if self.kind == "exp_c":
            if gamma >= 1.5:
                raise ValueError("the exp_c weight is defined for gamma < 3/2")
            if self.alpha_weight * gamma >= 1.0 / 20.0:
                raise ValueError(f"alpha_weight * gamma = {self.alpha_weight * gamma:.3g} must be below 1/20")
        if self.kind == "exp_x" and gamma < 1.5:
            raise ValueError("the exp_x weight is reserved for gamma >= 3/2")


def admissible_weights(gamma: float, base: WeightParams = WeightParams()) -> list[WeightParams]:
    """Unit weight plus the exponential weight allowed for this gamma."""
    kind = "exp_x" if gamma >= 1.5 else "exp_c"
    alpha = min(base.alpha_weight, 0.025 / gamma)
    return [WeightParams("unit", base.D, alpha, base.delta_weight, base.M),
            WeightParams(kind, base.D, alpha, base.delta_weight, base.M)]


def _check_gamma(gamma: float) -> None:
    if not 0 < gamma < 1.5:
        raise ValueError("the c and rho weights are defined for 0 < gamma < 3/2")


def _blend(reach, v, gamma: float):
    """Shared formula of c and rho with reach = delta <x> or delta (<x> - M t)."""
    reach = np.asarray(reach, dtype=float)
    jv = bracket(v)
    z = reach * jv ** (gamma - 3.0)
    chi = cutoff(z)
    q = gamma / (3.0 - gamma)
    far = 5.0 * np.where(reach > 0, np.abs(reach), 0.0) ** q
    return far * (1.0 - chi) + ((1.0 - chi) * z + 3.0) * jv**gamma * chi


def weight_c(x, v, gamma: float, delta: float):
    _check_gamma(gamma)
    return _blend(delta * bracket(x), v, gamma)


def weight_rho(t, x, v, gamma: float, delta: float, M: float):
    _check_gamma(gamma)
    return _blend(delta * (bracket(x) - M * np.asarray(t, dtype=float)), v, gamma)


def weight_w(t, x, D: float, M: float):
    """w(x, t) = exp((<x> - M t) / (2 D)), the exponential weight for gamma >= 3/2."""
    return np.exp((bracket(x) - M * np.asarray(t, dtype=float)) / (2.0 * D))


def partition_H(t, x, v, gamma: float, delta: float, M: float):
    """'plus', 'zero' or 'minus' per point by comparing delta(<x> - M t) with <v>^(3-g)."""
    reach = delta * (bracket(x) - M * np.asarray(t, dtype=float))
    edge = bracket(v) ** (3.0 - gamma)
    out = np.where(reach >= 2.0 * edge, "plus", np.where(reach <= edge, "minus", "zero"))
    return out.item() if out.ndim == 0 else out


def mu_values(weight: WeightParams, x, v, gamma: float):
    """mu(x, v) on broadcast arrays."""
    weight.validate(gamma)
    x, v = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
    if weight.kind == "unit":
        return np.ones(x.shape)
    if weight.kind == "exp_x":
        return np.exp(bracket(x) / weight.D)
    return np.exp(weight.alpha_weight * weight_c(x, v, gamma, weight.delta_weight))


def probe_weight(weight: WeightParams, gamma: float) -> ProbeWeight:
    """Reduce mu to what the small-time probe sees near x = 0.

    For exp_c the weight is x-independent while delta <x> <v>^(g-3) <= 1, so it
    is a pure velocity weight; exp_x contributes the frozen rate 1 / (2 D).
    """
    weight.validate(gamma)
    if weight.kind == "unit":
        return ProbeWeight("unit")
    if weight.kind == "exp_x":
        return ProbeWeight("exp_x", None, 0.5 / weight.D)
    return ProbeWeight("exp_c", lambda v: np.exp(weight.alpha_weight * weight_c(0.0, v, gamma, weight.delta_weight)))


def weighted_sobolev_norm(ops: OperatorSet, f: Field, weight: WeightParams = WeightParams(), k: int = 0,
                          gamma: float | None = None) -> float:
    """sum_{m <= k} ||sqrt(mu) d_x^m f||_{L2_{x,v}} with spectral x-derivatives."""
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    gamma = ops.params.gamma if gamma is None else gamma
    x, v = f.space.x, ops.grid.speed
    sq = np.sqrt(mu_values(weight, x[:, None], v[None, :], gamma))
    fhat = np.fft.fft(f.values, axis=0)
    eta = f.space.wavenumbers
    total = 0.0
    for m in range(k + 1):
        deriv = np.fft.ifft((1j * eta[:, None]) ** m * fhat, axis=0)
        if np.isrealobj(f.values):
            deriv = deriv.real
        total += np.sqrt(np.sum(velocity_norms(ops, sq * deriv) ** 2) * f.space.dx)
    return float(total)


@dataclass(frozen=True, eq=False)
class MacroFields:
    a: np.ndarray
    b: np.ndarray
    alpha_fluid: float
    Gamma: np.ndarray


def alpha_fluid(ops: OperatorSet) -> float:
    """(1/d) sum w |v|^2 M."""
    return float(np.sum(ops.weights * ops.grid.speed**2 * ops.sqrtM**2) / ops.grid.dim)


def _moments(ops: OperatorSet):
    nodes = ops.grid.nodes
    ws = ops.weights * ops.sqrtM
    b_rows = (nodes * ws[:, None]).T
    d = ops.grid.dim
    g_rows = np.empty((d, d, ops.size))
    for i in range(d):
        for j in range(d):
            g_rows[i, j] = (nodes[:, i] * nodes[:, j] - float(i == j)) * ws
    return ws, b_rows, g_rows


def macro_fields(ops: OperatorSet, f: Field) -> MacroFields:
    """a = <sqrt(M), f>, b_i = <v_i sqrt(M), f>, Gamma_ij(P1 f) per x node."""
    ws, b_rows, g_rows = _moments(ops)
    vals = f.values
    p1 = vals - np.outer(vals @ ws, ops.sqrtM)
    return MacroFields(vals @ ws, vals @ b_rows.T, alpha_fluid(ops), np.einsum("ijn,xn->xij", g_rows, p1))


def _potential_gradient(ops: OperatorSet) -> np.ndarray:
    """grad_v Phi = <v>^(g-2) v at the nodes."""
    return ops.grid.nodes * (bracket(ops.grid.speed) ** (ops.params.gamma - 2.0))[:, None]


def fluid_residual(ops: OperatorSet, traj: ModalTrajectory, time_derivative: str = "centered"):
    """Max defects (r_a, r_b) of the macroscopic system over interior snapshots.

        d_t a + d_x b = 0
        d_t b + alpha d_x a + d_x Gamma(P1 f) + int sqrt(M) grad Phi P1 f dv = 0

    With time_derivative="centered" d_t uses second-order central differences
    of the snapshots (uniform spacing required); with "exact" it applies the
    mode generator to each snapshot, so r_a reduces to the boundary flux of
    L sqrt(M). Space derivatives are spectral. One space dimension.
    """
    if len(traj.times) < 3:
        raise ValueError("at least three snapshots are needed")
    if traj.space.dim_x != 1 or ops.grid.dim != 1:
        raise ValueError("fluid_residual works in one space and one velocity dimension")
    ws, b_rows, g_rows = _moments(ops)
    grad_phi = _potential_gradient(ops)[:, 0]
    alpha = alpha_fluid(ops)
    eta = traj.etas[:, None]
    a_hat = traj.fhat @ ws
    b_hat = traj.fhat @ b_rows[0]
    p1 = traj.fhat - a_hat[..., None] * ops.sqrtM
    g_hat = p1 @ g_rows[0, 0]
    force_hat = p1 @ (ops.weights * ops.sqrtM * grad_phi)
    if time_derivative == "centered":
        dt = np.diff(traj.times)
        if not np.allclose(dt, dt[0], rtol=1e-9):
            raise ValueError("centered differences need uniform snapshots")
        inner = slice(1, -1)
        da = (a_hat[2:] - a_hat[:-2]) / (2 * dt[0])
        db = (b_hat[2:] - b_hat[:-2]) / (2 * dt[0])
    elif time_derivative == "exact":
        inner = slice(None)
        dfhat = np.stack([np.stack([generator(ops, e) @ traj.fhat[i, k] for k, e in enumerate(traj.etas)])
                          for i in range(len(traj.times))])
        da, db = dfhat @ ws, dfhat @ b_rows[0]
    else:
        raise ValueError(f"unknown time derivative {time_derivative!r}")
    ra_hat = da + 1j * eta[:, 0] * b_hat[inner]
    rb_hat = db + 1j * eta[:, 0] * (alpha * a_hat[inner] + g_hat[inner]) + force_hat[inner]
    r_a = np.abs(modes_to_values(traj.space, ra_hat.T, traj.real)).max()
    r_b = np.abs(modes_to_values(traj.space, rb_hat.T, traj.real)).max()
    return float(r_a), float(r_b)


# -- mode Lyapunov functionals -------------------------------------------------


def rho_hat(eta) -> float:
    return float(min(1.0, float(np.sum(np.square(eta)))))


def _coupling(ops: OperatorSet, eta: float, fhat, dfhat=None):
    """Re(i eta a conj(b)) / (1 + eta^2) and optionally its time derivative."""
    ws = ops.weights * ops.sqrtM
    vs = ws * ops.grid.nodes[:, 0]
    a, b = fhat @ ws, fhat @ vs
    val = np.real(1j * eta * a * np.conj(b)) / (1.0 + eta**2)
    if dfhat is None:
        return val
    da, db = dfhat @ ws, dfhat @ vs
    rate = np.real(1j * eta * (da * np.conj(b) + a * np.conj(db))) / (1.0 + eta**2)
    return val, rate


def _sq(ops, f, weight=None):
    f = np.atleast_2d(f)
    wt = ops.weights if weight is None else ops.weights * weight
    return np.real(np.sum(wt * np.abs(f) ** 2, axis=-1))


def _sq_rate(ops, f, df, weight=None):
    wt = ops.weights if weight is None else ops.weights * weight
    return 2.0 * np.real(np.sum(wt * np.conj(np.atleast_2d(f)) * np.atleast_2d(df), axis=-1))


def velocity_weight(ops: OperatorSet, alpha_weight: float) -> np.ndarray:
    """W^2 = exp(alpha <v>^g)."""
    return np.exp(alpha_weight * bracket(ops.grid.speed) ** ops.params.gamma)


def dissipation_weight(ops: OperatorSet) -> np.ndarray:
    """<v>^(2(g-1)), the L2_{g-1} density."""
    return bracket(ops.grid.speed) ** (2.0 * (ops.params.gamma - 1.0))


def kawashima_E(ops: OperatorSet, mode, kappa3: float = KAPPA_DEFAULT):
    """E(t, eta) for a ModeState or for fhat rows (eta, fhat[..., v])."""
    eta, fhat = _mode_args(mode)
    return _sq(ops, fhat) + kappa3 * _coupling(ops, eta, np.atleast_2d(fhat))


def kawashima_E_tilde(ops: OperatorSet, mode, kappa4: float = KAPPA_DEFAULT, kappa5: float = KAPPA_DEFAULT,
                      alpha_weight: float = 0.04, kappa3: float = KAPPA_DEFAULT):
    eta, fhat = _mode_args(mode)
    fhat = np.atleast_2d(fhat)
    W2 = velocity_weight(ops, alpha_weight)
    base = kawashima_E(ops, (eta, fhat), kappa3)
    if abs(eta) <= 1.0:
        return base + kappa4 * _sq(ops, _p1(ops, fhat), W2)
    return base + kappa5 * _sq(ops, fhat, W2)


def _mode_args(mode):
    if hasattr(mode, "fhat"):
        eta = float(np.linalg.norm(mode.eta))
        return eta, mode.fhat
    eta, fhat = mode
    return float(np.linalg.norm(np.atleast_1d(eta))), fhat


def _p1(ops: OperatorSet, f):
    ws = ops.weights * ops.sqrtM
    return f - np.multiply.outer(f @ ws, ops.sqrtM)


@dataclass
class LyapunovState:
    eta: float
    times: np.ndarray
    E: np.ndarray
    E_tilde: np.ndarray
    kappa3: float
    kappa4: float
    kappa5: float
    alpha_weight: float
    sigma_E: float
    sigma_E_tilde: float
    defect_E: float
    tol_E: float
    defect_E_tilde: float
    tol_E_tilde: float
    band_E: tuple
    band_E_tilde: tuple
    halvings: int = 0
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.defect_E <= self.tol_E and self.defect_E_tilde <= self.tol_E_tilde
                    and 0.5 <= self.band_E[0] and self.band_E[1] <= 2.0
                    and 0.5 <= self.band_E_tilde[0] and self.band_E_tilde[1] <= 2.0)

    def as_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k not in ("times", "E", "E_tilde")}
        out.update(times=self.times.tolist(), E=self.E.tolist(), E_tilde=self.E_tilde.tolist(),
                   band_E=list(self.band_E), band_E_tilde=list(self.band_E_tilde), passed=self.passed)
        return out


def _functionals_along(ops, eta, fhat, dfhat, k3, k4, k5, alpha):
    """Values and exact time derivatives of E and E_tilde along rows of fhat."""
    W2 = velocity_weight(ops, alpha)
    coup, coup_rate = _coupling(ops, eta, fhat, dfhat)
    E = _sq(ops, fhat) + k3 * coup
    dE = _sq_rate(ops, fhat, dfhat) + k3 * coup_rate
    if eta <= 1.0:
        extra, dextra = _sq(ops, _p1(ops, fhat), W2), _sq_rate(ops, _p1(ops, fhat), _p1(ops, dfhat), W2)
        k = k4
    else:
        extra, dextra = _sq(ops, fhat, W2), _sq_rate(ops, fhat, dfhat, W2)
        k = k5
    return E, dE, E + k * extra, dE + k * dextra


def _dissipation(ops, fhat, alpha):
    dw = dissipation_weight(ops)
    return _sq(ops, fhat, dw), _sq(ops, fhat, dw * velocity_weight(ops, alpha))


def _sigma_best(rate, diss, rh):
    """Largest s with rate + s rh diss <= 0 at every sample (inf when rh = 0)."""
    if rh == 0.0:
        return float("inf") if np.all(rate <= 1e-14 * np.abs(diss).max()) else -float("inf")
    ok = diss > 0
    return float(np.min(-rate[ok] / (rh * diss[ok])))


def _discrete_defect(times, values, diss, sigma, rh):
    """Discrete dissipation defect on the even samples of a half-step grid.

    Per step, (V_{n+1} - V_n) / dt + sigma rh Q_n / dt with Q_n the Simpson
    integral of the dissipation over the step (the odd samples are the exact
    midpoints). The tolerance is sigma rh max |trapezoid - Simpson| / dt, the
    quadrature error estimate of the coarser rule.
    """
    s = 0.0 if not np.isfinite(sigma) else sigma
    t, V, D, Dm = times[::2], values[::2], diss[::2], diss[1::2]
    dt = np.diff(t)
    simpson = dt / 6.0 * (D[:-1] + 4.0 * Dm + D[1:])
    trap = 0.5 * dt * (D[:-1] + D[1:])
    defect = float(np.max((np.diff(V) + s * rh * simpson) / dt))
    tol = float(s * rh * np.max(np.abs(trap - simpson) / dt)) + 1e-12 * float(np.abs(V).max())
    return defect, tol


def lyapunov_check(ops: OperatorSet, eta: float, fhat0, times, alpha_weight: float = 0.04,
                   kappa: float = KAPPA_DEFAULT, sigma_fraction: float = 1.0) -> LyapunovState:
    """Run one mode exactly and verify the E and E_tilde dissipation inequalities.

    The couplings start at `kappa` and are halved together until both
    functionals lie within [1/2, 2] of |fhat|^2 and of the weighted norm and
    both measured sigmas are positive. sigma is the best constant from the
    exact derivative d/dt fhat = A fhat along the trajectory (times
    `sigma_fraction`); the discrete defect then uses snapshot differences of
    the functionals against a quadrature of the dissipation. `times` must be
    uniformly spaced; the exact midpoints are added internally.
    """
    coarse = np.asarray(times, dtype=float)
    step = np.diff(coarse)
    if len(coarse) < 2 or not np.allclose(step, step[0], rtol=1e-9):
        raise ValueError("lyapunov_check needs uniformly spaced times")
    times = np.linspace(coarse[0], coarse[-1], 2 * len(coarse) - 1)
    prop = ModePropagator(ops, [eta])
    fhat = prop.exact(np.asarray(fhat0, dtype=complex), times)
    dfhat = (prop.A @ fhat.T).T
    rh = rho_hat(eta)
    norm2 = _sq(ops, fhat)
    wnorm2 = _sq(ops, fhat, velocity_weight(ops, alpha_weight))
    d_plain, d_weighted = _dissipation(ops, fhat, alpha_weight)
    k = kappa
    for halvings in range(MAX_HALVINGS + 1):
        E, dE, Et, dEt = _functionals_along(ops, abs(eta), fhat, dfhat, k, k, k, alpha_weight)
        band_E = (float(np.min(E / norm2)), float(np.max(E / norm2)))
        band_Et = (float(np.min(Et / wnorm2)), float(np.max(Et / wnorm2)))
        s_E = _sigma_best(dE, d_plain, rh)
        s_Et = _sigma_best(dEt, d_weighted, rh)
        if (band_E[0] >= 0.5 and band_E[1] <= 2.0 and band_Et[0] >= 0.5 and band_Et[1] <= 2.0
                and s_E > 0 and s_Et > 0):
            break
        if halvings == MAX_HALVINGS:
            raise ArithmeticError(f"no coupling below {kappa} / 2^{MAX_HALVINGS} makes the functionals "
                                  f"equivalent and dissipative at eta={eta}")
        k *= 0.5
    s_E_used = sigma_fraction * s_E if np.isfinite(s_E) else 0.0
    s_Et_used = sigma_fraction * s_Et if np.isfinite(s_Et) else 0.0
    def_E, tol_E = _discrete_defect(times, E, d_plain, s_E_used, rh)
    def_Et, tol_Et = _discrete_defect(times, Et, d_weighted, s_Et_used, rh)
    return LyapunovState(float(eta), times, E, Et, k, k, k, alpha_weight, s_E, s_Et, def_E, tol_E, def_Et,
                         tol_Et, band_E, band_Et, halvings)


def holder_constant(gamma: float, alpha_weight: float, j: int, speeds=None) -> float:
    """sup_v <v>^(2(1-g)) exp(-alpha <v>^g / j): bounds exp(-alpha <v>^g / j) by the L2_{g-1} density."""
    if speeds is None:
        s_star = (2.0 * j * (1.0 - gamma) / (alpha_weight * gamma)) ** (1.0 / gamma) if gamma < 1 else 1.0
        s = max(s_star, 1.0)
        return float(s ** (2.0 * (1.0 - gamma)) * np.exp(-alpha_weight * s**gamma / j))
    jb = bracket(speeds)
    return float(np.max(jb ** (2.0 * (1.0 - gamma)) * np.exp(-alpha_weight * jb**gamma / j)))


def interpolation_check(ops: OperatorSet, eta: float, fhat, j: int, alpha_weight: float = 0.04,
                        kappa: float = KAPPA_DEFAULT) -> dict:
    """E^((j+1)/j) <= C |fhat|^2_{g-1} E_tilde^(1/j) with C = 2^((j+2)/j) times the Hoelder constant.

    The factor 2^((j+2)/j) comes from the [1/2, 2] equivalence bands of E and
    E_tilde; the Hoelder constant is evaluated on the grid speeds.
    """
    fhat = np.atleast_2d(fhat)
    E = kawashima_E(ops, (eta, fhat), kappa)
    Et = kawashima_E_tilde(ops, (eta, fhat), kappa, kappa, alpha_weight, kappa)
    diss = _sq(ops, fhat, dissipation_weight(ops))
    C = 2.0 ** ((j + 2.0) / j) * holder_constant(ops.params.gamma, alpha_weight, j, ops.grid.speed)
    lhs = E ** ((j + 1.0) / j)
    rhs = C * diss * Et ** (1.0 / j)
    return {"j": j, "C": C, "max_ratio": float(np.max(lhs / rhs)), "holds": bool(np.all(lhs <= rhs))}
