"""Fourier-mode propagation of the linearized equation and of the damped semigroup.

Each x-Fourier mode eta evolves independently under

    d/dt fhat = A(eta) fhat,   A(eta) = -i diag(v.eta) + L      (undamped)
                               A(eta) = -i diag(v.eta) - Lambda (damped)

The exact scheme applies matrix exponentials of A over the increments of the
requested time grid; Crank-Nicolson steps with a sparse LU of (I - dt/2 A).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .parallel import ordered_map
from .velocity_ops import OperatorSet, VelocityGrid

NONWRAP_FRACTION = 0.8


class NonWrapViolation(ValueError):
    """The predicted wave cone reaches the periodic image within the horizon."""


@dataclass(frozen=True, eq=False)
class SpaceGrid:
    l_x: float
    n_x: int
    dim_x: int = 1

    def __post_init__(self):
        if self.n_x < 2 or self.n_x & (self.n_x - 1):
            raise ValueError(f"n_x must be a power of two, got {self.n_x}")
        if self.dim_x != 1:
            raise ValueError("only one space dimension is supported by the field solver")
        if not self.l_x > 1:
            raise ValueError("l_x must exceed the unit support of the initial data")

    @property
    def dx(self) -> float:
        return 2.0 * self.l_x / self.n_x

    @cached_property
    def x(self) -> np.ndarray:
        return -self.l_x + self.dx * np.arange(self.n_x)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """eta_k = pi k / l_x in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_x, d=self.dx)

    @cached_property
    def half_wavenumbers(self) -> np.ndarray:
        """Non-negative wavenumbers of the real transform."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n_x, d=self.dx)


@dataclass(eq=False)
class Field:
    space: SpaceGrid
    velocity: VelocityGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.values.shape != (self.space.n_x, self.velocity.size):
            raise ValueError(f"field shape {self.values.shape} does not match the grids")


@dataclass
class ModeState:
    eta: np.ndarray
    fhat: np.ndarray
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class ModalTrajectory:
    """Mode amplitudes fhat[t, k, v] with the data needed to rebuild fields.

    When `real` is set only the non-negative wavenumbers of the real FFT are
    stored; the negative ones are their complex conjugates.
    """

    space: SpaceGrid
    velocity: VelocityGrid
    times: np.ndarray
    etas: np.ndarray
    fhat: np.ndarray
    real: bool
    flags: list = field(default_factory=list)

    def field(self, i: int) -> Field:
        return Field(self.space, self.velocity, modes_to_values(self.space, self.fhat[i], self.real),
                     float(self.times[i]))

    def fields(self) -> list[Field]:
        return [self.field(i) for i in range(len(self.times))]

    def with_modes(self, fhat: np.ndarray) -> "ModalTrajectory":
        return ModalTrajectory(self.space, self.velocity, self.times, self.etas, fhat, self.real, list(self.flags))


def values_to_modes(space: SpaceGrid, values: np.ndarray, real: bool) -> np.ndarray:
    """x-FFT scaled so that the inverse is a plain sum over modes."""
    if real:
        return np.fft.rfft(np.real(values), axis=0) / space.n_x
    return np.fft.fft(values, axis=0) / space.n_x


def initial_modes(space: SpaceGrid, values: np.ndarray, real: bool) -> np.ndarray:
    """Modes of the initial data with the Nyquist mode of real data removed.

    Transport makes the Nyquist amplitude complex, which a real field cannot
    represent; dropping it keeps the stored modes and the fields consistent.
    """
    fhat = values_to_modes(space, values, real)
    if real:
        fhat[-1] = 0.0
    return fhat


def modes_to_values(space: SpaceGrid, fhat: np.ndarray, real: bool) -> np.ndarray:
    if real:
        return np.fft.irfft(fhat * space.n_x, n=space.n_x, axis=0)
    return np.fft.ifft(fhat * space.n_x, axis=0)


def bump(x) -> np.ndarray:
    """C-infinity bump supported in |x| < 1 with bump(0) = 1."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1
    safe = np.where(inside, 1.0 - x**2, 1.0)
    return np.where(inside, np.exp(1.0 - 1.0 / safe), 0.0)


def micro_profile(ops: OperatorSet) -> np.ndarray:
    """Even P1 profile (|v|^2 - <|v|^2>) sqrt(M), unit quadrature norm."""
    r2 = ops.grid.speed**2
    g = ops.project1(r2 * ops.sqrtM)
    return g / ops.norm(g)


def initial_field(kind: str, ops: OperatorSet, space: SpaceGrid, seed: int = 0) -> Field:
    x = space.x
    if kind == "fluid_bump":
        values = np.outer(bump(x), ops.sqrtM)
    elif kind == "micro_bump":
        values = np.outer(bump(x), micro_profile(ops))
    elif kind == "white_noise":
        rng = np.random.default_rng(seed)
        values = rng.uniform(-1.0, 1.0, size=(space.n_x, ops.size))
        values[np.abs(x) > 1.0] = 0.0
    else:
        raise ValueError(f"unknown initial data kind {kind!r}")
    return Field(space, ops.grid, values.astype(float), 0.0)


def generator(ops: OperatorSet, eta, damped: bool = False) -> sp.csr_matrix:
    """Sparse A(eta) for the undamped or damped mode equation."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    vdot = ops.grid.nodes[:, : eta.size] @ eta
    base = -ops.Lambda if damped else ops.L
    return sp.csr_matrix(base.astype(complex) - 1j * sp.diags(vdot))


class ModePropagator:
    """Propagator for one mode with memoized exponentials per time increment."""

    def __init__(self, ops: OperatorSet, eta, damped: bool = False):
        self.ops = ops
        self.eta = np.atleast_1d(np.asarray(eta, dtype=float))
        self.damped = damped
        self.A = generator(ops, self.eta, damped)
        self._exp = {}

    @cached_property
    def dense(self) -> np.ndarray:
        return self.A.toarray()

    def expm(self, dt: float) -> np.ndarray:
        key = float(dt)
        if key not in self._exp:
            self._exp[key] = sla.expm(dt * self.dense)
        return self._exp[key]

    def exact(self, fhat0, times) -> np.ndarray:
        """fhat at each of the non-decreasing `times` (t = 0 allowed)."""
        out = np.empty((len(times), fhat0.size), dtype=complex)
        current, t_prev = np.asarray(fhat0, dtype=complex), 0.0
        for i, t in enumerate(times):
            step = _round_step(t - t_prev)
            if step < 0:
                raise ValueError("times must be non-decreasing and non-negative")
            if step > 0:
                current = self.expm(step) @ current
            out[i] = current
            t_prev = t
        return out

    def crank_nicolson(self, fhat0, times, dt: float) -> np.ndarray:
        n = self.A.shape[0]
        eye = sp.identity(n, format="csc", dtype=complex)
        lu = spla.splu(sp.csc_matrix(eye - 0.5 * dt * self.A))
        rhs_op = sp.csr_matrix(eye + 0.5 * dt * self.A)
        out = np.empty((len(times), n), dtype=complex)
        current, steps_done = np.asarray(fhat0, dtype=complex), 0
        for i, t in enumerate(times):
            target = int(round(t / dt))
            if abs(target * dt - t) > 1e-9 * max(1.0, t):
                raise ValueError(f"time {t} is not a multiple of dt={dt}")
            for _ in range(target - steps_done):
                current = lu.solve(rhs_op @ current)
            steps_done = target
            out[i] = current
        return out

    def run(self, fhat0, times, scheme: str = "exact", dt: float | None = None) -> np.ndarray:
        if scheme == "exact":
            return self.exact(fhat0, times)
        if scheme == "cn":
            if dt is None:
                raise ValueError("the cn scheme needs a time step")
            return self.crank_nicolson(fhat0, times, dt)
        raise ValueError(f"unknown scheme {scheme!r}")


def _round_step(dt: float) -> float:
    # increments of a uniform grid differ in the last bits; merge them so the
    # exponential cache is reused
    return float(np.round(dt, 12))


def propagate_mode(ops: OperatorSet, eta, fhat0, t: float, scheme: str = "exact",
                   dt: float | None = None) -> np.ndarray:
    """fhat(t) under d/dt fhat = (-i v.eta + L) fhat."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return ModePropagator(ops, eta).run(fhat0, [t], scheme, dt)[0]


def propagate_mode_damped(ops: OperatorSet, eta, fhat0, t: float, scheme: str = "exact",
                          dt: float | None = None) -> np.ndarray:
    """fhat(t) under d/dt fhat = (-i v.eta - Lambda) fhat."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return ModePropagator(ops, eta, damped=True).run(fhat0, [t], scheme, dt)[0]


def predicted_wave_speed(a_gamma: float, t_min: float, t_max: float, width: float = 1.0,
                         z: float = 3.29) -> float:
    """Heat-kernel estimate of the cone speed: z sqrt(2 a t + width^2) / (2 t), max over [t_min, t_max]."""
    ts = np.linspace(t_min, t_max, 64)
    return float(np.max(z * np.sqrt(2.0 * a_gamma * ts + width**2) / (2.0 * ts)))


def check_nonwrap(space: SpaceGrid, wave_speed: float, t_max: float) -> None:
    if 2.0 * wave_speed * t_max >= NONWRAP_FRACTION * space.l_x:
        raise NonWrapViolation(
            f"2 M t_max = {2 * wave_speed * t_max:.3g} reaches {NONWRAP_FRACTION} l_x = "
            f"{NONWRAP_FRACTION * space.l_x:.3g}; enlarge l_x"
        )


def evolve_modes(ops: OperatorSet, space: SpaceGrid, f0: Field, times, scheme: str = "exact",
                 dt: float | None = None, damped: bool = False, threads: int = 1,
                 wave_speed: float | None = None) -> ModalTrajectory:
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and non-decreasing")
    if wave_speed is not None:
        check_nonwrap(space, wave_speed, float(times.max()))
    real = bool(np.isrealobj(f0.values) or not np.any(np.imag(f0.values)))
    fhat0 = initial_modes(space, f0.values, real)
    etas = space.half_wavenumbers if real else space.wavenumbers

    def work(k):
        return ModePropagator(ops, etas[k], damped).run(fhat0[k], times, scheme, dt)

    per_mode = ordered_map(work, range(len(etas)), threads)
    fhat = np.stack(per_mode, axis=1)
    return ModalTrajectory(space, ops.grid, times, etas, fhat, real)


def evolve_field(ops: OperatorSet, space: SpaceGrid, f0: Field, t_grid, scheme: str = "exact",
                 dt: float | None = None, threads: int = 1, wave_speed: float | None = None) -> list[Field]:
    """Solution snapshots at every time in t_grid via FFT, per-mode propagation, inverse FFT."""
    return evolve_modes(ops, space, f0, t_grid, scheme, dt, False, threads, wave_speed).fields()


def velocity_norms(ops: OperatorSet, values: np.ndarray) -> np.ndarray:
    """|f(x)|_{L2_v} at every x node."""
    return np.sqrt(np.sum(ops.weights * np.abs(values) ** 2, axis=1))


def mass(ops: OperatorSet, fld: Field) -> float:
    """sum_x dx <sqrt(M), f(x)>."""
    return float(np.real(np.sum(fld.values @ (ops.weights * ops.sqrtM)) * fld.space.dx))


def l2_norm(ops: OperatorSet, fld: Field) -> float:
    return float(np.sqrt(np.sum(velocity_norms(ops, fld.values) ** 2) * fld.space.dx))


def calibrate_wave_speed(ops: OperatorSet, fields, t_min: float = 5.0, fraction: float = 0.999) -> float:
    """Smallest M with `fraction` of ||f(t)||^2 inside <x> <= 2 M t for every t >= t_min."""
    speeds = []
    for fld in fields:
        if fld.time < t_min:
            continue
        dens = velocity_norms(ops, fld.values) ** 2
        jx = np.sqrt(1.0 + fld.space.x**2)
        order = np.argsort(jx, kind="stable")
        cum = np.cumsum(dens[order]) / dens.sum()
        radius = jx[order][np.searchsorted(cum, fraction)]
        speeds.append(radius / (2.0 * fld.time))
    if not speeds:
        raise ValueError(f"no snapshot at or after t={t_min}")
    return float(max(speeds))


def exp_action(A, x0, times) -> np.ndarray:
    """exp(t A) x0 at each non-decreasing time, by truncated-Taylor actions.

    Uniformly spaced grids are handled in one call; other grids step through
    their increments.
    """
    times = np.asarray(times, dtype=float)
    x0 = np.asarray(x0, dtype=complex)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and non-decreasing")
    out = np.empty((len(times), x0.size), dtype=complex)
    A = sp.csr_matrix(A)
    if len(times) > 2 and np.allclose(np.diff(times), times[1] - times[0], rtol=1e-10, atol=0):
        out[:] = spla.expm_multiply(A, x0, start=times[0], stop=times[-1], num=len(times), endpoint=True)
        return out
    current, t_prev = x0, 0.0
    for i, t in enumerate(times):
        if t > t_prev:
            current = spla.expm_multiply((t - t_prev) * A, current)
        out[i] = current
        t_prev = t
    return out


@dataclass(frozen=True, eq=False)
class VelocityWindow:
    """Refined velocity interval around `center` for small-time probes.

    Small-time smoothing happens on velocity scales of order sqrt(t), far below
    the spacing of the global grid, so the singular rates are measured on a
    local window with its own spacing and Dirichlet ends. The potential and
    cutoff are evaluated pointwise at the absolute velocities.
    """

    center: float
    offsets: np.ndarray
    spacing: float
    laplacian: np.ndarray
    gradient: np.ndarray
    damping: np.ndarray
    source: np.ndarray

    @property
    def velocities(self) -> np.ndarray:
        return self.center + self.offsets

    @property
    def size(self) -> int:
        return self.offsets.size


def velocity_window(ops: OperatorSet, center: float = 0.0, half_width: float = 2.5,
                    spacing: float = 0.02) -> VelocityWindow:
    from .velocity_ops import cutoff, pointwise_potential, _axis_first_difference, _axis_second_difference

    if ops.grid.dim != 1:
        raise ValueError("velocity windows are one-dimensional")
    n = 2 * int(round(half_width / spacing)) + 1
    offsets = spacing * (np.arange(n) - n // 2)
    v = np.abs(center + offsets)
    p = ops.params
    source = p.cutoff_strength * cutoff(v / p.cutoff_radius)
    damping = pointwise_potential(v, p.gamma, 1) + source
    return VelocityWindow(float(center), offsets, spacing,
                          _axis_second_difference(n, spacing).toarray(),
                          _axis_first_difference(n, spacing).toarray(), damping, source)


def least_damped_velocity(ops: OperatorSet, v_max: float = 40.0) -> float:
    """Velocity minimizing psi + K, where the damped semigroup decays slowest."""
    from .velocity_ops import cutoff, pointwise_potential

    p = ops.params
    v = np.linspace(0.0, v_max, 8001)
    total = pointwise_potential(v, p.gamma, 1) + p.cutoff_strength * cutoff(v / p.cutoff_radius)
    return float(v[np.argmin(total)])


def window_generator(win: VelocityWindow, eta: complex) -> np.ndarray:
    """Damped mode generator D2 - diag(psi + K) - i eta w on the window.

    The transport uses the offsets w = v - center; the dropped factor
    exp(-i eta center t) is a scalar and only changes a phase for real eta.
    """
    return win.laplacian - np.diag(win.damping + 1j * eta * win.offsets)


def _top_singular(m: np.ndarray) -> float:
    return float(sla.svdvals(m)[0])


@dataclass(frozen=True)
class ProbeWeight:
    """x-independent velocity weight mu(v) and frozen x-gradient rate of log mu.

    mu(x, v) ~ mu_v(v) exp(2 x_rate <x>); norms carry sqrt(mu).
    """

    name: str = "unit"
    mu_v: object = None
    x_rate: float = 0.0


def regularization_probe(ops: OperatorSet, t_list, weight: ProbeWeight = ProbeWeight(),
                         win: VelocityWindow | None = None, eta_factors=None,
                         shifts=(-1.0, 0.0, 1.0), threads: int = 1) -> list[dict]:
    """Worst-case smoothing of the damped semigroup over unit-norm data.

    For each t, returns sup over eta of the largest singular values of
    sqrt(mu) grad_v exp(t A(eta)) / sqrt(mu) and of |i eta - s x_rate| times the
    propagator, which are the operator norms of grad_v e^{tL} and grad_x e^{tL}
    on the weighted space. The eta scan is centred on t^(-3/2), the scale at
    which transport and velocity diffusion balance. An exponential x weight is
    handled by freezing the gradient of <x>: conjugation shifts eta by
    i s x_rate with s in `shifts`.
    """
    win = velocity_window(ops, least_damped_velocity(ops), 1.5, 0.01) if win is None else win
    factors = np.geomspace(0.05, 20.0, 15) if eta_factors is None else np.asarray(eta_factors)
    sq = np.ones(win.size) if weight.mu_v is None else np.sqrt(weight.mu_v(win.velocities))
    rate = weight.x_rate
    shift_set = tuple(shifts) if rate else (0.0,)

    def one(t):
        best_v = best_x = 0.0
        for eta in np.concatenate([[0.0], factors * t ** -1.5]):
            for s in shift_set:
                E = sla.expm(t * window_generator(win, eta + 1j * s * rate))
                E = (sq[:, None] * E) / sq[None, :]
                best_v = max(best_v, _top_singular(win.gradient @ E))
                best_x = max(best_x, abs(1j * eta - s * rate) * _top_singular(E))
        return {"t": float(t), "grad_v": best_v, "grad_x": best_x}

    return ordered_map(one, list(t_list), threads)


def field_regularization_norms(ops: OperatorSet, space: SpaceGrid, h0: Field, times,
                               threads: int = 1) -> list[dict]:
    """||grad_v e^{tL} h0|| and ||grad_x e^{tL} h0|| for actual data on the global grids."""
    traj = evolve_modes(ops, space, h0, times, damped=True, threads=threads)
    Dv = ops.Dv[0]
    rows = []
    for i, t in enumerate(traj.times):
        values = traj.field(i).values
        gv = np.asarray((Dv @ values.T).T)
        gx = modes_to_values(space, 1j * traj.etas[:, None] * traj.fhat[i], traj.real)
        norm = lambda a: float(np.sqrt(np.sum(velocity_norms(ops, a) ** 2) * space.dx))
        rows.append({"t": float(t), "grad_v": norm(gv), "grad_x": norm(gx)})
    return rows
