"""Long/short wave, fluid/non-fluid and Picard wave-remainder decompositions.

The Picard levels solve

    d/dt h0 = A_d h0,            h0(0) = f0
    d/dt hj = A_d hj + K h(j-1), hj(0) = 0     (j = 1, 2, 3)

per Fourier mode with A_d = -i v.eta - Lambda. Stacking the levels gives a
block lower-triangular generator whose exponential action evaluates every
Duhamel integral without quadrature error. The remainder R3 = f - W3 is also
re-solved from d/dt R = A R + K h3, R(0) = 0, by appending one more block,
which gives an independent check of the split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .evolution import (Field, ModalTrajectory, ModePropagator, SpaceGrid, VelocityWindow,
                        evolve_modes, exp_action, generator, initial_modes, velocity_window,
                        window_generator, _top_singular)
from .parallel import ordered_map
from .spectral import ModeEigenData, bilinear, mode_eigendata
from .velocity_ops import OperatorSet

LEVELS = 4
EXACT_SCHEME_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralSplit:
    f_L: ModalTrajectory
    f_S: ModalTrajectory
    f_L0: ModalTrajectory
    f_Lperp: ModalTrajectory
    delta: float


@dataclass(frozen=True, eq=False)
class WaveParts:
    """Picard levels h[0..3], their sum W3, the remainder R3 = f - W3 and the
    independently solved remainder. consistency_residual is
    max_t ||R3 - R3_solved|| / max_t ||f||."""

    f: ModalTrajectory
    h: list
    W3: ModalTrajectory
    R3: ModalTrajectory
    R3_solved: ModalTrajectory
    consistency_residual: float
    scheme_tolerance: float


def longwave_split(traj: ModalTrajectory, delta: float):
    """Partition modes into |eta| < delta and the rest. Exact bit-wise."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    mask = _long_mask(traj.etas, delta)
    long = np.where(mask[None, :, None], traj.fhat, 0.0)
    short = np.where(mask[None, :, None], 0.0, traj.fhat)
    return traj.with_modes(long), traj.with_modes(short)


def _long_mask(etas: np.ndarray, delta: float) -> np.ndarray:
    etas = np.asarray(etas)
    norms = np.abs(etas) if etas.ndim == 1 else np.linalg.norm(etas, axis=-1)
    return norms < delta


def longwave_eigendata(ops: OperatorSet, etas, delta: float, threads: int = 1) -> dict:
    """ModeEigenData for every mode index with |eta| < delta."""
    idx = np.nonzero(_long_mask(etas, delta))[0]
    data = ordered_map(lambda k: mode_eigendata(ops, [etas[k]]), idx, threads)
    return dict(zip(idx.tolist(), data))


def fluid_split(ops: OperatorSet, traj_L: ModalTrajectory, eig: dict, delta: float):
    """Per long-wave mode, the fluid part B(e_D(eta), fhat) e_D(eta) and the rest.

    B(e_D(eta), .) is the sesquilinear pairing with e_D(-eta); it is the left
    eigenvector functional, so the split commutes with the mode propagator.
    Negative wavenumbers of a real trajectory follow by conjugation.
    """
    fluid = np.zeros_like(traj_L.fhat)
    for k in np.nonzero(_long_mask(traj_L.etas, delta))[0]:
        if k not in eig:
            raise KeyError(f"no eigendata for long-wave mode eta={traj_L.etas[k]}")
        e = eig[k].e_D
        coeff = traj_L.fhat[:, k, :] @ (ops.weights * e)
        fluid[:, k, :] = coeff[:, None] * e[None, :]
    return traj_L.with_modes(fluid), traj_L.with_modes(traj_L.fhat - fluid)


def spectral_split(ops: OperatorSet, traj: ModalTrajectory, delta: float, threads: int = 1) -> SpectralSplit:
    f_L, f_S = longwave_split(traj, delta)
    eig = longwave_eigendata(ops, traj.etas, delta, threads)
    f_L0, f_Lperp = fluid_split(ops, f_L, eig, delta)
    return SpectralSplit(f_L, f_S, f_L0, f_Lperp, delta)


def augmented_generator(ops: OperatorSet, eta, source=None, levels: int = LEVELS,
                        with_remainder: bool = True) -> sp.csr_matrix:
    """Block generator for (h0, ..., h_{levels-1}[, R]).

    The levels couple through `source` (default K). The remainder row is
    d/dt R = A R + K h_last + (K - source)(h0 + ... + h_{levels-2}), so that
    W + R solves the full equation whatever source is used.
    """
    Ad = generator(ops, eta, damped=True)
    K = sp.csr_matrix(ops.K, dtype=complex)
    S = K if source is None else sp.csr_matrix(source, dtype=complex)
    n = levels + int(with_remainder)
    blocks = [[None] * n for _ in range(n)]
    for j in range(levels):
        blocks[j][j] = Ad
        if j:
            blocks[j][j - 1] = S
    if with_remainder:
        blocks[levels][levels] = generator(ops, eta, damped=False)
        blocks[levels][levels - 1] = K
        if source is not None:
            for j in range(levels - 1):
                blocks[levels][j] = K - S
    return sp.csr_matrix(sp.bmat(blocks))


def _crank_nicolson(A, x0, times, dt):
    n = A.shape[0]
    eye = sp.identity(n, format="csc", dtype=complex)
    from scipy.sparse.linalg import splu

    lu = splu(sp.csc_matrix(eye - 0.5 * dt * A))
    rhs = sp.csr_matrix(eye + 0.5 * dt * A)
    out = np.empty((len(times), n), dtype=complex)
    current, done = np.asarray(x0, dtype=complex), 0
    for i, t in enumerate(times):
        target = int(round(t / dt))
        for _ in range(target - done):
            current = lu.solve(rhs @ current)
        done = target
        out[i] = current
    return out


def picard_waves(ops: OperatorSet, space: SpaceGrid, f0: Field, times, scheme: str = "exact",
                 dt: float | None = None, source=None, threads: int = 1) -> WaveParts:
    """Picard levels h0..h3, W3, R3 = f - W3 and the re-solved remainder.

    `source` overrides K (for instance with a zero matrix). Under the cn
    scheme the same stacked generator is stepped with Crank-Nicolson, and the
    scheme tolerance is the Richardson estimate of the full solution error.
    """
    times = np.asarray(times, dtype=float)
    real = bool(np.isrealobj(f0.values) or not np.any(np.imag(f0.values)))
    fhat0 = initial_modes(space, f0.values, real)
    etas = space.half_wavenumbers if real else space.wavenumbers
    N = ops.size
    src = None if source is None else sp.csr_matrix(source)

    def work(k):
        G = augmented_generator(ops, etas[k], src)
        x0 = np.zeros(G.shape[0], dtype=complex)
        x0[:N] = fhat0[k]
        if scheme == "exact":
            stack = exp_action(G, x0, times)
            f = ModePropagator(ops, etas[k]).exact(fhat0[k], times)
        elif scheme == "cn":
            if dt is None:
                raise ValueError("the cn scheme needs a time step")
            stack = _crank_nicolson(G, x0, times, dt)
            f = ModePropagator(ops, etas[k]).crank_nicolson(fhat0[k], times, dt)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        return stack.reshape(len(times), LEVELS + 1, N), f

    results = ordered_map(work, range(len(etas)), threads)
    stacks = np.stack([r[0] for r in results], axis=1)
    fhat = np.stack([r[1] for r in results], axis=1)
    base = ModalTrajectory(space, ops.grid, times, etas, fhat, real)
    h = [base.with_modes(stacks[:, :, j, :]) for j in range(LEVELS)]
    W3 = base.with_modes(stacks[:, :, :LEVELS, :].sum(axis=2))
    R3 = base.with_modes(fhat - W3.fhat)
    solved = base.with_modes(stacks[:, :, LEVELS, :])
    scale = max(trajectory_norms(ops, base).max(), 1e-300)
    residual = float(trajectory_norms(ops, R3.with_modes(R3.fhat - solved.fhat)).max() / scale)
    if scheme == "exact":
        tol = EXACT_SCHEME_TOL
    else:
        fine = evolve_modes(ops, space, f0, times, "cn", dt / 2)
        tol = float(4.0 / 3.0 * trajectory_norms(ops, fine.with_modes(fhat - fine.fhat)).max() / scale)
    return WaveParts(base, h, W3, R3, solved, residual, tol)


def level_norms(ops: OperatorSet, parts: WaveParts, k: int = 0) -> np.ndarray:
    """||grad_x^k h_j(t)||_{L2} for every level j and time; shape (levels, times)."""
    out = np.empty((LEVELS, len(parts.f.times)))
    for j, traj in enumerate(parts.h):
        out[j] = trajectory_norms(ops, traj, k)
    return out


def trajectory_norms(ops: OperatorSet, traj: ModalTrajectory, k: int = 0) -> np.ndarray:
    """||grad_x^k f(t)||_{L2_{x,v}} by Parseval on the stored modes."""
    eta_abs = np.abs(traj.etas) if traj.etas.ndim == 1 else np.linalg.norm(traj.etas, axis=-1)
    dens = np.sum(ops.weights * np.abs(traj.fhat) ** 2, axis=2) * eta_abs[None, :] ** (2 * k)
    if traj.real:
        mult = np.full(eta_abs.size, 2.0)
        mult[0] = 1.0
        if traj.space.n_x % 2 == 0:
            mult[-1] = 1.0
        dens = dens * mult[None, :]
    return np.sqrt(np.sum(dens, axis=1) * 2.0 * traj.space.l_x)


def wave_operator_norms(ops: OperatorSet, t_list, k: int = 1, win: VelocityWindow | None = None,
                        eta_factors=None, levels: int = 3, threads: int = 1) -> list[dict]:
    """Worst-case ||grad_x^k h_j(t)|| over unit-norm data, j < levels.

    The map f0 -> h_j(t) of one mode is the (j, 0) block of the exponential of
    the stacked generator; its largest singular value times |eta|^k, maximized
    over an eta scan centred on t^(-3/2), is the operator norm on the window.
    The window is centred at v = 0 where the cutoff source K acts.
    """
    win = velocity_window(ops, 0.0, 2.0, 0.025) if win is None else win
    factors = np.geomspace(0.1, 10.0, 8) if eta_factors is None else np.asarray(eta_factors)
    n = win.size
    Kw = np.diag(win.source).astype(complex)

    def one(t):
        best = np.zeros(levels)
        for eta in factors * t ** -1.5:
            Ad = window_generator(win, eta)
            big = np.zeros((levels * n, levels * n), dtype=complex)
            for j in range(levels):
                big[j * n:(j + 1) * n, j * n:(j + 1) * n] = Ad
                if j:
                    big[j * n:(j + 1) * n, (j - 1) * n:j * n] = Kw
            E = sla.expm(t * big)
            for j in range(levels):
                best[j] = max(best[j], eta**k * _top_singular(E[j * n:(j + 1) * n, :n]))
        return {"t": float(t), **{f"h{j}": float(best[j]) for j in range(levels)}}

    return ordered_map(one, list(t_list), threads)


def derivative_growth_table(ops: OperatorSet, t_list, k: int = 1, parts: WaveParts | None = None,
                            threads: int = 1, **probe_kw) -> dict:
    """Small-time growth of ||grad_x^k h_j|| with fitted exponents vs j - 3k/2.

    The worst-case operator norms carry the fits. When `parts` from a field
    run is supplied, the field norms at the same times are added as columns.
    """
    from .rates import fit_power_exp

    rows = wave_operator_norms(ops, t_list, k, threads=threads, **probe_kw)
    levels = sum(1 for key in rows[0] if key.startswith("h"))
    t = np.array([r["t"] for r in rows])
    fits = {}
    for j in range(levels):
        fit = fit_power_exp(t, np.array([r[f"h{j}"] for r in rows]))
        fits[j] = {"exponent": fit.exponent, "expected": j - 1.5 * k, "residual": fit.residual}
    if parts is not None:
        field = level_norms(ops, parts, k)
        for r in rows:
            i = int(np.argmin(np.abs(parts.f.times - r["t"])))
            for j in range(LEVELS):
                r[f"field_h{j}"] = float(field[j, i])
    return {"k": k, "rows": rows, "fits": fits}
