"""Spectral data of the Fourier-mode operator L_eta = -i v.eta + L.

Eigenvectors are normalized with the bilinear pairing B(f, g) = sum w f g.
L_eta is complex symmetric, so under B the left eigenvector of L_eta is its
right eigenvector; in the sesquilinear pairing the same functional reads
<e_D(-eta), f> since e_D(-eta) = conj(e_D(eta)).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .parallel import ordered_map
from .velocity_ops import OperatorSet

DENSE_CAP = 400
DENSE_AUTO_LIMIT = 1201


class GapCollapse(ArithmeticError):
    """The two rightmost eigenvalues of a long-wave mode are not separated."""


@dataclass(frozen=True, eq=False)
class ModeEigenData:
    eta: np.ndarray
    lam: complex
    e_D: np.ndarray
    gap: float
    expansion_residual: float = float("nan")


@dataclass(frozen=True, eq=False)
class DiffusionData:
    a_gamma: float
    E_D1: np.ndarray
    fit_window: np.ndarray
    fit_residual: float
    a_fit: float

    @property
    def relative_gap(self) -> float:
        return abs(self.a_fit - self.a_gamma) / self.a_gamma


def _as_eta(ops: OperatorSet, eta) -> np.ndarray:
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if eta.size == 1 and ops.grid.dim > 1:
        eta = np.concatenate([eta, np.zeros(ops.grid.dim - 1)])
    if eta.shape != (ops.grid.dim,):
        raise ValueError(f"eta must have {ops.grid.dim} components")
    return eta


def transport_symbol(ops: OperatorSet, eta) -> np.ndarray:
    """v . eta at the velocity nodes."""
    return ops.grid.nodes @ _as_eta(ops, eta)


def assemble_L_eta(ops: OperatorSet, eta) -> np.ndarray:
    """Dense L_eta = L - i diag(v.eta)."""
    A = ops.L_dense.astype(complex)
    A[np.diag_indices_from(A)] -= 1j * transport_symbol(ops, eta)
    return A


def assemble_L_eta_sparse(ops: OperatorSet, eta) -> sp.csc_matrix:
    return sp.csc_matrix(ops.L.astype(complex) - 1j * sp.diags(transport_symbol(ops, eta)))


def bilinear(ops: OperatorSet, f, g) -> complex:
    return complex(np.sum(ops.weights * f * g))


def normalize_branch(ops: OperatorSet, e: np.ndarray) -> np.ndarray:
    """Scale so that B(e, e) = 1 and B(sqrt(M), e) has positive real part."""
    e = e / np.sqrt(bilinear(ops, e, e))
    if np.real(bilinear(ops, ops.sqrtM, e)) < 0:
        e = -e
    return e


def _rayleigh(ops: OperatorSet, A, e) -> complex:
    return bilinear(ops, e, A @ e) / bilinear(ops, e, e)


def _dense_spectrum(A: np.ndarray):
    w, V = sla.eig(A, check_finite=False)
    order = np.argsort(-w.real, kind="stable")
    return w[order], V[:, order]


def leading_eigenpair(ops: OperatorSet, L_eta, method: str = "auto", guess: complex | None = None):
    """Rightmost eigenvalue of L_eta with its bilinear-normalized eigenvector.

    Returns (lam, e_D, gap) where gap = Re lam - (largest real part of the rest
    of the computed spectrum). With the sparse shift-invert path the rest of the
    spectrum is only sampled near the shift, so gap is an upper estimate.
    """
    n = ops.size
    if method == "auto":
        method = "dense" if n <= DENSE_AUTO_LIMIT else "shift-invert"
    if method == "dense":
        A = L_eta.toarray() if sp.issparse(L_eta) else np.asarray(L_eta)
        w, V = _dense_spectrum(A)
        lam, e = w[0], V[:, 0]
        gap = float(w[0].real - w[1].real)
    elif method == "shift-invert":
        A = sp.csc_matrix(L_eta)
        shift = 0.05 if guess is None else guess + 0.05
        w, V = spla.eigs(A, k=min(6, n - 2), sigma=shift, which="LM", tol=0.0)
        order = np.argsort(-w.real, kind="stable")
        w, V = w[order], V[:, order]
        lam, e = w[0], V[:, 0]
        gap = float(w[0].real - w[1].real)
        A = A.tocsr()
    else:
        raise ValueError(f"unknown method {method!r}")
    e = normalize_branch(ops, e)
    lam = _rayleigh(ops, A, e)
    return complex(lam), e, gap


def mode_eigendata(ops: OperatorSet, eta, method: str = "auto", check_gap: bool = True,
                   with_residual: bool = False) -> ModeEigenData:
    eta = _as_eta(ops, eta)
    lam, e, gap = leading_eigenpair(ops, assemble_L_eta(ops, eta) if ops.size <= DENSE_AUTO_LIMIT
                                    else assemble_L_eta_sparse(ops, eta), method)
    if check_gap and np.linalg.norm(eta) < ops.params.longwave_delta and gap < 1e-8:
        raise GapCollapse(f"leading eigenvalues of L_eta at |eta|={np.linalg.norm(eta):.3g} "
                          f"are separated by {gap:.2e}")
    residual = _expansion_residual(ops, eta, e) if with_residual else float("nan")
    return ModeEigenData(eta, lam, e, gap, residual)


def _border(ops: OperatorSet, A) -> sp.csc_matrix:
    """[[A, sqrtM], [w sqrtM^T, 0]]: inverts A on the P1 range."""
    s = ops.sqrtM[:, None]
    return sp.csc_matrix(sp.bmat([[sp.csr_matrix(A), sp.csr_matrix(s)],
                                  [sp.csr_matrix((ops.weights * ops.sqrtM)[None, :]), None]]))


def solve_on_complement(ops: OperatorSet, A, rhs) -> np.ndarray:
    """x in the P1 range with P1 A x = P1 rhs."""
    rhs = ops.project1(np.asarray(rhs))
    sol = spla.spsolve(_border(ops, A), np.concatenate([rhs, [0.0]]))
    return np.asarray(sol[:-1])


def diffusion_coefficient(ops: OperatorSet, omega=None, fit_etas=None, threads: int = 1) -> DiffusionData:
    """a_gamma by second-order perturbation, cross-checked by a quadratic fit.

    E_D1 solves L E_D1 = P1 (v.omega sqrt(M)) on the P1 range and
    a_gamma = <v.omega sqrt(M), -E_D1>. The fit regresses lambda(eta)/|eta|^2
    on |eta|^2 over a log-spaced window in [1e-3, 5e-2].
    """
    omega = np.zeros(ops.grid.dim) if omega is None else np.asarray(omega, dtype=float)
    if not omega.any():
        omega[0] = 1.0
    omega = omega / np.linalg.norm(omega)
    rhs = (ops.grid.nodes @ omega) * ops.sqrtM
    E1 = first_order_correction(ops, omega)
    a = float(-np.sum(ops.weights * rhs * E1))

    etas = np.geomspace(1e-3, 5e-2, 12) if fit_etas is None else np.asarray(fit_etas)
    lams = ordered_map(lambda s: leading_eigenpair(ops, assemble_L_eta_sparse(ops, s * omega)
                                                   if ops.size > DENSE_AUTO_LIMIT
                                                   else assemble_L_eta(ops, s * omega))[0], etas, threads)
    y = np.real(np.asarray(lams)) / etas**2
    X = np.column_stack([np.ones_like(etas), etas**2])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    fit_residual = float(np.max(np.abs(X @ coef - y)) / abs(coef[0]))
    return DiffusionData(a, E1, etas, fit_residual, float(-coef[0]))


def first_order_correction(ops: OperatorSet, omega) -> np.ndarray:
    """E_D1 = L^{-1} P1 (v.omega sqrt(M)) on the P1 range."""
    return solve_on_complement(ops, ops.L, (ops.grid.nodes @ np.asarray(omega, dtype=float)) * ops.sqrtM)


def _expansion_residual(ops: OperatorSet, eta, e) -> float:
    k = float(np.linalg.norm(eta))
    if k == 0.0:
        return 0.0
    E1 = first_order_correction(ops, eta / k)
    return ops.norm(e - (ops.sqrtM + 1j * k * E1)) / k**2


def expansion_check(ops: OperatorSet, eta) -> float:
    """||e_D(eta) - (sqrt(M) + i|eta| E_D1)|| / |eta|^2, zero at eta = 0."""
    eta = _as_eta(ops, eta)
    if not eta.any():
        return 0.0
    _, e, _ = leading_eigenpair(ops, assemble_L_eta(ops, eta))
    return _expansion_residual(ops, eta, e)


def spectral_projector(ops: OperatorSet, mode: ModeEigenData) -> np.ndarray:
    """Dense rank-one Pi f = B(e_D, f) e_D = <e_D(-eta), f> e_D(eta)."""
    e = mode.e_D
    return np.outer(e, ops.weights * e)


def apply_projector(ops: OperatorSet, mode: ModeEigenData, f) -> np.ndarray:
    return bilinear(ops, mode.e_D, f) * mode.e_D


def fluid_reduction_solve(ops: OperatorSet, eta_abs: float, tol: float = 1e-15, max_iter: int = 200) -> complex:
    """Leading eigenvalue from the scalar macroscopic closure.

    With e = beta sqrt(M) + e_perp, the microscopic equation gives
    e_perp = i|eta| beta R(lam) P1 v1 sqrt(M) with R(lam) the inverse of
    P1 (L - i|eta| v1) P1 - lam on the P1 range, and the macroscopic equation
    closes as lam = |eta|^2 B(v1 sqrt(M), R(lam) P1 v1 sqrt(M)), iterated from
    lam = 0 (zeta = lam / (i|eta|) = 0).
    """
    k = float(eta_abs)
    if k == 0.0:
        return 0.0j
    v1 = ops.grid.nodes[:, 0]
    rhs = ops.project1(v1 * ops.sqrtM)
    base = ops.L.astype(complex) - 1j * k * sp.diags(v1)
    eye = sp.identity(ops.size, format="csr")
    lam = 0.0j
    for _ in range(max_iter):
        x = solve_on_complement(ops, base - lam * eye, rhs)
        new = k**2 * bilinear(ops, v1 * ops.sqrtM, x)
        if abs(new - lam) <= tol * max(1.0, abs(new)):
            return complex(new)
        lam = new
    raise ArithmeticError(f"fluid reduction did not converge at |eta|={k}")


def gap_scan(ops: OperatorSet, eta_list, delta: float, threads: int = 1):
    """Spectral gap certificate over the short-wave scan.

    For |eta| > delta the full dense spectrum gives tau = -max Re over all
    scanned modes; for |eta| < delta the number of eigenvalues with real part
    above -tau is counted (one expected). Returns (tau, rows, flags).
    """
    if ops.grid.n_per_axis > DENSE_CAP + 1:
        raise ValueError(f"gap scan needs at most {DENSE_CAP} points per axis (+1 for the odd count), "
                         f"got {ops.grid.n_per_axis}")
    flags = []
    if ops.params.gamma < 1:
        flags.append("no-theory: spectral structure not established for gamma < 1")
        warnings.warn(flags[-1])
    etas = [np.atleast_1d(np.asarray(e, dtype=float)) for e in eta_list]
    spectra = ordered_map(lambda e: _dense_spectrum(assemble_L_eta(ops, e))[0], etas, threads)
    norms = np.array([np.linalg.norm(e) for e in etas])
    outer = [w for w, k in zip(spectra, norms) if k >= delta]
    tau = float(-max(w[0].real for w in outer)) if outer else float("nan")
    rows = []
    for e, k, w in zip(etas, norms, spectra):
        above = int(np.sum(w.real > -tau)) if np.isfinite(tau) else -1
        rows.append({"eta": e, "re_lambda": float(w[0].real), "im_lambda": float(w[0].imag),
                     "gap": float(w[0].real - w[1].real), "count_above": above, "longwave": bool(k < delta)})
    return tau, rows, flags


def top_real_parts(ops: OperatorSet, eta, count: int = 2) -> np.ndarray:
    w, _ = _dense_spectrum(assemble_L_eta(ops, eta))
    return w[:count].real


def default_delta(ops: OperatorSet, eta_max: float = 5.0, n_scan: int = 41, cap: float = 1.0) -> float:
    """Half the |eta| at which the top-two real-part gap drops below 10% of its
    value at eta = 0, capped at `cap` when the gap never closes on the scan."""
    etas = np.linspace(0.0, eta_max, n_scan)
    gaps = np.array([np.subtract(*top_real_parts(ops, [s])[:2]) for s in etas])
    below = np.nonzero(gaps < 0.1 * gaps[0])[0]
    if below.size == 0:
        return cap
    return float(min(0.5 * etas[below[0]], cap))
