"""Velocity-space operators on a truncated uniform grid.

The linearized operator is L f = Delta_v f - psi(v) f with
psi = |grad Phi|^2 / 4 - Delta Phi / 2, acting on perturbations f = F / sqrt(M)
of the Maxwellian M = exp(-Phi). The discrete L keeps the centered D2 stencil
with homogeneous Dirichlet closure but takes its diagonal potential as
psi_h = (D2 s) / s with s = sqrt(M) (ghost values included), so that -L is a
sum of squares over grid edges, the ghost edges included:

    <L f, f> = -sum_{edges} s_i s_j (f_i/s_i - f_j/s_j)^2 / h^2 <= 0.

sqrt(M) is then a null vector up to the boundary defect s(v_max + h) / h^2.
psi_h differs from the pointwise psi by O(h^2); the pointwise operator is kept
as `assemble_L_pointwise` for consistency studies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

BOUNDARY_MASS_TOL = 1e-10


class GridError(ValueError):
    """Raised when a velocity grid cannot represent the requested problem."""


@dataclass(frozen=True)
class PotentialParams:
    gamma: float
    phi0: float = 0.0
    cutoff_radius: float = 4.0
    cutoff_strength: float = 10.0
    longwave_delta: float = 0.5
    dim_v: int = 1

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not (self.cutoff_radius > 0 and self.cutoff_strength > 0):
            raise ValueError("cutoff radius and strength must be positive")
        if not self.longwave_delta > 0:
            raise ValueError("longwave_delta must be positive")
        if self.dim_v not in (1, 2, 3):
            raise ValueError(f"dim_v must be 1, 2 or 3, got {self.dim_v}")


@dataclass(frozen=True, eq=False)
class VelocityGrid:
    v_max: float
    n_per_axis: int
    dim: int
    nodes: np.ndarray
    spacing: float
    quadrature_weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.v_max, self.v_max, self.n_per_axis)

    @cached_property
    def speed(self) -> np.ndarray:
        return np.linalg.norm(self.nodes, axis=1)

    @cached_property
    def bracket(self) -> np.ndarray:
        """<v> = sqrt(1 + |v|^2) at the nodes."""
        return np.sqrt(1.0 + self.speed**2)


def build_grid(v_max: float, n_per_axis: int, dim: int = 1) -> VelocityGrid:
    """Uniform tensor grid on [-v_max, v_max]^dim with an odd node count.

    The weights are the trapezoid rule with zero-valued ghost nodes one step
    beyond the boundary (the Dirichlet closure of the operators), which gives
    the uniform weight h^dim at every node.
    """
    if dim not in (1, 2, 3):
        raise GridError(f"dim must be 1, 2 or 3, got {dim}")
    if n_per_axis < 3:
        raise GridError(f"n_per_axis must be at least 3, got {n_per_axis}")
    if n_per_axis % 2 == 0:
        raise GridError(f"n_per_axis must be odd so that v=0 is a node, got {n_per_axis}")
    if not v_max > 0:
        raise GridError(f"v_max must be positive, got {v_max}")
    axis = np.linspace(-v_max, v_max, n_per_axis)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    h = 2.0 * v_max / (n_per_axis - 1)
    weights = np.full(nodes.shape[0], h**dim)
    return VelocityGrid(v_max, n_per_axis, dim, nodes, h, weights)


def bracket(r):
    return np.sqrt(1.0 + np.asarray(r, dtype=float) ** 2)


def cutoff(s):
    """Smooth non-increasing cutoff: 1 on s <= 1, 0 on s >= 2."""
    s = np.asarray(s, dtype=float)
    a = _sigma(2.0 - s)
    b = _sigma(s - 1.0)
    return a / (a + b)


def cutoff_derivative(s):
    s = np.asarray(s, dtype=float)
    a, b = _sigma(2.0 - s), _sigma(s - 1.0)
    da, db = -_dsigma(2.0 - s), _dsigma(s - 1.0)
    return (da * b - a * db) / (a + b) ** 2


def _sigma(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, np.exp(-1.0 / safe), 0.0)


def _dsigma(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, np.exp(-1.0 / safe) / safe**2, 0.0)


def confinement(r, gamma: float):
    """<v>^gamma / gamma, the potential without its normalizing constant."""
    return bracket(r) ** gamma / gamma


def pointwise_potential(r, gamma: float, dim: int = 1):
    """psi = |v|^2<v>^(2g-4)/4 - d/2 <v>^(g-2) - (g-2)/2 |v|^2 <v>^(g-4)."""
    r = np.asarray(r, dtype=float)
    jb = bracket(r)
    return (
        0.25 * r**2 * jb ** (2 * gamma - 4)
        - 0.5 * dim * jb ** (gamma - 2)
        - 0.5 * (gamma - 2) * r**2 * jb ** (gamma - 4)
    )


def log_normalizer(grid: VelocityGrid, gamma: float) -> float:
    """Phi0 such that the grid quadrature of exp(-<v>^g/g - Phi0) equals one."""
    phi = confinement(grid.speed, gamma)
    shift = phi.min()
    return float(np.log(np.sum(grid.quadrature_weights * np.exp(-(phi - shift)))) - shift)


def maxwellian(grid: VelocityGrid, params: PotentialParams) -> tuple[np.ndarray, float]:
    """Discrete-L2-normalized sqrt(M) and the grid-consistent Phi0."""
    phi0 = log_normalizer(grid, params.gamma)
    edge_phi = confinement(grid.v_max, params.gamma) + phi0
    if np.exp(-edge_phi) > BOUNDARY_MASS_TOL:
        raise GridError(
            f"boundary mass exp(-Phi(v_max)) = {np.exp(-edge_phi):.3e} exceeds "
            f"{BOUNDARY_MASS_TOL:.0e}; increase v_max (gamma={params.gamma}, v_max={grid.v_max})"
        )
    sqrt_m = np.exp(-0.5 * (confinement(grid.speed, params.gamma) + phi0))
    return sqrt_m, phi0


def boundary_sqrt_mass(grid: VelocityGrid, params: PotentialParams) -> float:
    """exp(-Phi(v_max e1)/2), the amplitude of sqrt(M) at the boundary."""
    phi0 = log_normalizer(grid, params.gamma)
    return float(np.exp(-0.5 * (confinement(grid.v_max, params.gamma) + phi0)))


def suggest_v_max(gamma: float, tol: float = BOUNDARY_MASS_TOL, margin: float = 1.0) -> float:
    """Smallest v_max with exp(-Phi(v_max)) <= tol, up to a safety margin in Phi."""
    fine = build_grid(400.0, 16001, 1)
    phi0 = log_normalizer(fine, gamma)
    target = -np.log(tol) + margin - phi0
    return float(np.sqrt(max((gamma * target) ** (2.0 / gamma) - 1.0, 0.0)))


def _axis_second_difference(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h**2


def _axis_first_difference(n: int, h: float) -> sp.csr_matrix:
    off = np.ones(n - 1)
    return sp.diags([-off, off], [-1, 1], format="csr") / (2.0 * h)


def _lift(op: sp.spmatrix, axis: int, n: int, dim: int) -> sp.csr_matrix:
    factors = [sp.identity(n, format="csr")] * dim
    factors[axis] = op
    out = factors[0]
    for f in factors[1:]:
        out = sp.kron(out, f, format="csr")
    return sp.csr_matrix(out)


def laplacian(grid: VelocityGrid) -> sp.csr_matrix:
    n, d, h = grid.n_per_axis, grid.dim, grid.spacing
    d2 = _axis_second_difference(n, h)
    return sp.csr_matrix(sum(_lift(d2, k, n, d) for k in range(d)))


def gradient(grid: VelocityGrid) -> list[sp.csr_matrix]:
    n, d, h = grid.n_per_axis, grid.dim, grid.spacing
    d1 = _axis_first_difference(n, h)
    return [_lift(d1, k, n, d) for k in range(d)]


def discrete_potential(grid: VelocityGrid, gamma: float) -> np.ndarray:
    """psi_h = (D2 s) / s for s = sqrt(M) extended analytically to the ghost nodes.

    Evaluated through potential differences so that no underflow occurs in the
    tails. With the true ghost values the operator keeps a homogeneous
    Dirichlet closure and remains negative semidefinite.
    """
    n, d, h = grid.n_per_axis, grid.dim, grid.spacing
    nodes = grid.nodes
    phi = confinement(grid.speed, gamma)
    psi = np.zeros_like(phi)
    for k in range(d):
        for step in (h, -h):
            shifted = nodes.copy()
            shifted[:, k] += step
            phi_nb = confinement(np.linalg.norm(shifted, axis=1), gamma)
            psi += np.exp(-0.5 * (phi_nb - phi))
        psi -= 2.0
    return psi / h**2


def assemble_L(grid: VelocityGrid, params: PotentialParams) -> sp.csr_matrix:
    """L = D2 - diag(psi_h); symmetric and negative semidefinite."""
    psi = discrete_potential(grid, params.gamma)
    return sp.csr_matrix(laplacian(grid) - sp.diags(psi))


def assemble_L_pointwise(grid: VelocityGrid, params: PotentialParams) -> sp.csr_matrix:
    """L = D2 - diag(psi) with the continuum potential sampled at the nodes."""
    psi = pointwise_potential(grid.speed, params.gamma, grid.dim)
    return sp.csr_matrix(laplacian(grid) - sp.diags(psi))


def cutoff_profile(grid: VelocityGrid, params: PotentialParams) -> np.ndarray:
    """Diagonal of K: cutoff_strength * chi(|v| / R)."""
    return params.cutoff_strength * cutoff(grid.speed / params.cutoff_radius)


def split_lambda_K(L, grid: VelocityGrid, params: PotentialParams):
    """Lambda = -L + K with K = diag(varpi chi_R); returns (Lambda, K)."""
    K = sp.diags(cutoff_profile(grid, params), format="csr")
    return sp.csr_matrix(-L + K), K


def projections(sqrt_m: np.ndarray, weights: np.ndarray):
    """Dense P0 f = <sqrt(M), f> sqrt(M) and P1 = I - P0."""
    P0 = np.outer(sqrt_m, weights * sqrt_m)
    return P0, np.eye(sqrt_m.size) - P0


@dataclass(frozen=True, eq=False)
class OperatorSet:
    grid: VelocityGrid
    params: PotentialParams
    L: sp.csr_matrix
    Lambda: sp.csr_matrix
    K: sp.csr_matrix
    sqrtM: np.ndarray
    Dv: list = field(default_factory=list)

    @property
    def weights(self) -> np.ndarray:
        return self.grid.quadrature_weights

    @property
    def size(self) -> int:
        return self.grid.size

    @cached_property
    def L_dense(self) -> np.ndarray:
        return self.L.toarray()

    @cached_property
    def Lambda_dense(self) -> np.ndarray:
        return self.Lambda.toarray()

    @cached_property
    def K_diag(self) -> np.ndarray:
        return self.K.diagonal()

    @cached_property
    def P0(self) -> np.ndarray:
        return projections(self.sqrtM, self.weights)[0]

    @cached_property
    def P1(self) -> np.ndarray:
        return projections(self.sqrtM, self.weights)[1]

    @cached_property
    def complement_basis(self) -> np.ndarray:
        """Orthonormal (Euclidean) basis of the P1 range."""
        return sla.null_space(self.sqrtM[None, :])

    def weight_pow(self, s: float) -> np.ndarray:
        """Diagonal of <v>^s."""
        return self.grid.bracket**s

    def inner(self, f, g):
        """Quadrature inner product sum w conj(f) g."""
        return np.sum(self.weights * np.conj(f) * g)

    def norm(self, f) -> float:
        return float(np.sqrt(np.real(self.inner(f, f))))

    def project0(self, f):
        return self.inner(self.sqrtM, f) * self.sqrtM

    def project1(self, f):
        return f - self.project0(f)


def build_operators(grid: VelocityGrid, params: PotentialParams) -> OperatorSet:
    if params.dim_v != grid.dim:
        raise GridError(f"params.dim_v={params.dim_v} does not match grid dim {grid.dim}")
    sqrt_m, phi0 = maxwellian(grid, params)
    params = replace(params, phi0=phi0)
    L = assemble_L(grid, params)
    Lam, K = split_lambda_K(L, grid, params)
    return OperatorSet(grid, params, L, Lam, K, sqrt_m, gradient(grid))


def sigma_gram(ops: OperatorSet) -> np.ndarray:
    """Matrix S with |f|_sigma^2 = f^T S f (quadrature weights included)."""
    w = ops.weights[0]
    S = np.diag(ops.weight_pow(2 * ops.params.gamma - 2))
    for D in ops.Dv:
        S = S + (D.T @ D).toarray()
    return w * S


def sigma_norm(ops: OperatorSet, f) -> float:
    """(|<v>^(g-1) f|^2 + |D_v f|^2)^(1/2) with quadrature weights."""
    f = np.asarray(f)
    total = np.sum(ops.weights * ops.weight_pow(2 * ops.params.gamma - 2) * np.abs(f) ** 2)
    for D in ops.Dv:
        total += np.sum(ops.weights * np.abs(D @ f) ** 2)
    return float(np.sqrt(total))


def coercivity_constant(ops: OperatorSet) -> float:
    """nu0 = min over the P1 range of <-L f, f> / |f|_sigma^2."""
    Q = ops.complement_basis
    A = Q.T @ (-ops.weights[0] * ops.L_dense) @ Q
    B = Q.T @ sigma_gram(ops) @ Q
    nu0 = float(sla.eigh(A, B, eigvals_only=True, subset_by_index=[0, 0])[0])
    if nu0 <= 0:
        raise ArithmeticError(f"coercivity constant is not positive: {nu0:.3e}")
    return nu0


def lambda_coercivity(ops: OperatorSet) -> float:
    """min over all f of <Lambda f, f> / |f|_sigma^2."""
    A = ops.weights[0] * ops.Lambda_dense
    return float(sla.eigh(A, sigma_gram(ops), eigvals_only=True, subset_by_index=[0, 0])[0])


def kernel_residual(grid: VelocityGrid, params: PotentialParams, pointwise: bool = True) -> float:
    """||L sqrt(M)|| / ||sqrt(M)||, by default for the pointwise-potential operator."""
    sqrt_m, phi0 = maxwellian(grid, params)
    L = assemble_L_pointwise(grid, params) if pointwise else assemble_L(grid, params)
    r = L @ sqrt_m
    return float(np.sqrt(np.sum(grid.quadrature_weights * r**2)))


def ops_to_json(ops: OperatorSet) -> str:
    """Plain JSON dump of the operator set: grid, vectors and matrix triplets."""

    def triplets(m):
        c = sp.coo_matrix(m)
        return {"shape": list(c.shape), "row": c.row.tolist(), "col": c.col.tolist(), "val": c.data.tolist()}

    p = ops.params
    payload = {
        "params": {
            "gamma": p.gamma,
            "phi0": p.phi0,
            "cutoff_radius": p.cutoff_radius,
            "cutoff_strength": p.cutoff_strength,
            "longwave_delta": p.longwave_delta,
            "dim_v": p.dim_v,
        },
        "grid": {
            "v_max": ops.grid.v_max,
            "n_per_axis": ops.grid.n_per_axis,
            "dim": ops.grid.dim,
            "spacing": ops.grid.spacing,
            "axis": ops.grid.axis.tolist(),
            "quadrature_weight": float(ops.weights[0]),
        },
        "sqrtM": ops.sqrtM.tolist(),
        "L": triplets(ops.L),
        "Lambda": triplets(ops.Lambda),
        "K": triplets(ops.K),
        "Dv": [triplets(D) for D in ops.Dv],
    }
    return json.dumps(payload)
