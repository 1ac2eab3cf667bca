"""Decay-law fits: power laws, exponentials, stretched exponentials, spatial
tails along the space-like cone edge and the heat-kernel profile of the fluid
part.

Every fit reports its window and a residual measured on held-out points (the
last quarter of the window), so a fit cannot certify itself on the data it
was tuned on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .evolution import Field, ModalTrajectory, velocity_norms

NOISE_FLOOR = 1e-13
HOLDOUT = 0.25


@dataclass
class DecayFit:
    law: str
    coefficient: float
    exponent: float
    residual: float
    window: tuple
    band: tuple = (float("nan"), float("nan"))
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"law": self.law, "coefficient": self.coefficient, "exponent": self.exponent,
                "residual": self.residual, "window": list(self.window), "band": list(self.band),
                **self.extra}


def _clean(t, y, min_points: int):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and y must be 1-d arrays of equal length")
    if len(t) < min_points:
        raise ValueError(f"need at least {min_points} samples, got {len(t)}")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("samples must be positive and finite")
    order = np.argsort(t, kind="stable")
    return t[order], y[order]


def _linear_fit(X: np.ndarray, target: np.ndarray, n_fit: int):
    """Least squares on the first n_fit rows; returns (coef, covariance, heldout max rel. dev)."""
    Xf, yf = X[:n_fit], target[:n_fit]
    coef, *_ = np.linalg.lstsq(Xf, yf, rcond=None)
    dof = max(n_fit - X.shape[1], 1)
    s2 = float(np.sum((Xf @ coef - yf) ** 2) / dof)
    cov = s2 * np.linalg.pinv(Xf.T @ Xf)
    held = slice(n_fit, None) if n_fit < len(target) else slice(None)
    dev = float(np.max(np.abs(np.expm1(X[held] @ coef - target[held]))))
    return coef, cov, dev, dof


def _n_fit(n: int) -> int:
    return max(n - max(int(round(HOLDOUT * n)), 1), 3)


def fit_power(t, y) -> DecayFit:
    """y ~ C t^p by least squares on (log t, log y); 95% band on p."""
    t, y = _clean(t, y, 8)
    X = np.column_stack([np.log(t), np.ones_like(t)])
    coef, cov, dev, dof = _linear_fit(X, np.log(y), _n_fit(len(t)))
    half = stats.t.ppf(0.975, dof) * np.sqrt(cov[0, 0])
    return DecayFit("power", float(np.exp(coef[1])), float(coef[0]), dev, (float(t[0]), float(t[-1])),
                    (float(coef[0] - half), float(coef[0] + half)))


def fit_power_exp(t, y) -> DecayFit:
    """y ~ C t^p e^{-c t}: separates a small-time power law from damping.

    Over windows where c t is not small a plain log-log slope absorbs the
    damping into p. The rate c goes to extra["rate"].
    """
    t, y = _clean(t, y, 8)
    X = np.column_stack([np.log(t), -t, np.ones_like(t)])
    coef, cov, dev, dof = _linear_fit(X, np.log(y), _n_fit(len(t)))
    half = stats.t.ppf(0.975, dof) * np.sqrt(cov[0, 0])
    return DecayFit("power_exp", float(np.exp(coef[2])), float(coef[0]), dev, (float(t[0]), float(t[-1])),
                    (float(coef[0] - half), float(coef[0] + half)), {"rate": float(coef[1])})


def fit_exp(t, y) -> DecayFit:
    """y ~ C e^{-c t}; the exponent field holds the rate c."""
    return fit_stretched_exp(t, y, 1.0)


def _stretched_design(t, q):
    return np.column_stack([np.ones_like(t), -(t**q)])


def fit_stretched_exp(t, y, q: float) -> DecayFit:
    """y ~ C e^{-c t^q} for given q; exponent holds c, extra["q"] holds q."""
    if q <= 0:
        raise ValueError("q must be positive")
    t, y = _clean(t, y, 8)
    coef, cov, dev, dof = _linear_fit(_stretched_design(t, q), np.log(y), _n_fit(len(t)))
    half = stats.t.ppf(0.975, dof) * np.sqrt(cov[1, 1])
    law = "exp" if q == 1.0 else f"stretched_exp({q:.6g})"
    return DecayFit(law, float(np.exp(coef[0])), float(coef[1]), dev, (float(t[0]), float(t[-1])),
                    (float(coef[1] - half), float(coef[1] + half)), {"q": float(q)})


def q_scan_residuals(s, log_y, qs) -> np.ndarray:
    """RMS residual of log y = c0 - c s^q for every q in qs."""
    out = []
    for q in qs:
        X = _stretched_design(s, q)
        coef, *_ = np.linalg.lstsq(X, log_y, rcond=None)
        out.append(np.sqrt(np.mean((X @ coef - log_y) ** 2)))
    return np.asarray(out)


def certify_q(t, y, q: float, lo: float = 0.5, hi: float = 1.5, n: int = 101, slack: float = 0.10) -> dict:
    """Scan q' over [lo q, hi q]; q is certified when its residual is within
    `slack` of the scan minimum."""
    t, y = _clean(t, y, 8)
    qs = np.unique(np.concatenate([np.linspace(lo * q, hi * q, n), [q]]))
    res = q_scan_residuals(t, np.log(y), qs)
    r_q = float(res[np.argmin(np.abs(qs - q))])
    r_min = float(res.min())
    return {"q": float(q), "best_q": float(qs[np.argmin(res)]), "residual_at_q": r_q,
            "residual_min": r_min, "ratio": r_q / r_min if r_min > 0 else 1.0,
            "certified": bool(r_q <= (1.0 + slack) * r_min + 1e-14)}


def predicted_spatial_q(gamma: float) -> float:
    return min(gamma / (3.0 - gamma), 1.0)


def cone_edge_samples(ops, snapshots, M: float, t_min: float = 5.0, floor: float = NOISE_FLOOR):
    """Largest |f(t,x)|_{L2_v} on <x> >= 2 M t per snapshot, with s = <x*> + t.

    Returns (s, values, times, unresolved_times).
    """
    s, vals, times, unresolved = [], [], [], []
    for fld in snapshots:
        if fld.time < t_min:
            continue
        nr = velocity_norms(ops, fld.values)
        jx = np.sqrt(1.0 + fld.space.x**2)
        outside = jx >= 2.0 * M * fld.time
        if not outside.any():
            unresolved.append(fld.time)
            continue
        j = int(np.argmax(np.where(outside, nr, -1.0)))
        if nr[j] <= floor:
            unresolved.append(fld.time)
            continue
        s.append(jx[j] + fld.time)
        vals.append(nr[j])
        times.append(fld.time)
    return np.array(s), np.array(vals), np.array(times), unresolved


def spatial_tail_fit(ops, snapshots, M: float, gamma: float, t_min: float = 5.0,
                     floor: float = NOISE_FLOOR, q_grid=None) -> DecayFit:
    """Fit log|f| = c0 - C s^q on the cone edge <x> >= 2 M t, s = <x> + t.

    The exponent is the best q of a scan over q_grid (default [0.05, 2]);
    extra carries the predicted q = gamma / (3 - gamma) capped at 1, the fitted
    rate C at the predicted q and the scan. Snapshots whose edge value is below
    the noise floor are listed as unresolved; fewer than 8 resolved points
    yields law "unresolved".
    """
    s, vals, times, unresolved = cone_edge_samples(ops, snapshots, M, t_min, floor)
    q_pred = predicted_spatial_q(gamma)
    if len(s) < 8:
        return DecayFit("unresolved", float("nan"), float("nan"), float("nan"), (t_min, float("nan")),
                        extra={"q_predicted": q_pred, "unresolved_times": unresolved, "points": len(s)})
    qs = np.linspace(0.05, 2.0, 391) if q_grid is None else np.asarray(q_grid)
    res = q_scan_residuals(s, np.log(vals), qs)
    best = float(qs[np.argmin(res)])
    at_pred = fit_stretched_exp(s, vals, q_pred)
    return DecayFit(f"spatial_stretch({best:.4g})", at_pred.coefficient, best, at_pred.residual,
                    (float(s.min()), float(s.max())),
                    extra={"q_predicted": q_pred, "rate_at_predicted": at_pred.exponent,
                           "scan_min_residual": float(res.min()), "unresolved_times": unresolved,
                           "points": int(len(s)), "wave_speed": float(M)})


def unit_profile(xi, a_gamma: float, dim: int = 1):
    """Limit of (1+t)^{d/2} times the heat kernel of diffusivity a at x = xi sqrt(4 a t)."""
    return np.exp(-np.asarray(xi) ** 2) / (4.0 * np.pi * a_gamma) ** (dim / 2)


def heat_profile_defect(ops, fld: Field, a_gamma: float, mass: float) -> float:
    """sup_x | |f(t,x)|_{L2_v} (1+t)^{d/2} - mass G(x / sqrt(4 a t)) |."""
    t = fld.time
    if t <= 0:
        raise ValueError("the profile comparison needs t > 0")
    nr = velocity_norms(ops, fld.values)
    xi = fld.space.x / np.sqrt(4.0 * a_gamma * t)
    d = fld.space.dim_x
    return float(np.max(np.abs(nr * (1.0 + t) ** (d / 2) - abs(mass) * unit_profile(xi, a_gamma, d))))


def heat_profile_compare(ops, snapshots, a_gamma: float, mass: float, t_min: float = 5.0) -> dict:
    """Profile defect per snapshot with t >= t_min, and whether it shrinks.

    The trend check requires at least 4 times and each defect at most 5% above
    its predecessor.
    """
    rows = [(f.time, heat_profile_defect(ops, f, a_gamma, mass)) for f in snapshots if f.time >= t_min]
    d = np.array([r[1] for r in rows])
    shrinking = bool(len(d) >= 4 and np.all(d[1:] <= 1.05 * d[:-1]) and d[-1] < d[0])
    return {"times": [r[0] for r in rows], "defects": d.tolist(), "shrinking": shrinking}


def profile_variance(ops, fld: Field) -> float:
    """Second central moment in x of |f(t,x)|_{L2_v}."""
    nr = velocity_norms(ops, fld.values)
    x = fld.space.x
    m0 = nr.sum()
    mean = np.sum(x * nr) / m0
    return float(np.sum((x - mean) ** 2 * nr) / m0)


def sup_norms(ops, traj: ModalTrajectory) -> np.ndarray:
    """sup_x |f(t,x)|_{L2_v} per stored time."""
    return np.array([velocity_norms(ops, traj.field(i).values).max() for i in range(len(traj.times))])
