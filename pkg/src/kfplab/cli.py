"""Command line driver: kfplab <command> --config run.json --out DIR.

Exit codes: 0 all checks pass, 1 an invariant or verdict failed, 2 the
configuration (or the run directory) was rejected before any compute.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import scipy.linalg as sla

from . import decompose as dec
from . import evolution as evo
from . import functionals as fun
from . import rates
from . import spectral as spec
from . import velocity_ops as vo
from .config import ConfigError, RunConfig, load_config
from .outputs import OutputExists, read_json, write_csv, write_json


class InvariantFailure(RuntimeError):
    pass


def build_ops(cfg: RunConfig) -> vo.OperatorSet:
    grid = vo.build_grid(cfg.v_max, cfg.n_v, cfg.d_v)
    params = vo.PotentialParams(cfg.gamma, cutoff_radius=cfg.cutoff_radius, cutoff_strength=cfg.cutoff_strength,
                                dim_v=cfg.d_v)
    return vo.build_operators(grid, params)


def weight_params(cfg: RunConfig) -> fun.WeightParams:
    return fun.WeightParams("unit", cfg.D, cfg.alpha_weight, cfg.delta_weight, cfg.M)


def _check(results: list, name: str, passed: bool, value, bound) -> None:
    results.append({"name": name, "passed": bool(passed), "value": value, "bound": bound})


# -- commands ------------------------------------------------------------------


def cmd_check_operator(cfg: RunConfig, out: str, force: bool = False, dump_ops: bool = False, **_) -> bool:
    checks = []
    grid = vo.build_grid(cfg.v_max, cfg.n_v, cfg.d_v)
    params = vo.PotentialParams(cfg.gamma, cutoff_radius=cfg.cutoff_radius, cutoff_strength=cfg.cutoff_strength,
                                dim_v=cfg.d_v)
    edge = vo.boundary_sqrt_mass(grid, params) ** 2
    _check(checks, "boundary_mass", edge <= vo.BOUNDARY_MASS_TOL, edge, vo.BOUNDARY_MASS_TOL)
    if not checks[-1]["passed"]:
        write_json(out, "check_operator.json", {"checks": checks, "passed": False}, cfg.config_hash, force)
        raise InvariantFailure(f"boundary_mass: exp(-Phi(v_max)) = {edge:.3e} exceeds {vo.BOUNDARY_MASS_TOL:.0e}")
    ops = vo.build_operators(grid, params)
    L = ops.L_dense
    sym = float(np.abs(L - L.T).max() / np.abs(L).max())
    _check(checks, "symmetric", sym <= 1e-12, sym, 1e-12)
    top = float(sla.eigvalsh(L, subset_by_index=[ops.size - 1, ops.size - 1])[0])
    _check(checks, "negative_semidefinite", top <= 1e-8, top, 1e-8)
    mass = float(np.sum(ops.weights * ops.sqrtM**2))
    _check(checks, "unit_mass", abs(mass - 1.0) <= 1e-12, mass, 1e-12)
    kern = vo.kernel_residual(grid, params, pointwise=False)
    _check(checks, "kernel_residual_discrete", kern <= 1e-8, kern, 1e-8)
    fine = vo.build_grid(cfg.v_max, 2 * cfg.n_v - 1, cfg.d_v)
    ratio = vo.kernel_residual(grid, params) / vo.kernel_residual(fine, params)
    _check(checks, "kernel_residual_order", 3.4 <= ratio <= 4.6, ratio, [3.4, 4.6])
    try:
        nu0 = vo.coercivity_constant(ops)
    except ArithmeticError:
        nu0 = -1.0
    _check(checks, "coercivity_nu0", nu0 > 0, nu0, 0.0)
    lam_c = vo.lambda_coercivity(ops)
    _check(checks, "lambda_coercivity", lam_c > 0, lam_c, 0.0)
    idem = float(np.abs(ops.P0 @ ops.P0 - ops.P0).max())
    _check(checks, "projector_idempotent", idem <= 1e-12, idem, 1e-12)
    passed = all(c["passed"] for c in checks)
    write_json(out, "check_operator.json", {"checks": checks, "passed": passed, "phi0": ops.params.phi0},
               cfg.config_hash, force)
    if dump_ops:
        path = os.path.join(out, "operators.json")
        if os.path.exists(path) and not force:
            raise OutputExists(f"{path} exists; use a fresh --out directory or --force")
        with open(path, "w") as fh:
            fh.write(vo.ops_to_json(ops))
    if not passed:
        first = next(c for c in checks if not c["passed"])
        raise InvariantFailure(f"{first['name']}: value {first['value']} outside {first['bound']}")
    return True


def cmd_spectrum(cfg: RunConfig, out: str, force: bool = False, threads: int = 1, **_) -> bool:
    ops = build_ops(cfg)
    etas = np.linspace(0.0, cfg.eta_max, cfg.n_eta)
    delta = cfg.delta if cfg.delta is not None else spec.default_delta(ops, cfg.eta_max)
    flags, checks = [], []
    if ops.grid.n_per_axis <= spec.DENSE_CAP + 1:
        tau, rows, flags = spec.gap_scan(ops, [[e] for e in etas], delta, threads)
        long_ok = all(r["gap"] > 1e-8 for r in rows if r["longwave"])
        certified = bool(np.isfinite(tau) and tau > 0 and long_ok)
    else:
        data = evo.ordered_map(lambda e: spec.mode_eigendata(ops, [e], check_gap=False), etas, threads)
        rows = [{"eta": [d.eta[0]], "re_lambda": d.lam.real, "im_lambda": d.lam.imag, "gap": d.gap,
                 "count_above": -1, "longwave": bool(d.eta[0] < delta)} for d in data]
        tau, certified = float("nan"), False
        flags.append(f"gap certificate skipped: more than {spec.DENSE_CAP + 1} velocity nodes")
        if cfg.gamma < 1:
            flags.append("no-theory: spectral structure not established for gamma < 1")
    diff = spec.diffusion_coefficient(ops, threads=threads)
    write_csv(out, "spectrum.csv", ["eta", "re_lambda", "im_lambda", "gap", "count_above", "longwave"],
              [[r["eta"][0], r["re_lambda"], r["im_lambda"], r["gap"], r["count_above"], r["longwave"]]
               for r in rows], cfg.config_hash, force)
    if cfg.gamma >= 1:
        _check(checks, "gap_certified", certified, tau, 0.0)
        _check(checks, "a_gamma_two_ways", diff.relative_gap <= 0.01, diff.relative_gap, 0.01)
    if cfg.gamma == 2 and cfg.d_v == 1:
        top = spec.top_real_parts(ops, [0.0], 3)
        h2 = ops.grid.spacing**2
        err = float(np.max(np.abs(top - np.array([0.0, -1.0, -2.0]))))
        _check(checks, "harmonic_ladder", err <= 2 * h2 * 2, err, 4 * h2)
        _check(checks, "a2_equals_one", abs(diff.a_gamma - 1) <= 2 * h2, abs(diff.a_gamma - 1), 2 * h2)
    passed = all(c["passed"] for c in checks)
    write_json(out, "spectrum.json", {"tau": tau, "delta": delta, "a_gamma": diff.a_gamma, "a_fit": diff.a_fit,
                                      "a_relative_gap": diff.relative_gap, "flags": flags, "checks": checks,
                                      "passed": passed}, cfg.config_hash, force)
    if not passed:
        raise InvariantFailure(next(c["name"] for c in checks if not c["passed"]))
    return True


def _spectrum_summary(cfg: RunConfig, out: str, ops: vo.OperatorSet) -> dict:
    try:
        return read_json(out, "spectrum.json")
    except FileNotFoundError:
        diff = spec.diffusion_coefficient(ops)
        delta = cfg.delta if cfg.delta is not None else spec.default_delta(ops, cfg.eta_max)
        return {"a_gamma": diff.a_gamma, "delta": delta}


def _wave_speed(cfg: RunConfig, a_gamma: float) -> float:
    return evo.predicted_wave_speed(a_gamma, 5.0, cfg.t_max)


def cmd_evolve(cfg: RunConfig, out: str, force: bool = False, threads: int = 1, **_) -> bool:
    ops = build_ops(cfg)
    space = evo.SpaceGrid(cfg.l_x, cfg.n_x)
    summary = _spectrum_summary(cfg, out, ops)
    M_pred = _wave_speed(cfg, summary["a_gamma"])
    evo.check_nonwrap(space, M_pred, cfg.t_max)
    f0 = evo.initial_field(cfg.initial, ops, space, cfg.seed)
    times = cfg.snapshot_times()
    traj = evo.evolve_modes(ops, space, f0, times, cfg.scheme, cfg.dt, threads=threads)
    fields = traj.fields()
    masses = np.array([evo.mass(ops, f) for f in fields])
    norms = np.array([evo.l2_norm(ops, f) for f in fields])
    m0 = masses[0]
    # relative to |m0|, or to the data norm when the data carry no mass
    drift = float(np.max(np.abs(masses - m0)) / max(abs(m0), norms[0], 1e-300))
    contraction = bool(np.all(np.diff(norms) <= 1e-12 * norms[0]))
    ws = ops.weights * ops.sqrtM
    for f in fields:
        a = f.values @ ws
        b = f.values @ (ws * ops.grid.nodes[:, 0])
        write_csv(out, os.path.join("trajectory", f"t_{f.time:010.4f}.csv"), ["x", "norm_v", "a", "b"],
                  zip(space.x, evo.velocity_norms(ops, f.values), a, b), cfg.config_hash, force)
    os.makedirs(os.path.join(out, "cache"), exist_ok=True)
    np.savez(os.path.join(out, "cache", "trajectory.npz"), fhat=traj.fhat, times=traj.times, etas=traj.etas,
             real=traj.real)
    try:
        M_hat = evo.calibrate_wave_speed(ops, fields)
    except ValueError:
        M_hat = float("nan")
    checks = []
    tol = 1e-10 if cfg.scheme == "exact" else float("inf")
    _check(checks, "mass_drift", drift <= tol, drift, tol)
    _check(checks, "contraction", contraction, float(np.max(np.diff(norms))) if len(norms) > 1 else 0.0, 0.0)
    passed = all(c["passed"] for c in checks)
    write_json(out, "trajectory/manifest.json",
               {"run_id": cfg.config_hash, "times": times, "initial": cfg.initial, "mass": masses, "l2": norms,
                "mass_drift": drift, "wave_speed_predicted": M_pred, "wave_speed_calibrated": M_hat,
                "checks": checks, "passed": passed}, cfg.config_hash, force)
    if not passed:
        raise InvariantFailure(next(c["name"] for c in checks if not c["passed"]))
    return True


def load_trajectory(cfg: RunConfig, out: str, ops: vo.OperatorSet) -> evo.ModalTrajectory:
    path = os.path.join(out, "cache", "trajectory.npz")
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing upstream artifact {path}; run evolve first")
    data = np.load(path)
    return evo.ModalTrajectory(evo.SpaceGrid(cfg.l_x, cfg.n_x), ops.grid, data["times"], data["etas"],
                               data["fhat"], bool(data["real"]))


def _exp_weight(cfg: RunConfig) -> fun.WeightParams:
    return fun.admissible_weights(cfg.gamma, weight_params(cfg))[1]


def cmd_decompose(cfg: RunConfig, out: str, force: bool = False, threads: int = 1, **_) -> bool:
    ops = build_ops(cfg)
    space = evo.SpaceGrid(cfg.waves_l_x, cfg.waves_n_x)
    f0 = evo.initial_field(cfg.initial, ops, space, cfg.seed)
    n = int(round(cfg.waves_t_max / cfg.waves_snapshot_dt))
    times = np.arange(n + 1) * cfg.waves_snapshot_dt
    parts = dec.picard_waves(ops, space, f0, times, cfg.scheme, cfg.dt, threads=threads)
    weight = _exp_weight(cfg)
    rows = []
    labelled = [(str(j), h) for j, h in enumerate(parts.h)] + [("R3", parts.R3)]
    plain = {label: [dec.trajectory_norms(ops, tr, k) for k in range(3)] for label, tr in labelled}
    for label, tr in labelled:
        for i, t in enumerate(times):
            fld = tr.field(i)
            weighted = [fun.weighted_sobolev_norm(ops, fld, weight, k) for k in range(3)]
            rows.append([t, label, *[plain[label][k][i] for k in range(3)],
                         weighted[0], weighted[1] - weighted[0], weighted[2] - weighted[1]])
    write_csv(out, "waves.csv", ["t", "j", "l2_norm", "h1_norm", "h2_norm", "weighted_l2", "weighted_h1",
                                 "weighted_h2"], rows, cfg.config_hash, force)
    late = times >= 0.5 * times[-1]
    slopes = {}
    for j in range(dec.LEVELS):
        y = plain[str(j)][0][late]
        slopes[j] = float(np.polyfit(times[late], np.log(y), 1)[0]) if np.all(y > 0) else float("nan")
    growth = dec.derivative_growth_table(ops, np.geomspace(3 * cfg.probe_t_min, 0.3, cfg.probe_points), 1,
                                         threads=threads)
    checks = []
    _check(checks, "split_consistency", parts.consistency_residual <= 10 * parts.scheme_tolerance,
           parts.consistency_residual, 10 * parts.scheme_tolerance)
    for j in range(3):
        fit = growth["fits"][j]
        _check(checks, f"small_time_exponent_h{j}", abs(fit["exponent"] - fit["expected"]) <= 0.15,
               fit["exponent"], [fit["expected"] - 0.15, fit["expected"] + 0.15])
    if cfg.gamma >= 1:
        for j in range(dec.LEVELS):
            _check(checks, f"large_time_slope_h{j}", slopes[j] < 0, slopes[j], 0.0)
    passed = all(c["passed"] for c in checks)
    write_json(out, "waves_summary.json",
               {"consistency_residual": parts.consistency_residual, "scheme_tolerance": parts.scheme_tolerance,
                "large_time_log_slopes": slopes, "derivative_growth": growth, "weight": weight.kind,
                "checks": checks, "passed": passed}, cfg.config_hash, force)
    if not passed:
        raise InvariantFailure(next(c["name"] for c in checks if not c["passed"]))
    return True


def cmd_probe_regularization(cfg: RunConfig, out: str, force: bool = False, threads: int = 1, **_) -> bool:
    ops = build_ops(cfg)
    t_list = np.geomspace(cfg.probe_t_min, cfg.probe_t_max, cfg.probe_points)
    rows, fits, checks = [], {}, []
    for weight in fun.admissible_weights(cfg.gamma, weight_params(cfg)):
        table = evo.regularization_probe(ops, t_list, fun.probe_weight(weight, cfg.gamma), threads=threads)
        rows += [[weight.kind, r["t"], r["grad_v"], r["grad_x"]] for r in table]
        fv = rates.fit_power_exp(t_list, [r["grad_v"] for r in table])
        fx = rates.fit_power_exp(t_list, [r["grad_x"] for r in table])
        fits[weight.kind] = {"grad_v": fv.as_dict(), "grad_x": fx.as_dict()}
        _check(checks, f"grad_v_slope_{weight.kind}", abs(fv.exponent + 0.5) <= 0.1, fv.exponent, [-0.6, -0.4])
        _check(checks, f"grad_x_slope_{weight.kind}", abs(fx.exponent + 1.5) <= 0.15, fx.exponent, [-1.65, -1.35])
    write_csv(out, "probe.csv", ["weight", "t", "grad_v", "grad_x"], rows, cfg.config_hash, force)
    passed = all(c["passed"] for c in checks)
    write_json(out, "probe.json", {"fits": fits, "checks": checks, "passed": passed}, cfg.config_hash, force)
    if not passed:
        raise InvariantFailure(next(c["name"] for c in checks if not c["passed"]))
    return True


def lyapunov_profile(ops: vo.OperatorSet) -> np.ndarray:
    """Unit-norm sqrt(M) (1 + |v|^(1/2) cos(v) / 2): a fluid part plus an oscillating tail."""
    v = ops.grid.nodes[:, 0]
    f = ops.sqrtM * (1.0 + 0.5 * ops.grid.speed**0.5 * np.cos(v))
    return f / ops.norm(f)


def cmd_rates(cfg: RunConfig, out: str, force: bool = False, threads: int = 1, **_) -> bool:
    ops = build_ops(cfg)
    traj = load_trajectory(cfg, out, ops)
    summary = _spectrum_summary(cfg, out, ops)
    a_gamma, delta = float(summary["a_gamma"]), float(summary["delta"])
    times = traj.times
    late = times >= 5.0
    split = dec.spectral_split(ops, traj, delta, threads)
    fields = traj.fields()
    entries, checks = {}, []
    d = traj.space.dim_x

    sup_L = rates.sup_norms(ops, split.f_L)
    if late.sum() >= 8 and np.all(sup_L[late] > 0):
        fit = rates.fit_power(times[late], sup_L[late])
        entries["longwave_sup"] = fit.as_dict()
        if cfg.gamma >= 1 and cfg.initial == "fluid_bump":
            _check(checks, "longwave_exponent", abs(fit.exponent + d / 2) <= 0.1, fit.exponent,
                   [-d / 2 - 0.1, -d / 2 + 0.1])
    m0 = evo.mass(ops, fields[0])
    if cfg.gamma >= 1 and late.any():
        fl0 = split.f_L0.fields()
        heat = rates.heat_profile_compare(ops, fl0, a_gamma, m0)
        entries["heat_profile"] = heat
        var = rates.profile_variance(ops, fl0[-1])
        rel = abs(var - 2 * a_gamma * times[-1]) / (2 * a_gamma * times[-1])
        entries["profile_variance"] = {"t": times[-1], "variance": var, "predicted": 2 * a_gamma * times[-1],
                                       "relative_error": rel}
        if cfg.initial == "fluid_bump" and len(heat["defects"]) >= 4:
            _check(checks, "heat_profile_shrinks", heat["defects"][-1] < heat["defects"][0],
                   heat["defects"][-1], heat["defects"][0])
            _check(checks, "profile_variance", rel <= 0.10, rel, 0.10)
    perp = dec.trajectory_norms(ops, split.f_Lperp)
    if late.sum() >= 8 and np.all(perp[late] > rates.NOISE_FLOOR):
        entries["nonfluid_longwave"] = rates.fit_exp(times[late], perp[late]).as_dict()
    short = dec.trajectory_norms(ops, split.f_S)
    if cfg.gamma < 1 and late.sum() >= 8 and np.all(short[late] > rates.NOISE_FLOOR):
        q = cfg.gamma / (2 - cfg.gamma)
        cert = rates.certify_q(times[late], short[late], q)
        entries["shortwave_stretched"] = {**rates.fit_stretched_exp(times[late], short[late], q).as_dict(), **cert}
        _check(checks, "shortwave_q", cert["certified"], cert["ratio"], 1.10)
    try:
        M_hat = evo.calibrate_wave_speed(ops, fields)
        tail = rates.spatial_tail_fit(ops, fields, M_hat, cfg.gamma)
        entries["spatial_tail"] = tail.as_dict()
        if tail.law != "unresolved" and cfg.initial == "fluid_bump":
            q_pred = tail.extra["q_predicted"]
            tol = 0.15
            _check(checks, "spatial_q", abs(tail.exponent - q_pred) <= tol, tail.exponent,
                   [q_pred - tol, q_pred + tol])
    except ValueError as exc:
        entries["spatial_tail"] = {"law": "unresolved", "reason": str(exc)}

    lyap = {}
    if cfg.gamma < 1.5:
        alpha = min(cfg.alpha_weight, 0.049 / cfg.gamma)
        prof = lyapunov_profile(ops)
        lt = np.linspace(0.0, cfg.t_max, int(round(cfg.t_max / 0.05)) + 1)
        states = evo.ordered_map(lambda e: fun.lyapunov_check(ops, e, prof, lt, alpha), cfg.lyapunov_etas, threads)
        for e, st in zip(cfg.lyapunov_etas, states):
            lyap[str(e)] = st.as_dict()
            _check(checks, f"lyapunov_eta_{e}", st.passed, [st.defect_E, st.defect_E_tilde],
                   [st.tol_E, st.tol_E_tilde])
    r_a, r_b = fun.fluid_residual(ops, traj, "centered")
    r_a_exact, _ = fun.fluid_residual(ops, traj, "exact")
    write_json(out, "functionals.json", {"lyapunov": lyap, "fluid_residual": {"r_a": r_a, "r_b": r_b,
                                                                                "r_a_exact": r_a_exact}},
               cfg.config_hash, force)
    _write_weight_scan(cfg, out, force)
    passed = all(c["passed"] for c in checks)
    write_json(out, "rates.json", {"delta": delta, "a_gamma": a_gamma, "fits": entries, "checks": checks,
                                   "passed": passed}, cfg.config_hash, force)
    if not passed:
        raise InvariantFailure(next(c["name"] for c in checks if not c["passed"]))
    return True


def _write_weight_scan(cfg: RunConfig, out: str, force: bool) -> None:
    x = np.linspace(0.0, 4.0 * cfg.l_x, 801)
    rows = []
    g = cfg.gamma
    for v in (0.0, 2.0, 5.0):
        w = fun.weight_w(0.0, x, cfg.D, cfg.M)
        if g < 1.5:
            c = fun.weight_c(x, v, g, cfg.delta_weight)
            r = fun.weight_rho(cfg.t_max, x, v, g, cfg.delta_weight, cfg.M)
            part = fun.partition_H(cfg.t_max, x, v, g, cfg.delta_weight, cfg.M)
        else:
            c = r = np.full_like(x, np.nan)
            part = np.full(x.shape, "n/a")
        rows += [[v, xi, ci, ri, wi, pi] for xi, ci, ri, wi, pi in zip(x, c, r, w, part)]
    write_csv(out, "weights.csv", ["v", "x", "c", "rho_t_max", "w", "partition_t_max"], rows, cfg.config_hash,
              force)


REPORT_FILES = ("check_operator.json", "spectrum.json", "trajectory/manifest.json", "waves_summary.json",
                "probe.json", "rates.json")


def cmd_report(cfg: RunConfig, out: str, force: bool = False, **_) -> bool:
    table, missing = [], []
    for name in REPORT_FILES:
        path = os.path.join(out, name)
        if not os.path.exists(path):
            missing.append(name)
            continue
        with open(path) as fh:
            data = json.load(fh)
        for c in data.get("checks", []):
            table.append({"source": name, **c})
    for row in table:
        print(f"{'PASS' if row['passed'] else 'FAIL'}  {row['source']:<28} {row['name']}  value={row['value']}")
    passed = bool(table) and all(r["passed"] for r in table)
    write_json(out, "report.json", {"checks": table, "missing": missing, "passed": passed}, cfg.config_hash, force)
    if missing:
        print("missing artifacts: " + ", ".join(missing))
    if not passed:
        raise InvariantFailure("report contains failing checks" if table else "no artifacts to report")
    return True


COMMANDS = {
    "check-operator": cmd_check_operator,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "decompose": cmd_decompose,
    "probe-regularization": cmd_probe_regularization,
    "rates": cmd_rates,
    "report": cmd_report,
}


def cmd_all(cfg: RunConfig, out: str, **kw) -> bool:
    failures = []
    for name, fn in COMMANDS.items():
        try:
            fn(cfg, out, **kw)
        except InvariantFailure as exc:
            failures.append(f"{name}: {exc}")
            print(f"{name}: FAIL {exc}", file=sys.stderr)
    if failures:
        raise InvariantFailure("; ".join(failures))
    return True


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kfplab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=[*COMMANDS, "all"])
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--out", help="run directory (overrides the config)")
    p.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    p.add_argument("--force", action="store_true", help="overwrite existing artifacts")
    p.add_argument("--dump-ops", action="store_true", help="also write operators.json (check-operator)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, out=args.out, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    fn = cmd_all if args.command == "all" else COMMANDS[args.command]
    try:
        fn(cfg, cfg.out, force=args.force, threads=cfg.threads, dump_ops=args.dump_ops)
    except (ConfigError, OutputExists, evo.NonWrapViolation, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InvariantFailure, vo.GridError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
