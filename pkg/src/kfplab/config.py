"""Flat run configuration with validation and a content hash."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields

INITIAL_KINDS = ("fluid_bump", "micro_bump", "white_noise")
# keys that do not change results and are left out of the hash
UNHASHED = ("threads", "out")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    gamma: float = 2.0
    d_x: int = 1
    d_v: int = 1
    v_max: float = 10.0
    n_v: int = 201
    l_x: float = 64.0
    n_x: int = 512
    scheme: str = "exact"
    dt: float = 0.01
    t_max: float = 20.0
    snapshot_dt: float = 1.0
    cutoff_strength: float = 10.0
    cutoff_radius: float = 4.0
    delta: float | None = None
    D: float = 5.0
    alpha_weight: float = 0.04
    delta_weight: float = 0.5
    M: float = 1.0
    initial: str = "fluid_bump"
    seed: int = 0
    eta_max: float = 5.0
    n_eta: int = 41
    probe_t_min: float = 1e-3
    probe_t_max: float = 0.1
    probe_points: int = 12
    waves_l_x: float = 16.0
    waves_n_x: int = 64
    waves_t_max: float = 20.0
    waves_snapshot_dt: float = 0.5
    lyapunov_etas: tuple = (0.05, 0.3, 1.0, 3.0)
    threads: int = 1
    out: str = "runs/default"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.gamma > 0, "gamma must be positive")
        need(self.d_x == 1, "only d_x = 1 is supported by the field solver")
        need(self.d_v in (1, 2, 3), "d_v must be 1, 2 or 3")
        need(self.v_max > 0, "v_max must be positive")
        need(self.n_v >= 3 and self.n_v % 2 == 1, f"n_v must be odd and at least 3, got {self.n_v}")
        for name in ("n_x", "waves_n_x"):
            n = getattr(self, name)
            need(n >= 2 and n & (n - 1) == 0, f"{name} must be a power of two, got {n}")
        need(self.l_x > 1 and self.waves_l_x > 1, "box half-periods must exceed the data support 1")
        need(self.scheme in ("exact", "cn"), f"scheme must be exact or cn, got {self.scheme!r}")
        need(self.dt > 0 and self.t_max > 0 and self.snapshot_dt > 0, "time steps and horizon must be positive")
        if self.scheme == "cn":
            ratio = self.snapshot_dt / self.dt
            need(abs(ratio - round(ratio)) < 1e-9, "snapshot_dt must be a multiple of dt under cn")
        need(self.cutoff_strength > 0 and self.cutoff_radius > 0, "cutoff knobs must be positive")
        need(self.delta is None or self.delta > 0, "delta must be positive")
        need(min(self.D, self.alpha_weight, self.delta_weight, self.M) > 0, "weight knobs must be positive")
        need(self.initial in INITIAL_KINDS, f"initial must be one of {INITIAL_KINDS}")
        need(0 < self.probe_t_min < self.probe_t_max <= 1, "probe window must lie in (0, 1]")
        need(self.probe_points >= 8, "probe_points must be at least 8")
        need(self.n_eta >= 3 and self.eta_max > 0, "eta scan must have at least 3 points")
        need(self.threads >= 1, "threads must be at least 1")

    def hashed_dict(self) -> dict:
        d = asdict(self)
        for k in UNHASHED:
            d.pop(k)
        d["lyapunov_etas"] = list(d["lyapunov_etas"])
        return d

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.hashed_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def snapshot_times(self):
        import numpy as np

        n = int(round(self.t_max / self.snapshot_dt))
        return np.arange(n + 1) * self.snapshot_dt


def load_config(path: str | None = None, **overrides) -> RunConfig:
    """Read a flat JSON object; unknown keys and nested values are errors."""
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a flat JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigError(f"config key {k!r} is nested; the format is flat")
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "lyapunov_etas" in data:
        data["lyapunov_etas"] = tuple(data["lyapunov_etas"])
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
