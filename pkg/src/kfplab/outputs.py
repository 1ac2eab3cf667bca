"""CSV and JSON writers that stamp every file with the config hash and versions."""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np
import scipy

from . import __version__


class OutputExists(FileExistsError):
    pass


def versions() -> dict:
    return {"kfplab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _target(out_dir: str, name: str, force: bool) -> str:
    path = os.path.join(out_dir, name)
    if os.path.exists(path) and not force:
        raise OutputExists(f"{path} exists; use a fresh --out directory or --force")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


def write_csv(out_dir: str, name: str, header: list, rows, config_hash: str, force: bool = False) -> str:
    path = _target(out_dir, name, force)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash} " + " ".join(f"{k}={v}" for k, v in versions().items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(out_dir: str, name: str, payload: dict, config_hash: str, force: bool = False) -> str:
    path = _target(out_dir, name, force)
    body = {"config_hash": config_hash, "versions": versions(), **_jsonable(payload)}
    with open(path, "w") as fh:
        json.dump(body, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def read_json(out_dir: str, name: str) -> dict:
    path = os.path.join(out_dir, name)
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing upstream artifact {path}")
    with open(path) as fh:
        return json.load(fh)
