import csv
import json
import os

import numpy as np
import pytest

from kfplab import cli
from kfplab.config import ConfigError, RunConfig, load_config

SMALL = {"gamma": 2.0, "v_max": 10.0, "n_v": 61, "l_x": 16.0, "n_x": 32, "t_max": 2.0, "snapshot_dt": 0.5}


def write_config(tmp_path, name="run.json", **kw):
    path = tmp_path / name
    path.write_text(json.dumps({**SMALL, **kw}))
    return str(path)


def run(*args):
    return cli.main([str(a) for a in args])


def test_config_rejects_unknown_and_nested(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gama": 2}))
    with pytest.raises(ConfigError):
        load_config(str(bad))
    bad.write_text(json.dumps({"gamma": {"value": 2}}))
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_hash_ignores_threads_and_out():
    assert RunConfig(threads=1, out="a").config_hash == RunConfig(threads=4, out="b").config_hash
    assert RunConfig(gamma=2.0).config_hash != RunConfig(gamma=1.0, v_max=30.0).config_hash


def test_even_velocity_count_is_a_config_error(tmp_path, capsys):
    assert run("check-operator", "--config", write_config(tmp_path, n_v=200), "--out", tmp_path / "o") == 2
    assert "n_v" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_check_operator_passes_and_stamps_hash(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "o"
    assert run("check-operator", "--config", cfg, "--out", out, "--dump-ops") == 0
    data = json.loads((out / "check_operator.json").read_text())
    assert data["passed"] and data["config_hash"] == load_config(cfg).config_hash
    assert "numpy" in data["versions"]
    assert (out / "operators.json").exists()


def test_boundary_mass_failure_is_named(tmp_path, capsys):
    cfg = write_config(tmp_path, gamma=0.5, v_max=2.0)
    assert run("check-operator", "--config", cfg, "--out", tmp_path / "o") == 1
    assert "boundary_mass" in capsys.readouterr().err


def test_rerun_needs_force(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "o"
    assert run("check-operator", "--config", cfg, "--out", out) == 0
    assert run("check-operator", "--config", cfg, "--out", out) == 2
    assert run("check-operator", "--config", cfg, "--out", out, "--force") == 0


def test_rates_needs_trajectory(tmp_path):
    assert run("rates", "--config", write_config(tmp_path), "--out", tmp_path / "o") == 2


def test_nonwrap_is_a_config_error(tmp_path):
    cfg = write_config(tmp_path, l_x=4.0, t_max=20.0, snapshot_dt=5.0)
    assert run("evolve", "--config", cfg, "--out", tmp_path / "o") == 2


def _tree(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            if f.endswith((".csv", ".json")):
                p = os.path.join(dirpath, f)
                out[os.path.relpath(p, root)] = open(p, "rb").read()
    return out


def test_outputs_identical_across_thread_counts(tmp_path):
    cfg = write_config(tmp_path, initial="white_noise", seed=7)
    trees = []
    for threads in (1, 2):
        out = tmp_path / f"t{threads}"
        for cmd in ("spectrum", "evolve"):
            run(cmd, "--config", cfg, "--out", out, "--threads", threads)
        trees.append(_tree(out))
    assert trees[0].keys() == trees[1].keys() and len(trees[0]) > 3
    assert trees[0] == trees[1]
    for name, blob in trees[0].items():
        if name.endswith(".csv"):
            assert blob.startswith(b"# config_hash=")


def test_micro_bump_has_no_fluid_density(tmp_path):
    out = tmp_path / "o"
    assert run("evolve", "--config", write_config(tmp_path, initial="micro_bump"), "--out", out) == 0
    with open(out / "trajectory" / "t_00000.0000.csv") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    assert np.abs([float(r["a"]) for r in rows]).max() < 1e-14
