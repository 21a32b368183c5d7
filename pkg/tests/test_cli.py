"""CLI runs: config handling, deterministic outputs, manifests, exit codes."""

import json

import numpy as np
import pytest

from starkprobe.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RESOURCE,
    grid_values,
    main,
    parse_initial,
    resolve_config,
)
from starkprobe.errors import ConfigError


def run_cli(out_dir, command, *sets, extra=()):
    args = [command, "--out", str(out_dir), "--threads", "2"]
    for s in sets:
        args += ["--set", s]
    args += list(extra)
    return main(args)


def read_manifest(out_dir):
    with open(out_dir / "manifest.json", encoding="utf-8") as f:
        return json.load(f)


def test_grid_values_forms():
    np.testing.assert_allclose(grid_values([1.0, 2.0]), [1.0, 2.0])
    np.testing.assert_allclose(grid_values({"values": [3, 4]}), [3.0, 4.0])
    np.testing.assert_allclose(grid_values({"min": 0.0, "max": 1.0, "num": 3}), [0.0, 0.5, 1.0])
    np.testing.assert_allclose(
        grid_values({"min": -0.001, "max": 0.001, "step": 0.0001}),
        np.arange(-10, 11) * 0.0001,
        atol=1e-15,
    )
    log = grid_values({"min": 0.1, "max": 10.0, "num": 3, "log": True})
    np.testing.assert_allclose(log, [0.1, 1.0, 10.0])
    with pytest.raises(ConfigError):
        grid_values({"min": 0.0, "max": 1.0})
    with pytest.raises(ConfigError):
        grid_values("h")


def test_resolve_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        resolve_config("evolve", {"bogus": 1}, {})


def test_parse_initial_forms():
    assert parse_initial({"type": "single-site", "site": 3}, 10, None).sites == (3,)
    assert parse_initial({"type": "neel"}, 6, 3).sites == (1, 3, 5)
    assert parse_initial({"type": "centered", "n": 2}, 7, None).sites == (3, 5)
    assert parse_initial(None, 10, None) is None
    with pytest.raises(ConfigError):
        parse_initial({"type": "bell"}, 10, None)


def test_evolve_initial_occupations_row(tmp_path):
    rc = run_cli(
        tmp_path, "evolve",
        "L=6", "N=3", 'initial={"type":"neel"}', 'times={"values":[0.0]}',
    )
    assert rc == EXIT_OK
    lines = (tmp_path / "occupations.csv").read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "t,P_1,P_2,P_3,P_4,P_5,P_6"
    first = np.array(lines[2].split(","), dtype=float)
    np.testing.assert_allclose(first, [0, 1, 0, 1, 0, 1, 0], atol=1e-12)


def test_qfi_sweep_csv_and_determinism(tmp_path):
    sets = (
        "L_list=[12]",
        'h_grid={"values":[0.5,1.0]}',
        "cfi=true",
        "window=[6,8]",
    )
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    assert run_cli(a_dir, "qfi-sweep", *sets) == EXIT_OK
    assert run_cli(b_dir, "qfi-sweep", *sets) == EXIT_OK
    a = (a_dir / "fisher_sweep.csv").read_bytes()
    assert a == (b_dir / "fisher_sweep.csv").read_bytes()
    lines = a.decode().splitlines()
    assert lines[1] == "L,N,Delta,h,t,qfi,qfi_over_t2,cfi,cfi_over_t2,saturated"
    assert len(lines) == 2 + 2 * 3  # comment + header + 2 fields x 3 window points


def test_manifest_lists_every_output_and_roundtrips(tmp_path):
    rc = run_cli(tmp_path, "scaling", 'recipe="plateau"', "h=0.5", "L_list=[8,12,16,20,24,28]")
    assert rc == EXIT_OK
    manifest = read_manifest(tmp_path)
    produced = sorted(p.name for p in tmp_path.iterdir() if p.name != "manifest.json")
    assert sorted(manifest["outputs"]) == produced
    assert manifest["rng"] == "numpy-pcg64"
    # resolved config re-resolves to itself
    again = resolve_config(manifest["command"], manifest["config"], {})
    assert again == manifest["config"]


def test_scaling_transition_recipe(tmp_path):
    rc = run_cli(tmp_path, "scaling", 'recipe="transition"', "L=60")
    assert rc == EXIT_OK
    report = json.loads((tmp_path / "scaling_report.json").read_text())
    assert 5.0 <= report["transition"]["h_c"] * 60 <= 10.0


def test_dephase_rows_and_gamma_zero_flag(tmp_path):
    rc = run_cli(
        tmp_path, "dephase",
        "L=6", "h_list=[0.5]", "gamma_list=[0.0,0.05]", 'times={"values":[5.0,10.0]}',
    )
    assert rc == EXIT_OK
    lines = (tmp_path / "dephasing.csv").read_text().splitlines()
    assert lines[1] == "t,gamma,h,qfi,qfi_over_t2,trace_err,min_eig"
    assert len(lines) == 2 + 4
    manifest = read_manifest(tmp_path)
    assert any("closed-system" in w for w in manifest["warnings"])


def test_estimate_small_run_and_csv(tmp_path):
    rc = run_cli(
        tmp_path, "estimate",
        "L=6", "t=40.0", 'h_grid={"min":-0.01,"max":0.01,"step":0.005}',
        "M=40", "repetitions=8", 'initial={"type":"single-site","site":1}',
        extra=("--seed", "7"),
    )
    assert rc == EXIT_OK
    lines = (tmp_path / "estimation.csv").read_text().splitlines()
    assert lines[1] == "h_true,h_es_mean,delta_h,crb,M,repetitions,seed"
    assert len(lines) == 2 + 5
    assert all(row.split(",")[6] == "7" for row in lines[2:])


def test_estimate_rejects_single_repetition(tmp_path):
    rc = run_cli(tmp_path, "estimate", "repetitions=1")
    assert rc == EXIT_CONFIG


def test_empty_h_grid_rejected(tmp_path):
    rc = run_cli(tmp_path, "qfi-sweep", 'h_grid={"values":[]}')
    assert rc == EXIT_CONFIG


def test_bound_check_passes_and_corrupt_hook_fails(tmp_path):
    sets = ("L_list=[10]", 'h_grid={"values":[0.3,1.0]}', "window=[6,7]")
    ok_dir, bad_dir = tmp_path / "ok", tmp_path / "bad"
    assert run_cli(ok_dir, "bound-check", *sets) == EXIT_OK
    report = json.loads((ok_dir / "bound_check.json").read_text())
    assert report["passed"] and report["max_ratio"] < 1.0
    assert run_cli(bad_dir, "bound-check", *sets, "corrupt_factor=1e6") == EXIT_OK
    report = json.loads((bad_dir / "bound_check.json").read_text())
    assert not report["passed"] and report["violations"]


def test_resource_exit_code(tmp_path):
    rc = run_cli(
        tmp_path, "qfi-sweep",
        "L_list=[24]", "N=12", 'h_grid={"values":[0.5]}', "memory_budget=1000000",
    )
    assert rc == EXIT_RESOURCE


def test_config_file_and_override_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"L": 8, "h": 0.4, "times": {"values": [0.0, 1.0]}}))
    out = tmp_path / "out"
    rc = main(["evolve", "--config", str(cfg), "--out", str(out), "--set", "L=5"])
    assert rc == EXIT_OK
    manifest = read_manifest(out)
    assert manifest["config"]["L"] == 5  # flag wins over file
    assert manifest["config"]["h"] == 0.4
