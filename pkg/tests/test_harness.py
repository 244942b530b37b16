import csv
import hashlib
import math
import statistics

import numpy as np
import pytest

from satbeam.cli import main
from satbeam.harness import (
    CSV_HEADER,
    ConfigError,
    aggregate,
    derive_seed,
    emit_report,
    parse_config,
    parse_config_text,
    run_sweep,
)
from satbeam.harness.sweep import ResultRow, aggregate_path, calibrate_power, mean_dft_only_sinr
from satbeam.geometry import Scenario, build_scene

DESK_CFG = """\
# desk-scale sweep
users = 3
ura = [4, 2]
fft_size = 16
power_w = 1e-3
sweep_axis = power
sweep_values = [1e-3, 2e-3]
trials = 2
seed = 5
"""


def test_empty_config_gives_defaults():
    cfg = parse_config_text("")
    s = cfg.scenario
    assert (s.power_w, s.users, s.ura, s.spacing, s.fft_size) == (3000.0, 45, (10, 10), 1.0, 256)
    assert (s.bandwidth_hz, s.carrier_hz, s.altitude_m) == (500e6, 19e9, 8000e3)
    assert (s.noise_temp_k, s.user_gain_dbi, s.min_elevation_deg) == (224.5, 41.45, 5.0)
    assert cfg.trials == 50
    assert cfg.sweep_values == (3000.0,)


def test_zero_users_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("users = 0")


@pytest.mark.parametrize("text", ["ura = [8,8]", "ura = 8x8", "ura = 8"])
def test_ura_forms(text):
    cfg = parse_config_text(text)
    assert cfg.scenario.k == 64
    assert cfg.scenario.window.k == 64
    assert cfg.scenario.array.k == 64


@pytest.mark.parametrize("text", [
    "colour = red",
    "users = 3\nusers = 4",
    "users",
    "users = 2.5",
    "sweep_values = [3, 1, 2]",
    "trials = 0",
    "schemes = [joint_wmmse, magic]",
    "sweep_axis = altitude",
    "solver.beta_mode = newton",
    "users = 200",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_schemes_and_solver_keys():
    cfg = parse_config_text(
        "schemes = dft_only, mf_fdp\nsolver.max_iter = 7\nsolver.tol = 1e-4\n"
        "solver.beta_mode = subgradient\nsolver.step0 = 0.5\nsolver.theta_init = 0.01\n")
    assert cfg.schemes == ("dft_only", "mf_fdp")
    s = cfg.solver
    assert (s.max_outer_iters, s.tolerance, s.beta_mode, s.step0, s.theta_init) == (7, 1e-4, "subgradient", 0.5, 0.01)


def test_sweep_axes():
    cfg = parse_config_text("sweep_axis = ura_size\nsweep_values = [4, 6]\nusers = 4\nura = 4\nfft_size = 64")
    assert cfg.scenario_for(6).ura == (6, 6)
    cfg = parse_config_text("sweep_axis = users\nsweep_values = [2, 4]")
    assert cfg.scenario_for(4).users == 4
    cfg = parse_config_text("sweep_axis = spacing\nsweep_values = [0.5, 1.0]")
    assert cfg.scenario_for(0.5).spacing == 0.5


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.cfg")


def test_seed_derivation_is_stable():
    key = b"0|3000.0|0"
    assert derive_seed(0, 3000.0, 0) == int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")
    assert derive_seed(0, 3000.0, 1) != derive_seed(0, 3000.0, 0)
    assert 0 <= derive_seed(12, 4, 9) < 2**64


def small_config(**changes):
    return parse_config_text(DESK_CFG).replace(**changes)


def test_single_row():
    rows = run_sweep(small_config(sweep_values=(1e-3,), trials=1, schemes=("dft_only",)))
    assert len(rows) == 1


def test_row_cardinality_and_pairing():
    cfg = small_config()
    rows = run_sweep(cfg)
    assert len(rows) == 2 * 2 * 5
    keys = {(r.sweep_value, r.trial, r.scheme) for r in rows}
    assert len(keys) == len(rows)
    by_trial = {}
    for r in rows:
        by_trial.setdefault((r.sweep_value, r.trial), set()).add(r.seed)
    assert all(len(s) == 1 for s in by_trial.values())
    assert all(r.sum_rate_bps > 0 for r in rows)
    assert all(r.wall_ms is None for r in rows)


def test_rerun_is_byte_identical(tmp_path):
    cfg = small_config()
    a, _ = emit_report(run_sweep(cfg), tmp_path / "a.csv")
    b, _ = emit_report(run_sweep(cfg), tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert aggregate_path(a).read_bytes() == aggregate_path(b).read_bytes()


def test_parallel_matches_serial():
    cfg = small_config()
    assert run_sweep(cfg, workers=2) == run_sweep(cfg, workers=1)


def test_header_only(tmp_path):
    path, agg = emit_report([], tmp_path / "r.csv")
    assert path.read_text().splitlines() == [",".join(CSV_HEADER)]
    assert len(agg.read_text().splitlines()) == 1


def test_one_row_file(tmp_path):
    row = ResultRow(1.0, 0, "dft_only", 1.5e9, 1e8, 9e8, 0, None, 42, "")
    path, _ = emit_report([row], tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1] == "1.0,0,dft_only,1500000000.0,100000000.0,900000000.0,0,,42,"


def test_aggregate_recomputes_from_raw(tmp_path):
    rows = run_sweep(small_config(trials=4))
    path, agg = emit_report(rows, tmp_path / "r.csv")
    with path.open() as fh:
        raw = list(csv.DictReader(fh))
    with agg.open() as fh:
        summary = list(csv.DictReader(fh))
    assert len(summary) == 2 * 5
    for s in summary:
        values = [float(r["sum_rate_bps"]) for r in raw
                  if r["sweep_value"] == s["sweep_value"] and r["scheme"] == s["scheme"]]
        mean = sum(values) / len(values)
        assert float(s["mean_sum_rate_bps"]) == pytest.approx(mean, rel=1e-12)
        se = statistics.stdev(values) / math.sqrt(len(values))
        assert float(s["stderr_sum_rate_bps"]) == pytest.approx(se, rel=1e-12)
        assert int(s["trials"]) == 4 and int(s["failures"]) == 0


def test_aggregate_skips_failures():
    rows = [ResultRow(1, t, "greedy_zf", v, v, v, 0, None, t, f)
            for t, (v, f) in enumerate([(1.0, ""), (math.nan, "zf_ill_conditioned"), (3.0, "")])]
    (summary,) = aggregate(rows)
    assert summary["mean_sum_rate_bps"] == 2.0
    assert summary["failures"] == 1


def test_calibration_hits_target():
    scenario = Scenario(users=4, ura=(4, 2), fft_size=16)
    scenes = [build_scene(scenario, s) for s in range(5)]
    cb, window = scenario.codebook(), scenario.window
    p = calibrate_power(scenes, cb, window, target_db=5.0)
    assert 10 * np.log10(mean_dft_only_sinr(scenes, cb, window, p)) == pytest.approx(5.0, abs=1e-6)


# -- command line ------------------------------------------------------------

@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "desk.cfg"
    path.write_text(DESK_CFG)
    return path


def test_cli_run(cfg_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_file), "--out", str(out), "--trials", "1",
                 "--schemes", "dft_only,greedy_zf"]) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 2
    assert (out / "results_aggregate.csv").exists()


def test_cli_run_seed_changes_output(cfg_file, tmp_path):
    main(["run", "--config", str(cfg_file), "--out", str(tmp_path / "a"), "--trials", "1", "--seed", "1"])
    main(["run", "--config", str(cfg_file), "--out", str(tmp_path / "b"), "--trials", "1", "--seed", "2"])
    assert (tmp_path / "a" / "results.csv").read_bytes() != (tmp_path / "b" / "results.csv").read_bytes()


def test_cli_solve_trace(cfg_file, tmp_path):
    trace = tmp_path / "trace.csv"
    assert main(["solve", "--config", str(cfg_file), "--dump-trace", "--trace-out", str(trace)]) == 0
    with trace.open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows and list(rows[0])[:5] == ["iteration", "objective", "sum_rate_bps", "beta", "power_w"]
    objective = [float(r["objective"]) for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(objective, objective[1:]))


def test_cli_oracle(tmp_path, capsys):
    cost = tmp_path / "cost.csv"
    cost.write_text("u0,u1\n1,2\n3,1\n0,0\n")
    assert main(["oracle", "--cost", str(cost)]) == 0
    out = capsys.readouterr().out
    assert "brute_force rows=[0, 2] total=1.0" in out
    assert "match=yes" in out


def test_cli_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("users = 0\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert "error" in capsys.readouterr().err
