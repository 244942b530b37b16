"""Seeded Monte Carlo sweeps over all schemes, and CSV reporting."""

from __future__ import annotations

import csv
import hashlib
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..baselines import (
    IllConditionedChannelError,
    SchemeResult,
    dft_only,
    fdp_sinr,
    greedy_assignment,
    mf_fdp,
    mmse_fdp,
    zf_precoder,
)
from ..codebook import DftCodebook, Window
from ..geometry import Scenario, Scene, build_scene
from ..metrics import sinr
from ..solver import SolverConfig, solve
from .config import SweepConfig

CSV_HEADER = (
    "sweep_value", "trial", "scheme", "sum_rate_bps", "rate_min_bps",
    "rate_max_bps", "iterations", "wall_ms", "seed", "flag",
)
AGGREGATE_HEADER = (
    "sweep_value", "scheme", "trials", "mean_sum_rate_bps", "stderr_sum_rate_bps", "failures",
)


def derive_seed(base_seed: int, sweep_value, trial: int) -> int:
    """64-bit seed from BLAKE2b over ``"base|value|trial"``.

    Stable across platforms and Python versions (unlike ``hash``).
    """
    key = f"{int(base_seed)}|{sweep_value!r}|{int(trial)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class ResultRow:
    sweep_value: float | int
    trial: int
    scheme: str
    sum_rate_bps: float
    rate_min_bps: float
    rate_max_bps: float
    iterations: int
    wall_ms: float | None
    seed: int
    flag: str = ""


def run_scheme(
    scheme_id: str,
    scene: Scene,
    codebook: DftCodebook,
    window: Window,
    solver_config: SolverConfig = SolverConfig(),
) -> SchemeResult:
    """Run one scheme on ``scene``; zero-forcing failures come back flagged."""
    p = scene.power_budget
    start = time.perf_counter()
    iterations, flag = 0, ""
    if scheme_id == "joint_wmmse":
        state = solve(scene, codebook, window, solver_config)
        gamma = sinr(scene, codebook, window, state.assignment, state.precoder)
        iterations = state.iter
        flag = "" if state.converged else state.flag
    elif scheme_id == "greedy_zf":
        a = greedy_assignment(scene, codebook, window)
        try:
            u = zf_precoder(scene, codebook, window, a, p)
        except IllConditionedChannelError:
            m = scene.m_users
            return SchemeResult(scheme_id, math.nan, np.full(m, math.nan),
                                time.perf_counter() - start, 0, "zf_ill_conditioned")
        gamma = sinr(scene, codebook, window, a, u)
    elif scheme_id == "dft_only":
        a, u = dft_only(scene, codebook, window, p)
        gamma = sinr(scene, codebook, window, a, u)
    elif scheme_id == "mf_fdp":
        gamma = fdp_sinr(scene, mf_fdp(scene, p))
    elif scheme_id == "mmse_fdp":
        gamma = fdp_sinr(scene, mmse_fdp(scene, p))
    else:
        raise ValueError(f"unknown scheme {scheme_id!r}")
    elapsed = time.perf_counter() - start
    return SchemeResult(scheme_id, float(np.sum(np.log2(1 + gamma))), np.asarray(gamma),
                        elapsed, iterations, flag)


def run_trial(scenario: Scenario, sweep_value, trial: int, seed: int, schemes, solver_config: SolverConfig,
              timing: bool = False) -> list[ResultRow]:
    """Every scheme on the same scene (paired comparison)."""
    scene = build_scene(scenario, seed)
    codebook = scenario.codebook()
    window = scenario.window
    solver_config = replace(solver_config, seed=seed)
    rows = []
    for scheme in schemes:
        res = run_scheme(scheme, scene, codebook, window, solver_config)
        rates = scene.bandwidth_hz * np.log2(1 + res.per_user_sinr)
        rows.append(ResultRow(
            sweep_value=sweep_value,
            trial=trial,
            scheme=scheme,
            sum_rate_bps=scene.bandwidth_hz * res.sum_rate,
            rate_min_bps=float(np.min(rates)),
            rate_max_bps=float(np.max(rates)),
            iterations=res.iterations,
            wall_ms=1e3 * res.wall_time if timing else None,
            seed=seed,
            flag=res.flag,
        ))
    return rows


def _trial_task(args):
    return run_trial(*args)


def run_sweep(config: SweepConfig, workers: int = 1, timing: bool = False) -> list[ResultRow]:
    """All sweep values x trials x schemes.

    Trials are independent and may run in ``workers`` processes; the output
    is sorted by (sweep position, trial, scheme) either way.
    """
    tasks = []
    for value in config.sweep_values:
        scenario = config.scenario_for(value)
        for trial in range(config.trials):
            seed = derive_seed(config.seed, value, trial)
            tasks.append((scenario, value, trial, seed, config.schemes, config.solver, timing))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_trial_task, tasks))
    else:
        chunks = [_trial_task(t) for t in tasks]
    order = {v: i for i, v in enumerate(config.sweep_values)}
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (order[r.sweep_value], r.trial, r.scheme))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def aggregate(rows: list[ResultRow]) -> list[dict]:
    """Mean and standard error of the sum rate per (sweep value, scheme),
    ignoring failed (NaN) trials."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.sweep_value, row.scheme), []).append(row)
    out = []
    for (value, scheme), members in groups.items():
        rates = [r.sum_rate_bps for r in members if not math.isnan(r.sum_rate_bps)]
        mean = statistics.fmean(rates) if rates else math.nan
        stderr = statistics.stdev(rates) / math.sqrt(len(rates)) if len(rates) > 1 else math.nan
        out.append({
            "sweep_value": value,
            "scheme": scheme,
            "trials": len(rates),
            "mean_sum_rate_bps": mean,
            "stderr_sum_rate_bps": stderr,
            "failures": len(members) - len(rates),
        })
    return out


def aggregate_path(path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_aggregate{path.suffix or '.csv'}")


def emit_report(rows: list[ResultRow], path) -> tuple[Path, Path]:
    """Write raw rows to ``path`` and per-(value, scheme) aggregates next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([_fmt(r.sweep_value), r.trial, r.scheme, _fmt(r.sum_rate_bps),
                             _fmt(r.rate_min_bps), _fmt(r.rate_max_bps), r.iterations,
                             _fmt(r.wall_ms), r.seed, r.flag])
    agg = aggregate_path(path)
    with agg.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_HEADER)
        for a in aggregate(rows):
            writer.writerow([_fmt(a[k]) for k in AGGREGATE_HEADER])
    return path, agg


def mean_dft_only_sinr(scenes, codebook: DftCodebook, window: Window, power: float) -> float:
    """Mean linear SINR of DFT-only beamforming over all users of all scenes."""
    values = []
    for scene in scenes:
        a, u = dft_only(scene, codebook, window, power)
        values.append(sinr(scene.with_power(power), codebook, window, a, u))
    return float(np.mean(np.concatenate(values)))


def calibrate_power(scenes, codebook: DftCodebook, window: Window, target_db: float = 10.0) -> float:
    """Power at which the mean DFT-only SINR reaches ``target_db``.

    Bisection in log-power; SINR is increasing in power. Raises if
    interference caps the mean SINR below the target.
    """
    target = 10 ** (target_db / 10)
    scenes = list(scenes)
    lo = hi = 1.0
    while mean_dft_only_sinr(scenes, codebook, window, lo) > target:
        lo /= 10
        if lo < 1e-30:
            raise ValueError("could not bracket the calibration power from below")
    while mean_dft_only_sinr(scenes, codebook, window, hi) < target:
        hi *= 10
        if hi > 1e30:
            raise ValueError(f"mean DFT-only SINR cannot reach {target_db} dB (interference limited)")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if mean_dft_only_sinr(scenes, codebook, window, mid) < target:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1 < 1e-12:
            break
    return hi
