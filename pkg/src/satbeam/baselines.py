"""Reference schemes: greedy beam selection with zero forcing, plain DFT
beamforming, and fully digital matched-filter / MMSE precoders."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebook import DftCodebook, Window
from .geometry import Scene
from .metrics import beam_gains, effective_gains, sinr_from_gains
from .model import Assignment

SCHEMES = ("joint_wmmse", "greedy_zf", "dft_only", "mf_fdp", "mmse_fdp")
ZF_MAX_CONDITION = 1e8


class IllConditionedChannelError(ValueError):
    """Effective channel too ill-conditioned for zero forcing."""


@dataclass
class SchemeResult:
    scheme_id: str
    sum_rate: float  # bit/s/Hz
    per_user_sinr: np.ndarray
    wall_time: float = 0.0  # s
    iterations: int = 0
    flag: str = ""
    extra: dict = field(default_factory=dict, repr=False)


def greedy_from_beam_gains(c: np.ndarray) -> Assignment:
    """Users in index order take the strongest beam still free."""
    n, m = c.shape
    if m > n:
        raise ValueError(f"cannot assign {m} users to {n} beams")
    strength = np.abs(c) ** 2
    free = np.ones(n, dtype=bool)
    rows = []
    for user in range(m):
        score = np.where(free, strength[:, user], -np.inf)
        best = int(np.argmax(score))  # first maximum: smallest index on ties
        rows.append(best)
        free[best] = False
    return Assignment(tuple(rows), n)


def greedy_assignment(scene: Scene, codebook: DftCodebook, window: Window) -> Assignment:
    return greedy_from_beam_gains(beam_gains(scene, codebook, window))


def zero_forcing(e: np.ndarray, p: float, max_condition: float = ZF_MAX_CONDITION) -> np.ndarray:
    """Right pseudo-inverse of ``e`` scaled to total power ``p``."""
    cond = np.linalg.cond(e)
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedChannelError(f"effective channel condition number {cond:.3g}")
    u = np.linalg.pinv(e)
    return u * np.sqrt(p / np.sum(np.abs(u) ** 2))


def zf_precoder(scene: Scene, codebook: DftCodebook, window: Window, a: Assignment, p: float) -> np.ndarray:
    return zero_forcing(effective_gains(scene, codebook, window, a), p)


def dft_only(scene: Scene, codebook: DftCodebook, window: Window, p: float) -> tuple[Assignment, np.ndarray]:
    """Greedy beams with equal power per user and no inter-user precoding."""
    a = greedy_assignment(scene, codebook, window)
    return a, np.sqrt(p / a.m) * np.eye(a.m, dtype=complex)


def _normalise(u: np.ndarray, p: float) -> np.ndarray:
    return u * np.sqrt(p / np.sum(np.abs(u) ** 2))


def mf_fdp(scene: Scene, p: float) -> np.ndarray:
    """Fully digital matched filter: ``U = c H`` with ``||U||_F^2 = p`` (K x M)."""
    return _normalise(np.array(scene.h), p)


def mmse_fdp(scene: Scene, p: float) -> np.ndarray:
    """Fully digital regularised inverse ``H (H^H H + M sigma^2 / p I)^-1``,
    scaled to total power ``p``."""
    h = scene.h
    m = h.shape[1]
    reg = h.conj().T @ h + (m * scene.noise_power / p) * np.eye(m)
    return _normalise(np.linalg.solve(reg.T, h.T).T, p)


def fdp_sinr(scene: Scene, u_fd: np.ndarray) -> np.ndarray:
    """Per-user SINR of a fully digital precoder, ``y = H^H U x + noise``."""
    return sinr_from_gains(scene.h.conj().T @ u_fd, scene.noise_power)
