"""Signal model: SINR, sum rate, per-user MSE and the weighted-MMSE objective.

Everything reduces to the M x M matrix of link gains ``G = E @ U`` where
``E = H_eff^H W A`` is the effective channel seen by the precoder, so
``G[m, j]`` is the gain of stream ``j`` at user ``m``. Symbols are unit
power and independent.
"""

from __future__ import annotations

import numpy as np

from .codebook import DftCodebook, Window, effective_channel
from .geometry import Scene
from .model import Assignment, total_power

__all__ = [
    "Assignment",
    "total_power",
    "beam_gains",
    "effective_gains",
    "link_gains",
    "sinr_from_gains",
    "mse_from_gains",
    "objective_from_gains",
    "sinr",
    "sum_rate",
    "mse",
    "wmmse_objective",
]


def beam_gains(scene: Scene, codebook: DftCodebook, window: Window) -> np.ndarray:
    """N x M matrix with entry ``[n, m] = h_eff_m^H w_n``.

    Since ``W`` is symmetric this is ``W @ conj(h_eff_m)``, one FFT per user.
    """
    h_eff = effective_channel(scene.h, window, codebook)
    return codebook.transform(h_eff.conj())


def effective_gains(scene: Scene, codebook: DftCodebook, window: Window, a: Assignment) -> np.ndarray:
    """``E = H_eff^H W A`` (M x M)."""
    if a.n != codebook.n:
        raise ValueError(f"assignment has {a.n} DFT rows, codebook has {codebook.n}")
    if a.m != scene.m_users:
        raise ValueError(f"assignment covers {a.m} users, scene has {scene.m_users}")
    return beam_gains(scene, codebook, window)[list(a.row_of), :].T


def link_gains(e: np.ndarray, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u)
    if u.shape != (e.shape[1], e.shape[1]):
        raise ValueError(f"precoder must be {e.shape[1]}x{e.shape[1]}, got {u.shape}")
    return e @ u


def sinr_from_gains(g: np.ndarray, noise_power: float) -> np.ndarray:
    power = np.abs(g) ** 2
    signal = np.diag(power)
    interference = power.sum(axis=1) - signal
    return signal / (interference + noise_power)


def mse_from_gains(g: np.ndarray, noise_power: float, deltas) -> np.ndarray:
    """``e_m = |1 - delta_m g_mm|^2 + |delta_m|^2 (sum_{j != m} |g_mj|^2 + sigma^2)``."""
    deltas = np.asarray(deltas)
    power = np.abs(g) ** 2
    interference = power.sum(axis=1) - np.diag(power)
    return np.abs(1 - deltas * np.diag(g)) ** 2 + np.abs(deltas) ** 2 * (interference + noise_power)


def objective_from_gains(g: np.ndarray, noise_power: float, deltas, omegas) -> float:
    omegas = np.asarray(omegas, dtype=float)
    if np.any(omegas <= 0):
        raise ValueError("MSE weights must be positive")
    e = mse_from_gains(g, noise_power, deltas)
    return float(np.sum(omegas * e - np.log(omegas) - 1))


def _gains(scene, codebook, window, a, u):
    return link_gains(effective_gains(scene, codebook, window, a), u)


def sinr(scene: Scene, codebook: DftCodebook, window: Window, a: Assignment, u, m: int | None = None):
    """SINR of user ``m``, or of every user when ``m`` is None."""
    gamma = sinr_from_gains(_gains(scene, codebook, window, a, u), scene.noise_power)
    return gamma if m is None else float(gamma[m])


def sum_rate(scene: Scene, codebook: DftCodebook, window: Window, a: Assignment, u) -> float:
    """Sum spectral efficiency in bit/s/Hz."""
    gamma = sinr_from_gains(_gains(scene, codebook, window, a, u), scene.noise_power)
    return float(np.sum(np.log2(1 + gamma)))


def mse(scene: Scene, codebook: DftCodebook, window: Window, a: Assignment, u, delta_m: complex, m: int) -> float:
    g = _gains(scene, codebook, window, a, u)
    deltas = np.zeros(scene.m_users, dtype=complex)
    deltas[m] = delta_m
    return float(mse_from_gains(g, scene.noise_power, deltas)[m])


def wmmse_objective(scene: Scene, codebook: DftCodebook, window: Window, a: Assignment, u, deltas, omegas) -> float:
    """``sum_m (omega_m e_m - ln omega_m - 1)``."""
    g = _gains(scene, codebook, window, a, u)
    return objective_from_gains(g, scene.noise_power, deltas, omegas)
