"""Joint precoder / beam-selection design by alternating WMMSE updates.

One outer iteration:

1. receive coefficients ``delta`` and MSE weights ``omega`` in closed form,
2. precoder ``U`` from the power-constrained quadratic program, with the
   dual variable ``beta`` found by bisection or by (scaled) subgradient
   steps,
3. beam assignment from the Hungarian method on the linearised weights,
   kept only if it does not increase the true WMMSE objective.

Each block is an exact minimiser of the objective over its own variables
(the beam step by virtue of the guard), so the objective is non-increasing.

Conventions: with ``E = H_eff^H W A`` and ``G = E U``,

* ``delta_m = conj(G[m, m]) / (sum_j |G[m, j]|^2 + sigma^2)``
* ``Theta = E^H diag(omega |delta|^2) E`` and ``k_m = conj(delta_m) E[m, :]^H``
* ``u_m = (Theta + beta I)^{-1} omega_m k_m``
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .assignment import hungarian, weights_from_beam_gains
from .baselines import greedy_from_beam_gains
from .codebook import DftCodebook, Window
from .geometry import Scene
from .metrics import (
    beam_gains,
    effective_gains,
    link_gains,
    objective_from_gains,
    sinr_from_gains,
)
from .model import Assignment, total_power

log = logging.getLogger(__name__)

BETA_MODES = ("bisection", "subgradient")
INIT_MODES = ("greedy", "random")


class SingularSystemError(np.linalg.LinAlgError):
    """``Theta + beta I`` is singular; the caller should raise ``beta``."""


class PowerBracketError(RuntimeError):
    """The power budget is still exceeded at the upper end of the beta bracket."""


@dataclass(frozen=True)
class SolverConfig:
    max_outer_iters: int = 200
    tolerance: float = 1e-5
    theta_init: float | None = None
    beta_mode: str = "bisection"
    # False reproduces the one-subgradient-step-per-iteration reading of the
    # algorithm; the objective is then no longer guaranteed to be monotone.
    beta_nested: bool = True
    beta_init: float = 0.0
    step0: float = 1.0
    beta_max: float | None = None
    max_beta_iters: int = 5000
    power_tol: float = 1e-10
    init_assignment: str = "greedy"
    seed: int = 0

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if self.beta_mode not in BETA_MODES:
            raise ValueError(f"beta_mode must be one of {BETA_MODES}, got {self.beta_mode!r}")
        if self.init_assignment not in INIT_MODES:
            raise ValueError(f"init_assignment must be one of {INIT_MODES}")
        if self.theta_init is not None and self.theta_init <= 0:
            raise ValueError("theta_init must be positive")
        if self.step0 <= 0:
            raise ValueError("step0 must be positive")
        if self.beta_init < 0:
            raise ValueError("beta_init must be non-negative")
        if self.beta_max is not None and self.beta_max <= 0:
            raise ValueError("beta_max must be positive")


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    sum_rate: float
    beta: float
    power: float
    stationarity: float
    assignment_accepted: bool
    # objective after the (delta, omega) update and after the precoder update
    objective_aux: float
    objective_precoder: float


@dataclass
class SolverState:
    deltas: np.ndarray
    omegas: np.ndarray
    beta: float
    precoder: np.ndarray
    assignment: Assignment
    iter: int = 0
    objective_trace: list[float] = field(default_factory=list)
    history: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    flag: str = ""

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


# -- closed-form auxiliaries -------------------------------------------------

def receive_coeffs_from_gains(g: np.ndarray, noise_power: float) -> np.ndarray:
    total = np.sum(np.abs(g) ** 2, axis=1) + noise_power
    return np.conj(np.diag(g)) / total


def mse_weights_from_gains(g: np.ndarray, noise_power: float) -> np.ndarray:
    return 1.0 + sinr_from_gains(g, noise_power)


def update_receive_coeffs(scene: Scene, codebook: DftCodebook, window: Window, a: Assignment, u) -> np.ndarray:
    """MMSE receive coefficient of every user (the minimiser of its MSE)."""
    g = link_gains(effective_gains(scene, codebook, window, a), u)
    return receive_coeffs_from_gains(g, scene.noise_power)


def update_mse_weights(scene: Scene, codebook: DftCodebook, window: Window, a: Assignment, u) -> np.ndarray:
    """Optimal MSE weights ``1 + SINR_m = 1 / e_m(delta_m*)``."""
    g = link_gains(effective_gains(scene, codebook, window, a), u)
    return mse_weights_from_gains(g, scene.noise_power)


# -- precoder subproblem -----------------------------------------------------

def normal_matrix_from_effective(e: np.ndarray, deltas, omegas) -> tuple[np.ndarray, np.ndarray]:
    """``Theta`` (Hermitian PSD) and the matrix whose column m is ``k_m``."""
    deltas = np.asarray(deltas)
    omegas = np.asarray(omegas, dtype=float)
    weights = omegas * np.abs(deltas) ** 2
    theta = e.conj().T @ (weights[:, None] * e)
    theta = 0.5 * (theta + theta.conj().T)
    k = e.conj().T * np.conj(deltas)[None, :]
    return theta, k


def precoder_normal_matrix(scene: Scene, codebook: DftCodebook, window: Window, a: Assignment, deltas, omegas):
    return normal_matrix_from_effective(effective_gains(scene, codebook, window, a), deltas, omegas)


def precoder_closed_form(theta, k, omegas, beta: float) -> np.ndarray:
    """Solve ``(Theta + beta I) u_m = omega_m k_m`` for every column."""
    theta = np.asarray(theta)
    rhs = np.asarray(k) * np.asarray(omegas, dtype=float)[None, :]
    lhs = theta + beta * np.eye(theta.shape[0])
    try:
        factor = scipy.linalg.cho_factor(lhs, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"Theta + beta I is not positive definite at beta={beta}") from exc
    diag = np.abs(np.diag(factor[0]))
    if diag.min() <= 1e-12 * max(diag.max(), 1e-300):
        raise SingularSystemError(f"Theta + beta I is numerically singular at beta={beta}")
    return scipy.linalg.cho_solve(factor, rhs)


def stationarity_residual(theta, k, omegas, beta: float, u) -> float:
    """``max_m ||(Theta + beta I) u_m - omega_m k_m|| / max(1, ||k_m||)``."""
    theta = np.asarray(theta)
    k = np.asarray(k)
    r = (theta + beta * np.eye(theta.shape[0])) @ u - k * np.asarray(omegas, dtype=float)[None, :]
    return float(np.max(np.linalg.norm(r, axis=0) / np.maximum(1.0, np.linalg.norm(k, axis=0))))


class _PowerCurve:
    """``Trace(U(beta)^H U(beta))`` through one eigendecomposition of Theta."""

    def __init__(self, theta, rhs):
        lam, vecs = np.linalg.eigh(theta)
        self.lam = np.maximum(lam, 0.0)
        z = vecs.conj().T @ rhs
        self.z2 = np.sum(np.abs(z) ** 2, axis=1)
        self.singular = self.lam.min() <= 1e-13 * max(self.lam.max(), 1e-300)
        self.upper = math.sqrt(float(np.sum(self.z2)))  # sqrt(sum ||omega_m k_m||^2)

    def power(self, beta: float) -> float:
        if beta <= 0 and self.singular:
            return math.inf
        return float(np.sum(self.z2 / (self.lam + beta) ** 2))

    def slope(self, beta: float) -> float:
        """Magnitude of d power / d beta."""
        return float(2 * np.sum(self.z2 / (self.lam + beta) ** 3))


def solve_beta(theta, k, omegas, p: float, config: SolverConfig = SolverConfig(), beta0: float | None = None):
    """Dual variable of the power constraint and the matching precoder.

    Returns ``(beta, U)`` with ``Trace(U^H U) <= p`` up to round-off and
    complementary slackness. ``bisection`` brackets the root of the
    non-increasing power curve; ``subgradient`` runs projected steps
    ``beta <- [beta + r_l (Trace - p)]^+`` with ``r_l = step0 / sqrt(l)``
    divided by the local slope of the power curve.
    """
    if p <= 0:
        raise ValueError("power budget must be positive")
    omegas = np.asarray(omegas, dtype=float)
    curve = _PowerCurve(theta, np.asarray(k) * omegas[None, :])
    if curve.upper == 0.0:
        return 0.0, np.zeros_like(np.asarray(k))

    if curve.power(0.0) <= p:
        beta = 0.0
    else:
        # power(beta) <= upper^2 / beta^2 because Theta is PSD
        beta_hi = config.beta_max if config.beta_max is not None else curve.upper / math.sqrt(p)
        # with Theta = 0 the bound is tight and round-off may land just above p
        if curve.power(beta_hi) > p * (1 + 1e-9):
            raise PowerBracketError(
                f"power {curve.power(beta_hi):.6g} still exceeds budget {p:.6g} at beta_max={beta_hi:.6g}"
            )
        if config.beta_mode == "bisection":
            beta = _bisect(curve, p, beta_hi)
        else:
            start = config.beta_init if beta0 is None else beta0
            beta = _subgradient(curve, p, beta_hi, start, config)
    return beta, precoder_closed_form(theta, k, omegas, beta)


def _bisect(curve: _PowerCurve, p: float, hi: float) -> float:
    lo = 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if curve.power(mid) > p:
            lo = mid
        else:
            hi = mid
    return hi


def _subgradient(curve: _PowerCurve, p: float, hi: float, beta: float, config: SolverConfig) -> float:
    beta = min(max(beta, 0.0), hi)
    for ell in range(1, config.max_beta_iters + 1):
        power = curve.power(beta)
        if math.isinf(power):
            beta = hi * 1e-6
            continue
        if abs(power - p) <= config.power_tol * p:
            return beta
        step = config.step0 / math.sqrt(ell)
        beta = min(max(beta + step * (power - p) / curve.slope(beta), 0.0), hi)
    log.warning("subgradient beta search stopped after %d steps", config.max_beta_iters)
    if curve.power(beta) > p:
        # fall back to the feasible side so the precoder respects the budget
        return _bisect(curve, p, hi)
    return beta


# -- outer loop --------------------------------------------------------------

def initial_assignment(c: np.ndarray, config: SolverConfig) -> Assignment:
    n, m = c.shape
    if config.init_assignment == "random":
        return Assignment.random(n, m, np.random.default_rng(config.seed))
    return greedy_from_beam_gains(c)


def solve(
    scene: Scene,
    codebook: DftCodebook,
    window: Window,
    config: SolverConfig = SolverConfig(),
    on_assignment_step: Callable[[dict], None] | None = None,
) -> SolverState:
    """Run the alternating design until the relative objective change drops
    below ``config.tolerance`` or ``config.max_outer_iters`` is reached.

    ``on_assignment_step`` (optional) is called at every beam-selection step
    with the precoder, auxiliaries, proposed and current assignments; it is
    used to audit the linearised assignment costs.
    """
    m = scene.m_users
    if not m <= scene.k <= codebook.n:
        raise ValueError(f"need users <= antennas <= FFT size, got {m}, {scene.k}, {codebook.n}")
    p = scene.power_budget
    noise = scene.noise_power
    c = beam_gains(scene, codebook, window)

    theta0 = config.theta_init if config.theta_init is not None else math.sqrt(p / (m * m)) * 1e-2
    if theta0**2 * m * m > p:
        raise ValueError(f"theta_init={theta0} violates the power budget")
    a = initial_assignment(c, config)
    u = np.full((m, m), theta0, dtype=complex)
    e = c[list(a.row_of), :].T
    g = e @ u
    deltas = receive_coeffs_from_gains(g, noise)
    omegas = mse_weights_from_gains(g, noise)
    state = SolverState(deltas=deltas, omegas=omegas, beta=config.beta_init, precoder=u, assignment=a)
    state.objective_trace.append(objective_from_gains(g, noise, deltas, omegas))

    for ell in range(1, config.max_outer_iters + 1):
        try:
            _iterate(state, ell, c, e, p, noise, config, on_assignment_step)
        except (np.linalg.LinAlgError, PowerBracketError) as exc:
            log.warning("solver stopped at iteration %d: %s", ell, exc)
            state.flag = "numerical_failure"
            break
        e = c[list(state.assignment.row_of), :].T
        state.iter = ell
        prev, cur = state.objective_trace[-2], state.objective_trace[-1]
        if abs(prev - cur) <= config.tolerance * max(abs(cur), 1e-300):
            state.converged = True
            break
    if not state.converged and not state.flag:
        state.flag = "max_iterations"

    g = link_gains(c[list(state.assignment.row_of), :].T, state.precoder)
    state.deltas = receive_coeffs_from_gains(g, noise)
    state.omegas = mse_weights_from_gains(g, noise)
    return state


def _iterate(state: SolverState, ell: int, c, e, p, noise, config: SolverConfig, callback) -> None:
    u = state.precoder
    g = e @ u
    deltas = receive_coeffs_from_gains(g, noise)
    omegas = mse_weights_from_gains(g, noise)
    obj_aux = objective_from_gains(g, noise, deltas, omegas)

    theta, k = normal_matrix_from_effective(e, deltas, omegas)
    if config.beta_nested:
        beta, u = solve_beta(theta, k, omegas, p, config, beta0=state.beta)
    else:
        beta, u = _literal_beta_step(state, ell, theta, k, omegas, p, config)
    obj_u = objective_from_gains(e @ u, noise, deltas, omegas)
    residual = stationarity_residual(theta, k, omegas, beta, u)

    rho = weights_from_beam_gains(c, u, deltas, omegas)
    proposed = hungarian(rho)
    accepted = False
    obj_end = obj_u
    if proposed.row_of != state.assignment.row_of:
        obj_new = objective_from_gains(c[list(proposed.row_of), :].T @ u, noise, deltas, omegas)
        if obj_new <= obj_u:
            accepted = True
            obj_end = obj_new
    if callback is not None:
        callback({
            "iteration": ell,
            "precoder": u,
            "deltas": deltas,
            "omegas": omegas,
            "weights": rho,
            "current": state.assignment,
            "proposed": proposed,
            "accepted": accepted,
        })
    if accepted:
        state.assignment = proposed
        e = c[list(proposed.row_of), :].T

    state.precoder = u
    state.beta = beta
    state.deltas = deltas
    state.omegas = omegas
    state.objective_trace.append(obj_end)
    rate = float(np.sum(np.log2(1 + sinr_from_gains(e @ u, noise))))
    state.history.append(IterationRecord(
        iteration=ell,
        objective=obj_end,
        sum_rate=rate,
        beta=beta,
        power=total_power(u),
        stationarity=residual,
        assignment_accepted=accepted,
        objective_aux=obj_aux,
        objective_precoder=obj_u,
    ))


def _literal_beta_step(state: SolverState, ell, theta, k, omegas, p, config: SolverConfig):
    step = config.step0 / math.sqrt(ell)
    beta = max(state.beta + step * (total_power(state.precoder) - p), 0.0)
    while True:
        try:
            u = precoder_closed_form(theta, k, omegas, beta)
            break
        except SingularSystemError:
            beta = max(beta * 10, 1e-12 * max(1.0, float(np.abs(theta).max())))
    power = total_power(u)
    if power > p:
        u = u * math.sqrt(p / power)
    return beta, u
