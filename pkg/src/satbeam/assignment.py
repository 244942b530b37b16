"""Beam selection as a min-cost assignment.

With the precoder and the WMMSE auxiliaries fixed, choosing the beam of
every stream reduces to minimising ``sum_{n,m} rho[n, m] a[n, m]`` over
injective assignments. ``rho`` comes from :func:`assignment_weights`, the
Hungarian method solves it exactly, and :func:`brute_force_assignment` is
the enumeration oracle used to check it.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from numba import njit

from .codebook import DftCodebook, Window
from .geometry import Scene
from .metrics import beam_gains
from .model import Assignment

BRUTE_FORCE_LIMIT = 10_000_000


def weights_from_beam_gains(c: np.ndarray, u: np.ndarray, deltas, omegas) -> np.ndarray:
    """Assignment weights from the N x M beam-gain matrix ``c[n, m] = h_eff_m^H w_n``.

    Writing ``t[m, n] = conj(c[n, m])``:

    * ``psi_n = (sum_m omega_m |delta_m|^2 |t[m, n]|^2) * U U^H``
    * ``f_n = Re(sum_m omega_m delta_m conj(t[m, n]) u_m)``
    * ``rho[n, m'] = diag(psi_n)[m'] - 2 f_n[m']``
    """
    deltas = np.asarray(deltas)
    omegas = np.asarray(omegas, dtype=float)
    if np.any(omegas <= 0):
        raise ValueError("MSE weights must be positive")
    u = np.asarray(u)
    n_users = c.shape[1]
    if u.shape != (n_users, n_users) or deltas.shape != (n_users,) or omegas.shape != (n_users,):
        raise ValueError("precoder, deltas and omegas must match the number of users")
    scale = np.abs(c) ** 2 @ (omegas * np.abs(deltas) ** 2)  # (N,)
    row_power = np.sum(np.abs(u) ** 2, axis=1)  # diag(U U^H)
    f = np.real((c * (omegas * deltas)) @ u.T)
    return scale[:, None] * row_power[None, :] - 2 * f


def assignment_weights(
    scene: Scene, codebook: DftCodebook, window: Window, u, deltas, omegas
) -> np.ndarray:
    """N x M cost matrix ``rho`` for the beam-selection step."""
    return weights_from_beam_gains(beam_gains(scene, codebook, window), u, deltas, omegas)


def assignment_total(cost, a: Assignment) -> float:
    """``sum_m cost[row_of[m], m]`` accumulated in user order."""
    cost = np.asarray(cost)
    total = 0.0
    for m, n in enumerate(a.row_of):
        total += float(cost[n, m])
    return total


@njit(cache=True)
def _hungarian_square(cost):
    # Shortest augmenting path with row/column potentials (1-based, column 0
    # is the virtual root). Returns match[j] = row assigned to column j.
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, np.int64)
    way = np.zeros(n + 1, np.int64)
    minv = np.empty(n + 1)
    used = np.empty(n + 1, np.bool_)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv[:] = np.inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    out = np.empty(n, np.int64)
    for j in range(1, n + 1):
        out[j - 1] = match[j] - 1
    return out


def _check_cost(cost) -> np.ndarray:
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[1] < 1:
        raise ValueError("cost must be a non-empty N x M matrix")
    n, m = cost.shape
    if n < m:
        raise ValueError(f"cannot assign {m} users to {n} beams")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix has non-finite entries")
    return cost


def hungarian(cost) -> Assignment:
    """Minimum-cost assignment of the M columns (users) to distinct rows
    (beams) of an N x M cost matrix, N >= M.

    The rectangular problem is padded to N x N with dummy columns holding
    the largest entry; any constant works since every completion pays the
    same dummy total.
    """
    cost = _check_cost(cost)
    n, m = cost.shape
    square = np.full((n, n), cost.max())
    square[:, :m] = cost
    match = _hungarian_square(np.ascontiguousarray(square))
    return Assignment(tuple(int(r) for r in match[:m]), n)


def brute_force_assignment(cost) -> Assignment:
    """Exhaustive search over all injections, lexicographically smallest
    ``row_of`` among the minimisers."""
    cost = _check_cost(cost)
    n, m = cost.shape
    count = math.perm(n, m)
    if count > BRUTE_FORCE_LIMIT:
        raise ValueError(f"{count} candidate assignments exceed the enumeration limit")
    cols = np.arange(m)
    best_total, best_rows = np.inf, None
    perms = itertools.permutations(range(n), m)
    while True:
        chunk = np.array(list(itertools.islice(perms, 65536)), dtype=np.int64)
        if chunk.size == 0:
            break
        totals = np.zeros(len(chunk))
        for j in cols:
            totals += cost[chunk[:, j], j]
        k = int(np.argmin(totals))  # first minimiser = lexicographically smallest
        if totals[k] < best_total:
            best_total, best_rows = totals[k], chunk[k]
    return Assignment(tuple(int(r) for r in best_rows), n)
