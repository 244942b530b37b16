import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from satbeam.assignment import (
    assignment_total,
    assignment_weights,
    brute_force_assignment,
    hungarian,
    weights_from_beam_gains,
)
from satbeam.codebook import Window, build_codebook
from satbeam.model import Assignment

from helpers import crandn, random_scene


def enumerate_optimum(cost):
    n, m = cost.shape
    return min(sum(cost[r[j], j] for j in range(m)) for r in itertools.permutations(range(n), m))


def test_single_entry():
    assert hungarian([[4.2]]).row_of == (0,)
    assert brute_force_assignment([[4.2]]).row_of == (0,)


def test_zero_diagonal():
    cost = 1 - np.eye(3)
    a = hungarian(cost)
    assert a.row_of == (0, 1, 2)
    assert assignment_total(cost, a) == 0


def test_rectangular_example():
    cost = np.array([[1, 2], [3, 1], [0, 0]], dtype=float)
    assert enumerate_optimum(cost) == 1
    for solver in (hungarian, brute_force_assignment):
        a = solver(cost)
        assert assignment_total(cost, a) == 1
    # (0, 2) and (2, 1) both cost 1; the oracle keeps the lexicographically smaller
    assert brute_force_assignment(cost).row_of == (0, 2)
    assert hungarian(cost).row_of in {(0, 2), (2, 1)}


def test_all_equal_costs_tie_break():
    assert brute_force_assignment(np.full((6, 4), 3.0)).row_of == (0, 1, 2, 3)


def test_hungarian_is_deterministic():
    cost = np.random.default_rng(0).integers(0, 3, size=(8, 5)).astype(float)
    assert hungarian(cost) == hungarian(cost.copy())


@pytest.mark.parametrize("seed", range(200))
def test_hungarian_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    cost = rng.standard_normal((8, 6))
    fast, exact = hungarian(cost), brute_force_assignment(cost)
    assert assignment_total(cost, fast) == assignment_total(cost, exact)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 7).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))).flatmap(
    lambda nm: arrays(np.int64, nm, elements=st.integers(-20, 20))))
def test_integer_costs_match_enumeration(cost):
    cost = cost.astype(float)
    a = hungarian(cost)
    assert len(set(a.row_of)) == a.m == cost.shape[1]
    assert assignment_total(cost, a) == enumerate_optimum(cost)
    assert assignment_total(cost, brute_force_assignment(cost)) == enumerate_optimum(cost)


@pytest.mark.parametrize("seed", range(20))
def test_column_shift(seed):
    rng = np.random.default_rng(seed)
    cost = rng.integers(-50, 50, size=(7, 5)).astype(float)
    col, shift = seed % 5, float(rng.integers(-100, 100))
    shifted = cost.copy()
    shifted[:, col] += shift
    a, b = hungarian(cost), hungarian(shifted)
    assert assignment_total(shifted, b) == assignment_total(cost, a) + shift
    # still optimal for the original problem
    assert assignment_total(cost, b) == assignment_total(cost, brute_force_assignment(cost))


def test_rejects_bad_costs():
    with pytest.raises(ValueError):
        hungarian(np.ones((2, 3)))
    with pytest.raises(ValueError):
        hungarian(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        brute_force_assignment(np.ones((3, 4)))


def test_enumeration_limit():
    with pytest.raises(ValueError):
        brute_force_assignment(np.zeros((40, 10)))


def test_large_instance_is_a_permutation():
    cost = np.random.default_rng(1).random((300, 120))
    a = hungarian(cost)
    assert a.m == 120 and len(set(a.row_of)) == 120


# -- weights -----------------------------------------------------------------

def test_zero_precoder_weights():
    rng = np.random.default_rng(0)
    c = crandn(rng, 6, 3)
    rho = weights_from_beam_gains(c, np.zeros((3, 3)), crandn(rng, 3), np.ones(3) * 2)
    assert np.all(rho == 0)


def test_single_user_weights_by_hand():
    c = np.array([[0.3 + 0.4j], [-1.0 + 0.5j]])
    u, delta, omega = 0.8 - 0.6j, 0.5 + 0.1j, 1.7
    rho = weights_from_beam_gains(c, np.array([[u]]), np.array([delta]), np.array([omega]))
    for n in range(2):
        t = np.conj(c[n, 0])
        expected = omega * abs(delta) ** 2 * abs(t) ** 2 * abs(u) ** 2 \
            - 2 * (omega * delta * np.conj(t) * u).real
        assert rho[n, 0] == pytest.approx(expected, rel=1e-14)


def dense_weights(scene, cb, window, u, deltas, omegas):
    # term-by-term with t[m, n] = w_n^H h_eff_m from a dense chain, so that
    # the gain of stream m on beam n is conj(t[m, n])
    t = (scene.h.conj().T @ window.matrix(cb.n) @ cb.matrix).conj()  # M x N
    m_users, n = t.shape
    rho = np.zeros((n, m_users))
    for row in range(n):
        s = sum(omegas[m] * abs(deltas[m]) ** 2 * abs(t[m, row]) ** 2 for m in range(m_users))
        psi = s * (u @ u.conj().T)
        f = sum(omegas[m] * deltas[m] * np.conj(t[m, row]) * u[:, m] for m in range(m_users)).real
        rho[row] = np.real(np.diag(psi)) - 2 * f
    return rho


@pytest.mark.parametrize("seed", range(5))
def test_weights_match_dense(seed):
    rng = np.random.default_rng(seed)
    scene = random_scene(rng, 4, 3)
    cb, window = build_codebook(6), Window(1, 4)
    u, deltas, omegas = crandn(rng, 3, 3), crandn(rng, 3), 1 + rng.random(3)
    rho = assignment_weights(scene, cb, window, u, deltas, omegas)
    assert np.allclose(rho, dense_weights(scene, cb, window, u, deltas, omegas), rtol=1e-12, atol=1e-13)


def test_linearisation_is_exact_on_feasible_assignments():
    # with at most one 1 per row, a_n^T Psi_n a_n equals diag(Psi_n)^T a_n
    rng = np.random.default_rng(3)
    n, m = 8, 4
    psis = [(lambda x: x @ x.conj().T)(crandn(rng, m, m)) for _ in range(n)]
    for _ in range(100):
        a = Assignment.random(n, m, rng).matrix()
        quad = sum(a[r] @ psis[r] @ a[r] for r in range(n))
        lin = sum(np.real(np.diag(psis[r])) @ a[r] for r in range(n))
        assert quad.real == pytest.approx(lin, rel=1e-12, abs=1e-12)


def test_weights_validate_inputs():
    c = np.ones((4, 2), dtype=complex)
    with pytest.raises(ValueError):
        weights_from_beam_gains(c, np.eye(2), np.ones(2), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        weights_from_beam_gains(c, np.eye(3), np.ones(2), np.ones(2))
