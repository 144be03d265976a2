import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bubblekit.vortex import (
    VortexConfiguration,
    collinear_gamma,
    energy,
    find_critical_points,
    gradient,
    hessian,
    natural_scale,
    newton,
    pair_radius,
    virial_obstruction,
    virial_residual,
)

N = 5
K = N - 1


def cfg(xi, Q=None, n=N):
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    Q = np.eye(n - 1) if Q is None else Q
    return VortexConfiguration.from_array(xi, Q)


def random_config(seed, m=4, n=N, Q=None):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n - 1, n - 1))
    Q = (A + A.T) / 2 if Q is None else Q
    return cfg(rng.standard_normal((m, n - 1)), Q, n)


def collinear(n=N, sigma=1.0):
    g = collinear_gamma(n, sigma)
    xi = np.zeros((3, n - 1))
    xi[0, 0], xi[2, 0] = g, -g
    return xi


# --- energy -------------------------------------------------------------------


def test_single_point_quadratic_only():
    Q = np.diag([1.0, 2.0, -0.5, 3.0])
    x = np.array([0.3, -0.2, 0.7, 0.1])
    assert energy(cfg(x, Q)) == pytest.approx(0.5 * x @ Q @ x, rel=1e-15)


def test_unit_pair_energy():
    xi = np.zeros((2, K))
    xi[1, 0] = 1.0
    assert energy(cfg(xi, np.zeros((K, K)))) == 1.0


def test_rejects_coincident_points():
    with pytest.raises(ValueError):
        energy(cfg(np.zeros((2, K))))


def test_rejects_asymmetric_Q():
    Q = np.eye(K)
    Q[0, 1] = 1e-6
    with pytest.raises(ValueError):
        cfg(np.eye(K)[:2], Q)


def test_translation_changes_only_quadratic_part():
    c = random_config(1)
    shift = np.array([0.3, -0.1, 0.2, 0.05])
    moved = c.with_xi(c.xi + shift)
    quad = lambda X: 0.5 * np.einsum("ik,kl,il->", X, c.Q, X)
    assert energy(moved) - energy(c) == pytest.approx(quad(moved.xi) - quad(c.xi), abs=1e-12)


@given(st.integers(0, 10_000), st.permutations(range(4)))
def test_permutation_invariance(seed, perm):
    c = random_config(seed)
    p = c.with_xi(c.xi[list(perm)])
    assert energy(p) == pytest.approx(energy(c), rel=1e-14)
    assert np.allclose(gradient(p), gradient(c)[list(perm)], rtol=1e-13, atol=1e-13)


def test_energy_blowup_on_shrinking_pairs():
    Q = np.diag([1.0, -2.0, 0.5, 3.0])
    base = random_config(2, m=3, Q=Q).xi
    qn = np.linalg.norm(Q, 2)
    prev = -math.inf
    for s in (1e-1, 1e-2, 1e-3, 1e-4):
        xi = base.copy()
        xi[1] = xi[0] + s * np.array([1.0, 0, 0, 0])
        c = cfg(xi, Q)
        F = energy(c)
        bound = c.min_separation() ** (2 - N) - qn * np.max(np.sum(xi**2, axis=1))
        assert F >= bound
        assert F > prev
        prev = F


# --- derivatives ----------------------------------------------------------------


@pytest.mark.parametrize("seed", range(20))
def test_gradient_fd(seed):
    c = random_config(seed)
    h = 1e-6
    g = gradient(c)
    fd = np.zeros_like(c.xi)
    for i in range(c.m):
        for k in range(K):
            d = np.zeros_like(c.xi)
            d[i, k] = h
            fd[i, k] = (energy(c.with_xi(c.xi + d)) - energy(c.with_xi(c.xi - d))) / (2 * h)
    assert np.linalg.norm(fd - g) / np.linalg.norm(g) < 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_hessian_fd_and_symmetry(seed):
    c = random_config(seed)
    H = hessian(c)
    assert np.max(np.abs(H - H.T)) < 1e-12
    h = 1e-6
    fd = np.zeros_like(H)
    for col in range(c.xi.size):
        d = np.zeros(c.xi.size)
        d[col] = h
        gp = gradient(c.with_xi(c.xi + d.reshape(c.xi.shape))).ravel()
        gm = gradient(c.with_xi(c.xi - d.reshape(c.xi.shape))).ravel()
        fd[:, col] = (gp - gm) / (2 * h)
    assert np.linalg.norm(fd - H) / np.linalg.norm(H) < 1e-6


# --- closed forms ---------------------------------------------------------------


@pytest.mark.parametrize("n", [5, 6, 8])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 3.0])
def test_symmetric_pair_critical_iff_radius(n, sigma):
    b = np.zeros(n - 1)
    b[0] = pair_radius(n, sigma)
    Q = sigma * np.eye(n - 1)
    assert np.linalg.norm(gradient(cfg([b, -b], Q, n))) < 1e-12
    assert np.linalg.norm(gradient(cfg([1.01 * b, -1.01 * b], Q, n))) > 1e-3


def test_pair_radius_formula():
    assert pair_radius(5, 1.0) ** 5 == pytest.approx(3 / 16, rel=1e-14)


@pytest.mark.parametrize("n", [5, 6, 7])
def test_collinear_is_critical(n):
    c = cfg(collinear(n), np.eye(n - 1), n)
    assert np.linalg.norm(gradient(c)) < 1e-12
    assert abs(virial_residual(c)) < 1e-10


def test_collinear_n5_value_and_virial_sides():
    g = collinear_gamma(5, 1.0)
    assert g**5 == pytest.approx(51 / 16, rel=1e-15)
    c = cfg(collinear(5))
    quad = float(np.einsum("ik,kl,il->", c.xi, c.Q, c.xi))
    assert quad == pytest.approx(2 * g * g, rel=1e-14)
    assert abs(virial_residual(c)) < 1e-10


def test_virial_nonzero_off_critical():
    assert abs(virial_residual(random_config(5))) > 1e-3


@pytest.mark.parametrize("t", [0.7, 1.0, 1.6])
def test_virial_is_dilation_derivative(t):
    c = random_config(6)
    h = 1e-6
    F = lambda s: energy(c.with_xi(s * c.xi))
    fd = t * (F(t + h) - F(t - h)) / (2 * h)
    assert virial_residual(c.with_xi(t * c.xi)) == pytest.approx(fd, rel=1e-7)


def test_virial_obstruction():
    assert virial_obstruction(-np.eye(K))
    assert not virial_obstruction(np.diag([-1.0, -1.0, 1.0, -2.0]))


# --- Newton and search ------------------------------------------------------------------


def _quadratic_rates(run):
    e = [np.linalg.norm(h - run.xi) for h in run.history]
    e = [x for x in e if x > 0]
    return [e[k + 1] / e[k] ** 2 for k in range(len(e) - 1)][-3:]


def test_newton_quadratic_on_collinear():
    rng = np.random.default_rng(0)
    run = newton(collinear() + 0.05 * rng.standard_normal((3, K)), np.eye(K), N, keep_history=True)
    assert run.outcome == "converged"
    assert max(_quadratic_rates(run)) < 50


def test_newton_quadratic_anisotropic():
    Q = np.diag([1.0, 1.5, 2.0, 2.5])
    res = find_critical_points(Q, 3, N, starts=40, seed=0)
    assert res
    rng = np.random.default_rng(1)
    xi = res[0].config.xi
    run = newton(xi + 0.02 * rng.standard_normal(xi.shape), Q, N, keep_history=True)
    assert run.outcome == "converged"
    assert max(_quadratic_rates(run)) < 50


def test_single_point_search():
    res = find_critical_points(np.diag([1.0, -2.0, 3.0, 0.5]), 1, N)
    assert len(res) == 1
    assert np.all(res[0].config.xi == 0)
    assert res[0].morse_index == 1


def test_isotropic_pair_found_once():
    res = find_critical_points(np.eye(K), 2, N, starts=60, seed=3)
    assert len(res) == 1
    p = res[0]
    assert np.linalg.norm(p.config.xi[0]) == pytest.approx(pair_radius(N, 1.0), abs=1e-10)
    assert abs(p.virial_residual) <= 1e-9


def test_isotropic_triple_contains_collinear():
    res = find_critical_points(np.eye(K), 3, N, starts=200, seed=0)
    g = collinear_gamma(N, 1.0)
    hits = [p for p in res if np.sort(np.linalg.norm(p.config.xi, axis=1))[0] < 1e-8]
    assert hits
    r = np.sort(np.linalg.norm(hits[0].config.xi, axis=1))
    assert r[2] ** N == pytest.approx(g**N, abs=1e-10)
    assert all(abs(p.virial_residual) <= 1e-9 and p.grad_norm < 1e-10 for p in res)


@pytest.mark.parametrize("m", [2, 3])
def test_negative_definite_has_no_critical_points(m):
    rng = np.random.default_rng(m)
    A = rng.standard_normal((K, K))
    Q = -(A @ A.T + 0.1 * np.eye(K))
    res = find_critical_points(Q, m, N, starts=30, seed=1)
    assert len(res) == 0
    assert sum(res.diagnostics.values()) >= 30
    assert virial_obstruction(Q)


def test_search_deterministic():
    Q = np.diag([1.0, 1.5, 2.0, 2.5])
    a = find_critical_points(Q, 3, N, starts=30, seed=4)
    b = find_critical_points(Q, 3, N, starts=30, seed=4)
    assert len(a) == len(b)
    for p, q in zip(a, b):
        assert np.array_equal(p.config.xi, q.config.xi)


def test_natural_scale():
    assert natural_scale(2 * np.eye(K), 3, N) == pytest.approx((3 * 3 / 2) ** (1 / 5))


def test_rejects_degenerate_Q():
    with pytest.raises(ValueError):
        find_critical_points(np.diag([1.0, 0.0, 1.0, 1.0]), 2, N)
