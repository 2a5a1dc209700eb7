from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from betadelaunay.errors import DegenerateSimplexError, DomainError
from betadelaunay.geometry import (Simplex, batch_log_volume, circumsphere, log_tau, normalize,
                                   normalize_batch, regular_simplex, rho_pair, rho_shape,
                                   rho_shape_aligned_batch, rho_shape_planar_batch, simplex_volume,
                                   tau)


def random_simplex(rng, dim, scale=1.0):
    return rng.normal(scale=scale, size=(dim + 1, dim))


def cayley_menger_volume(v):
    k = v.shape[1]
    sq = np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=2)
    cm = np.ones((k + 2, k + 2))
    cm[0, 0] = 0.0
    cm[1:, 1:] = sq
    coef = (-1) ** (k + 1) / (2 ** k * math.factorial(k) ** 2)
    return math.sqrt(max(coef * np.linalg.det(cm), 0.0))


def test_simplex_rejects_bad_shapes():
    with pytest.raises(DomainError):
        Simplex(np.zeros((2, 2)))
    with pytest.raises(DomainError):
        Simplex(np.array([[0.0, 0.0], [1.0, np.nan], [0.0, 1.0]]))
    s = Simplex([[0, 0], [1, 0], [0, 1]])
    assert s.dim == 2
    assert simplex_volume(s.scaled(2.0, shift=[5.0, -1.0])) == pytest.approx(2.0)


def test_volume_examples():
    assert simplex_volume([[0, 0], [1, 0], [0, 1]]) == pytest.approx(0.5)
    assert simplex_volume([[0, 0], [1, 1], [2, 2]]) == pytest.approx(0.0, abs=1e-15)
    assert simplex_volume([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]) == pytest.approx(1 / 6)


@pytest.mark.parametrize("dim", [1, 2, 3, 4, 5])
def test_volume_matches_cayley_menger(dim):
    rng = np.random.default_rng(dim)
    for _ in range(200):
        v = random_simplex(rng, dim)
        assert simplex_volume(v) == pytest.approx(cayley_menger_volume(v), rel=1e-8)


def test_batch_log_volume_matches_scalar():
    rng = np.random.default_rng(3)
    v = rng.normal(size=(500, 4, 3))
    expected = [math.log(simplex_volume(x)) for x in v]
    np.testing.assert_allclose(batch_log_volume(v), expected, rtol=1e-12)


def test_circumsphere_examples():
    sphere = circumsphere(regular_simplex(2))
    np.testing.assert_allclose(sphere.center, [0, 0], atol=1e-14)
    assert sphere.radius == pytest.approx(1.0)
    sphere = circumsphere([[0, 0], [1, 0], [0, 1]])
    np.testing.assert_allclose(sphere.center, [0.5, 0.5], atol=1e-14)
    assert sphere.radius == pytest.approx(math.sqrt(2) / 2)


@pytest.mark.parametrize("dim", [2, 3, 4, 5, 6])
def test_circumsphere_residuals(dim):
    rng = np.random.default_rng(10 + dim)
    for _ in range(2000):
        v = random_simplex(rng, dim, scale=rng.uniform(0.01, 100.0))
        sphere = circumsphere(v)
        dist = np.linalg.norm(v - sphere.center, axis=1)
        assert np.max(np.abs(dist - sphere.radius)) <= 1e-9 * sphere.radius


def test_circumsphere_degenerate():
    with pytest.raises(DegenerateSimplexError):
        circumsphere([[0, 0], [1, 1], [2, 2]])
    with pytest.raises(DegenerateSimplexError):
        circumsphere([[0, 0], [1, 0], [2, 1e-14]])


def test_rho_pair_examples():
    s = regular_simplex(3)
    assert rho_pair(s, s) == 0.0
    moved = s.copy()
    moved[2] += np.array([0.0, 0.0, 0.05])
    assert rho_pair(moved, s) == pytest.approx(0.05)
    with pytest.raises(DomainError):
        rho_pair(regular_simplex(2), regular_simplex(3))


def test_rho_pair_matches_double_loop():
    rng = np.random.default_rng(5)
    for _ in range(200):
        a, b = random_simplex(rng, 3), random_simplex(rng, 3)
        worst = 0.0
        for v in a:
            nearest = min(math.dist(v, w) for w in b)
            worst = max(worst, nearest)
        assert rho_pair(a, b) == pytest.approx(worst, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_rho_pair_triangle_inequality(seed, dim):
    rng = np.random.default_rng(seed)
    a = random_simplex(rng, dim)
    b = a + rng.normal(scale=0.05, size=a.shape)
    c = b + rng.normal(scale=0.05, size=a.shape)
    assert rho_pair(a, c) <= rho_pair(a, b) + rho_pair(b, c) + 1e-12


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_rho_shape_regular_is_zero(dim):
    rng = np.random.default_rng(dim)
    q = Rotation.random(random_state=1).as_matrix() if dim == 3 else np.linalg.qr(rng.normal(size=(dim, dim)))[0]
    v = 3.7 * regular_simplex(dim) @ q + rng.normal(size=dim)
    assert rho_shape(v) <= 1e-6


@pytest.mark.parametrize("dim", [2, 3])
def test_rho_shape_similarity_invariant(dim):
    rng = np.random.default_rng(20 + dim)
    v = random_simplex(rng, dim)
    base = rho_shape(v)
    assert rho_shape(0.01 * v + 4.0) == pytest.approx(base, abs=1e-6)
    assert rho_shape(250.0 * v - 1.0) == pytest.approx(base, abs=1e-6)


def grid_rho_planar(unit_vertices, step=1e-4):
    """Dense search over rotations and reflections of the inscribed equilateral triangle."""
    phi = np.arange(0.0, 2 * math.pi / 3, step)
    best = np.inf
    for flip in (1.0, -1.0):
        x = unit_vertices * np.array([1.0, flip])
        corners = phi[:, None] + np.array([0.0, 2 * math.pi / 3, 4 * math.pi / 3])[None, :]
        tx, ty = np.cos(corners), np.sin(corners)
        dist = np.hypot(x[:, 0][None, :, None] - tx[:, None, :], x[:, 1][None, :, None] - ty[:, None, :])
        best = min(best, float(dist.min(axis=2).max(axis=1).min()))
    return best


@pytest.mark.parametrize("theta_deg", [0.0, 5.0, 17.0, 30.0, 45.0, 59.0])
def test_rho_shape_isoceles_against_grid_search(theta_deg):
    th = math.radians(theta_deg)
    angles = np.array([0.0, 2 * math.pi / 3 + th, 4 * math.pi / 3 - th])
    v = np.column_stack([np.cos(angles), np.sin(angles)])
    exact = rho_shape(v)
    grid = grid_rho_planar(v)
    assert exact <= grid + 1e-12
    assert grid - exact <= 1e-4


def test_rho_shape_planar_random_against_grid_search():
    rng = np.random.default_rng(8)
    for _ in range(20):
        v = normalize(random_simplex(rng, 2))
        assert rho_shape(v) == pytest.approx(grid_rho_planar(v), abs=1e-4)


def test_planar_batch_matches_scalar():
    rng = np.random.default_rng(9)
    v = rng.normal(size=(300, 3, 2))
    np.testing.assert_allclose(rho_shape_planar_batch(v), [rho_shape(x) for x in v], atol=1e-12)


def test_aligned_batch_matches_unrefined_scalar():
    rng = np.random.default_rng(11)
    v = rng.normal(size=(100, 4, 3))
    np.testing.assert_allclose(rho_shape_aligned_batch(v), [rho_shape(x, refine=False) for x in v],
                               atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(normalize_batch(v), axis=2), 1.0, atol=1e-12)


def test_refinement_only_lowers_the_bound():
    rng = np.random.default_rng(12)
    for _ in range(10):
        v = random_simplex(rng, 3)
        assert rho_shape(v) <= rho_shape(v, refine=False) + 1e-15


def test_tau_examples():
    assert tau(1) == pytest.approx(2.0)
    assert tau(2) == pytest.approx(3 * math.sqrt(3) / 4)
    assert tau(3) == pytest.approx(8 / (9 * math.sqrt(3)))
    for dim in range(1, 8):
        assert simplex_volume(regular_simplex(dim)) == pytest.approx(tau(dim), rel=1e-12)
        assert log_tau(dim) == pytest.approx(math.log(tau(dim)), rel=1e-13)
    with pytest.raises(DomainError):
        tau(0)


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
def test_tau_is_maximal_in_the_ball(dim):
    rng = np.random.default_rng(30 + dim)
    n = 100_000
    x = rng.normal(size=(n, dim + 1, dim))
    x /= np.linalg.norm(x, axis=2, keepdims=True)
    x *= rng.random((n, dim + 1, 1)) ** (1.0 / dim)
    assert np.all(batch_log_volume(x) <= log_tau(dim) + 1e-12)


def near_regular_on_sphere(rng, dim, n):
    base = regular_simplex(dim)
    noise = rng.normal(size=(n, dim + 1, dim)) * np.geomspace(1e-4, 0.5, n)[:, None, None]
    v = base[None] + noise
    return v / np.linalg.norm(v, axis=2, keepdims=True)


@pytest.mark.parametrize("dim,rho_fn", [(2, rho_shape_planar_batch), (3, rho_shape_aligned_batch)])
@pytest.mark.parametrize("eps", [0.2, 0.4])
def test_large_volume_forces_near_regular_shape(dim, rho_fn, eps):
    rng = np.random.default_rng(40 + dim)
    v = np.concatenate([near_regular_on_sphere(rng, dim, 20_000),
                        near_regular_on_sphere(rng, dim, 20_000)[:, ::-1]])
    big = batch_log_volume(v) > math.log((1 - eps ** 2 / 100) * tau(dim))
    assert big.sum() > 100
    assert np.all(rho_fn(v[big]) < eps)


def test_regular_simplex_vertices_are_equidistant():
    for dim in range(1, 6):
        v = regular_simplex(dim)
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-14)
        d = [np.linalg.norm(a - b) for a, b in itertools.combinations(v, 2)]
        np.testing.assert_allclose(d, d[0], rtol=1e-13)
