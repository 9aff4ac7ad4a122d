import numpy as np
import pytest

from ttflow.chebyshev import (ChebGrid, cc_weights, cheb_nodes, diff_matrix,
                              interp_matrix, interp_eval, interp_value_and_grad)
from ttflow.errors import DomainBoundsError, InvalidShapeError
from ttflow.tt import tt_from_dense


def test_nodes_ascending_and_endpoints():
    for n in (2, 5, 33, 128):
        x = cheb_nodes(n, -8.0, 8.0)
        assert len(x) == n
        assert np.all(np.diff(x) > 0)
        assert x[0] == pytest.approx(-8.0, abs=1e-14)
        assert x[-1] == pytest.approx(8.0, abs=1e-14)


def test_nodes_validation():
    with pytest.raises(InvalidShapeError):
        cheb_nodes(1)
    with pytest.raises(InvalidShapeError):
        cheb_nodes(8, 2.0, 2.0)


def test_differentiation_exact_on_polynomials():
    rng = np.random.default_rng(7)
    for n in (8, 16, 32):
        a, b = -3.0, 5.0
        x = cheb_nodes(n, a, b)
        d1 = diff_matrix(n, a, b)
        d2 = d1 @ d1
        for _ in range(20):
            deg = int(rng.integers(0, n - 1))
            c = rng.standard_normal(deg + 1)
            p = np.polynomial.Polynomial(c)
            scale = max(np.abs(p(x)).max(), 1.0)
            assert np.abs(d1 @ p(x) - p.deriv()(x)).max() <= 1e-9 * scale
            assert np.abs(d2 @ p(x) - p.deriv(2)(x)).max() <= 1e-7 * scale


def test_quadrature_exact_on_polynomials():
    a, b = -8.0, 8.0
    for n in (9, 24, 65):
        w = cc_weights(n, a, b)
        x = cheb_nodes(n, a, b)
        assert w.sum() == pytest.approx(b - a, rel=1e-13)
        assert np.all(w > 0)
        for k in range(n):
            exact = (b ** (k + 1) - a ** (k + 1)) / (k + 1)
            scale = max(abs(exact), (b - a) * max(abs(a), abs(b)) ** k)
            assert w @ x**k == pytest.approx(exact, abs=1e-12 * scale)


def test_quadrature_spectral_on_gaussian():
    w = cc_weights(96, -8.0, 8.0)
    x = cheb_nodes(96, -8.0, 8.0)
    v = np.exp(-(x**2) / 2) / np.sqrt(2 * np.pi)
    assert w @ v == pytest.approx(1.0, abs=1e-12)


def test_interp_matrix_identity_at_nodes():
    x = cheb_nodes(17, -2.0, 2.0)
    m = interp_matrix(17, -2.0, 2.0, x)
    assert np.abs(m - np.eye(17)).max() <= 1e-13


def test_interp_matrix_spectral_accuracy():
    n, a, b = 96, -8.0, 8.0
    f = lambda t: np.exp(np.sin(t)) / (1 + t**2 / 16)
    m = interp_matrix(n, a, b, np.linspace(a, b, 301))
    vals = m @ f(cheb_nodes(n, a, b))
    assert np.abs(vals - f(np.linspace(a, b, 301))).max() <= 1e-11


def test_interp_matrix_outside_modes():
    with pytest.raises(DomainBoundsError):
        interp_matrix(9, -1.0, 1.0, np.array([1.5]))
    m = interp_matrix(9, -1.0, 1.0, np.array([1.5, 0.25]), outside="zero")
    assert np.all(m[0] == 0.0)
    assert m[1].sum() == pytest.approx(1.0, abs=1e-13)


def _smooth_tt(grid, f):
    pts = np.meshgrid(*[grid.nodes(k) for k in range(grid.d)], indexing="ij")
    return tt_from_dense(f(*pts))


def test_interp_eval_matches_grid_values():
    grid = ChebGrid.uniform(2, 20, -8.0, 8.0)
    f = lambda x, y: np.exp(-(x**2 + 0.5 * y**2) / 8) * (1 + 0.1 * x * y)
    t = _smooth_tt(grid, f)
    xg, yg = np.meshgrid(grid.nodes(0), grid.nodes(1), indexing="ij")
    pts = np.column_stack([xg.ravel(), yg.ravel()])
    vals = interp_eval(t, grid, pts)
    assert np.abs(vals - f(pts[:, 0], pts[:, 1])).max() <= 1e-12


def test_interp_eval_spectral_between_nodes():
    grid = ChebGrid.uniform(2, 40, -8.0, 8.0)
    f = lambda x, y: np.exp(-(x**2 + y**2) / 6) * np.cos(x / 2 + y / 3)
    t = _smooth_tt(grid, f)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-8, 8, size=(200, 2))
    vals = interp_eval(t, grid, pts)
    assert np.abs(vals - f(pts[:, 0], pts[:, 1])).max() <= 1e-9


def test_interp_grad_matches_finite_differences():
    grid = ChebGrid.uniform(3, 28, -4.0, 4.0)
    f = lambda x, y, z: np.exp(-(x**2 + y**2 + z**2) / 4) * (1 + 0.2 * np.sin(x * y))
    t = _smooth_tt(grid, f)
    rng = np.random.default_rng(11)
    pts = rng.uniform(-3, 3, size=(50, 3))
    vals, grads = interp_value_and_grad(t, grid, pts)
    assert np.abs(vals - interp_eval(t, grid, pts)).max() <= 1e-13
    eps = 1e-5
    for k in range(3):
        shift = np.zeros(3)
        shift[k] = eps
        fd = (interp_eval(t, grid, pts + shift) - interp_eval(t, grid, pts - shift)) / (2 * eps)
        assert np.abs(grads[:, k] - fd).max() <= 1e-5


def test_interp_eval_rejects_outside_points():
    grid = ChebGrid.uniform(2, 10, -1.0, 1.0)
    t = _smooth_tt(grid, lambda x, y: x + y)
    with pytest.raises(DomainBoundsError):
        interp_eval(t, grid, np.array([[0.0, 2.0]]))


def test_grid_index_to_point():
    grid = ChebGrid((5, 9), -2.0, 2.0)
    idx = np.array([[0, 0], [4, 8], [2, 3]])
    pts = grid.index_to_point(idx)
    assert pts[0] == pytest.approx([-2.0, -2.0])
    assert pts[1] == pytest.approx([2.0, 2.0])
    assert pts[2, 0] == pytest.approx(grid.nodes(0)[2])
    assert pts[2, 1] == pytest.approx(grid.nodes(1)[3])
