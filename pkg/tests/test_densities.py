import numpy as np
import pytest

from ttflow.chebyshev import ChebGrid, interp_eval
from ttflow.densities import (CertifiedDensity, MixtureSpec, QuarticComponent,
                              diag_gaussian_tt, gen_quartic_mixture,
                              gen_tt_random, mixture_callable,
                              normalize_and_certify)
from ttflow.errors import CertificateError, InvalidShapeError
from ttflow.tt import tt_eval, tt_integrate


def _mass(t, grid):
    return tt_integrate(t, [grid.quad_weights(k) for k in range(grid.d)])


def test_component_validation():
    with pytest.raises(InvalidShapeError):
        QuarticComponent(np.zeros(2), np.zeros(2), np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(InvalidShapeError):
        QuarticComponent(np.zeros(2), np.zeros(3), np.eye(2), np.eye(2))


def test_mixture_formula_against_direct_evaluation():
    # recompute one component from scratch at random points
    spec, f = gen_quartic_mixture(2, seed=123)
    rng = np.random.default_rng(0)
    x = rng.uniform(-3, 3, size=(50, 2))
    direct = np.zeros(50)
    for c in spec.components:
        c1 = x - c.a1
        c2 = (x - c.a2) ** 2
        q = (c1[:, None, :] @ c.q1 @ c1[:, :, None]).ravel() \
            + (c2[:, None, :] @ c.q2 @ c2[:, :, None]).ravel()
        # normalizer by brute-force trapezoid on a fine grid
        g = np.linspace(-8, 8, 1201)
        xx, yy = np.meshgrid(g, g, indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
        d1 = pts - c.a1
        d2 = (pts - c.a2) ** 2
        qq = (d1[:, None, :] @ c.q1 @ d1[:, :, None]).ravel() \
            + (d2[:, None, :] @ c.q2 @ d2[:, :, None]).ravel()
        z = np.trapezoid(np.trapezoid(np.exp(-qq).reshape(1201, 1201), g), g)
        direct += np.exp(-q) / z
    direct /= spec.k
    assert np.allclose(f(x), direct, rtol=1e-6)


def test_mixture_positivity_and_determinism():
    spec_a, f = gen_quartic_mixture(3, seed=7)
    spec_b, _ = gen_quartic_mixture(3, seed=7)
    assert spec_a.k == spec_b.k
    for ca, cb in zip(spec_a.components, spec_b.components):
        assert np.array_equal(ca.a1, cb.a1) and np.array_equal(ca.q2, cb.q2)
    rng = np.random.default_rng(1)
    vals = f(rng.uniform(-8, 8, size=(1000, 3)))
    assert np.all(vals > 0)
    with pytest.raises(InvalidShapeError):
        gen_quartic_mixture(4, seed=0)


def test_mixture_component_permutation_symmetry():
    spec, f = gen_quartic_mixture(2, seed=21)
    if spec.k == 1:
        spec, f = gen_quartic_mixture(2, seed=22)
    assert spec.k > 1
    perm = MixtureSpec(components=spec.components[::-1], seed=spec.seed)
    g = mixture_callable(perm)
    rng = np.random.default_rng(2)
    x = rng.uniform(-4, 4, size=(200, 2))
    fx, gx = f(x), g(x)
    assert np.abs(fx - gx).max() <= 1e-14 * np.abs(fx).max()


def test_symmetric_single_component_is_even():
    comp = QuarticComponent(np.zeros(2), np.zeros(2), np.eye(2), 1e-3 * np.eye(2))
    spec = MixtureSpec(components=(comp,), seed=0)
    f = mixture_callable(spec)
    rng = np.random.default_rng(3)
    x = rng.uniform(-5, 5, size=(100, 2))
    assert np.allclose(f(x), f(-x), rtol=1e-13)


def test_mixture_spec_json_roundtrip(tmp_path):
    spec, f = gen_quartic_mixture(2, seed=99)
    path = tmp_path / "mixture.json"
    spec.to_json(path)
    back = MixtureSpec.from_json(path)
    assert back.seed == spec.seed and back.k == spec.k
    g = mixture_callable(back)
    x = np.random.default_rng(4).uniform(-4, 4, size=(50, 2))
    assert np.array_equal(f(x), g(x))


def test_diag_gaussian_tt_values_and_mass():
    grid = ChebGrid.uniform(2, 64, -8.0, 8.0)
    t = diag_gaussian_tt(grid, mean=[1.0, 0.0], var=[2.0, 0.5])
    assert t.ranks == (1, 1, 1)
    x0, x1 = grid.nodes(0), grid.nodes(1)
    expect = (np.exp(-0.5 * (x0[:, None] - 1.0) ** 2 / 2.0) / np.sqrt(4 * np.pi)
              * np.exp(-0.5 * x1[None, :] ** 2 / 0.5) / np.sqrt(np.pi))
    assert np.allclose(t.full(), expect, atol=1e-15)
    # quadrature is spectrally exact; the deficit is the true tail mass
    # beyond the box (about 4e-7 at 4.95 sigma)
    assert abs(_mass(t, grid) - 1.0) < 1e-6


def test_tt_random_density_properties():
    grid = ChebGrid.uniform(5, 40, -8.0, 8.0)
    t = gen_tt_random(grid, seed=11)
    assert all(r <= 2 for r in t.ranks)
    assert abs(_mass(t, grid) - 1.0) < 1e-10
    rng = np.random.default_rng(0)
    idx = np.stack([rng.integers(0, 40, size=500) for _ in range(5)], axis=1)
    assert np.all(tt_eval(t, idx) >= 0)
    t2 = gen_tt_random(grid, seed=11)
    assert np.array_equal(t.cores[2], t2.cores[2])


def test_certify_standard_gaussian_no_rescale():
    grid = ChebGrid.uniform(2, 64, -8.0, 8.0)
    res = normalize_and_certify(diag_gaussian_tt(grid, 0.0, 1.0), grid)
    assert isinstance(res, CertifiedDensity)
    assert res.rescales == 0
    assert res.boundary_ratio <= 1e-12
    assert abs(_mass(res.tensor, grid) - 1.0) < 1e-10


def test_certify_wide_gaussian_rescales():
    # boundary ratio exp(-2) at sigma=4 fails the 1e-12 bar until the extent
    # has shrunk by 0.8^6
    grid = ChebGrid.uniform(2, 64, -8.0, 8.0)

    def wide(x):
        return np.exp(-(x ** 2).sum(axis=1) / 32.0)

    res = normalize_and_certify(wide, grid)
    assert res.rescales == 6
    assert res.boundary_ratio <= 1e-12
    assert abs(_mass(res.tensor, grid) - 1.0) < 1e-10
    with pytest.raises(CertificateError):
        normalize_and_certify(wide, grid, max_rescales=0)


def test_certify_wide_tt_input_truncates():
    # a TT input cannot be re-evaluated beyond the box, so shrinking it
    # truncates: faces go exactly to zero after one rescale
    grid = ChebGrid.uniform(2, 64, -8.0, 8.0)
    res = normalize_and_certify(diag_gaussian_tt(grid, 0.0, 16.0), grid)
    assert res.rescales >= 1
    assert res.boundary_ratio <= 1e-12
    assert abs(_mass(res.tensor, grid) - 1.0) < 1e-10


def test_certify_mixture_callable():
    spec, f = gen_quartic_mixture(2, seed=5)
    grid = ChebGrid.uniform(2, 96, -8.0, 8.0)
    res = normalize_and_certify(f, grid, cross_tol=1e-8)
    assert abs(_mass(res.tensor, grid) - 1.0) < 1e-10
    assert res.boundary_ratio <= 1e-12
    assert res.cross_info.converged
    # held-out pointwise agreement with the callable, up to the global
    # normalization constant picked up inside
    rng = np.random.default_rng(8)
    x = rng.uniform(-4, 4, size=(300, 2))
    approx = interp_eval(res.tensor, grid, x)
    exact = f(x) / res.mass_before
    scale = np.abs(exact).max()
    assert np.abs(approx - exact).max() <= 1e-7 * scale


def test_certify_rejects_zero_density():
    grid = ChebGrid.uniform(2, 32, -8.0, 8.0)
    with pytest.raises(CertificateError):
        normalize_and_certify(lambda x: np.zeros(x.shape[0]), grid)
