import math

import numpy as np
import pytest

from fraclab.diffops import (
    Translation, delta2_h, delta_h, discrete_gradient, discrete_hessian, gradient_norm, h_grid,
    heat_kernel, heat_kernel_l1_norms, heat_smooth, leibniz_sides, make_cutoff, translate,
)
from fraclab.errors import AlignmentError, DomainError, ParameterError
from fraclab.grid import affine_rule, make_grid, sample, zero_rule
from fraclab.testfunctions import TestFunction


def test_translation_alignment(grid1d):
    assert Translation((2 * grid1d.spacing,)).steps(grid1d) == (2,)
    with pytest.raises(AlignmentError) as excinfo:
        Translation((0.3 * grid1d.spacing,)).steps(grid1d)
    assert 'not a multiple' in str(excinfo.value)

def test_translation_dimension(grid2d):
    with pytest.raises(ParameterError):
        Translation.coerce((0.125,), grid2d.dim)
    t = Translation.coerce((0.125, 0.25), 2)
    assert t.magnitude == pytest.approx(math.hypot(0.125, 0.25))
    assert t.doubled().h == (0.25, 0.5)

def test_translate_uses_exterior_past_the_box(grid1d):
    fun = TestFunction('power', {'beta': 2.0})
    u = sample(fun, grid1d)
    h = 4 * grid1d.spacing
    uh = translate(u, h)
    assert np.allclose(uh.flat, fun(grid1d.nodes + h))
    assert uh.evaluate([[3.0]])[0] == pytest.approx(fun(np.array([[3.0 + h]]))[0])

def test_delta_of_affine_is_constant(grid1d):
    u = sample(TestFunction('affine', {'a': (2.0,), 'b': 1.0}), grid1d, affine_rule((2.0,), 1.0))
    h = 8 * grid1d.spacing
    d = delta_h(u, h)
    assert np.allclose(d.flat, 2.0 * h)
    assert d.exterior.kind == 'affine'
    assert np.allclose(delta2_h(u, h).flat, 0.0)

def test_delta2_of_quadratic(grid1d):
    u = sample(TestFunction('power', {'beta': 2.0}), grid1d)
    h = 2 * grid1d.spacing
    assert np.allclose(delta2_h(u, h).flat, 2 * h * h)

def test_delta2_is_iterated_delta(bump):
    h = 3 * bump.grid.spacing
    assert np.array_equal(delta2_h(bump, h).values, delta_h(delta_h(bump, h), h).values)

def test_leibniz(grid1d):
    u = sample(TestFunction('gaussian', {'sigma': 0.3}), grid1d)
    v = sample(TestFunction('tent', {'radius': 0.6}), grid1d, zero_rule())
    lhs, rhs = leibniz_sides(u, v, 5 * grid1d.spacing)
    assert np.allclose(lhs, rhs, atol=1e-14)

def test_h_grid(grid1d):
    sp = grid1d.spacing
    hs = h_grid(grid1d, 16 * sp, linear=4)
    ks = [round(t.magnitude / sp) for t in hs]
    assert ks == [1, 2, 3, 4, 8, 16]
    strict = h_grid(grid1d, 16 * sp, strict=True)
    assert [round(t.magnitude / sp) for t in strict] == [1, 2, 3, 4, 8]

def test_h_grid_2d_axes_and_signs(grid2d):
    hs = h_grid(grid2d, grid2d.spacing, signs=(1, -1))
    assert {t.h for t in hs} == {(0.125, 0.0), (-0.125, 0.0), (0.0, 0.125), (0.0, -0.125)}

def test_cutoff_profile(grid1d):
    c = make_cutoff(0.25, 0.75, grid1d)
    assert c.support_radius == 0.5
    vals = c(grid1d.nodes)
    r = np.abs(grid1d.nodes[:, 0])
    assert np.all(vals[r <= 0.25] == 1.0)
    assert np.all(vals[r >= 0.5] == 0.0)
    assert np.all((vals >= -1e-12) & (vals <= 1 + 1e-12))
    # quintic smoothstep: max slope 15/8 over the half width
    assert c.gradient_constant == pytest.approx(15 / 8 / 0.25 * 0.5, rel=1e-2)

def test_cutoff_gradient_matches_finite_differences():
    c = make_cutoff(0.2, 0.6, center=(0.1, 0.0))
    x = np.array([[0.4, 0.1], [0.2, -0.25]])
    eps = 1e-6
    fd = np.stack([(c(x + eps * e) - c(x - eps * e)) / (2 * eps) for e in np.eye(2)], axis=1)
    assert np.allclose(c.gradient(x), fd, atol=1e-6)

def test_cutoff_rejects_bad_radii():
    with pytest.raises(ParameterError):
        make_cutoff(0.5, 0.5)

def test_cutoff_apply(grid1d):
    u = sample(TestFunction('constant', {'c': 2.0}), grid1d)
    c = make_cutoff(0.25, 0.75, grid1d)
    v = c.apply(u)
    assert v.exterior.is_zero
    assert v.flat[64] == 2.0
    with pytest.raises(DomainError):
        make_cutoff(0.5, 1.8, grid1d).apply(u)

def test_discrete_derivatives_of_quadratic(grid2d):
    u = sample(TestFunction('power', {'beta': 2.0}), grid2d)
    g = discrete_gradient(u)
    assert g.shape == grid2d.shape + (2,)
    inner = (slice(1, -1), slice(1, -1))
    assert np.allclose(g[inner + (0,)], 2 * grid2d.nodes[:, 0].reshape(grid2d.shape)[inner])
    H = discrete_hessian(u)
    assert H.shape == grid2d.shape + (2, 2)
    mid = (slice(2, -2), slice(2, -2))
    assert np.allclose(H[mid + (0, 0)], 2.0)
    assert np.allclose(H[mid + (0, 1)], 0.0, atol=1e-12)
    assert gradient_norm(u).shape == (grid2d.size,)

def test_heat_kernel_mass():
    g = make_grid(1, 4.0, 801)
    k = heat_kernel(0.05, g.nodes)
    assert float(k.sum() * g.cell_volume) == pytest.approx(1.0, rel=1e-10)

def test_heat_kernel_norms_scale():
    g = make_grid(1, 3.0, 1025)
    g1, h1 = heat_kernel_l1_norms(g, 0.04)
    g2, h2 = heat_kernel_l1_norms(g, 0.01)
    assert g2 / g1 == pytest.approx(2.0, rel=1e-2)
    assert h2 / h1 == pytest.approx(4.0, rel=1e-2)

def test_heat_smooth_preserves_affine(grid1d):
    u = sample(TestFunction('affine', {'a': (1.5,), 'b': -0.5}), grid1d, affine_rule((1.5,), -0.5))
    v = heat_smooth(u, 0.01)
    assert np.allclose(v.flat, u.flat, atol=1e-12)

def test_heat_smooth_semigroup():
    g = make_grid(1, 2.0, 257)
    u = sample(TestFunction('bump', {'radius': 0.5}), g, zero_rule())
    twice = heat_smooth(heat_smooth(u, 0.01), 0.01)
    once = heat_smooth(u, 0.02)
    assert np.max(np.abs(twice.flat - once.flat)) <= 1e-8 * np.max(np.abs(once.flat))

def test_heat_smooth_rejects_time():
    with pytest.raises(ParameterError):
        heat_smooth(sample(TestFunction('bump'), make_grid(1, 1.0, 9)), 0.0)

@pytest.mark.parametrize('n,time', [(9, 1e-3), (9, 1e-8), (33, 1e-5), (33, 0.2)])
def test_heat_smooth_preserves_constants_on_coarse_grids(n, time):
    g = make_grid(1, 1.0, n)
    u = sample(TestFunction('constant', {'c': 1.0}), g)
    v = heat_smooth(u, time)
    assert np.max(np.abs(v.flat - 1.0)) <= 1e-10

def test_heat_smooth_preserves_constants_2d():
    g = make_grid(2, 1.0, 9)
    u = sample(TestFunction('constant', {'c': 1.0}), g)
    v = heat_smooth(u, 1e-3)
    assert np.max(np.abs(v.flat - 1.0)) <= 1e-10

def test_cutoff_constant_stable_under_refinement(grid1d):
    fine = make_grid(1, 1.0, 2 * grid1d.n_per_axis - 1)
    coarse_c = make_cutoff(0.2, 0.7, grid1d).gradient_constant
    fine_c = make_cutoff(0.2, 0.7, fine).gradient_constant
    assert abs(fine_c - coarse_c) < 0.02 * fine_c
