import math

import pytest

from fraclab.diffops import h_grid
from fraclab.errors import DomainError, ParameterError
from fraclab.grid import Ball, make_grid, sample, zero_rule
from fraclab.kernels import FractionalParams
from fraclab.seminorms import (
    SEMINORMS, SeminormResult, SeminormSpec, besov2_sup, composite_AR, gagliardo, lp_norm,
    nikolskii_sup, snail, x_bracket, xps_norm, y_bracket,
)
from fraclab.testfunctions import TestFunction

HALF = Ball((0.0,), 0.5)


@pytest.fixture
def affine(grid1d):
    return sample(TestFunction('affine', {'a': (1.0,), 'b': 0.0}), grid1d)

@pytest.fixture
def const2(grid1d):
    return sample(TestFunction('constant', {'c': 2.0}), grid1d)


def test_registry_names():
    assert set(SEMINORMS.names()) == {
        'lp', 'gagliardo', 'nikolskii', 'besov2', 'xps', 'snail_bracket_X',
        'snail_bracket_Y', 'composite_AR',
    }
    assert SEMINORMS.get('lp') is lp_norm

def test_result_rejects_negative():
    with pytest.raises(ValueError):
        SeminormResult(-1.0, SeminormSpec('lp', p=2.0))
    assert SeminormResult(3.0, SeminormSpec('lp', p=2.0)).power == 9.0

def test_lp_of_constant(const2):
    res = lp_norm(const2, HALF, 2.0)
    assert res.metadata['nodes'] == 63
    assert res.value == pytest.approx(math.sqrt(4 * 63 / 64))
    assert res.spec.describe()['sets'] == [{'center': [0.0], 'radius': 0.5}]

def test_gagliardo_is_worker_independent(grid2d):
    u = sample(TestFunction('bump', {'radius': 0.7}), grid2d, zero_rule())
    E = Ball((0.0, 0.0), 0.95)
    one = gagliardo(u, E, 0.4, 3.0, workers=1)
    assert one.metadata['nodes'] > 128
    three = gagliardo(u, E, 0.4, 3.0, workers=3)
    assert one.value == three.value

def test_gagliardo_of_affine(affine):
    h = affine.grid.spacing
    plain = gagliardo(affine, HALF, 0.5, 2.0)
    assert plain.metadata['pairs'] == 63 * 62
    assert plain.power == pytest.approx(63 * 62 * h * h, rel=1e-12)
    corrected = gagliardo(affine, HALF, 0.5, 2.0, diagonal_correction=True)
    assert corrected.power == pytest.approx((63 ** 2 - 1) * h * h, rel=1e-12)
    # within 1e-3 of the continuum value |E|**2 on the node span
    assert corrected.power == pytest.approx((63 * h) ** 2, rel=1e-3)

@pytest.mark.parametrize('alpha,p', [(0.0, 2.0), (1.0, 2.0), (0.5, 0.5)])
def test_gagliardo_rejects(affine, alpha, p):
    with pytest.raises(ParameterError):
        gagliardo(affine, HALF, alpha, p)

def test_gagliardo_correction_is_1d_only(grid2d):
    u = sample(TestFunction('bump'), grid2d)
    with pytest.raises(ParameterError):
        gagliardo(u, Ball((0.0, 0.0), 0.5), 0.5, 2.0, diagonal_correction=True)

def test_nikolskii_of_affine(affine):
    hs = h_grid(affine.grid, 0.25)
    res = nikolskii_sup(affine, HALF, 0.5, 2.0, hs)
    assert res.metadata['argmax_h'] == (0.25,)
    assert res.value == pytest.approx(0.25 ** 0.5 * math.sqrt(63 / 64))
    assert len(res.metadata['per_h']) == len(hs)

def test_nikolskii_rejects_empty_and_zero(affine):
    with pytest.raises(ParameterError):
        nikolskii_sup(affine, HALF, 0.5, 2.0, [])
    with pytest.raises(ParameterError):
        nikolskii_sup(affine, HALF, 0.5, 2.0, [(0.0,)])

def test_besov2(affine, bump):
    hs = h_grid(affine.grid, 0.25)
    assert besov2_sup(affine, 1.5, 2.0, hs).value == pytest.approx(0.0, abs=1e-12)
    assert besov2_sup(bump, 1.5, 2.0, hs).value > 0
    with pytest.raises(ParameterError):
        besov2_sup(bump, 2.0, 2.0, hs)

def test_xps_of_constant(const2):
    res = xps_norm(const2, FractionalParams(1, 0.5, 2.0))
    assert res.value == pytest.approx(math.sqrt(8.0))
    assert res.metadata['node_correction'] == 0.0

@pytest.mark.parametrize('s', [0.25, 0.5, 0.75])
def test_snail_of_constant(const2, s):
    params = FractionalParams(1, s, 2.0)
    sp = params.sp
    # |E| = 1, so only the tail 2 * c**p * int_{1/2}^inf r**(-1-sp) dr remains
    expected = 2.0 ** (sp + 1) * 2.0 ** 2 / sp
    assert snail(const2, 0.0, HALF, params) ** 2 == pytest.approx(expected, rel=1e-10)

def test_snail_outside_ball(const2):
    with pytest.raises(DomainError) as excinfo:
        snail(const2, 0.7, HALF, FractionalParams(1, 0.5, 2.0))
    assert 'not inside' in str(excinfo.value)

def test_x_bracket(const2):
    params = FractionalParams(1, 0.5, 2.0)
    res = x_bracket(const2, Ball((0.0,), 0.25), HALF, params)
    assert res.metadata['lp_part'] == pytest.approx(4 * 63 / 64)
    assert res.metadata['snail_part'] > 0
    with pytest.raises(ParameterError):
        x_bracket(const2, Ball((0.0,), 0.5), HALF, params)

def test_y_bracket(bump, const2):
    params = FractionalParams(1, 0.5, 2.0, t=0.25)
    F = Ball((0.0,), 0.25)
    res = y_bracket(bump, F, HALF, params)
    assert res.value > 0
    assert res.metadata['h0'] == pytest.approx(0.125)
    assert y_bracket(const2, F, HALF, params).value == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ParameterError) as excinfo:
        y_bracket(bump, F, HALF, params, h_grid=[(0.125,)])
    assert excinfo.value.name == 'h_grid'

def test_composite_AR(bump, grid1d):
    params = FractionalParams(1, 0.5, 2.0, t=0.25)
    f = sample(TestFunction('constant', {'c': 1.0}), grid1d)
    res = composite_AR(bump, f, 0.5, params)
    terms = res.metadata['summands']
    assert set(terms) == {'gagliardo_u', 'lp_u', 'x_bracket', 'y_bracket', 'gagliardo_f', 'lp_f'}
    assert all(v >= 0 for v in terms.values())
    assert res.value == pytest.approx(sum(terms.values()))
    assert terms['gagliardo_f'] == 0.0
    with pytest.raises(DomainError):
        composite_AR(bump, f, 0.9, params, center=(0.2,))

def test_composite_AR_vanishes_on_zero(grid1d):
    z = sample(TestFunction('constant', {'c': 0.0}), grid1d, zero_rule())
    params = FractionalParams(1, 0.5, 2.0)
    assert composite_AR(z, z, 0.5, params).value == 0.0

@pytest.mark.parametrize('alpha,expected', [(0.5, 1.0), (0.25, 8.0 / 15.0)])
def test_gagliardo_of_identity_on_unit_interval(alpha, expected):
    # int_0^1 int_0^1 |x-y|**(2 - 1 - 2*alpha) dx dy
    unit = Ball((0.5,), 0.5)
    fun = TestFunction('affine', {'a': (1.0,), 'b': 0.0})
    errors = []
    for n in (129, 257):
        u = sample(fun, make_grid(1, 1.0, n))
        value = gagliardo(u, unit, alpha, 2.0).value
        errors.append(abs(value - math.sqrt(expected)))
    assert errors[1] <= 0.02 * math.sqrt(expected)
    assert 1.6 < errors[0] / errors[1] < 2.5

@pytest.mark.parametrize('name', ['gagliardo', 'besov2', 'xps'])
def test_smooth_seminorms_stable_under_refinement(name):
    gauss = TestFunction('gaussian', {'sigma': 0.3})
    bump = TestFunction('bump', {'radius': 0.8})
    params = FractionalParams(1, 0.5, 2.0)
    values = []
    for n in (129, 257):
        g = make_grid(1, 1.0, n)
        if name == 'gagliardo':
            res = gagliardo(sample(gauss, g), HALF, 0.5, 2.0, diagonal_correction=True)
        elif name == 'besov2':
            res = besov2_sup(sample(gauss, g), 1.5, 2.0, (0.0625, 0.125, 0.25))
        else:
            res = xps_norm(sample(bump, g, zero_rule()), params)
        values.append(res.value)
    assert values[1] > 0
    assert abs(values[0] - values[1]) < 0.05 * values[1]
