import math

import numpy as np
import pytest

from fraclab.errors import DivergenceError
from fraclab.grid import Ball, affine_rule, closed_form_rule, make_grid, zero_rule
from fraclab.quadrature import (
    check_tail, rule_integral_outside_ball, rule_weighted_integral, tiled_sum, zeta_correction,
)
from fraclab.testfunctions import TestFunction


def test_tiled_sum_is_worker_independent():
    rng = np.random.default_rng(3)
    data = rng.standard_normal(1000) * 10 ** rng.uniform(-8, 8, 1000)
    def block(i0, i1):
        return float(np.sum(data[i0:i1]))
    serial = tiled_sum(len(data), block, workers=1, tile=64)
    for workers in (2, 3, 8):
        assert tiled_sum(len(data), block, workers=workers, tile=64) == serial

def test_tiled_sum_empty():
    assert tiled_sum(0, lambda i0, i1: 1.0) == 0.0

def test_zeta_correction():
    assert zeta_correction(0.0) == pytest.approx(1.0)
    # -2 zeta(-1) = 1/6
    assert zeta_correction(1.0) == pytest.approx(1.0 / 6.0)
    with pytest.raises(ValueError):
        zeta_correction(-1.0)

def test_check_tail():
    check_tail(zero_rule(), 2.0, 1.0, 'x')
    check_tail(affine_rule((0.0,), 3.0), 2.0, 0.5, 'x')
    with pytest.raises(DivergenceError) as excinfo:
        check_tail(affine_rule((1.0,)), 2.0, 1.0, 'weighted tail')
    assert 'diverges' in str(excinfo.value)
    assert 'weighted tail' in str(excinfo.value)

def test_weighted_integral_of_constant():
    grid = make_grid(1, 1.0, 33)
    rule = closed_form_rule(TestFunction('constant', {'c': 2.0}))
    assert rule_weighted_integral(rule, 2.0, 1.0, grid) == pytest.approx(8.0)

def test_weighted_integral_by_quadrature():
    grid = make_grid(1, 1.0, 33)
    rule = closed_form_rule(TestFunction('tent', {'radius': 1.0}))
    expected = 6.0 - 8.0 * math.log(2.0)
    assert rule_weighted_integral(rule, 2.0, 1.0, grid) == pytest.approx(expected, rel=1e-8)

def test_weighted_integral_2d_constant():
    grid = make_grid(2, 1.0, 9)
    rule = affine_rule((0.0, 0.0), 1.0)
    sp = 1.0
    assert rule_weighted_integral(rule, 2.0, sp, grid) == pytest.approx(2 * math.pi / (sp * (1 + sp)))

def test_integral_outside_ball_constant_1d():
    grid = make_grid(1, 1.0, 33)
    rule = affine_rule((0.0,), 1.0)
    ball = Ball((0.0,), 0.5)
    val = rule_integral_outside_ball(rule, np.array([0.1]), ball, 2.0, 1.0, grid)
    assert val == pytest.approx(1 / 0.4 + 1 / 0.6)

def test_integral_outside_ball_quadrature_1d():
    grid = make_grid(1, 1.0, 33)
    ball = Ball((0.0,), 0.5)
    tent = closed_form_rule(TestFunction('tent', {'radius': 2.0}))
    x = np.array([0.0])
    val = rule_integral_outside_ball(tent, x, ball, 1.0, 0.5, grid)
    # 2 * int_{1/2}^{2} (1 - r/2) r^{-3/2} dr
    expected = 2 * ((2 * 0.5 ** -0.5 - 2 * 2 ** -0.5) - 0.5 * (2 * 2 ** 0.5 - 2 * 0.5 ** 0.5))
    assert val == pytest.approx(expected, rel=1e-8)
    flat = closed_form_rule(TestFunction('power', {'beta': 0.0}))
    const = rule_integral_outside_ball(flat, x, ball, 2.0, 0.5, grid)
    assert const == pytest.approx(2 * 0.5 ** -0.5 / 0.5)

def test_integral_outside_ball_zero():
    grid = make_grid(1, 1.0, 33)
    assert rule_integral_outside_ball(zero_rule(), np.array([0.0]), Ball((0.0,), 0.5),
                                      2.0, 1.0, grid) == 0.0
