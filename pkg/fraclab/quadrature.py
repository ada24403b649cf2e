"""Pair sums and tail integrals shared by seminorms and the solver

Pair sums are split into fixed row tiles; tiles may run on a thread pool
but their partial sums are always added in tile order, so the result does
not depend on the number of workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import integrate
from scipy.special import zeta

from fraclab.errors import DivergenceError

__all__ = (
    'TILE_ROWS', 'tiled_sum', 'zeta_correction', 'check_tail',
    'rule_weighted_integral', 'rule_integral_outside_ball', 'THETA_NODES',
)

logger = logging.getLogger(__name__)

TILE_ROWS = 128
THETA_NODES = 64
QUAD_OPTS = {'epsabs': 0.0, 'epsrel': 1e-10, 'limit': 400}


def tiled_sum(n_rows, block, workers=1, tile=TILE_ROWS):
    """Sum ``block(i0, i1)`` over fixed row tiles ``[i0, i1)``

    Args:
        n_rows (int): Total number of rows
        block: Callable returning the (float) partial sum of a tile
        workers (int): Thread count; ``1`` runs inline
        tile (int): Rows per tile

    The reduction order is the tile order for every worker count.
    """
    bounds = [(i0, min(i0 + tile, n_rows)) for i0 in range(0, n_rows, tile)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            partials = list(ex.map(lambda b: block(*b), bounds))
    else:
        partials = [block(*b) for b in bounds]
    total = 0.0
    for part in partials:
        total += float(part)
    return total


def zeta_correction(beta):
    """Missing diagonal mass of a punctured lattice sum of ``|z|**beta``

    For ``beta > -1``, ``h * sum_{k != 0} |kh|**beta g(kh)`` misses
    ``-2 zeta(-beta) h**(1+beta) g(0)`` of the integral. Returns the
    coefficient ``-2 zeta(-beta)``.

    >>> round(zeta_correction(0.0), 12)
    1.0
    """
    if not beta > -1:
        raise ValueError('beta must exceed -1')
    return float(-2.0 * zeta(-beta))


def check_tail(rule, p, sp, what):
    """Raise :class:`DivergenceError` unless ``|rule|**p`` is integrable
    against a tail weight decaying like ``|y|**(-N-sp)``
    """
    deg = rule.growth_degree()
    if deg == -math.inf:
        return
    if p * deg >= sp:
        raise DivergenceError(
            rule, f'{what}: growth |y|^{p * deg:g} against |y|^(-N-{sp:g}) is not integrable')


def _is_constant(rule):
    if rule.kind == 'affine':
        return not any(rule.a)
    if rule.kind == 'closed_form':
        return rule.function.tag == 'constant' or (
            rule.function.tag == 'power' and rule.function.params['beta'] == 0)
    return False


def _constant_value(rule, dim):
    return float(rule.evaluate(np.zeros((1, dim)))[0])


def _breaks(grid, rule, start):
    """Increasing split points beyond *start* along a half line"""
    L = grid.box_halfwidth
    cands = [L, 2 * L, 4 * L]
    if rule.truncation_radius is not None:
        cands.append(rule.truncation_radius)
    pts = sorted({c for c in cands if c > start})
    return pts


def _half_line(f, start, breaks):
    total = 0.0
    a = start
    for b in breaks:
        val, _ = integrate.quad(f, a, b, **QUAD_OPTS)
        total += val
        a = b
    val, _ = integrate.quad(f, a, np.inf, **QUAD_OPTS)
    return total + val


def _theta_nodes():
    theta = 2 * math.pi * np.arange(THETA_NODES) / THETA_NODES
    return theta, 2 * math.pi / THETA_NODES


def rule_weighted_integral(rule, p, sp, grid):
    """``int |rule(y)|**p (1 + |y|)**(-N-sp) dy`` over R^N

    Raises:
        DivergenceError: If the rule grows too fast
    """
    if rule.is_zero:
        return 0.0
    check_tail(rule, p, sp, 'weighted L^p tail')
    dim = grid.dim
    if _is_constant(rule):
        c = abs(_constant_value(rule, dim)) ** p
        if dim == 1:
            return c * 2.0 / sp
        return c * 2 * math.pi / (sp * (1 + sp))
    if dim == 1:
        def f(y, sign):
            return abs(float(rule.evaluate(np.array([[sign * y]]))[0])) ** p * (1 + y) ** (-1 - sp)
        br = _breaks(grid, rule, 0.0)
        return sum(_half_line(lambda y, s=s: f(y, s), 0.0, br) for s in (1.0, -1.0))
    theta, dtheta = _theta_nodes()
    total = 0.0
    for th in theta:
        e = np.array([math.cos(th), math.sin(th)])
        def f(r, e=e):
            return abs(float(rule.evaluate((r * e)[None, :])[0])) ** p * r * (1 + r) ** (-2 - sp)
        total += _half_line(f, 0.0, _breaks(grid, rule, 0.0)) * dtheta
    return total


def rule_integral_outside_ball(rule, x, ball, p, sp, grid):
    """``int_{R^N minus E} |rule(y)|**p |x - y|**(-N-sp) dy`` for ``x`` in ``E``

    Raises:
        DivergenceError: If the rule grows too fast
    """
    if rule.is_zero:
        return 0.0
    check_tail(rule, p, sp, 'snail tail')
    x = np.asarray(x, dtype=float)
    c = np.asarray(ball.center)
    R = ball.radius
    dim = grid.dim
    if dim == 1:
        d_right = c[0] + R - x[0]
        d_left = x[0] - (c[0] - R)
        if _is_constant(rule):
            val = abs(_constant_value(rule, dim)) ** p
            return val * (d_right ** (-sp) + d_left ** (-sp)) / sp
        total = 0.0
        for sign, d0 in ((1.0, d_right), (-1.0, d_left)):
            def f(r, sign=sign):
                y = x[0] + sign * r
                return abs(float(rule.evaluate(np.array([[y]]))[0])) ** p * r ** (-1 - sp)
            brs = sorted({b - sign * x[0] for b in _breaks(grid, rule, 0.0)} |
                         {2 * d0, 4 * d0})
            total += _half_line(f, d0, [b for b in brs if b > d0])
        return total
    theta, dtheta = _theta_nodes()
    dx = x - c
    dd = float(dx @ dx)
    const = _is_constant(rule)
    cval = abs(_constant_value(rule, dim)) ** p if const else 0.0
    total = 0.0
    for th in theta:
        e = np.array([math.cos(th), math.sin(th)])
        b = float(dx @ e)
        r_exit = -b + math.sqrt(b * b - (dd - R * R))
        if const:
            total += cval * r_exit ** (-sp) / sp * dtheta
            continue
        def f(r, e=e):
            return abs(float(rule.evaluate((x + r * e)[None, :])[0])) ** p * r ** (-1 - sp)
        brs = [r_exit * 2, r_exit * 4] + [bb for bb in _breaks(grid, rule, r_exit) if bb > 4 * r_exit]
        total += _half_line(f, r_exit, sorted(set(brs))) * dtheta
    return total
