"""Fractional seminorms, difference-quotient suprema and tail brackets

Every function returns a :class:`SeminormResult` (except :func:`snail`)
whose ``metadata`` records node counts, tail radii and the maximizing
translation for suprema.

.. doctest:: seminorms_module

    >>> from fraclab.grid import make_grid, sample, Ball
    >>> from fraclab.testfunctions import TestFunction
    >>> from fraclab.seminorms import gagliardo
    >>> g = make_grid(1, 1.0, 33)
    >>> u = sample(TestFunction('constant', {'c': 2.0}), g)
    >>> gagliardo(u, Ball((0.0,), 0.5), 0.5, 2.0).value
    0.0
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from fraclab.diffops import Translation, delta2_h, delta_h, h_grid as make_h_grid
from fraclab.errors import DomainError, ParameterError
from fraclab.grid import Ball, restrict_nodes
from fraclab.quadrature import (
    rule_integral_outside_ball, rule_weighted_integral, tiled_sum, zeta_correction,
)
from fraclab.registry import Registry

__all__ = (
    'SeminormSpec', 'SeminormResult', 'SEMINORMS', 'lp_norm', 'gagliardo',
    'nikolskii_sup', 'besov2_sup', 'xps_norm', 'snail', 'snail_powers',
    'x_bracket', 'y_bracket', 'composite_AR',
)

logger = logging.getLogger(__name__)

SEMINORMS = Registry('seminorm')


@dataclass(frozen=True)
class SeminormSpec(object):
    """What was computed: kind, sets, exponents and translations"""
    kind: str
    sets: Tuple[Ball, ...] = ()
    alpha: Optional[float] = None
    p: Optional[float] = None
    t: Optional[float] = None
    h_grid: Tuple[Translation, ...] = ()

    def describe(self):
        d = {'kind': self.kind}
        for key in ('alpha', 'p', 't'):
            val = getattr(self, key)
            if val is not None:
                d[key] = val
        if self.sets:
            d['sets'] = [{'center': list(b.center), 'radius': b.radius} for b in self.sets]
        if self.h_grid:
            d['h_count'] = len(self.h_grid)
        return d


@dataclass(frozen=True)
class SeminormResult(object):
    value: float
    spec: SeminormSpec
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f'seminorm value must be nonnegative, got {self.value!r}')

    @property
    def power(self):
        """``value ** p``"""
        return self.value ** self.spec.p


def _check_alpha(alpha, lo, hi, name='alpha'):
    if not lo < alpha < hi:
        raise ParameterError(f'{name} must lie in ({lo:g},{hi:g})', name)


def _translations(grid, hs):
    out = [Translation.coerce(h, grid.dim) for h in hs]
    if not out:
        raise ParameterError('h_grid must not be empty', 'h_grid')
    for t in out:
        if t.magnitude == 0:
            raise ParameterError('h_grid must not contain 0', 'h_grid')
        t.steps(grid)
    return out


def _lp_power(values, idx, p, w):
    v = np.abs(values.ravel()[idx]) if idx is not None else np.abs(values.ravel())
    return float(np.sum(v ** p) * w)


@SEMINORMS.register('lp')
def lp_norm(u, E=None, p=2.0):
    """Discrete ``L^p(E)`` norm with cell weights (whole box if *E* is None)"""
    idx = restrict_nodes(u, E) if E is not None else None
    val = _lp_power(u.values, idx, p, u.grid.cell_volume) ** (1.0 / p)
    spec = SeminormSpec('lp', (E,) if E is not None else (), p=p)
    return SeminormResult(val, spec, {'nodes': u.grid.size if idx is None else int(idx.size)})


def _gagliardo_power(grid, pts, vals, alpha, p, workers):
    N = grid.dim
    expo = N + alpha * p
    def block(i0, i1):
        d = pts[i0:i1, None, :] - pts[None, :, :]
        r = np.sqrt(np.sum(d * d, axis=-1))
        num = np.abs(vals[i0:i1, None] - vals[None, :]) ** p
        with np.errstate(divide='ignore', invalid='ignore'):
            terms = np.where(r > 0, num / r ** expo, 0.0)
        return float(terms.sum())
    return tiled_sum(len(vals), block, workers) * grid.cell_volume ** 2


@SEMINORMS.register('gagliardo')
def gagliardo(u, E, alpha, p, workers=1, diagonal_correction=False):
    """``[u]_{W^{alpha,p}(E)}`` as an off-diagonal node double sum

    ``(sum_{x != y} |u(x) - u(y)|**p / |x - y|**(N + alpha p) w**2)**(1/p)``
    over the nodes of *E*, ``w = spacing**N``.

    Args:
        diagonal_correction (bool): In 1D, add the zeta-function estimate of
            the excluded diagonal mass, built from forward differences

    Raises:
        ParameterError: If ``alpha`` is outside (0,1) or ``p < 1``
    """
    _check_alpha(alpha, 0.0, 1.0)
    if not p >= 1:
        raise ParameterError('p must satisfy p ≥ 1', 'p')
    grid = u.grid
    idx = restrict_nodes(u, E)
    pts = grid.nodes[idx]
    vals = u.flat[idx]
    total = _gagliardo_power(grid, pts, vals, alpha, p, workers)
    meta = {'nodes': int(idx.size), 'pairs': int(idx.size) * max(int(idx.size) - 1, 0)}
    if diagonal_correction:
        if grid.dim != 1:
            raise ParameterError('diagonal_correction is only available for dim=1',
                                 'diagonal_correction')
        beta = p - 1.0 - alpha * p
        if idx.size > 1 and beta > -1:
            h = grid.spacing
            D = np.diff(vals) / h
            corr = zeta_correction(beta) * h ** (1 + beta) * float(np.sum(np.abs(D) ** p)) * h
            meta['diagonal_correction'] = corr
            total += corr
    value = max(total, 0.0) ** (1.0 / p)
    return SeminormResult(value, SeminormSpec('gagliardo', (E,), alpha=alpha, p=p), meta)


@SEMINORMS.register('nikolskii')
def nikolskii_sup(u, E, alpha, p, h_grid):
    """``max_h || delta_h u / |h|**alpha ||_{L^p(E)}`` over grid-aligned ``h``

    Raises:
        ParameterError: If *h_grid* is empty or contains 0
        AlignmentError: If some ``h`` is not grid-aligned
    """
    hs = _translations(u.grid, h_grid)
    idx = restrict_nodes(u, E)
    w = u.grid.cell_volume
    best, arg, per_h = 0.0, None, []
    for t in hs:
        q = _lp_power(delta_h(u, t).values, idx, p, w) ** (1.0 / p) / t.magnitude ** alpha
        per_h.append((t.h, q))
        if arg is None or q > best:
            best, arg = q, t.h
    spec = SeminormSpec('nikolskii', (E,), alpha=alpha, p=p, h_grid=tuple(hs))
    return SeminormResult(best, spec, {'argmax_h': arg, 'per_h': per_h, 'nodes': int(idx.size)})


@SEMINORMS.register('besov2')
def besov2_sup(u, alpha, p, h_grid, E=None):
    """``max_h || delta2_h u / |h|**alpha ||_{L^p}`` over the box (or *E*)

    Raises:
        ParameterError: If ``alpha`` is outside (0,2) or *h_grid* is empty
    """
    _check_alpha(alpha, 0.0, 2.0)
    hs = _translations(u.grid, h_grid)
    idx = restrict_nodes(u, E) if E is not None else None
    w = u.grid.cell_volume
    best, arg, per_h = 0.0, None, []
    for t in hs:
        q = _lp_power(delta2_h(u, t).values, idx, p, w) ** (1.0 / p) / t.magnitude ** alpha
        per_h.append((t.h, q))
        if arg is None or q > best:
            best, arg = q, t.h
    spec = SeminormSpec('besov2', (E,) if E is not None else (), alpha=alpha, p=p, h_grid=tuple(hs))
    return SeminormResult(best, spec, {'argmax_h': arg, 'per_h': per_h})


def _weight(points, dim, sp):
    r = np.sqrt(np.sum(points * points, axis=1))
    return (1.0 + r) ** (-dim - sp)


@SEMINORMS.register('xps')
def xps_norm(u, params):
    """``(int |u|**p (1 + |x|)**(-N-sp) dx)**(1/p)``

    The exterior rule is integrated over all of R^N by quadrature; box nodes
    where ``u`` differs from the rule add ``(|u|**p - |rule|**p) * weight``.

    Raises:
        DivergenceError: If the rule is not integrable against the weight
    """
    grid = u.grid
    p, sp = params.p, params.sp
    tail = rule_weighted_integral(u.exterior, p, sp, grid)
    wts = _weight(grid.nodes, grid.dim, sp) * grid.cell_volume
    corr = float(np.sum((np.abs(u.flat) ** p - np.abs(u.rule_values()) ** p) * wts))
    total = max(tail + corr, 0.0)
    meta = {'rule_integral': tail, 'node_correction': corr,
            'tail_radius': u.exterior.truncation_radius or grid.box_halfwidth}
    return SeminormResult(total ** (1.0 / p), SeminormSpec('xps', p=p, alpha=params.s), meta)


def snail_powers(u, xs, E, params):
    """``Snail(u; x, E)**p`` for each row of *xs*

    Raises:
        DomainError: If some ``x`` is not in ``E``
    """
    grid = u.grid
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if not np.all(E.mask(xs)):
        bad = xs[~E.mask(xs)][0]
        raise DomainError(f'snail point {tuple(bad)} is not inside the ball {E}')
    p, sp, N = params.p, params.sp, grid.dim
    outside = np.flatnonzero(~E.mask(grid.nodes))
    diff = np.abs(u.flat[outside]) ** p - np.abs(u.rule_values()[outside]) ** p
    out = np.empty(xs.shape[0])
    nz = np.flatnonzero(diff)
    ypts = grid.nodes[outside[nz]]
    for k, x in enumerate(xs):
        tail = rule_integral_outside_ball(u.exterior, x, E, p, sp, grid)
        if nz.size:
            d = ypts - x
            r = np.sqrt(np.sum(d * d, axis=1))
            tail += float(np.sum(diff[nz] * r ** (-N - sp))) * grid.cell_volume
        out[k] = max(tail, 0.0)
    return E.volume() ** (sp / N) * out


def snail(u, x, E, params):
    """``Snail(u; x, E) = (|E|**(sp/N) int_{R^N minus E} |u|**p |x - y|**(-N-sp) dy)**(1/p)``

    Raises:
        DomainError: If ``x`` is not in ``E``
    """
    return float(snail_powers(u, [np.atleast_1d(x)], E, params)[0]) ** (1.0 / params.p)


def _check_nested(F, E):
    if not E.contains_ball(F):
        raise ParameterError('F must be compactly contained in E', 'F')


@SEMINORMS.register('snail_bracket_X')
def x_bracket(u, F, E, params):
    """``(||u||^p_{L^p(E)} + int_F Snail(u; x, E)**p dx)**(1/p)``"""
    _check_nested(F, E)
    w = u.grid.cell_volume
    p = params.p
    lp = _lp_power(u.values, restrict_nodes(u, E), p, w)
    fidx = restrict_nodes(u, F)
    tail = float(np.sum(snail_powers(u, u.grid.nodes[fidx], E, params))) * w
    meta = {'lp_part': lp, 'snail_part': tail, 'nodes_F': int(fidx.size)}
    spec = SeminormSpec('snail_bracket_X', (F, E), alpha=params.s, p=p)
    return SeminormResult((lp + tail) ** (1.0 / p), spec, meta)


@SEMINORMS.register('snail_bracket_Y')
def y_bracket(u, F, E, params, h_grid=None, h0=None):
    """``max_h (int_F Snail(delta_h u / |h|**t; x, E)**p dx)**(1/p)``

    *h_grid* defaults to the aligned translations with ``|h| < h0``,
    ``h0 = d(F, E)/2``.

    Raises:
        ParameterError: If some ``|h| >= d(F, E)/2``
    """
    _check_nested(F, E)
    cap = E.gap_to(F) / 2.0
    if h0 is None:
        h0 = cap
    if h_grid is None:
        h_grid = make_h_grid(u.grid, min(h0, cap), strict=True)
    hs = _translations(u.grid, h_grid)
    for t in hs:
        if not t.magnitude < cap:
            raise ParameterError(
                f'|h| = {t.magnitude:.6g} must be below d(F,E)/2 = {cap:.6g}', 'h_grid')
    w = u.grid.cell_volume
    fpts = u.grid.nodes[restrict_nodes(u, F)]
    best, arg = 0.0, None
    for t in hs:
        dh = delta_h(u, t).scaled(t.magnitude ** -params.t)
        val = float(np.sum(snail_powers(dh, fpts, E, params))) * w
        if arg is None or val > best:
            best, arg = val, t.h
    spec = SeminormSpec('snail_bracket_Y', (F, E), alpha=params.s, p=params.p,
                        t=params.t, h_grid=tuple(hs))
    return SeminormResult(best ** (1.0 / params.p), spec, {'argmax_h': arg, 'h0': h0})


@SEMINORMS.register('composite_AR')
def composite_AR(u, f, R, params, center=None, workers=1):
    """The data quantity ``A_R(u, f)``: six nonnegative summands

    ``R^{sp}[u]^p_{W^{s,p}(B_R)} + ||u||^p_{L^p(B_R)}/(s(1-s))
    + <u>^p_{X(B_{3R/4}; B_R)}/s + R^{tp} <u>^p_{Y(B_{3R/4}; B_{7R/8})}
    + R^{sp p'} (R^{sp'} [(1-s)f]^{p'}_{W^{s,p'}(B_R)} + ||(1-s)f||^{p'}_{L^{p'}(B_R)}/(s(1-s)))``

    Returns:
        SeminormResult: ``metadata['summands']`` maps each term to its value

    Raises:
        DomainError: If ``B_R`` is not inside the grid box
    """
    grid = u.grid
    if center is None:
        center = (0.0,) * grid.dim
    c = np.asarray(center, dtype=float)
    if np.max(np.abs(c)) + R > grid.box_halfwidth * (1 + 1e-12):
        raise DomainError(f'B_R (R={R:g}) does not fit in the box of half-width {grid.box_halfwidth:g}')
    s, p, t = params.s, params.p, params.t
    pc = params.p_conj
    BR = Ball(tuple(c), R)
    B34 = Ball(tuple(c), 0.75 * R)
    B78 = Ball(tuple(c), 0.875 * R)
    fs = f.scaled(1.0 - s)
    terms = {
        'gagliardo_u': R ** (s * p) * gagliardo(u, BR, s, p, workers).value ** p,
        'lp_u': lp_norm(u, BR, p).value ** p / (s * (1 - s)),
        'x_bracket': x_bracket(u, B34, BR, params).value ** p / s,
        'y_bracket': R ** (t * p) * y_bracket(u, B34, B78, params).value ** p,
        'gagliardo_f': R ** (s * p * pc) * R ** (s * pc) * gagliardo(fs, BR, s, pc, workers).value ** pc,
        'lp_f': R ** (s * p * pc) * lp_norm(fs, BR, pc).value ** pc / (s * (1 - s)),
    }
    total = float(sum(terms.values()))
    logger.debug('A_R(R=%g) = %.6g %r', R, total, terms)
    spec = SeminormSpec('composite_AR', (BR,), alpha=s, p=p, t=t)
    return SeminormResult(total, spec, {'summands': terms, 'R': R})
