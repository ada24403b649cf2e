"""Structural checks of the Besov, Nikol'skii and snail estimates

Every check runs on a corpus of compactly supported test functions with a
zero exterior. Bounds with a universal constant are ratio tests: one
constant is fitted per bound and its spread over the corpus and the
orders must stay below :data:`~fraclab.verification.SPREAD_LIMIT`. Bounds
that hold with constant one (the inclusions, the first snail bound, the
small-translation reduction up to the triangle inequality) are checked
directly.
"""

import logging
import math

import numpy as np

from fraclab.diffops import delta_h, discrete_hessian, h_grid as make_h_grid, heat_kernel_l1_norms, \
    heat_smooth
from fraclab.errors import ParameterError
from fraclab.grid import Ball, make_grid, restrict_nodes, sample, zero_rule
from fraclab.kernels import FractionalParams
from fraclab.report import VerificationReport, loglog_slope
from fraclab.seminorms import besov2_sup, gagliardo, lp_norm, nikolskii_sup, snail_powers, \
    x_bracket, xps_norm
from fraclab.testfunctions import TestFunction
from fraclab.verification import DECAY_TOLERANCE, SPREAD_LIMIT, TARGETS

__all__ = (
    'ALPHAS', 'structure_corpus', 'check_besov_reductions', 'check_nikolskii_bounds',
    'check_converse', 'check_inclusions', 'check_snail_monotonicity', 'check_heat_semigroup',
    'verify_structure',
)

logger = logging.getLogger(__name__)

ALPHAS = (0.3, 0.5, 0.7)
H_MAX = 0.375
H0 = 0.1
REDUCTION_FACTOR = 4.0 / 3.0
EXACT_SLACK = 1e-10


def structure_corpus():
    """Six functions supported in ``[-0.6, 0.6]``, from smooth to kinked"""
    return [
        TestFunction('bump', {'radius': 0.5}),
        TestFunction('gaussian', {'sigma': 0.12}),
        TestFunction('spline', {'radius': 0.5}),
        TestFunction('tent', {'radius': 0.5}),
        TestFunction('tent', {'radius': 0.4}, center=(0.1,)),
        TestFunction('truncated_parabola', {'s': 0.5}, dilation=2.0),
    ]


def _default_grid():
    return make_grid(1, 1.0, 257)


def _whole(grid):
    """A ball holding every node of *grid*"""
    return Ball.centered(grid.dim, grid.box_halfwidth * math.sqrt(grid.dim) + grid.spacing)


def _sampled(corpus, grid):
    out = []
    for fun in corpus:
        out.append((f'{fun.tag}{fun.params}', sample(fun, grid, zero_rule())))
    return out


def _ratio(lhs, rhs):
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


def _shared_constant(report, name, ratios, detail):
    positive = [r for r in ratios if r > 0]
    if not positive:
        report.add(f'{name}_shared', metric=1.0, passed=True, samples=len(ratios), detail=detail)
        return
    spread = max(positive) / min(positive)
    report.fit(f'C_{name}', max(positive))
    report.add(f'{name}_shared', lhs=max(positive), rhs=min(positive), metric=spread,
               passed=spread < SPREAD_LIMIT, samples=len(ratios), detail=detail)


def check_besov_reductions(corpus=None, alphas=ALPHAS, p=2.0, grid=None, h0=H0):
    """Second differences control the Besov seminorm and first differences

    ``[psi]_B <= sup_{|h|<h0} ||delta2_h psi||/|h|**alpha + 3 h0**-alpha ||psi||``
    is checked up to the factor 4/3 given by the triangle inequality on
    ``|h| >= h0``. The two first-difference bounds (all ``h``, and
    ``|h| < h0`` with ``(h0**-alpha + 1)||psi||``) are ratio tests with the
    factor ``1/(1 - alpha)``.
    """
    grid = grid or _default_grid()
    corpus = corpus or structure_corpus()
    hs_all = make_h_grid(grid, H_MAX)
    hs_small = make_h_grid(grid, h0, strict=True)
    whole = _whole(grid)
    report = VerificationReport('structure')
    first, small = [], []
    for label, u in _sampled(corpus, grid):
        norm = lp_norm(u, None, p).value
        for a in alphas:
            B = besov2_sup(u, a, p, hs_all).value
            B_small = besov2_sup(u, a, p, hs_small).value
            rhs = B_small + 3.0 * h0 ** (-a) * norm
            ratio = _ratio(B, rhs)
            report.add('reduction_small_h', lhs=B, rhs=rhs, metric=ratio,
                       passed=ratio <= REDUCTION_FACTOR + EXACT_SLACK,
                       params={'alpha': a, 'p': p, 'h0': h0}, detail=label)
            nk = nikolskii_sup(u, whole, a, p, hs_all).value
            r1 = _ratio(nk, (B + norm) / (1.0 - a))
            first.append(r1)
            report.add('reduction', lhs=nk, rhs=(B + norm) / (1.0 - a), metric=r1,
                       passed=math.isfinite(r1), params={'alpha': a, 'p': p}, detail=label)
            nk_small = nikolskii_sup(u, whole, a, p, hs_small).value
            rhs2 = (B_small + (h0 ** (-a) + 1.0) * norm) / (1.0 - a)
            r2 = _ratio(nk_small, rhs2)
            small.append(r2)
            report.add('reduction_local', lhs=nk_small, rhs=rhs2, metric=r2,
                       passed=math.isfinite(r2), params={'alpha': a, 'p': p, 'h0': h0},
                       detail=label)
    _shared_constant(report, 'reduction', first, f'alpha in {list(alphas)}')
    _shared_constant(report, 'reduction_local', small, f'alpha in {list(alphas)}, h0={h0:g}')
    return report


def check_nikolskii_bounds(corpus=None, alphas=ALPHAS, p=2.0, grid=None, r=0.6, R=0.9, h0=H0,
                           local_radius=0.3, workers=1):
    """Nikol'skii quotients against the Gagliardo seminorm

    Global form ``sup ||delta_h psi/|h|**alpha||**p <= C (1-alpha) [psi]**p``
    with one shared constant; the compactly supported form on ``B_R`` for
    ``psi`` vanishing off ``B_r``; the local form on ``B_{local_radius}``
    with translations below *h0*.
    """
    grid = grid or _default_grid()
    corpus = corpus or structure_corpus()
    if not 0 < r < R:
        raise ParameterError('radii must satisfy 0 < r < R', 'r')
    N = grid.dim
    hs_all = make_h_grid(grid, H_MAX)
    hs_small = make_h_grid(grid, h0, strict=True)
    whole = _whole(grid)
    BR = Ball.centered(N, R)
    Bl = Ball.centered(N, local_radius)
    Blh = Ball.centered(N, local_radius + h0)
    report = VerificationReport('structure')
    ratios = []
    for label, u in _sampled(corpus, grid):
        for a in alphas:
            nk = nikolskii_sup(u, whole, a, p, hs_all).power
            W = gagliardo(u, whole, a, p, workers).power
            rhs = (1.0 - a) * W
            ratio = _ratio(nk, rhs)
            ratios.append(ratio)
            report.add('nikolskii', lhs=nk, rhs=rhs, metric=ratio, passed=math.isfinite(ratio),
                       params={'alpha': a, 'p': p}, detail=label)
            rhs_b = (1.0 / a) * (R / r) ** N * (R / (R - r)) ** (1 + p) * (1.0 - a) \
                * gagliardo(u, BR, a, p, workers).power
            rb = _ratio(nk, rhs_b)
            report.add('nikolskii_compact', lhs=nk, rhs=rhs_b, metric=rb,
                       passed=math.isfinite(rb), params={'alpha': a, 'p': p, 'r': r, 'R': R},
                       detail=label)
            nl = nikolskii_sup(u, Bl, a, p, hs_small).power
            rhs_l = (1.0 - a) * gagliardo(u, Blh, a, p, workers).power + (
                (1.0 + local_radius / h0) ** p * (local_radius + h0) ** (-a * p)
                + h0 ** (-a * p) / a) * lp_norm(u, Blh, p).power
            rl = _ratio(nl, rhs_l)
            report.add('nikolskii_local', lhs=nl, rhs=rhs_l, metric=rl,
                       passed=math.isfinite(rl),
                       params={'alpha': a, 'p': p, 'R': local_radius, 'h0': h0}, detail=label)
    _shared_constant(report, 'nikolskii', ratios, f'alpha in {list(alphas)}')
    return report


def check_converse(corpus=None, alphas=ALPHAS, p=2.0, grid=None, h0=H0, beta=None, workers=1):
    """Gagliardo seminorm from first differences of a higher order

    ``[psi]**p_{W^{alpha,p}} <= C (h0**((beta-alpha)p)/(beta-alpha) sup_{|h|<h0}
    ||delta_h psi/|h|**beta||**p + h0**(-alpha p)/alpha ||psi||**p)`` with
    ``beta = (1 + alpha)/2`` unless given.
    """
    grid = grid or _default_grid()
    corpus = corpus or structure_corpus()
    hs_small = make_h_grid(grid, h0, strict=True)
    whole = _whole(grid)
    report = VerificationReport('structure')
    ratios = []
    for label, u in _sampled(corpus, grid):
        norm_p = lp_norm(u, None, p).power
        for a in alphas:
            b = 0.5 * (1.0 + a) if beta is None else beta
            if not a < b <= 1:
                raise ParameterError('beta must satisfy alpha < beta ≤ 1', 'beta')
            W = gagliardo(u, whole, a, p, workers).power
            nk = nikolskii_sup(u, whole, b, p, hs_small).power
            rhs = h0 ** ((b - a) * p) / (b - a) * nk + h0 ** (-a * p) / a * norm_p
            ratio = _ratio(W, rhs)
            ratios.append(ratio)
            report.add('converse', lhs=W, rhs=rhs, metric=ratio, passed=math.isfinite(ratio),
                       params={'alpha': a, 'beta': b, 'p': p, 'h0': h0}, detail=label)
    _shared_constant(report, 'converse', ratios, f'alpha in {list(alphas)}')
    return report


def check_inclusions(corpus=None, s=0.5, p=2.0, grid=None, h0=H0, radius=0.5):
    """Weighted norms are dominated by their unweighted counterparts

    With the weight ``(1 + |x|)**(-N-sp) <= 1`` the ``X`` norm is at most the
    ``L^p`` norm, the weighted difference quotients of order ``s`` at most
    the plain ones, and on ``B_radius`` the plain ones at most
    ``(1 + radius)**(N+sp)`` times the weighted ones.
    """
    grid = grid or _default_grid()
    corpus = corpus or structure_corpus()
    params = FractionalParams(grid.dim, s, p)
    N, sp = grid.dim, params.sp
    hs_small = make_h_grid(grid, h0, strict=True)
    weight = (1.0 + np.sqrt(np.sum(grid.nodes ** 2, axis=1))) ** (-N - sp)
    idx = restrict_nodes(grid, Ball.centered(N, radius))
    w = grid.cell_volume
    report = VerificationReport('structure')

    def exact(name, lhs, rhs, label, **extra):
        slack = (rhs - lhs) / rhs if rhs > 0 else (0.0 if lhs == 0 else -math.inf)
        report.add(name, lhs=lhs, rhs=rhs, metric=slack, passed=slack >= -EXACT_SLACK,
                   params={'s': s, 'p': p, **extra}, detail=label)

    for label, u in _sampled(corpus, grid):
        exact('lp_inclusion', xps_norm(u, params).power, lp_norm(u, None, p).power, label)
        weighted, plain, local = 0.0, 0.0, 0.0
        for t in hs_small:
            q = np.abs(delta_h(u, t).flat / t.magnitude ** s) ** p
            weighted = max(weighted, float(np.sum(q * weight) * w))
            plain = max(plain, float(np.sum(q) * w))
            local = max(local, float(np.sum(q[idx]) * w))
        exact('wsp_inclusion', weighted, plain, label, h0=h0)
        exact('wsploc_inclusion', (1.0 + radius) ** (-N - sp) * local, weighted, label,
              h0=h0, radius=radius)
    report.worst_is_min = True
    return report


def check_snail_monotonicity(u, F1, E1, F2, E2, params):
    """Snail tails shrink when the removed set grows

    The first bound holds with constant one; the discrete volume of ``F1``
    (its node count times the cell volume) is used so that it is exact on
    the grid. The bracket form is reported as a ratio.

    Raises:
        ParameterError: Unless ``F1 ⊂ F2``, ``E1 ⊂ E2`` and ``F_i ⋐ E_i``
    """
    for F, E in ((F1, E1), (F2, E2)):
        if not E.contains_ball(F):
            raise ParameterError('F must be compactly contained in E', 'F')
    for inner, outer, name in ((F1, F2, 'F1'), (E1, E2, 'E1')):
        if not (outer.center_distance(inner) + inner.radius <= outer.radius):
            raise ParameterError(f'{name} must be contained in {name[0]}2', name)
    grid = u.grid
    N, p, sp = grid.dim, params.p, params.sp
    w = grid.cell_volume
    f1 = restrict_nodes(grid, F1)
    f2 = restrict_nodes(grid, F2)
    lhs = float(np.sum(snail_powers(u, grid.nodes[f1], E1, params))) * w
    outer = float(np.sum(snail_powers(u, grid.nodes[f2], E2, params))) * w
    ring = E2.mask(grid.nodes) & ~E1.mask(grid.nodes)
    ring_mass = float(np.sum(np.abs(u.flat[ring]) ** p)) * w
    vol_F1 = f1.size * w
    d = E1.gap_to(F1)
    factor = (E1.volume() / E2.volume()) ** (sp / N)
    rhs = factor * (outer + vol_F1 * E2.volume() ** (sp / N) * d ** (-N - sp) * ring_mass)
    report = VerificationReport('structure')
    slack = (rhs - lhs) / rhs if rhs > 0 else (0.0 if lhs == 0 else -math.inf)
    report.add('snail_monotone', lhs=lhs, rhs=rhs, metric=slack, passed=slack >= -EXACT_SLACK,
               params={'s': params.s, 'p': p})
    bl = x_bracket(u, F1, E1, params).power
    br = factor * (1.0 + F1.volume() * E2.volume() ** (sp / N) / d ** (N + sp)) \
        * x_bracket(u, F2, E2, params).power
    ratio = _ratio(bl, br)
    report.add('snail_bracket', lhs=bl, rhs=br, metric=ratio, passed=math.isfinite(ratio),
               params={'s': params.s, 'p': p})
    return report


def check_heat_semigroup(times=(0.1, 0.05, 0.02, 0.01), p=2.0, semigroup_tolerance=1e-8):
    """Heat kernel decay, the semigroup law and the time-derivative decay

    ``||grad K_t||_{L^1}`` and ``||D^2 K_t||_{L^1}`` must decay with slopes
    ``-1/2`` and ``-1`` (within :data:`~fraclab.verification.DECAY_TOLERANCE`).
    ``K_t * K_t * psi`` must equal ``K_{2t} * psi``. The time derivative
    ``d/dt psi_{t/2} = Laplacian psi_{t/2}`` of the tent of radius 3 must
    decay like ``t**(alpha/2 - 1)`` with its sharp order ``alpha = 1 + 1/p``.
    """
    report = VerificationReport('structure')
    kgrid = make_grid(1, 3.0, 1025)
    norms = [heat_kernel_l1_norms(kgrid, t) for t in times]
    for k, (name, expected) in enumerate((('heat_gradient_decay', -0.5),
                                          ('heat_hessian_decay', -1.0))):
        fit = loglog_slope(times, [n[k] for n in norms])
        rel = abs(fit.slope - expected) / abs(expected)
        report.add(name, lhs=fit.slope, rhs=expected, metric=rel, passed=rel <= DECAY_TOLERANCE,
                   samples=len(times), detail=f'residual {fit.residual:.3g}')
    grid = make_grid(1, 2.0, 513)
    psi = sample(TestFunction('bump', {'radius': 0.5}), grid, zero_rule())
    t = min(times)
    twice = heat_smooth(heat_smooth(psi, t), t)
    once = heat_smooth(psi, 2 * t)
    gap = float(np.max(np.abs(twice.flat - once.flat))) / float(np.max(np.abs(once.flat)))
    report.add('heat_semigroup', lhs=gap, rhs=semigroup_tolerance, metric=gap,
               passed=gap <= semigroup_tolerance, params={'t': t})
    tgrid = make_grid(1, 5.0, 513)
    tent = sample(TestFunction('tent', {'radius': 3.0}), tgrid)
    w = tgrid.cell_volume
    dt = []
    for tt in times:
        H = discrete_hessian(heat_smooth(tent, tt / 2.0))
        lap = np.trace(H, axis1=-2, axis2=-1).ravel()
        dt.append(float(np.sum(np.abs(lap) ** p) * w) ** (1.0 / p))
    alpha = 1.0 + 1.0 / p
    expected = alpha / 2.0 - 1.0
    fit = loglog_slope(times, dt)
    rel = abs(fit.slope - expected) / abs(expected)
    report.add('time_derivative_decay', lhs=fit.slope, rhs=expected, metric=rel,
               passed=rel <= DECAY_TOLERANCE, params={'p': p, 'alpha': alpha},
               samples=len(times), detail=f'tent rho=3, residual {fit.residual:.3g}')
    report.tables['time_derivative'] = list(zip(times, dt))
    return report


def verify_structure(p=2.0, alphas=ALPHAS, grid=None, workers=1):
    """All structural checks in one report"""
    grid = grid or _default_grid()
    corpus = structure_corpus()
    report = VerificationReport('structure')
    report.extend(check_besov_reductions(corpus, alphas, p, grid))
    report.extend(check_nikolskii_bounds(corpus, alphas, p, grid, workers=workers))
    report.extend(check_converse(corpus, alphas, p, grid, workers=workers))
    report.extend(check_inclusions(corpus, 0.5, p, grid))
    params = FractionalParams(grid.dim, 0.5, p)
    u = sample(TestFunction('bump', {'radius': 0.8}), grid, zero_rule())
    report.extend(check_snail_monotonicity(
        u, Ball.centered(grid.dim, 0.2), Ball.centered(grid.dim, 0.4),
        Ball.centered(grid.dim, 0.3), Ball.centered(grid.dim, 0.6), params))
    report.extend(check_heat_semigroup(p=p))
    logger.info(report.verdict_line())
    return report


@TARGETS.register('structure', params={'p': 2.0})
def _target_structure(seed, workers, p):
    return verify_structure(p, workers=workers)
