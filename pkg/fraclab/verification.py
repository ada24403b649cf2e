"""Ratio checks of the regularity estimates on computed solutions

Constants in the estimates are not explicit, so every check strips them:
both sides are computed, the ratio is reported and the verdict asks for
finite ratios that do not grow as the translation shrinks (plus a
shared-constant spread where one constant is claimed for a family).
Fitted constants are logged through
:meth:`VerificationReport.fit <fraclab.report.VerificationReport.fit>`.

:class:`VerificationHarness` runs named targets as independent jobs with
seeds spawned from one run seed.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from fraclab.diffops import (
    delta_h, discrete_gradient, discrete_hessian, gradient_norm, h_grid as make_h_grid,
    heat_smooth, make_cutoff,
)
from fraclab.errors import ParameterError, ResolutionError
from fraclab.events import Emitter, Property
from fraclab.grid import (
    Ball, GridFunction, affine_rule, make_grid, restrict_nodes, sample, zero_rule,
)
from fraclab.kernels import FractionalParams, standard_kernel
from fraclab.nonlinear import verify_pointwise_inequalities
from fraclab.registry import Registry
from fraclab.regularity import (
    classify_regime, dyadic_translations, estimate_order, robust_constant_regime,
)
from fraclab.report import VerificationReport, loglog_slope
from fraclab.seminorms import besov2_sup, composite_AR, gagliardo, lp_norm, nikolskii_sup, \
    x_bracket, y_bracket
from fraclab.solver import DirichletProblem, SolverConfig, solve_dirichlet
from fraclab.testfunctions import TestFunction, bbm_constant, plaplace_torsion

__all__ = (
    'benchmark_problem', 'solve_benchmark', 'verify_caccioppoli', 'verify_improvement',
    'verify_besov_embedding', 'bbm_limit', 'SWEEP_FAMILIES', 's_sweep_to_plaplacian',
    'iteration_trace', 'verify_regularity_estimate', 'difference_quotient_oracle',
    'ratio_growth', 'DRIFT_LIMIT', 'TARGETS', 'VerificationHarness',
)

logger = logging.getLogger(__name__)

SPREAD_LIMIT = 3.0
DECAY_TOLERANCE = 0.15
BBM_TOLERANCE = 0.10
DIAGONAL_SHARE_LIMIT = 0.75
DRIFT_LIMIT = 2.0


def benchmark_problem(s, p=2.0, n=257, t=0.0, f=1.0, g=0.0, box_halfwidth=1.0, dim=1):
    """``(-Delta_p)^s u = f`` in the unit ball with constant exterior datum ``g``"""
    params = FractionalParams(dim, s, p, t)
    grid = make_grid(dim, box_halfwidth, n)
    fg = sample(TestFunction('constant', {'c': float(f)}), grid)
    gfun = TestFunction('constant', {'c': float(g)})
    gg = sample(gfun, grid, zero_rule() if g == 0 else None)
    return DirichletProblem(Ball.centered(dim, 1.0), fg, gg, standard_kernel(params))


def solve_benchmark(problem, config=None):
    """Solve with the dense linear solve for p=2, descent otherwise"""
    if config is None:
        config = SolverConfig(method='direct' if problem.params.p == 2 else 'descent')
    return solve_dirichlet(problem, config)


def _center(grid, center):
    return tuple(float(v) for v in (np.zeros(grid.dim) if center is None else np.atleast_1d(center)))


def _prop_h0(omega, center, r, R):
    """``(1/4) min{dist(B_R, boundary of omega), R - r, 1}``"""
    dist = omega.radius - float(np.linalg.norm(np.asarray(center) - np.asarray(omega.center))) - R
    if not dist > 0:
        raise ParameterError(f'B_R (R={R:g}) is not compactly inside omega', 'R')
    return 0.25 * min(dist, R - r, 1.0)


def _check_gamma(gamma, params):
    if not params.s <= gamma <= 1:
        raise ParameterError('gamma must satisfy s ≤ gamma ≤ 1', 'gamma')


def _translations_below(grid, h0, h_set):
    if h_set is None:
        h_set = dyadic_translations(grid, h0)
    hs = list(h_set)
    if not hs:
        raise ParameterError(f'no grid-aligned translation below h0 = {h0:.6g}', 'h_set')
    for h in hs:
        mag = float(np.linalg.norm(np.atleast_1d(getattr(h, 'h', h))))
        if not 0 < mag < h0:
            raise ParameterError(f'|h| = {mag:.6g} must lie in (0, h0 = {h0:.6g})', 'h_set')
    return hs


def _mag(h):
    return float(np.linalg.norm(np.atleast_1d(getattr(h, 'h', h))))


def ratio_growth(hs, ratios):
    """Largest factor by which a per-``h`` ratio grows as ``|h|`` shrinks

    Ratios are compared between consecutive magnitudes, the largest ratio
    per magnitude standing for it. A bound with an ``h``-uniform constant
    keeps this factor bounded; decay toward small ``h`` counts as 1.

    >>> ratio_growth([0.25, 0.5, 1.0], [0.1, 0.4, 1.0])
    1.0
    >>> ratio_growth([0.25, 0.5, 1.0], [50.0, 1.0, 0.5])
    50.0
    >>> ratio_growth([0.5], [3.0])
    1.0
    """
    by_mag = {}
    for h, q in zip(hs, ratios):
        m = _mag(h)
        by_mag[m] = max(by_mag.get(m, q), q)
    qs = [by_mag[m] for m in sorted(by_mag)]
    growth = 1.0
    for small, large in zip(qs, qs[1:]):
        if small > 0:
            growth = max(growth, small / large if large > 0 else math.inf)
    return growth


def _cutoff_quotients(u_eta, BR, gamma, params, hs, workers):
    """``[delta_h(u eta)/|h|^{(gamma+t)/p}]^p_{W^{s,p}(B_R)}`` per ``h``"""
    p = params.p
    out = []
    for h in hs:
        q = delta_h(u_eta, h).scaled(_mag(h) ** (-(gamma + params.t) / p))
        out.append(gagliardo(q, BR, params.s, p, workers).power)
    return out


def verify_caccioppoli(u, f, r, R, gamma, params, h_set=None, center=None, omega=None,
                       h0=None, workers=1):
    """Both sides of the differentiability scheme for each ``h``

    The left side is ``[delta_h(u eta)/|h|^{(gamma+t)/p}]^p_{W^{s,p}(B_R)}``;
    the right side is the sum of its five data terms with the constant
    removed. Ratios are homogeneous under ``(u, f) -> (lam u, lam^{p-1} f)``.

    Args:
        u, f: Solution and right-hand side as grid functions
        r, R (float): Radii ``0 < r < R`` of the concentric balls
        gamma (float): ``s <= gamma <= 1``
        params: :class:`~fraclab.kernels.FractionalParams`
        h_set: Translations with ``0 < |h| < h0``; dyadic by default
        omega: Domain ball (default: the ball inscribed in the box)
        h0 (float): Defaults to ``0.99`` of its admissible cap

    Raises:
        ParameterError: If ``gamma`` is outside ``[s, 1]`` or some ``h`` is too large
    """
    _check_gamma(gamma, params)
    grid = u.grid
    N, s, p, t = grid.dim, params.s, params.p, params.t
    c = _center(grid, center)
    omega = omega or Ball.centered(N, grid.box_halfwidth)
    cap = _prop_h0(omega, c, r, R)
    if h0 is None:
        h0 = 0.99 * cap
    elif not 0 < h0 < cap:
        raise ParameterError(f'h0 must lie in (0, {cap:.6g})', 'h0')
    hs = _translations_below(grid, h0, h_set)
    w = grid.cell_volume
    Rr = R - r
    BR = Ball(c, R)
    BRh = Ball(c, R + h0)
    Bmid = Ball(c, 0.5 * (R + r))
    cut = make_cutoff(r, R, grid, c)
    u_eta = cut.apply(u)
    lhs = _cutoff_quotients(u_eta, BR, gamma, params, hs, workers)

    fixed = {
        'local': (R / Rr) ** p * h0 ** (-gamma - t) * (
            gagliardo(u, BRh, s, p, workers).power
            + lp_norm(u, BRh, p).power / (s * (1 - s) * R ** (s * p))),
        'x_bracket': (1.0 / s) * ((R + r) / Rr) ** N * ((R + 1) / Rr) ** (s * p) * Rr ** (-s * p)
        * x_bracket(u, Ball(c, 0.5 * (R + r) + h0), BRh, params).power,
        'y_bracket': R ** (-s * p) * y_bracket(u, Bmid, BR, params).power,
    }
    report = VerificationReport('caccioppoli')
    pc = params.p_conj
    idx = restrict_nodes(u, BR)
    ratios = []
    for h, left in zip(hs, lhs):
        mag = _mag(h)
        dq = delta_h(u, h).flat[idx] / mag ** gamma
        diff_term = (R / Rr) ** p / ((1 - s) * s) * Rr ** (-s * p) * float(np.sum(np.abs(dq) ** p) * w)
        df = delta_h(f, h).flat[idx] / mag ** s
        f_term = (1 - s) ** (1.0 / (p - 1)) * R ** (s * pc) * float(np.sum(np.abs(df) ** pc) * w)
        rhs = diff_term + f_term + sum(fixed.values())
        ratio = left / rhs if rhs > 0 else (0.0 if left == 0 else math.inf)
        ratios.append(ratio)
        report.add('scheme', lhs=left, rhs=rhs, metric=ratio, passed=math.isfinite(ratio),
                   params={'h': mag, 'gamma': gamma, 'r': r, 'R': R, 's': s, 'p': p, 't': t})
    growth = ratio_growth(hs, ratios)
    report.add('drift', lhs=max(ratios), rhs=min(ratios), metric=growth,
               passed=growth < DRIFT_LIMIT, params={'gamma': gamma, 's': s, 'p': p},
               samples=len(ratios))
    worst = max(ratios)
    report.fit('C_caccioppoli', worst)
    report.metadata.update(h0=h0, fixed_terms=fixed, cutoff_constant=cut.gradient_constant,
                           max_ratio=worst, drift=growth)
    return report


def _branch_bracket(M, s, h0, Gamma, p, u_lp):
    return (1 - s) * M + h0 ** (-Gamma * p) * u_lp


def verify_improvement(u, r, R, gamma, params, h0=None, h_set=None, center=None, omega=None,
                       tau=None, workers=1):
    """Besov-Nikol'skii improvement from ``M_gamma``, constants stripped

    ``M_gamma`` is the largest cut-off quotient over the translations. The
    Besov bound of ``u eta`` at order ``Gamma = (gamma + t + sp)/p`` is
    checked, then the branch of ``Gamma``: first differences of order
    ``Gamma`` on ``B_r`` (``Gamma < 1``), order ``tau < 1`` (``Gamma = 1``),
    or the gradient in ``L^p`` and ``W^{tau,p}`` (``Gamma > 1``).

    Raises:
        ParameterError: If ``gamma`` is outside ``[s, 1]`` or ``Gamma >= 2``
    """
    _check_gamma(gamma, params)
    grid = u.grid
    N, s, p, t = grid.dim, params.s, params.p, params.t
    Gamma = (gamma + t + s * p) / p
    if not Gamma < 2:
        raise ParameterError(f'Gamma = {Gamma:g} must be below 2', 'gamma')
    c = _center(grid, center)
    omega = omega or Ball.centered(N, grid.box_halfwidth)
    cap = _prop_h0(omega, c, r, R)
    if h0 is None:
        h0 = 0.99 * cap
    hs = _translations_below(grid, h0, h_set)
    BR, Br, BRh = Ball(c, R), Ball(c, r), Ball(c, R + h0)
    cut = make_cutoff(r, R, grid, c)
    u_eta = cut.apply(u)
    quotients = _cutoff_quotients(u_eta, BR, gamma, params, hs, workers)
    M = max(quotients)
    u_lp = lp_norm(u, BRh, p).power
    bracket = _branch_bracket(M, s, h0, Gamma, p, u_lp)
    geom = (R / r) ** N * (R / h0) ** (1 + p)
    report = VerificationReport('improvement')
    base = {'gamma': gamma, 'Gamma': Gamma, 's': s, 'p': p, 't': t, 'h0': h0}

    def add(name, lhs, rhs, **extra):
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        report.add(name, lhs=lhs, rhs=rhs, metric=ratio, passed=math.isfinite(ratio),
                   params={**base, **extra})
        return ratio

    besov_h = make_h_grid(grid, grid.box_halfwidth)
    besov = besov2_sup(u_eta, Gamma, p, besov_h).power
    add('besov', besov, geom / s * bracket)
    if abs(Gamma - 1.0) <= 1e-12:
        branch = 'equal'
        tau = 0.5 if tau is None else tau
        nk = nikolskii_sup(u, Br, tau, p, hs).power
        add('first_difference', nk, geom / (1 - tau) ** p * _branch_bracket(M, s, h0, 1.0, p, u_lp),
            tau=tau)
    elif Gamma < 1:
        branch = 'below'
        nk = nikolskii_sup(u, Br, Gamma, p, hs).power
        add('first_difference', nk, geom / (s * (1 - Gamma) ** p) * bracket)
    else:
        branch = 'above'
        idx = restrict_nodes(u, Br)
        w = grid.cell_volume
        grad_lp = float(np.sum(gradient_norm(u)[idx] ** p) * w)
        add('gradient_lp', grad_lp, geom / (Gamma - 1) ** p * bracket)
        tau = 0.5 * (Gamma - 1) if tau is None else tau
        if not 0 < tau < Gamma - 1:
            raise ParameterError('tau must satisfy 0 < tau < Gamma - 1', 'tau')
        grad = discrete_gradient(u)
        gs = sum(gagliardo(GridFunction(grid, grad[..., j], zero_rule()), Br, tau, p, workers).power
                 for j in range(N))
        rhs = geom / ((Gamma - 1 - tau) * tau) * (
            h0 ** (-tau) / ((2 - Gamma) * (Gamma - 1))) ** p * bracket
        add('gradient_fractional', gs, rhs, tau=tau)
    report.metadata.update(branch=branch, M_gamma=M, Gamma=Gamma, h0=h0)
    report.fit('C_improvement', max(row.metric for row in report.rows))
    growth = ratio_growth(hs, quotients)
    report.add('drift', lhs=M, rhs=min(quotients), metric=growth, passed=growth < DRIFT_LIMIT,
               params=base, samples=len(quotients))
    report.metadata['drift'] = growth
    logger.info('improvement: Gamma=%.6g branch=%s M_gamma=%.6g', Gamma, branch, M)
    return report


def _spline_corpus():
    return [TestFunction('spline', {'radius': rad}) for rad in (1.0, 0.8, 0.6)]


def _heat_decay(p, times, grid=None, rho=3.0):
    """Slope of ``log ||D^2 psi_t||_{L^p}`` for the tent of radius *rho*"""
    grid = grid or make_grid(1, 5.0, 513)
    psi = sample(TestFunction('tent', {'radius': rho}), grid)
    norms = []
    w = grid.cell_volume
    for t in times:
        H = discrete_hessian(heat_smooth(psi, t))
        if grid.dim == 1:
            mag = np.abs(H[..., 0, 0]).ravel()
        else:
            mag = np.linalg.norm(H.reshape(-1, grid.dim, grid.dim), ord=2, axis=(-2, -1))
        norms.append(float(np.sum(mag ** p) * w) ** (1.0 / p))
    fit = loglog_slope(times, norms)
    alpha = 1.0 + 1.0 / p
    return fit, norms, 0.5 * (alpha - 2.0)


def verify_besov_embedding(psi=None, alpha=(1.25, 1.5, 1.75), p=2.0, grid=None,
                           times=(0.1, 0.05, 0.01), eps_list=(0.5, 0.25, 0.125)):
    """Gradient bound from the Besov seminorm of order ``1 < alpha < 2``

    For every function and order, ``||grad psi|| / (||psi|| + [psi]_B/(alpha-1))``
    is one ratio; the largest is the fitted constant and the spread over the
    orders must stay below :data:`SPREAD_LIMIT`. The gradient difference
    bound is checked as a bounded ratio. The heat decay of
    ``||D^2 psi_t||`` is fitted on the tent family, whose sharp order is
    ``1 + 1/p``; its slope must lie within 15% of ``(alpha - 2)/2``.

    Args:
        psi: A :class:`~fraclab.testfunctions.TestFunction` or a sequence;
            defaults to three quadratic splines

    Raises:
        ParameterError: If some ``alpha`` is outside (1,2)
    """
    alphas = tuple(np.atleast_1d(alpha).astype(float))
    for a in alphas:
        if not 1 < a < 2:
            raise ParameterError('alpha must lie in (1,2)', 'alpha')
    if psi is None:
        corpus = _spline_corpus()
    elif isinstance(psi, TestFunction):
        corpus = [psi]
    else:
        corpus = list(psi)
    grid = grid or make_grid(1, 2.0, 513)
    hs = make_h_grid(grid, grid.box_halfwidth)
    w = grid.cell_volume
    report = VerificationReport('embedding')
    ratios, trend = [], []
    for fun in corpus:
        u = sample(fun, grid)
        lp = lp_norm(u, None, p).value
        grad_lp = float(np.sum(gradient_norm(u) ** p) * w) ** (1.0 / p)
        grad = discrete_gradient(u)
        label = f'{fun.tag}{fun.params}'
        for a in alphas:
            B = besov2_sup(u, a, p, hs).value
            rhs = lp + B / (a - 1.0)
            ratio = grad_lp / rhs if rhs > 0 else 0.0
            ratios.append(ratio)
            report.add('embedding', lhs=grad_lp, rhs=rhs, metric=ratio,
                       passed=math.isfinite(ratio), params={'alpha': a, 'p': p}, detail=label)
            dg = 0.0
            for h in hs:
                acc = 0.0
                for j in range(grid.dim):
                    gj = GridFunction(grid, grad[..., j], zero_rule())
                    acc += float(np.sum(np.abs(delta_h(gj, h).flat) ** p) * w)
                dg = max(dg, acc ** (1.0 / p) / h.magnitude ** (a - 1.0))
            rhs2 = B / ((2.0 - a) * (a - 1.0))
            ratio2 = dg / rhs2 if rhs2 > 0 else 0.0
            report.add('gradient_difference', lhs=dg, rhs=rhs2, metric=ratio2,
                       passed=math.isfinite(ratio2), params={'alpha': a, 'p': p}, detail=label)
        for eps in eps_list:
            B = besov2_sup(u, 2.0 - eps, p, hs).value
            trend.append((label, eps, B))
            report.add('besov_trend', lhs=B, rhs=math.nan, metric=B, informational=True,
                       params={'eps': eps, 'p': p}, detail=label)
    positive = [r for r in ratios if r > 0]
    spread = max(positive) / min(positive) if positive else 1.0
    report.fit('C_embedding', max(ratios))
    report.add('shared_constant', lhs=max(ratios), rhs=min(ratios), metric=spread,
               passed=spread < SPREAD_LIMIT, params={'p': p}, samples=len(ratios),
               detail=f'spread of the fitted constant over alpha in {list(alphas)}')
    fit, norms, expected = _heat_decay(p, times)
    rel = abs(fit.slope - expected) / abs(expected)
    report.add('heat_decay', lhs=fit.slope, rhs=expected, metric=rel,
               passed=rel <= DECAY_TOLERANCE, params={'p': p}, samples=len(times),
               detail=f'tent rho=3, residual {fit.residual:.3g}')
    report.tables['besov_trend'] = trend
    report.tables['heat_decay'] = list(zip(times, norms))
    return report


def _bbm_series(u_fun, ball, p, s_list, grid):
    u = sample(u_fun, grid)
    idx = restrict_nodes(grid, ball)
    w = grid.cell_volume
    dirichlet = float(np.sum(np.sum(u_fun.gradient(grid.nodes[idx]) ** 2, axis=1) ** (p / 2.0)) * w)
    rows, diag_share = [], []
    for s in s_list:
        res = gagliardo(u, ball, s, p, diagonal_correction=grid.dim == 1)
        total = res.power
        corr = res.metadata.get('diagonal_correction', 0.0)
        diag_share.append(corr / total if total > 0 else 0.0)
        value = (1.0 - s) * total
        rows.append((s, value, value / dirichlet if dirichlet > 0 else 0.0))
    return rows, dirichlet, diag_share


def _extrapolate(rows):
    """Value of the ratio at ``s = 1`` from a polynomial in ``1 - s``"""
    tail = rows[-3:]
    x = np.array([1.0 - r[0] for r in tail])
    y = np.array([r[2] for r in tail])
    coef = np.polyfit(x, y, min(2, len(tail) - 1))
    return float(np.polyval(coef, 0.0))


def bbm_limit(u, ball, p, s_list=(0.5, 0.7, 0.8, 0.9, 0.95), grid=None, reference=None):
    """Table of ``(s, (1-s)[u]^p_{W^{s,p}(ball)}, ratio to int |grad u|^p)``

    The ratio must settle (last two entries within 10%) and its
    extrapolated limit must agree within 10% with that of a second C1
    function (*reference*, default ``|x|**2``). In 1D the Gagliardo sums
    carry the diagonal correction; when it supplies more than
    :data:`DIAGONAL_SHARE_LIMIT` of a value a resolution warning is issued.
    """
    s_list = sorted(float(s) for s in s_list)
    if len(s_list) < 2:
        raise ParameterError('s_list needs at least two values', 's_list')
    if grid is None:
        grid = make_grid(len(ball.center), 0.5, 257)
    reference = reference or TestFunction('power', {'beta': 2.0})
    report = VerificationReport('bbm')
    limits = {}
    for label, fun in (('u', u), ('reference', reference)):
        rows, dirichlet, share = _bbm_series(fun, ball, p, s_list, grid)
        if share and max(share) > DIAGONAL_SHARE_LIMIT:
            msg = (f'grid spacing {grid.spacing:.4g} does not resolve s={s_list[-1]:g}: '
                   f'{max(share):.0%} of the value is the diagonal estimate')
            logger.warning(msg)
            warnings.warn(msg, RuntimeWarning)
        report.tables[f'bbm_{label}'] = rows
        for s, value, ratio in rows:
            report.add(f'{label}_ratio', lhs=value, rhs=dirichlet, metric=ratio,
                       informational=True, params={'s': s, 'p': p})
        last, prev = rows[-1][2], rows[-2][2]
        settle = abs(last - prev) / abs(last) if last else 0.0
        report.add(f'{label}_settled', lhs=last, rhs=prev, metric=settle,
                   passed=settle < BBM_TOLERANCE or dirichlet == 0, params={'p': p})
        limits[label] = _extrapolate(rows) if dirichlet > 0 else 0.0
        report.fit(f'C_{label}', limits[label])
    a, b = limits['u'], limits['reference']
    gap = abs(a - b) / max(abs(a), abs(b)) if max(abs(a), abs(b)) > 0 else 0.0
    report.add('u_independent', lhs=a, rhs=b, metric=gap, passed=gap < BBM_TOLERANCE,
               params={'p': p})
    if grid.dim == 1:
        c = bbm_constant(1, p)
        report.add('closed_form_constant', lhs=a, rhs=c, metric=abs(a - c) / c,
                   informational=True, params={'p': p})
    report.tables['bbm'] = report.tables['bbm_u']
    return report


SWEEP_FAMILIES = Registry('sweep family')


@SWEEP_FAMILIES.register('torsion', params={'c': 1.0})
def _torsion_family(grid, params, c):
    """``f = c``, ``g = 0``: the limit is the p-Laplace torsion function"""
    f = sample(TestFunction('constant', {'c': c}), grid)
    g = sample(TestFunction('constant', {'c': 0.0}), grid, zero_rule())
    p = params.p
    q = p / (p - 1.0)
    amp = float(plaplace_torsion(p, c, 0.0))

    def ref(x):
        return plaplace_torsion(p, c, x[:, 0])

    def ref_grad(x):
        return -amp * q * np.sign(x[:, 0]) * np.abs(x[:, 0]) ** (q - 1.0)
    return f, g, ref, ref_grad


@SWEEP_FAMILIES.register('affine', params={'a': 1.0, 'b': 0.0})
def _affine_family(grid, params, a, b):
    """``f = 0``, ``g = a x + b``: every solution is ``g`` itself"""
    f = sample(TestFunction('constant', {'c': 0.0}), grid)
    gfun = TestFunction('affine', {'a': (a,), 'b': b})
    g = sample(gfun, grid, affine_rule((a,), b))

    def ref(x):
        return gfun(x)

    def ref_grad(x):
        return np.full(x.shape[0], a)
    return f, g, ref, ref_grad


def s_sweep_to_plaplacian(family='torsion', s_list=(0.6, 0.75, 0.9), config=None, p=2.0, n=257,
                          **family_options):
    """Solve ``(-Delta_p)^s u_s = f/(1-s)`` along *s_list* in 1D

    Reports ``||u_s - u_ref||_{L^p(-1,1)}`` and
    ``||u_s' - u_ref'||_{L^p(-1/2,1/2)}``; both columns must be nonincreasing.
    Solver errors propagate.
    """
    s_list = [float(s) for s in s_list]
    grid = make_grid(1, 1.0, n)
    report = VerificationReport('sweep')
    omega = Ball.centered(1, 1.0)
    half = Ball.centered(1, 0.5)
    idx_om = restrict_nodes(grid, omega)
    idx_half = restrict_nodes(grid, half)
    w = grid.cell_volume
    rows = []
    for s in s_list:
        params = FractionalParams(1, s, p)
        f, g, ref, ref_grad = SWEEP_FAMILIES.build(family, grid=grid, params=params,
                                                   **family_options)
        problem = DirichletProblem(omega, f, g, standard_kernel(params), rhs_scale=1.0 / (1.0 - s))
        sol = solve_benchmark(problem, config)
        u = sol.u.flat
        err = float(np.sum(np.abs(u[idx_om] - ref(grid.nodes[idx_om])) ** p) * w) ** (1.0 / p)
        du = discrete_gradient(sol.u)[..., 0].ravel()
        gerr = float(np.sum(np.abs(du[idx_half] - ref_grad(grid.nodes[idx_half])) ** p) * w) ** (1.0 / p)
        rows.append((s, err, gerr))
        logger.info('sweep %s s=%g: L^p error %.3e, gradient error %.3e', family, s, err, gerr)
    for col, name in ((1, 'lp_error'), (2, 'gradient_error')):
        vals = [r[col] for r in rows]
        worst = max((b - a for a, b in zip(vals, vals[1:])), default=0.0)
        report.add(f'{name}_monotone', lhs=vals[-1], rhs=vals[0], metric=max(worst, 0.0),
                   passed=worst <= 1e-9, samples=len(vals), params={'family': family, 'p': p})
    report.tables['sweep'] = rows
    report.metadata['family'] = family
    return report


def iteration_trace(u, problem, tau=None, workers=1):
    """Run the improvement stages on a solution on the unit ball

    Builds ``r_i = 3/4 - i/(4 i0)``, the cut-offs ``eta_i`` and
    ``h0 = 1/(100 i0)``, and computes ``M_{gamma_i}`` for every stage with
    translations ``|h| <= h0``. All must be finite; the constant of the
    geometric envelope ``(C3/s**2 i0**(4(N+p))/(1-gamma_{i0-1})**p)**i0 A_1``
    is fitted and logged.

    Raises:
        ResolutionError: If the grid spacing exceeds ``h0``
    """
    params = problem.params
    grid = u.grid
    N, s, p, t = grid.dim, params.s, params.p, params.t
    scheme = classify_regime(params, tau)
    h0 = scheme.h0
    if grid.spacing > h0 * (1 + 1e-12):
        required = int(math.ceil(2 * grid.box_halfwidth / h0)) + 1
        raise ResolutionError(grid.spacing, h0, required)
    hs = make_h_grid(grid, h0)
    i0 = scheme.i0
    gammas = list(scheme.gamma_sequence[:i0])
    radii = list(scheme.radii)
    if scheme.borderline:
        gammas.append(scheme.rectified_beta)
        radii.append(radii[-1] - 1.0 / (4.0 * i0))
    report = VerificationReport('trace')
    rows = []
    for i, gamma in enumerate(gammas):
        ri, rnext = radii[i], radii[i + 1]
        cut = make_cutoff(rnext, ri, grid)
        M = max(_cutoff_quotients(cut.apply(u), Ball.centered(N, ri), gamma, params,
                                  hs, workers))
        rows.append((i, ri, rnext, gamma, M))
        report.add('M_gamma', lhs=M, rhs=math.nan, metric=M, passed=math.isfinite(M),
                   params={'i': i, 'gamma': gamma, 'r_i': ri})
    A1 = composite_AR(u, problem.f, 1.0, params, workers=workers).value
    gamma_last = scheme.gamma_sequence[i0 - 1]
    Mmax = max(r[4] for r in rows)
    if A1 > 0 and Mmax > 0:
        C3 = s ** 2 * (1 - gamma_last) ** p / i0 ** (4 * (N + p)) * (Mmax / A1) ** (1.0 / i0)
        report.fit('C3', C3)
    report.tables['trace'] = rows
    report.metadata.update(scheme=scheme.to_dict(), A1=A1, h0=h0,
                           radius_step=1.0 / (4.0 * i0))
    return report


def verify_regularity_estimate(u, f, R, params, tau=None, center=None, ell0=None, workers=1):
    """Scaling invariant conclusions against ``A_R(u, f)``, constants stripped

    Case i: ``[u]^p_{W^{tau,p}(B_{R/2})}`` against ``A_R/R^{tau p}``.
    Case ii: ``||grad u||^p_{L^p(B_{R/2})}`` against ``A_R/R^p`` and
    ``[grad u]^p_{W^{tau,p}(B_{R/4})}`` against
    ``(2-Gamma)^{-p}(Gamma-1)^{-p}/((Gamma-1-tau) tau) A_R/R^{p(1+tau)}``.
    With *ell0* in the robust regime the case ii right sides also carry
    ``(1-s)/(ell0-p)**p``.
    """
    grid = u.grid
    N, s, p = grid.dim, params.s, params.p
    c = _center(grid, center)
    AR = composite_AR(u, f, R, params, center=c, workers=workers).value
    scheme = classify_regime(params, tau)
    report = VerificationReport('regularity')
    w = grid.cell_volume

    def add(name, lhs, rhs, **extra):
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        report.add(name, lhs=lhs, rhs=rhs, metric=ratio, passed=math.isfinite(ratio),
                   params={'R': R, 's': s, 'p': p, 't': params.t, **extra})

    if scheme.regime == 'case_i':
        tau = 0.5 * (s + min(scheme.kappa, 1.0)) if tau is None else tau
        lhs = gagliardo(u, Ball(c, R / 2), tau, p, workers).power
        add('fractional', lhs, AR / R ** (tau * p), tau=tau)
    else:
        G = scheme.Gamma
        tau = 0.5 * (G - 1) if tau is None else tau
        idx = restrict_nodes(u, Ball(c, R / 2))
        grad_lp = float(np.sum(gradient_norm(u)[idx] ** p) * w)
        add('gradient_lp', grad_lp, AR / R ** p)
        grad = discrete_gradient(u)
        gs = sum(gagliardo(GridFunction(grid, grad[..., j], zero_rule()), Ball(c, R / 4), tau, p,
                           workers).power for j in range(N))
        factor = (2 - G) ** (-p) * (G - 1) ** (-p) / ((G - 1 - tau) * tau)
        add('gradient_fractional', gs, factor * AR / R ** (p * (1 + tau)), tau=tau)
        if ell0 is not None and robust_constant_regime(params, ell0):
            robust = (1 - s) / (ell0 - p) ** p
            add('gradient_lp_robust', grad_lp, robust * AR / R ** p, ell0=ell0)
            add('gradient_fractional_robust', gs, robust * factor * AR / R ** (p * (1 + tau)),
                tau=tau, ell0=ell0)
    report.metadata.update(A_R=AR, regime=scheme.regime)
    report.fit('C_regularity', max(r.metric for r in report.rows))
    return report


def difference_quotient_oracle(test_function, ball, p, hs):
    """``||psi(. + h) - psi||_{L^p(ball)}`` by direct evaluation at node points

    Independent of grid functions and translations; used as the reference
    for :func:`~fraclab.regularity.estimate_order`.
    """
    out = []
    for grid_pts, w, h in hs:
        x = grid_pts[ball.mask(grid_pts)]
        d = test_function(x + h) - test_function(x)
        out.append(float(np.sum(np.abs(d) ** p) * w) ** (1.0 / p))
    return np.array(out)


TARGETS = Registry('verification target')


def _benchmark_reports(target, seed, workers, s_list=(0.5, 0.8), n=257, r=0.25, R=0.5,
                       scale=2.0):
    report = VerificationReport(target)
    for s in s_list:
        problem = benchmark_problem(s, n=n)
        u = solve_benchmark(problem).u
        params = problem.params
        if target == 'caccioppoli':
            base = verify_caccioppoli(u, problem.f, r, R, s, params, workers=workers)
            scaled = verify_caccioppoli(u.scaled(scale), problem.f.scaled(scale ** (params.p - 1)),
                                        r, R, s, params, workers=workers)
            a, b = base.metadata['max_ratio'], scaled.metadata['max_ratio']
            drift = abs(a - b) / a if a else 0.0
            base.add('homogeneity', lhs=b, rhs=a, metric=drift, passed=drift <= 1e-10,
                     params={'lambda': scale, 's': s})
        else:
            base = verify_improvement(u, r, R, s, params, workers=workers)
        report.extend(base, prefix=f's={s:g}:')
    return report


@TARGETS.register('pointwise', params={'p_list': (2.0, 2.5, 3.0, 4.0), 'sample_count': 100000})
def _target_pointwise(seed, workers, p_list, sample_count):
    return verify_pointwise_inequalities(p_list, sample_count, rng_seed=seed)


@TARGETS.register('caccioppoli', params={'s_list': (0.5, 0.8), 'n': 257})
def _target_caccioppoli(seed, workers, s_list, n):
    return _benchmark_reports('caccioppoli', seed, workers, s_list, n)


@TARGETS.register('improvement', params={'s_list': (0.5, 0.8), 'n': 257})
def _target_improvement(seed, workers, s_list, n):
    return _benchmark_reports('improvement', seed, workers, s_list, n)


@TARGETS.register('embedding', params={'alpha': (1.25, 1.5, 1.75), 'p': 2.0})
def _target_embedding(seed, workers, alpha, p):
    return verify_besov_embedding(None, alpha, p)


@TARGETS.register('bbm', params={'s_list': (0.5, 0.7, 0.8, 0.9, 0.95), 'p': 2.0})
def _target_bbm(seed, workers, s_list, p):
    u = TestFunction('affine', {'a': (1.0,), 'b': 0.0})
    return bbm_limit(u, Ball((0.0,), 0.5), p, s_list)


@TARGETS.register('sweep', params={'s_list': (0.6, 0.75, 0.9), 'p': 2.0, 'n': 257})
def _target_sweep(seed, workers, s_list, p, n):
    report = s_sweep_to_plaplacian('torsion', s_list, p=p, n=n)
    affine = s_sweep_to_plaplacian('affine', s_list, p=p, n=n)
    worst = max(max(r[1], r[2]) for r in affine.tables['sweep'])
    report.add('affine_exact', lhs=worst, rhs=1e-6, metric=worst, passed=worst <= 1e-6,
               params={'p': p})
    report.tables['sweep_affine'] = affine.tables['sweep']
    return report


@TARGETS.register('trace', params={'s': 0.6, 'p': 2.0, 'n': 401})
def _target_trace(seed, workers, s, p, n):
    problem = benchmark_problem(s, p, n)
    u = solve_benchmark(problem).u
    return iteration_trace(u, problem, workers=workers)


@TARGETS.register('order', params={'betas': (0.25, 0.5, 0.75), 'p': 2.0, 'n': 513})
def _target_order(seed, workers, betas, p, n):
    grid = make_grid(1, 1.0, n)
    ball = Ball((0.0,), 0.5)
    hs = dyadic_translations(grid, 0.25)
    report = VerificationReport('order')
    for beta in betas:
        fun = TestFunction('power', {'beta': beta})
        est = estimate_order(sample(fun, grid), ball, p, hs)
        oracle = difference_quotient_oracle(
            fun, ball, p, [(grid.nodes, grid.cell_volume, h.vector) for h in hs])
        expected = min(loglog_slope([h.magnitude for h in hs], oracle).slope, 1.0)
        gap = abs(est.tau_hat - expected)
        report.add('slope', lhs=est.tau_hat, rhs=expected, metric=gap, passed=gap <= 0.05,
                   params={'beta': beta, 'p': p}, detail=f'residual {est.fit.residual:.3g}')
    return report


class VerificationHarness(Emitter):
    """Run verification targets as independent jobs

    Each job gets its own seed spawned from *seed*; reports are emitted in
    submission order whatever the worker count.

    :Events:
        ``on_job_done(harness, name=, report=)`` after each job, in submission order

        ``on_report(harness, report=)`` once per report
    """
    _events_ = ['on_job_done', 'on_report']
    completed = Property(0)

    def __init__(self, seed=0, workers=1):
        self.seed = seed
        self.workers = workers
        self.jobs = []

    def add(self, name, options=None):
        """Queue target *name* with option overrides"""
        TARGETS.canonical(name)
        self.jobs.append((name, dict(options or {})))

    def _run_one(self, job, seed):
        name, options = job
        return TARGETS.build(name, seed=seed, workers=self.workers, **options)

    def run(self):
        """Run the queued jobs

        Returns:
            dict: ``name -> VerificationReport``
        """
        children = np.random.SeedSequence(self.seed).spawn(len(self.jobs))
        seeds = [int(c.generate_state(1)[0]) for c in children]
        if self.workers > 1 and len(self.jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as ex:
                futures = [ex.submit(self._run_one, job, sd) for job, sd in zip(self.jobs, seeds)]
                reports = [fut.result() for fut in futures]
        else:
            reports = [self._run_one(job, sd) for job, sd in zip(self.jobs, seeds)]
        out = {}
        for (name, _), report in zip(self.jobs, reports):
            out[name] = report
            self.completed += 1
            self.emit('on_job_done', self, name=name, report=report)
            self.emit('on_report', self, report=report)
            logger.info(report.verdict_line())
        return out
