"""Exponent iteration arithmetic and measured differentiability orders

The iteration starts at ``gamma_0 = s`` and applies
``gamma_{i+1} = (gamma_i + t + sp)/p``; it increases strictly towards
``kappa = (t + sp)/(p - 1)``.

>>> from fraclab.kernels import FractionalParams
>>> from fraclab.regularity import classify_regime
>>> scheme = classify_regime(FractionalParams(1, 0.6, 2.0))
>>> scheme.regime, scheme.i0, round(scheme.Gamma, 12)
('case_ii', 2, 1.1)
>>> [round(g, 12) for g in scheme.gamma_sequence]
[0.6, 0.9, 1.05, 1.125]
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from fraclab.diffops import Translation, delta_h, discrete_gradient
from fraclab.errors import ParameterError
from fraclab.grid import GridFunction, restrict_nodes, zero_rule
from fraclab.kernels import FractionalParams
from fraclab.report import LogLogFit, loglog_slope

__all__ = (
    'BORDERLINE_TOL', 'RegularityScheme', 'classify_regime', 'robust_constant_regime',
    'corollary_regime', 'RegularityReport', 'estimate_order', 'dyadic_translations',
)

logger = logging.getLogger(__name__)

BORDERLINE_TOL = 1e-12
MIN_DYADIC = 4


@dataclass(frozen=True)
class RegularityScheme(object):
    """Outcome of :func:`classify_regime`

    Attributes:
        params: The :class:`~fraclab.kernels.FractionalParams`
        regime (str): ``'case_i'`` (``t + sp <= p - 1``) or ``'case_ii'``
        kappa (float): Limit ``(t + sp)/(p - 1)`` of the exponents
        Gamma (float): ``(1 + t + sp)/p``
        gamma_sequence (tuple): ``gamma_0 .. gamma_{i0+1}``
        i0 (int): Number of improvement steps
        tau (float): Target order (case i only)
        borderline (bool): ``gamma_{i0} == 1`` within :data:`BORDERLINE_TOL`
        rectified_beta (float): Order of the extra stage on a borderline
    """
    params: FractionalParams
    regime: str
    kappa: float
    Gamma: float
    gamma_sequence: Tuple[float, ...]
    i0: int
    tau: Optional[float] = None
    borderline: bool = False
    rectified_beta: Optional[float] = None

    def gamma(self, i):
        """Closed form ``s/p**i + kappa (1 - 1/p**i)``"""
        p = self.params.p
        return self.params.s / p ** i + self.kappa * (1.0 - 1.0 / p ** i)

    @property
    def stages(self):
        """Improvement stages, one more than ``i0`` on a rectified borderline"""
        return self.i0 + 1 if self.borderline else self.i0

    @property
    def radii(self):
        """``r_i = 3/4 - i/(4 i0)`` for ``i = 0..i0``"""
        return tuple(0.75 - i / (4.0 * self.i0) for i in range(self.i0 + 1))

    @property
    def h0(self):
        return 1.0 / (100.0 * self.i0)

    @property
    def predicted_order(self):
        """Order reached by ``u`` itself: ``kappa`` in case i, ``1`` in case ii"""
        return self.kappa if self.regime == 'case_i' else 1.0

    @property
    def gradient_order(self):
        """Upper end ``Gamma - 1`` of the gradient orders (case ii), else None"""
        return self.Gamma - 1.0 if self.regime == 'case_ii' else None

    def to_dict(self):
        return {
            'params': self.params.to_dict(), 'regime': self.regime, 'kappa': self.kappa,
            'Gamma': self.Gamma, 'gamma_sequence': list(self.gamma_sequence),
            'i0': self.i0, 'tau': self.tau, 'borderline': self.borderline,
            'rectified_beta': self.rectified_beta, 'radii': list(self.radii), 'h0': self.h0,
        }


def _gamma_recursion(params, count):
    s, p, t = params.s, params.p, params.t
    out = [s]
    for _ in range(count - 1):
        out.append((out[-1] + t + s * p) / p)
    return tuple(out)


def classify_regime(params, tau=None):
    """Regime, exponents and step count for *params*

    Args:
        params: :class:`~fraclab.kernels.FractionalParams`
        tau (float, optional): Target order in case i, ``s <= tau < kappa``;
            defaults to ``s``

    Raises:
        ParameterError: If ``tau`` is outside ``[s, kappa)`` in case i
    """
    s, p, t = params.s, params.p, params.t
    kappa = params.kappa
    Gamma = params.Gamma
    lnp = math.log(p)
    if t + s * p <= p - 1.0 + BORDERLINE_TOL:
        regime = 'case_i'
        if tau is None:
            tau = s
        if not s <= tau < kappa:
            raise ParameterError(
                f'tau must satisfy s ≤ tau < (t+sp)/(p-1) = {kappa:.12g}', 'tau')
        x = (math.log(kappa - s) - math.log(kappa - tau)) / lnp
        i0 = int(math.floor(x)) + 1
        borderline = False
    else:
        regime = 'case_ii'
        tau = None
        x = (math.log(kappa - s) - math.log(kappa - 1.0)) / lnp
        k = round(x)
        borderline = abs(x - k) <= BORDERLINE_TOL
        i0 = max(1, int(k) if borderline else int(math.ceil(x)))
    seq = _gamma_recursion(params, i0 + 2)
    beta = None
    if borderline:
        beta = 0.5 * (seq[i0 - 1] + 1.0)
        logger.warning('gamma_%d = 1 (borderline); rectified stage with beta=%.6g', i0, beta)
    scheme = RegularityScheme(params, regime, kappa, Gamma, seq, i0, tau, borderline, beta)
    logger.debug('classified %r: %s i0=%d', params, regime, i0)
    return scheme


def robust_constant_regime(params, ell0):
    """True iff ``t + s (p + 1) >= ell0``; requires ``ell0 > p``

    In that regime one step suffices (``i0 = 1``) and the gradient
    estimates carry the factor ``1 - s``.
    """
    if not ell0 > params.p:
        raise ParameterError('ell0 must satisfy ell0 > p', 'ell0')
    return params.t + params.s * (params.p + 1.0) >= ell0


def corollary_regime(s, p, kind, dim=1, Lambda=1.0):
    """Regime of the bounded (``t = 0``) or Dirichlet (``t = s``) corollary

    For ``'dirichlet'`` case i holds iff ``s <= (p-1)/(p+1)``, with orders
    ``tau < s(p+1)/(p-1)``; otherwise gradient orders below
    ``s(p+1)/p - (p-1)/p``.
    """
    if kind == 'bounded':
        t = 0.0
    elif kind == 'dirichlet':
        t = s
    else:
        raise ParameterError(f'unknown corollary "{kind}" (bounded, dirichlet)', 'kind')
    return classify_regime(FractionalParams(dim, s, p, t, Lambda))


def dyadic_translations(grid, h_max):
    """``2**k * spacing`` along the first axis while strictly below *h_max*"""
    out = []
    m = 1
    while m * grid.spacing < h_max:
        vec = [0.0] * grid.dim
        vec[0] = m * grid.spacing
        out.append(Translation(tuple(vec)))
        m *= 2
    return out


@dataclass
class RegularityReport(object):
    """Measured Nikol'skii order on one ball

    ``tau_hat`` is the log-log slope of ``||delta_h u||_{L^p(ball)}``
    against ``|h|`` capped at 1; ``gradient_order`` is the same slope for
    the discrete gradient, measured when the first pass saturates.
    """
    ball: object
    p: float
    hs: Tuple[float, ...]
    norms: Tuple[float, ...]
    fit: Optional[LogLogFit]
    tau_hat: float
    capped: bool
    predicted: Optional[float] = None
    tolerance: float = 0.05
    grid_ceiling: float = 1.0
    gradient_fit: Optional[LogLogFit] = None
    gradient_norms: Tuple[float, ...] = ()
    metadata: dict = field(default_factory=dict)

    @property
    def slope(self):
        return self.fit.slope if self.fit is not None else math.inf

    @property
    def gradient_order(self):
        if self.gradient_fit is None:
            return None
        return min(self.gradient_fit.slope, self.grid_ceiling)

    @property
    def target(self):
        if self.predicted is None:
            return None
        return min(self.predicted, self.grid_ceiling)

    @property
    def passed(self):
        if self.predicted is None:
            return True
        return abs(self.tau_hat - self.target) <= self.tolerance

    def as_row(self):
        return {
            'center': list(self.ball.center), 'radius': self.ball.radius, 'p': self.p,
            'tau_hat': self.tau_hat, 'slope': self.slope, 'capped': self.capped,
            'residual': self.fit.residual if self.fit is not None else 0.0,
            'predicted': self.predicted, 'gradient_order': self.gradient_order,
        }


def _ball_margin(grid, ball):
    c = np.abs(np.asarray(ball.center, dtype=float))
    return float(np.min(grid.box_halfwidth - c)) - ball.radius


def _difference_norms(u, idx, hs, p):
    w = u.grid.cell_volume
    out = []
    for t in hs:
        d = delta_h(u, t).flat[idx]
        out.append(float(np.sum(np.abs(d) ** p) * w) ** (1.0 / p))
    return np.array(out)


def estimate_order(u, ball, p, h_dyadic_set=None, predicted=None, tolerance=0.05,
                   gradient=None):
    """Least-squares order of ``||delta_h u||_{L^p(ball)}`` over dyadic ``h``

    Args:
        u: A :class:`~fraclab.grid.GridFunction`
        ball: The :class:`~fraclab.grid.Ball` to measure on
        p (float): Lebesgue exponent
        h_dyadic_set: Translations; defaults to :func:`dyadic_translations`
            below half the distance from the ball to the box boundary
        predicted (float, optional): Order the verdict compares against
        gradient (bool, optional): Force (True) or skip (False) the second
            pass on :func:`~fraclab.diffops.discrete_gradient`; by default it
            runs when the first slope reaches 1

    Raises:
        ParameterError: With fewer than 4 usable translations
    """
    grid = u.grid
    cap = _ball_margin(grid, ball) / 2.0
    if h_dyadic_set is None:
        h_dyadic_set = dyadic_translations(grid, cap)
    hs = []
    for h in h_dyadic_set:
        t = Translation.coerce(h, grid.dim)
        t.steps(grid)
        if 0 < t.magnitude < cap:
            hs.append(t)
    if len(hs) < MIN_DYADIC:
        raise ParameterError(
            f'need at least {MIN_DYADIC} usable translations below {cap:.6g}, got {len(hs)}',
            'h_dyadic_set')
    idx = restrict_nodes(u, ball)
    mags = np.array([t.magnitude for t in hs])
    norms = _difference_norms(u, idx, hs, p)
    scale = float(np.max(np.abs(u.flat[idx]))) if idx.size else 0.0
    if np.all(norms <= 1e-14 * max(scale, 1.0)):
        fit, tau_hat, capped = None, 1.0, True
    else:
        fit = loglog_slope(mags, norms)
        tau_hat = min(fit.slope, 1.0)
        capped = fit.slope >= 1.0
    report = RegularityReport(ball, p, tuple(mags), tuple(norms), fit, tau_hat, capped,
                              predicted, tolerance)
    if gradient is None:
        gradient = capped and fit is not None
    if gradient:
        grad = discrete_gradient(u)
        total = np.zeros(len(hs))
        for j in range(grid.dim):
            gj = GridFunction(grid, grad[..., j], zero_rule())
            total += _difference_norms(gj, idx, hs, p) ** p
        gnorms = total ** (1.0 / p)
        report.gradient_norms = tuple(gnorms)
        if np.any(gnorms > 0):
            report.gradient_fit = loglog_slope(mags, gnorms)
    logger.info('order on %r: tau_hat=%.4f (slope %.4f)%s', ball, tau_hat, report.slope,
                '' if report.gradient_fit is None else
                f', gradient order {report.gradient_order:.4f}')
    return report
