"""Parameters and kernels of the fractional p-Laplacian

.. doctest:: kernels_module

    >>> import numpy as np
    >>> from fraclab.kernels import FractionalParams, standard_kernel
    >>> params = FractionalParams(dim=1, s=0.5, p=2.0)
    >>> params.sp, params.kappa
    (1.0, 1.0)
    >>> k = standard_kernel(params)
    >>> k(np.array([[2.0], [-2.0]]))
    array([4., 4.])
"""

import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from fraclab.errors import KernelBoundsError, ParameterError
from fraclab.registry import Registry

__all__ = (
    'FractionalParams', 'Kernel', 'MODULATIONS', 'standard_kernel',
    'modulated_kernel', 'kernel_bounds_check', 'BoundsCheck', 'tail_weight',
)

logger = logging.getLogger(__name__)

BoundsCheck = namedtuple('BoundsCheck', ['passed', 'worst_ratio'])
"""Result of :func:`kernel_bounds_check`"""


@dataclass(frozen=True)
class FractionalParams(object):
    """The tuple ``(N, s, p, t, Lambda)``

    Raises:
        ParameterError: Quoting the violated constraint
    """
    dim: int
    s: float
    p: float
    t: float = 0.0
    Lambda: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError('dim must be 1 or 2', 'dim')
        if not 0 < self.s < 1:
            raise ParameterError('s must lie in (0,1)', 's')
        if not self.p >= 2:
            raise ParameterError('p must satisfy p ≥ 2', 'p')
        if not 0 <= self.t <= self.s:
            raise ParameterError('t must satisfy 0 ≤ t ≤ s', 't')
        if not self.Lambda >= 1:
            raise ParameterError('Lambda must satisfy Lambda ≥ 1', 'Lambda')
        for name in ('s', 'p', 't', 'Lambda'):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def sp(self):
        return self.s * self.p

    @property
    def p_conj(self):
        """Conjugate exponent ``p' = p/(p-1)``"""
        return self.p / (self.p - 1.0)

    @property
    def kappa(self):
        """Limit ``(t + sp)/(p - 1)`` of the exponent iteration"""
        return (self.t + self.sp) / (self.p - 1.0)

    @property
    def Gamma(self):
        """``(1 + t + sp)/p``"""
        return (1.0 + self.t + self.sp) / self.p

    @property
    def singular_exponent(self):
        """Order ``N + sp`` of the kernel singularity"""
        return self.dim + self.sp

    def replace(self, **kwargs):
        d = self.to_dict()
        d.update(kwargs)
        return FractionalParams(**d)

    def to_dict(self):
        return {'dim': self.dim, 's': self.s, 'p': self.p, 't': self.t, 'Lambda': self.Lambda}


def _ones(z):
    return np.ones(z.shape[0])


@dataclass(frozen=True, eq=False)
class Kernel(object):
    """``K(z) = a(z) * |z|**(N + sp)``

    The solver and seminorm sums weight pairs by ``1/K``.

    Attributes:
        params: The :class:`FractionalParams`
        modulation: Callable mapping points ``(M, N)`` to ``a(z)``
        tag (str): Registered modulation name or ``'standard'``
        angular_only (bool): True if ``a`` depends on the direction of ``z`` only
    """
    params: FractionalParams
    modulation: Callable = _ones
    tag: str = 'standard'
    options: dict = field(default_factory=dict)
    angular_only: bool = True

    @property
    def is_standard(self):
        return self.tag == 'standard'

    def __call__(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        r = np.sqrt(np.sum(z * z, axis=1))
        return self.modulation(z) * r ** self.params.singular_exponent

    def inverse(self, z):
        """``1/K(z)``; infinite at the origin"""
        with np.errstate(divide='ignore'):
            return 1.0 / self(z)

    def is_even(self, probe_count=256, seed=0):
        z = _probe_points(self.params.dim, probe_count, seed)
        return bool(np.allclose(self.modulation(z), self.modulation(-z), rtol=1e-14, atol=0))

    def to_dict(self):
        return {'modulation': self.tag, 'options': dict(self.options)}


MODULATIONS = Registry('kernel modulation')


@MODULATIONS.register('angular')
def _angular(params):
    """``1 + (L-1)/(L+1) cos(2 theta)``, even and within ``[1/L, L]``"""
    c = (params.Lambda - 1.0) / (params.Lambda + 1.0)
    if params.dim == 1:
        if c != 0:
            raise ParameterError('angular modulation needs dim=2 (no angle in 1D)', 'modulation')
        return _ones, True
    def angular(z):
        theta = np.arctan2(z[:, 1], z[:, 0])
        return 1.0 + c * np.cos(2.0 * theta)
    return angular, True


@MODULATIONS.register('radial_step', params={'inner': None, 'outer': None, 'radius': 1.0})
def _radial_step(params, inner, outer, radius):
    """``inner`` on ``|z| < radius``, ``outer`` beyond (defaults ``Lambda``, ``1/Lambda``)"""
    inner = params.Lambda if inner is None else float(inner)
    outer = 1.0 / params.Lambda if outer is None else float(outer)
    def radial_step(z):
        r = np.sqrt(np.sum(z * z, axis=1))
        return np.where(r < radius, inner, outer)
    return radial_step, inner == outer


def standard_kernel(params):
    """``K(z) = |z|**(N + sp)``"""
    return Kernel(params)


def modulated_kernel(params, modulation, probe_count=4096, **options):
    """Build a kernel from a registered modulation tag or a callable

    Args:
        params: The :class:`FractionalParams`
        modulation: A tag from :data:`MODULATIONS` or a callable ``a(z)``
        probe_count (int): Number of probes for the construction-time
            :func:`kernel_bounds_check`
        **options: Modulation parameters (e.g. ``inner``, ``outer``, ``radius``)

    Raises:
        KernelBoundsError: If ``a`` leaves ``[1/Lambda, Lambda]`` at a probe
    """
    if callable(modulation):
        tag = getattr(modulation, '__name__', 'custom')
        kernel = Kernel(params, modulation, tag, dict(options), False)
    else:
        tag = MODULATIONS.canonical(modulation)
        kwargs = MODULATIONS.defaults(tag)
        kwargs.update(options)
        func, angular_only = MODULATIONS.get(tag)(params, **kwargs)
        kernel = Kernel(params, func, tag, dict(options), angular_only)
    check = kernel_bounds_check(kernel, probe_count)
    if not check.passed:
        raise KernelBoundsError(tag, check.worst_ratio, params.Lambda)
    logger.debug('kernel %s: worst ratio %.6g', tag, check.worst_ratio)
    return kernel


def _probe_points(dim, count, seed):
    rng = np.random.default_rng(seed)
    radii = 10.0 ** rng.uniform(-3.0, 3.0, count)
    if dim == 1:
        signs = np.where(rng.random(count) < 0.5, -1.0, 1.0)
        return (signs * radii)[:, None]
    theta = rng.uniform(0.0, 2.0 * math.pi, count)
    return np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=1)


def kernel_bounds_check(kernel, probe_count=1024, seed=0):
    """Probe ``1/Lambda <= K(z)/|z|**(N+sp) <= Lambda``

    Probes use log-uniform radii in ``[1e-3, 1e3]`` and uniform angles; the
    unit sphere and its neighbourhood are always included.

    Returns:
        BoundsCheck: ``passed`` and the largest of ``K/|z|**(N+sp)`` and its
        reciprocal over the probes
    """
    if probe_count < 1:
        raise ParameterError('probe_count must be >= 1', 'probe_count')
    z = _probe_points(kernel.params.dim, probe_count, seed)
    unit = _probe_points(kernel.params.dim, 8, seed + 1)
    unit /= np.sqrt(np.sum(unit * unit, axis=1))[:, None]
    z = np.concatenate([z, unit, unit * (1 - 1e-9), unit * (1 + 1e-9)])
    r = np.sqrt(np.sum(z * z, axis=1))
    ratio = kernel(z) / r ** kernel.params.singular_exponent
    with np.errstate(divide='ignore'):
        worst = float(np.max(np.maximum(ratio, 1.0 / ratio)))
    passed = bool(np.all(ratio > 0) and worst <= kernel.params.Lambda * (1 + 1e-12))
    return BoundsCheck(passed, worst)


def tail_weight(kernel, half_width):
    """Integral of ``1/K`` outside the cube ``[-W, W]^N``

    Closed form ``2 W**(-sp)/(sp)`` for the standard kernel in 1D; adaptive
    quadrature otherwise.
    """
    W = float(half_width)
    if not W > 0:
        raise ParameterError('half_width must be positive', 'half_width')
    params = kernel.params
    sp = params.sp
    if params.dim == 1:
        if kernel.is_standard:
            return 2.0 * W ** (-sp) / sp
        total = 0.0
        for sign in (1.0, -1.0):
            def f(r, sign=sign):
                return float(kernel.inverse(np.array([[sign * r]]))[0])
            near, _ = integrate.quad(f, W, 2 * W, epsabs=0, epsrel=1e-10, limit=200)
            far, _ = integrate.quad(f, 2 * W, np.inf, epsabs=0, epsrel=1e-10, limit=200)
            total += near + far
        return total

    def rho(theta):
        return W / max(abs(math.cos(theta)), abs(math.sin(theta)))

    def direction(theta):
        return np.array([[math.cos(theta), math.sin(theta)]])

    if kernel.angular_only:
        def radial(theta):
            return rho(theta) ** (-sp) / (sp * float(kernel.modulation(direction(theta))[0]))
    else:
        def radial(theta):
            e = direction(theta)
            val, _ = integrate.quad(
                lambda r: r * float(kernel.inverse(r * e)[0]),
                rho(theta), np.inf, epsabs=0, epsrel=1e-10, limit=200)
            return val
    breaks = [k * math.pi / 4 for k in range(1, 8)]
    total, _ = integrate.quad(radial, 0.0, 2 * math.pi, points=breaks,
                              epsabs=0, epsrel=1e-10, limit=200)
    return total
