"""Closed-form test functions used as oracles

A :class:`TestFunction` is an immutable description (tag + parameters) that
evaluates on arrays of points of shape ``(M, N)``. Every tag also knows its
gradient, its polynomial growth degree at infinity (needed to decide whether
weighted tail integrals converge) and a far-field representative used by the
solver's exterior coupling.

>>> import numpy as np
>>> from fraclab.testfunctions import TestFunction
>>> f = TestFunction('power', {'beta': 2.0})
>>> f(np.array([[-3.0], [0.0], [0.5]]))
array([9.  , 0.  , 0.25])
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import gamma as Gamma

from fraclab.errors import ParameterError
from fraclab.registry import Registry

__all__ = (
    'TestFunction', 'SHAPES', 'fractional_torsion', 'plaplace_torsion',
    'bbm_constant',
)


class _Shape(object):
    """Evaluator bundle for one tag: value, gradient and growth degree

    Subclasses work on the dilated coordinate ``y = dilation*(x - center)``
    and never see amplitude or dilation.
    """
    decaying = True
    def __init__(self, **params):
        self.params = params
    def value(self, y):
        raise NotImplementedError
    def gradient(self, y):
        raise NotImplementedError
    def growth_degree(self):
        return -math.inf
    def far_value(self, y):
        if self.decaying:
            return np.zeros(y.shape[0])
        return self.value(y)


SHAPES = Registry('test function')


def _norm(y):
    return np.sqrt(np.sum(y * y, axis=1))


@SHAPES.register('constant', params={'c': 1.0})
class Constant(_Shape):
    decaying = False
    def value(self, y):
        return np.full(y.shape[0], float(self.params['c']))
    def gradient(self, y):
        return np.zeros_like(y)
    def growth_degree(self):
        return 0.0 if self.params['c'] != 0 else -math.inf


@SHAPES.register('affine', params={'a': (1.0,), 'b': 0.0})
class Affine(_Shape):
    decaying = False
    def _a(self, dim):
        a = np.atleast_1d(np.asarray(self.params['a'], dtype=float))
        if a.size == 1 and dim > 1:
            a = np.repeat(a, dim)
        return a
    def value(self, y):
        return y @ self._a(y.shape[1]) + float(self.params['b'])
    def gradient(self, y):
        return np.broadcast_to(self._a(y.shape[1]), y.shape).copy()
    def growth_degree(self):
        if np.any(np.asarray(self.params['a'], dtype=float) != 0):
            return 1.0
        return 0.0 if self.params['b'] != 0 else -math.inf


@SHAPES.register('power', params={'beta': 0.5})
class Power(_Shape):
    """``|x|**beta``, defined as 0 at the origin for beta > 0"""
    decaying = False
    def value(self, y):
        beta = float(self.params['beta'])
        r = _norm(y)
        if beta == 0:
            return np.ones_like(r)
        out = np.zeros_like(r)
        nz = r > 0
        out[nz] = r[nz] ** beta
        return out
    def gradient(self, y):
        beta = float(self.params['beta'])
        r = _norm(y)
        out = np.zeros_like(y)
        nz = r > 0
        out[nz] = (beta * r[nz] ** (beta - 2))[:, None] * y[nz]
        return out
    def growth_degree(self):
        return float(self.params['beta'])


@SHAPES.register('bump', params={'radius': 1.0})
class Bump(_Shape):
    """Smooth bump ``exp(1 - 1/(1 - r**2))`` on the ball, equal to 1 at 0"""
    def value(self, y):
        r = _norm(y) / float(self.params['radius'])
        out = np.zeros_like(r)
        inside = r < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out
    def gradient(self, y):
        R = float(self.params['radius'])
        r = _norm(y) / R
        out = np.zeros_like(y)
        inside = r < 1
        ri = r[inside]
        dv = np.exp(1.0 - 1.0 / (1.0 - ri ** 2)) * (-2.0 / (1.0 - ri ** 2) ** 2)
        out[inside] = (dv / R ** 2)[:, None] * y[inside]
        return out


@SHAPES.register('gaussian', params={'sigma': 1.0})
class Gaussian(_Shape):
    """Normalised Gaussian density with standard deviation sigma"""
    def value(self, y):
        sigma = float(self.params['sigma'])
        dim = y.shape[1]
        r2 = np.sum(y * y, axis=1)
        return (2 * math.pi * sigma ** 2) ** (-dim / 2) * np.exp(-r2 / (2 * sigma ** 2))
    def gradient(self, y):
        sigma = float(self.params['sigma'])
        return (-self.value(y) / sigma ** 2)[:, None] * y


@SHAPES.register('truncated_parabola', params={'s': 0.5})
class TruncatedParabola(_Shape):
    """``(1 - |x|**2)_+ ** s``"""
    def value(self, y):
        s = float(self.params['s'])
        base = np.clip(1.0 - np.sum(y * y, axis=1), 0.0, None)
        return base ** s
    def gradient(self, y):
        s = float(self.params['s'])
        base = 1.0 - np.sum(y * y, axis=1)
        out = np.zeros_like(y)
        inside = base > 0
        out[inside] = (-2.0 * s * base[inside] ** (s - 1))[:, None] * y[inside]
        return out


@SHAPES.register('tent', params={'radius': 1.0})
class Tent(_Shape):
    """``(1 - |x|/radius)_+``: kinks at the origin and on the sphere"""
    def value(self, y):
        return np.clip(1.0 - _norm(y) / float(self.params['radius']), 0.0, None)
    def gradient(self, y):
        R = float(self.params['radius'])
        r = _norm(y)
        out = np.zeros_like(y)
        inside = (r > 0) & (r < R)
        out[inside] = (-1.0 / (R * r[inside]))[:, None] * y[inside]
        return out


@SHAPES.register('spline', params={'radius': 1.0})
class Spline(_Shape):
    """``(1 - |x|**2/radius**2)_+ ** 2``: C1 with a jump in the second derivative"""
    def value(self, y):
        R = float(self.params['radius'])
        base = np.clip(1.0 - np.sum(y * y, axis=1) / R ** 2, 0.0, None)
        return base ** 2
    def gradient(self, y):
        R = float(self.params['radius'])
        base = np.clip(1.0 - np.sum(y * y, axis=1) / R ** 2, 0.0, None)
        return (-4.0 * base / R ** 2)[:, None] * y


@dataclass(frozen=True)
class TestFunction(object):
    """A closed-form function on R^N

    ``psi(x) = amplitude * shape(dilation * (x - center))``

    Args:
        tag (str): Registered shape name (see :data:`SHAPES`)
        params (dict): Shape parameters; missing keys take registered defaults
        amplitude (float): Output scale
        dilation (float): Input scale
        center (tuple, optional): Translation of the argument
    """
    __test__ = False

    tag: str
    params: dict = field(default_factory=dict)
    amplitude: float = 1.0
    dilation: float = 1.0
    center: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        tag = SHAPES.canonical(self.tag)
        merged = SHAPES.defaults(tag)
        merged.update(self.params)
        object.__setattr__(self, 'tag', tag)
        object.__setattr__(self, 'params', merged)

    @property
    def shape(self):
        return SHAPES.build(self.tag, **self.params)

    def _inner(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if self.center is not None:
            x = x - np.asarray(self.center, dtype=float)
        if self.dilation != 1.0:
            x = self.dilation * x
        return x

    def __call__(self, points):
        return self.amplitude * self.shape.value(self._inner(points))

    def gradient(self, points):
        """Closed-form gradient, shape ``(M, N)``"""
        return self.amplitude * self.dilation * self.shape.gradient(self._inner(points))

    def growth_degree(self):
        """Exponent d with ``|psi(x)| ~ |x|**d`` as ``|x| -> inf``; ``-inf`` if decaying"""
        if self.amplitude == 0:
            return -math.inf
        return self.shape.growth_degree()

    def far_value(self, points):
        """Representative exterior value seen from *points* far away"""
        return self.amplitude * self.shape.far_value(self._inner(points))

    def scaled(self, factor):
        """Return ``factor * psi``"""
        return TestFunction(self.tag, dict(self.params), self.amplitude * factor,
                            self.dilation, self.center)

    def to_dict(self):
        d = {'tag': self.tag, 'params': _jsonable(self.params)}
        if self.amplitude != 1.0:
            d['amplitude'] = self.amplitude
        if self.dilation != 1.0:
            d['dilation'] = self.dilation
        if self.center is not None:
            d['center'] = list(self.center)
        return d

    @classmethod
    def from_dict(cls, d):
        center = d.get('center')
        return cls(
            d['tag'], dict(d.get('params', {})),
            float(d.get('amplitude', 1.0)), float(d.get('dilation', 1.0)),
            tuple(center) if center is not None else None,
        )


def _jsonable(params):
    out = {}
    for key, val in params.items():
        if isinstance(val, (tuple, list, np.ndarray)):
            val = [float(v) for v in val]
        out[key] = val
    return out


def fractional_torsion(s, x):
    """Torsion function of the unnormalised fractional Laplacian in 1D

    Solves ``2 * PV int (u(x) - u(y)) / |x - y|**(1 + 2s) dy = 1/(1 - s)`` on
    (-1, 1) with ``u = 0`` outside; the solution is
    ``(1 - x**2)_+ ** s / (2 Gamma(s) Gamma(2 - s))`` and tends to
    ``(1 - x**2)/2`` as ``s -> 1``.

    >>> round(float(fractional_torsion(0.5, 0.0) * math.pi), 12)
    1.0
    """
    x = np.asarray(x, dtype=float)
    base = np.clip(1.0 - x * x, 0.0, None)
    return base ** s / (2.0 * Gamma(s) * Gamma(2.0 - s))


def bbm_constant(dim, p):
    """Limit of ``(1-s) [u]^p_{W^{s,p}} / int |grad u|^p`` as ``s -> 1``

    ``(1/p) int_{S^{N-1}} |sigma_1|**p dsigma``, which is
    ``2 pi**((N-1)/2) Gamma((p+1)/2) / (p Gamma((N+p)/2))``.

    >>> bbm_constant(1, 2.0)
    1.0
    >>> round(bbm_constant(2, 2.0) / math.pi, 12)
    0.5

    Raises:
        ParameterError: Unless ``dim`` is a positive integer and ``p >= 1``
    """
    if int(dim) != dim or dim < 1:
        raise ParameterError('dim must be a positive integer', 'dim')
    if not p >= 1:
        raise ParameterError('p must satisfy p ≥ 1', 'p')
    sphere = 2.0 * math.pi ** ((dim - 1) / 2.0) * Gamma((p + 1) / 2.0) / Gamma((dim + p) / 2.0)
    return float(sphere / p)


def plaplace_torsion(p, c, x):
    """Solution of ``-(2/p) (|u'|^{p-2} u')' = c`` on (-1, 1), ``u(+-1) = 0``

    The factor ``2/p`` is :func:`bbm_constant` in 1D, so this is the limit of
    the fractional problems with right-hand side ``c/(1 - s)``.
    """
    x = np.asarray(x, dtype=float)
    q = p / (p - 1.0)
    amp = (0.5 * p * c) ** (1.0 / (p - 1.0)) / q
    return amp * np.clip(1.0 - np.abs(x) ** q, 0.0, None)
