"""Translations, difference operators, cut-offs and heat smoothing

All translations are grid-aligned, so shifted values are exact node values
(or exterior-rule values where ``x + h`` leaves the box).

.. doctest:: diffops_module

    >>> from fraclab.grid import make_grid, sample
    >>> from fraclab.testfunctions import TestFunction
    >>> from fraclab.diffops import delta_h, delta2_h
    >>> g = make_grid(1, 1.0, 9)
    >>> u = sample(TestFunction('affine', {'a': (1.0,), 'b': 0.0}), g)
    >>> delta_h(u, 0.25).flat.tolist() == [0.25] * 9
    True
    >>> float(abs(delta2_h(u, 0.25).flat).max())
    0.0
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from fraclab.errors import AlignmentError, DomainError, ParameterError
from fraclab.grid import ExteriorRule, GridFunction, zero_rule

__all__ = (
    'Translation', 'translate', 'delta_h', 'delta2_h', 'leibniz_sides',
    'h_grid', 'Cutoff', 'make_cutoff', 'discrete_gradient', 'discrete_hessian',
    'gradient_norm', 'HeatSmoother', 'heat_smooth', 'heat_kernel',
    'heat_kernel_l1_norms',
)

logger = logging.getLogger(__name__)

ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class Translation(object):
    """A shift ``h`` in R^N"""
    h: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'h', tuple(float(v) for v in np.atleast_1d(self.h)))

    @classmethod
    def coerce(cls, h, dim):
        if isinstance(h, Translation):
            t = h
        else:
            t = cls(h)
        if len(t.h) == 1 and dim > 1:
            raise ParameterError(f'translation {t.h} has dimension 1, grid has {dim}', 'h')
        if len(t.h) != dim:
            raise ParameterError(f'translation {t.h} does not match dim={dim}', 'h')
        return t

    @property
    def magnitude(self):
        return math.sqrt(sum(v * v for v in self.h))

    @property
    def vector(self):
        return np.asarray(self.h)

    def steps(self, grid):
        """Integer node offsets per axis

        Raises:
            AlignmentError: If some component is not a multiple of the spacing
        """
        k = np.asarray(self.h) / grid.spacing
        ki = np.rint(k)
        if np.any(np.abs(k - ki) > ALIGN_TOL * np.maximum(1.0, np.abs(k))):
            raise AlignmentError(self.h, grid.spacing)
        return tuple(int(v) for v in ki)

    def doubled(self):
        return Translation(tuple(2 * v for v in self.h))


def _shift_values(u, steps, h):
    grid = u.grid
    n = grid.n_per_axis
    pts = grid.nodes + h
    out = u.exterior.evaluate(pts).reshape(grid.shape)
    dst, src = [], []
    for k in steps:
        if abs(k) >= n:
            return out
        if k >= 0:
            dst.append(slice(0, n - k))
            src.append(slice(k, n))
        else:
            dst.append(slice(-k, n))
            src.append(slice(0, n + k))
    out[tuple(dst)] = u.values[tuple(src)]
    return out


def translate(u, h):
    """``u_h(x) = u(x + h)``

    Args:
        u: A :class:`~fraclab.grid.GridFunction`
        h: A :class:`Translation` or a vector

    Raises:
        AlignmentError: If ``h`` is not grid-aligned
    """
    t = Translation.coerce(h, u.grid.dim)
    steps = t.steps(u.grid)
    if not any(steps):
        return u
    vals = _shift_values(u, steps, t.vector)
    return GridFunction(u.grid, vals, u.exterior.shifted(t.vector))


def delta_h(u, h):
    """First difference ``u(x + h) - u(x)``"""
    t = Translation.coerce(h, u.grid.dim)
    uh = translate(u, t)
    rule = ExteriorRule.combine([(1.0, uh.exterior), (-1.0, u.exterior)],
                                u.exterior.truncation_radius)
    return GridFunction(u.grid, uh.values - u.values, rule)


def delta2_h(u, h):
    """Second difference ``u(x + 2h) - 2u(x + h) + u(x)``, computed as ``delta_h(delta_h(u))``"""
    return delta_h(delta_h(u, h), h)


def leibniz_sides(u, v, h):
    """Both sides of ``delta_h(uv) = (delta_h u) v + u_h (delta_h v)``, nodewise"""
    uh, vh = translate(u, h), translate(v, h)
    lhs = uh.values * vh.values - u.values * v.values
    rhs = (uh.values - u.values) * v.values + uh.values * (vh.values - v.values)
    return lhs, rhs


def h_grid(grid, h_max, linear=4, strict=False, axes=None, signs=(1,)):
    """Grid-aligned translations for suprema over ``0 < |h| < h_max``

    The set is ``{k * spacing * e_j : k = 1..linear}`` united with the dyadic
    multiples ``2**m * spacing * e_j``, capped at ``h_max``.

    Args:
        strict (bool): Exclude ``|h| == h_max``
        axes: Axes to translate along (default: all)
        signs: Multiply each step by these signs, e.g. ``(1, -1)``

    Returns:
        list: :class:`Translation` objects sorted by magnitude, then axis
    """
    sp = grid.spacing
    ks = set(range(1, linear + 1))
    m = 1
    while m * sp <= h_max * (1 + 1e-12):
        ks.add(m)
        m *= 2
    ks = sorted(k for k in ks if (k * sp < h_max) or (not strict and k * sp <= h_max * (1 + 1e-12)))
    axes = range(grid.dim) if axes is None else axes
    out = []
    for k in ks:
        for ax in axes:
            for sgn in signs:
                vec = [0.0] * grid.dim
                vec[ax] = sgn * k * sp
                out.append(Translation(tuple(vec)))
    return out


def _smoothstep(rho):
    rho = np.clip(rho, 0.0, 1.0)
    return rho ** 3 * (10.0 - 15.0 * rho + 6.0 * rho ** 2)


def _smoothstep_d1(rho):
    rho = np.clip(rho, 0.0, 1.0)
    return 30.0 * rho ** 2 * (1.0 - rho) ** 2


def _smoothstep_d2(rho):
    rho = np.clip(rho, 0.0, 1.0)
    return 60.0 * rho * (1.0 - rho) * (1.0 - 2.0 * rho)


@dataclass(frozen=True)
class Cutoff(object):
    """Radial C2 cut-off: 1 on ``B_r``, 0 outside ``B_{(R+r)/2}``

    The transition is the quintic smoothstep in ``(|x| - r)/((R - r)/2)``.

    Attributes:
        gradient_constant (float): Measured ``max|grad eta| * (R - r)``
        hessian_constant (float): Measured ``max|D^2 eta| * (R - r)**2``
    """
    r: float
    R: float
    center: Tuple[float, ...]
    gradient_constant: float = math.nan
    hessian_constant: float = math.nan

    @property
    def support_radius(self):
        return 0.5 * (self.R + self.r)

    @property
    def width(self):
        return self.support_radius - self.r

    def _radius(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = pts - np.asarray(self.center)
        return d, np.sqrt(np.sum(d * d, axis=1))

    def __call__(self, points):
        _, rad = self._radius(points)
        return 1.0 - _smoothstep((rad - self.r) / self.width)

    def gradient(self, points):
        d, rad = self._radius(points)
        g = -_smoothstep_d1((rad - self.r) / self.width) / self.width
        out = np.zeros_like(d)
        nz = rad > 0
        out[nz] = (g[nz] / rad[nz])[:, None] * d[nz]
        return out

    def hessian_norm(self, points):
        """Operator norm of ``D^2 eta``: max of radial and tangential curvature"""
        d, rad = self._radius(points)
        rho = (rad - self.r) / self.width
        radial = np.abs(_smoothstep_d2(rho)) / self.width ** 2
        if d.shape[1] == 1:
            return radial
        tangential = np.zeros_like(rad)
        nz = rad > 0
        tangential[nz] = _smoothstep_d1(rho[nz]) / self.width / rad[nz]
        return np.maximum(radial, tangential)

    def measure(self, points):
        """Measured ``(gradient_constant, hessian_constant)`` over *points*"""
        g = np.sqrt(np.sum(self.gradient(points) ** 2, axis=1))
        hnorm = self.hessian_norm(points)
        Rr = self.R - self.r
        return float(g.max() * Rr), float(hnorm.max() * Rr ** 2)

    def on_grid(self, grid):
        return GridFunction(grid, self(grid.nodes), zero_rule())

    def apply(self, u):
        """Node-wise product ``u * eta`` with zero exterior

        Raises:
            DomainError: If the support of eta leaves the grid box
        """
        reach = np.max(np.abs(self.center)) + self.support_radius
        if reach > u.grid.box_halfwidth:
            raise DomainError(
                f'cut-off support (reach {reach:.6g}) leaves the box [-{u.grid.box_halfwidth:g}, '
                f'{u.grid.box_halfwidth:g}]')
        return GridFunction(u.grid, u.values * self(u.grid.nodes).reshape(u.grid.shape), zero_rule())


def make_cutoff(r, R, grid=None, center=None):
    """Build a :class:`Cutoff` and measure its bound constants

    With a *grid*, constants are measured on its nodes; otherwise on a dense
    radial sample of 20001 points.

    Raises:
        ParameterError: Unless ``0 < r < R``
    """
    if not 0 < r < R:
        raise ParameterError('cut-off radii must satisfy 0 < r < R', 'r')
    dim = grid.dim if grid is not None else (1 if center is None else len(np.atleast_1d(center)))
    if center is None:
        center = (0.0,) * dim
    c = Cutoff(float(r), float(R), tuple(float(v) for v in np.atleast_1d(center)))
    if grid is not None:
        pts = grid.nodes
    else:
        rad = np.linspace(0.0, c.support_radius, 20001)
        e = np.zeros(dim)
        e[0] = 1.0
        pts = np.asarray(c.center) + rad[:, None] * e
    gc, hc = c.measure(pts)
    logger.debug('cut-off r=%g R=%g: c_N=%.6g c2_N=%.6g', r, R, gc, hc)
    return Cutoff(c.r, c.R, c.center, gc, hc)


def discrete_gradient(u):
    """Central differences inside, one-sided at the box faces

    Returns:
        numpy.ndarray: Shape ``grid.shape + (dim,)``
    """
    g = u.grid
    grads = np.gradient(u.values, g.spacing, edge_order=1)
    if g.dim == 1:
        grads = [grads]
    return np.stack(grads, axis=-1)


def discrete_hessian(u):
    """Second derivatives by repeated :func:`discrete_gradient`, shape ``grid.shape + (dim, dim)``"""
    g = u.grid
    grad = discrete_gradient(u)
    rows = []
    for i in range(g.dim):
        gi = np.gradient(grad[..., i], g.spacing, edge_order=1)
        if g.dim == 1:
            gi = [gi]
        rows.append(np.stack(gi, axis=-1))
    return np.stack(rows, axis=-2)


def gradient_norm(u):
    """Pointwise Euclidean norm of :func:`discrete_gradient` as a flat array"""
    grad = discrete_gradient(u)
    return np.sqrt(np.sum(grad * grad, axis=-1)).ravel()


def heat_kernel(t, points):
    """``(4 pi t)**(-N/2) exp(-|x|**2 / 4t)``"""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dim = pts.shape[1]
    return (4 * math.pi * t) ** (-dim / 2) * np.exp(-np.sum(pts * pts, axis=1) / (4 * t))


def heat_kernel_l1_norms(grid, t):
    """Node-sum L1 norms of ``grad K_t`` and ``D^2 K_t`` (operator norm)

    Returns:
        tuple: ``(grad_norm, hessian_norm)``
    """
    x = grid.nodes
    k = heat_kernel(t, x)
    r2 = np.sum(x * x, axis=1)
    grad = k * np.sqrt(r2) / (2 * t)
    # eigenvalues of D^2 K_t: k (r^2/4t^2 - 1/2t) radially, -k/2t tangentially
    radial = np.abs(k * (r2 / (4 * t * t) - 1 / (2 * t)))
    hess = radial if grid.dim == 1 else np.maximum(radial, k / (2 * t))
    w = grid.cell_volume
    return float(grad.sum() * w), float(hess.sum() * w)


@dataclass(frozen=True)
class HeatSmoother(object):
    """Convolution with the heat kernel at *time*, separable across axes

    The input is extended past the box with its exterior rule far enough
    that the Gaussian weight dropped is below ``exp(-50)``.
    """
    time: float

    def __post_init__(self):
        if not self.time > 0:
            raise ParameterError('time must be positive', 'time')

    def pad(self, grid):
        return int(math.ceil(10.0 * math.sqrt(2.0 * self.time) / grid.spacing)) + 1

    def weights(self, grid):
        """1D weight matrix, shape ``(n, n + 2*pad)``, rows summing to one

        Rows are normalized by their lattice mass, which differs from one once
        ``sqrt(2 t)`` is comparable to the grid spacing.
        """
        m = self.pad(grid)
        h = grid.spacing
        ext = -grid.box_halfwidth + np.arange(-m, grid.n_per_axis + m) * h
        diff = grid.axis[:, None] - ext[None, :]
        W = np.exp(-diff * diff / (4 * self.time))
        return W / W.sum(axis=1, keepdims=True)

    def extended_values(self, u):
        grid = u.grid
        m = self.pad(grid)
        h = grid.spacing
        ext = -grid.box_halfwidth + np.arange(-m, grid.n_per_axis + m) * h
        mesh = np.meshgrid(*([ext] * grid.dim), indexing='ij')
        pts = np.stack([a.ravel() for a in mesh], axis=1)
        vals = u.exterior.evaluate(pts).reshape((ext.size,) * grid.dim)
        inner = tuple(slice(m, m + grid.n_per_axis) for _ in range(grid.dim))
        vals[inner] = u.values
        return vals

    def __call__(self, u):
        W = self.weights(u.grid)
        vals = self.extended_values(u)
        for ax in range(u.grid.dim):
            vals = np.moveaxis(np.tensordot(W, vals, axes=([1], [ax])), 0, ax)
        return GridFunction(u.grid, vals, u.exterior)


def heat_smooth(u, time):
    """``psi_t = K_t * psi`` on the grid nodes

    The exterior rule of the result is the input rule, exact for affine data
    and for functions negligible near the box rim.
    """
    return HeatSmoother(time)(u)
