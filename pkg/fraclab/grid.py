"""Uniform grids on ``[-L, L]^N`` and functions sampled on them

A :class:`GridFunction` pairs node values with an :class:`ExteriorRule` that
defines the function on the rest of R^N, so it can be evaluated anywhere.

>>> from fraclab.grid import make_grid, Ball, restrict_nodes
>>> g = make_grid(1, 1.0, 9)
>>> g.spacing
0.25
>>> g.nodes[restrict_nodes(g, Ball((0.0,), 0.5)), 0].tolist()
[-0.25, 0.0, 0.25]
"""

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from fraclab.errors import ParameterError, SamplingError
from fraclab.testfunctions import TestFunction

__all__ = (
    'Grid', 'Ball', 'ExteriorRule', 'GridFunction', 'make_grid', 'sample',
    'restrict_nodes', 'zero_rule', 'affine_rule', 'closed_form_rule',
    'write_csv', 'read_csv',
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid(object):
    """Uniform Cartesian grid with ``n_per_axis`` nodes on ``[-L, L]`` per axis

    Node ``i`` on each axis sits at ``-L + i*spacing``; multi-dimensional
    nodes are ordered with the last axis varying fastest.
    """
    dim: int
    box_halfwidth: float
    n_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ParameterError('dim must be 1 or 2', 'dim')
        if not self.box_halfwidth > 0:
            raise ParameterError('box_halfwidth must be positive', 'box_halfwidth')
        if int(self.n_per_axis) != self.n_per_axis or self.n_per_axis < 8:
            raise ParameterError('n_per_axis must be an integer >= 8', 'n_per_axis')
        object.__setattr__(self, 'box_halfwidth', float(self.box_halfwidth))
        object.__setattr__(self, 'n_per_axis', int(self.n_per_axis))

    @property
    def spacing(self):
        return 2.0 * self.box_halfwidth / (self.n_per_axis - 1)

    @property
    def shape(self):
        return (self.n_per_axis,) * self.dim

    @property
    def size(self):
        return self.n_per_axis ** self.dim

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    @cached_property
    def axis(self):
        """1D node coordinates (read-only)"""
        a = -self.box_halfwidth + np.arange(self.n_per_axis) * self.spacing
        a.setflags(write=False)
        return a

    @cached_property
    def nodes(self):
        """Node coordinates, shape ``(size, dim)`` (read-only)"""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing='ij')
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts.setflags(write=False)
        return pts

    def index_of(self, points, tol=1e-9):
        """Locate points on nodes

        Returns:
            (flat_index, hit): ``hit`` is True where the point coincides with a
            node (within ``tol*spacing``); ``flat_index`` is only meaningful there.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = (pts + self.box_halfwidth) / self.spacing
        idx = np.rint(rel)
        hit = np.all(np.abs(rel - idx) < tol, axis=1)
        hit &= np.all((idx >= 0) & (idx <= self.n_per_axis - 1), axis=1)
        idx = np.clip(idx, 0, self.n_per_axis - 1).astype(np.int64)
        flat = np.ravel_multi_index(tuple(idx.T), self.shape)
        return flat, hit

    def inside_box(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(np.abs(pts) <= self.box_halfwidth * (1 + 1e-12), axis=1)

    def describe(self):
        return {'dim': self.dim, 'L': self.box_halfwidth, 'n': self.n_per_axis}


def make_grid(dim, box_halfwidth, n_per_axis):
    """Build a :class:`Grid`

    Raises:
        ParameterError: If ``dim`` is not 1 or 2, ``L <= 0`` or ``n < 8``
    """
    return Grid(dim, box_halfwidth, n_per_axis)


@dataclass(frozen=True)
class Ball(object):
    """Open ball ``{x : |x - center| < radius}``"""
    center: Tuple[float, ...]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.center))
        object.__setattr__(self, 'center', c)
        object.__setattr__(self, 'radius', float(self.radius))
        if not self.radius > 0:
            raise ParameterError('radius must be positive', 'radius')

    @classmethod
    def centered(cls, dim, radius):
        return cls((0.0,) * dim, radius)

    @property
    def dim(self):
        return len(self.center)

    def volume(self):
        """Lebesgue measure of the ball"""
        if self.dim == 1:
            return 2.0 * self.radius
        return math.pi * self.radius ** 2

    def mask(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = pts - np.asarray(self.center)
        return np.sum(d * d, axis=1) < self.radius ** 2

    def center_distance(self, other):
        return float(np.linalg.norm(np.asarray(self.center) - np.asarray(other.center)))

    def contains_ball(self, other):
        """True if *other* is compactly contained (strictly positive gap)"""
        return self.center_distance(other) + other.radius < self.radius

    def gap_to(self, inner):
        """Distance ``d(inner, self)`` from *inner* to the complement of *self*"""
        return self.radius - inner.radius - self.center_distance(inner)

    def scaled(self, radius):
        return Ball(self.center, radius)


@dataclass(frozen=True)
class ExteriorRule(object):
    """Symbolic definition of a function outside the grid box

    Kinds:

    - ``'zero'``
    - ``'affine'``: ``a . x + b``
    - ``'closed_form'``: a :class:`~fraclab.testfunctions.TestFunction`,
      evaluated at ``x + offset``
    - ``'combination'``: a linear combination of rules (built by
      :meth:`combine`, e.g. for difference quotients)

    Args:
        truncation_radius (float, optional): Radius beyond which tail
            integrals are handled analytically rather than by node sums
    """
    kind: str = 'zero'
    a: Tuple[float, ...] = ()
    b: float = 0.0
    function: Optional[TestFunction] = None
    offset: Tuple[float, ...] = ()
    terms: Tuple[Tuple[float, 'ExteriorRule'], ...] = ()
    truncation_radius: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ('zero', 'affine', 'closed_form', 'combination'):
            raise ParameterError(f'unknown exterior kind "{self.kind}"', 'kind')
        if self.kind == 'closed_form' and self.function is None:
            raise ParameterError('closed_form rule needs a function', 'function')
        object.__setattr__(self, 'a', tuple(float(v) for v in np.atleast_1d(self.a)))
        object.__setattr__(self, 'offset', tuple(float(v) for v in np.atleast_1d(self.offset)))

    @property
    def is_zero(self):
        return self.kind == 'zero'

    def evaluate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == 'zero':
            return np.zeros(pts.shape[0])
        if self.kind == 'affine':
            return pts @ self._a_vector(pts.shape[1]) + self.b
        if self.kind == 'closed_form':
            if self.offset:
                pts = pts + np.asarray(self.offset)
            return self.function(pts)
        out = np.zeros(pts.shape[0])
        for coef, rule in self.terms:
            out += coef * rule.evaluate(pts)
        return out

    def far_field(self, points):
        """Representative value of the rule far from *points*

        Exact for constants; equal to the rule itself for affine data so that
        paired contributions from opposite directions balance.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == 'zero':
            return np.zeros(pts.shape[0])
        if self.kind == 'affine':
            return self.evaluate(pts)
        if self.kind == 'closed_form':
            if self.offset:
                pts = pts + np.asarray(self.offset)
            return self.function.far_value(pts)
        out = np.zeros(pts.shape[0])
        for coef, rule in self.terms:
            out += coef * rule.far_field(pts)
        return out

    def growth_degree(self):
        """Polynomial growth exponent at infinity (``-inf`` if decaying)"""
        if self.kind == 'zero':
            return -math.inf
        if self.kind == 'affine':
            if any(v != 0 for v in self.a):
                return 1.0
            return 0.0 if self.b != 0 else -math.inf
        if self.kind == 'closed_form':
            return self.function.growth_degree()
        degs = [rule.growth_degree() for coef, rule in self.terms if coef != 0]
        return max(degs) if degs else -math.inf

    def shifted(self, h):
        """Rule for ``x -> rule(x + h)``"""
        h = np.atleast_1d(np.asarray(h, dtype=float))
        if self.kind == 'zero':
            return self
        if self.kind == 'affine':
            a = self._a_vector(h.size)
            return ExteriorRule('affine', a=tuple(a), b=self.b + float(a @ h),
                                truncation_radius=self.truncation_radius)
        if self.kind == 'closed_form':
            off = np.asarray(self.offset) if self.offset else np.zeros(h.size)
            return ExteriorRule('closed_form', function=self.function,
                                offset=tuple(off + h),
                                truncation_radius=self.truncation_radius)
        return ExteriorRule.combine([(c, r.shifted(h)) for c, r in self.terms],
                                    self.truncation_radius)

    @classmethod
    def combine(cls, terms, truncation_radius=None):
        """Linear combination ``sum(c_i * rule_i)``, simplified where possible"""
        kept = []
        for coef, rule in terms:
            if coef == 0 or rule.is_zero:
                continue
            if rule.kind == 'combination':
                kept.extend((coef * c, r) for c, r in rule.terms)
            else:
                kept.append((float(coef), rule))
        if not kept:
            return cls('zero', truncation_radius=truncation_radius)
        if all(r.kind == 'affine' for _, r in kept):
            dim = max(len(r.a) for _, r in kept)
            a = sum(c * r._a_vector(dim) for c, r in kept)
            b = sum(c * r.b for c, r in kept)
            return cls('affine', a=tuple(a), b=b, truncation_radius=truncation_radius)
        if len(kept) == 1 and kept[0][0] == 1.0:
            return kept[0][1]
        return cls('combination', terms=tuple(kept), truncation_radius=truncation_radius)

    def scaled(self, factor):
        return ExteriorRule.combine([(factor, self)], self.truncation_radius)

    def _a_vector(self, dim):
        a = np.asarray(self.a, dtype=float)
        if a.size == 1 and dim > 1:
            a = np.repeat(a, dim)
        return a

    def describe(self):
        if self.kind == 'affine':
            return f'affine(a={list(self.a)}, b={self.b})'
        if self.kind == 'closed_form':
            return f'closed_form({self.function.tag}, {self.function.params})'
        if self.kind == 'combination':
            return 'combination(' + ', '.join(
                f'{c:g}*{r.describe()}' for c, r in self.terms) + ')'
        return 'zero'

    def to_dict(self):
        d = {'kind': self.kind}
        if self.kind == 'affine':
            d.update(a=list(self.a), b=self.b)
        elif self.kind == 'closed_form':
            d['function'] = self.function.to_dict()
            if self.offset:
                d['offset'] = list(self.offset)
        elif self.kind == 'combination':
            d['terms'] = [[c, r.to_dict()] for c, r in self.terms]
        if self.truncation_radius is not None:
            d['truncation_radius'] = self.truncation_radius
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d.get('kind', 'zero')
        tr = d.get('truncation_radius')
        if kind == 'affine':
            return cls('affine', a=tuple(d['a']), b=float(d.get('b', 0.0)),
                       truncation_radius=tr)
        if kind == 'closed_form':
            return cls('closed_form', function=TestFunction.from_dict(d['function']),
                       offset=tuple(d.get('offset', ())), truncation_radius=tr)
        if kind == 'combination':
            return cls('combination',
                       terms=tuple((float(c), cls.from_dict(r)) for c, r in d['terms']),
                       truncation_radius=tr)
        return cls('zero', truncation_radius=tr)


def zero_rule(truncation_radius=None):
    return ExteriorRule('zero', truncation_radius=truncation_radius)


def affine_rule(a, b=0.0, truncation_radius=None):
    return ExteriorRule('affine', a=tuple(np.atleast_1d(a)), b=float(b),
                        truncation_radius=truncation_radius)


def closed_form_rule(function, truncation_radius=None):
    return ExteriorRule('closed_form', function=function,
                        truncation_radius=truncation_radius)


@dataclass(frozen=True, eq=False)
class GridFunction(object):
    """Node values on a :class:`Grid` plus an :class:`ExteriorRule`

    Values are stored with shape ``grid.shape`` and are read-only.
    """
    grid: Grid
    values: np.ndarray
    exterior: ExteriorRule = field(default_factory=ExteriorRule)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals.ravel()))[0])
            raise SamplingError('values', self.grid.nodes[bad], vals.ravel()[bad])
        vals.setflags(write=False)
        object.__setattr__(self, 'values', vals)

    @property
    def flat(self):
        return self.values.ravel()

    def evaluate(self, points):
        """Value at arbitrary points: node lookup inside the box, rule elsewhere

        Points inside the box that miss a node are evaluated by the rule.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        flat, hit = self.grid.index_of(pts)
        out = np.empty(pts.shape[0])
        out[hit] = self.flat[flat[hit]]
        if not np.all(hit):
            out[~hit] = self.exterior.evaluate(pts[~hit])
        return out

    def with_values(self, values, exterior=None):
        return GridFunction(self.grid, values,
                            self.exterior if exterior is None else exterior)

    def scaled(self, factor):
        return GridFunction(self.grid, self.values * factor, self.exterior.scaled(factor))

    def rule_values(self):
        """The exterior rule evaluated at the nodes"""
        return self.exterior.evaluate(self.grid.nodes)


def sample(test_function, grid, exterior_rule=None):
    """Evaluate *test_function* at every node of *grid*

    Args:
        test_function: A :class:`~fraclab.testfunctions.TestFunction`
        grid: The :class:`Grid`
        exterior_rule (optional): Stored as-is; defaults to the function itself

    Raises:
        SamplingError: Naming the first node with a non-finite value
    """
    vals = np.asarray(test_function(grid.nodes), dtype=float)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        i = int(bad[0])
        raise SamplingError(test_function.tag, grid.nodes[i], vals[i])
    if exterior_rule is None:
        exterior_rule = closed_form_rule(test_function)
    return GridFunction(grid, vals.reshape(grid.shape), exterior_rule)


def restrict_nodes(u, ball):
    """Flat indices of the nodes strictly inside *ball*, ascending

    *u* may be a :class:`GridFunction` or a :class:`Grid`.
    """
    grid = u.grid if isinstance(u, GridFunction) else u
    return np.flatnonzero(ball.mask(grid.nodes))


def write_csv(u, fp):
    """Serialize a :class:`GridFunction` to CSV

    The first two lines are the ``# schema:`` line and the
    ``# dim,L,n,exterior_kind,params`` header, followed by the header values
    and one ``x[,y],value`` row per node. Floats use :func:`repr` so a
    round trip through :func:`read_csv` is exact.
    """
    close = False
    if not hasattr(fp, 'write'):
        fp = open(fp, 'w', newline='')
        close = True
    try:
        g = u.grid
        cols = ['x', 'y'][:g.dim] + ['value']
        fp.write(f'# schema: {",".join(cols)} (node coordinates, function value)\n')
        fp.write('# dim,L,n,exterior_kind,params\n')
        params = json.dumps(u.exterior.to_dict(), sort_keys=True)
        fp.write(f'# {g.dim},{g.box_halfwidth!r},{g.n_per_axis},{u.exterior.kind},{params}\n')
        w = csv.writer(fp, lineterminator='\n')
        for pt, val in zip(g.nodes, u.flat):
            w.writerow([repr(float(c)) for c in pt] + [repr(float(val))])
        logger.debug('wrote %d nodes to %s', g.size, getattr(fp, 'name', fp))
    finally:
        if close:
            fp.close()


def read_csv(fp):
    """Inverse of :func:`write_csv`"""
    if not hasattr(fp, 'read'):
        with open(fp, newline='') as f:
            logger.debug('reading grid function from %s', fp)
            return read_csv(io.StringIO(f.read()))
    lines = fp.read().splitlines()
    meta = [ln for ln in lines if ln.startswith('#')]
    dim, L, n, _kind, params = meta[2][1:].strip().split(',', 4)
    grid = make_grid(int(dim), float(L), int(n))
    rule = ExteriorRule.from_dict(json.loads(params))
    rows = [r for r in csv.reader(ln for ln in lines if not ln.startswith('#')) if r]
    vals = np.array([float(r[-1]) for r in rows])
    return GridFunction(grid, vals.reshape(grid.shape), rule)
