"""Dirichlet problems for the fractional p-Laplacian by energy minimization

The discrete energy is

    (1/p) sum_{x in Omega} sum_{z != 0} m(x, z) |u(x) - u(x+z)|**p c_z w
    + (2/p) sum_{x in Omega} |u(x) - gbar(x)|**p tau w - sum_{x in Omega} f(x) u(x) w

with ``c_z = w/K(z)``, ``w`` the cell volume and ``m = 1`` when ``x + z`` is
in Omega, ``2`` otherwise. Offsets run over the symmetric stencil
``|z|_inf <= W`` on the lattice extended past the box, where values come from
the exterior rule; offsets beyond ``W`` are lumped into the per-node tail
weight ``tau`` against the far-field value ``gbar``. In 1D a local
``|D_h u|**p`` term restores the diagonal mass a punctured lattice sum misses.

The energy is differentiated exactly, so the weak residual of a test
function is its pairing with the energy gradient.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from scipy import linalg

from fraclab.diffops import make_cutoff
from fraclab.errors import (
    ConvergenceError, InvalidTestFunctionError, ParameterError,
)
from fraclab.events import Emitter, Property
from fraclab.grid import Ball, GridFunction, restrict_nodes
from fraclab.kernels import tail_weight
from fraclab.nonlinear import jp
from fraclab.quadrature import zeta_correction

__all__ = (
    'LowerOrderTerm', 'DirichletProblem', 'SolverConfig', 'Solution',
    'DescentSolver', 'energy', 'energy_gradient', 'solve_dirichlet',
    'TestBank', 'make_test_bank', 'weak_residual', 'assemble_linear_system',
    'dense_linear_solve',
)

logger = logging.getLogger(__name__)

CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class LowerOrderTerm(object):
    """``Phi(u) = lam |u|**(q-2) u`` on the right-hand side

    Args:
        lam (float): Coefficient
        q (float): Growth exponent, ``q >= 2``
        bound (float): Box bound ``M`` on ``||u||_inf``
    """
    lam: float
    q: float
    bound: float

    def __post_init__(self):
        if not self.q >= 2:
            raise ParameterError('q must satisfy q ≥ 2', 'q')
        if not self.bound > 0:
            raise ParameterError('the bound M on ||u||_inf must be positive', 'bound')

    @property
    def lipschitz(self):
        """Local Lipschitz constant ``lam (q-1) M**(q-2)`` on ``[-M, M]``"""
        return abs(self.lam) * (self.q - 1.0) * self.bound ** (self.q - 2.0)

    def __call__(self, u):
        return self.lam * jp(u, self.q)

    def primitive(self, u):
        return self.lam / self.q * np.abs(u) ** self.q

    def enlarged_data(self, A_R, R, dim, p):
        """``A_R + L**(p/(p-2)) R**N`` (``p > 2``)"""
        if not p > 2:
            raise ParameterError('the enlarged data term needs p > 2', 'p')
        return A_R + self.lipschitz ** (p / (p - 2.0)) * R ** dim


@dataclass(frozen=True, eq=False)
class DirichletProblem(object):
    """``(-Delta_{p,K})^s u = f (+ Phi(u))`` in *omega*, ``u = g`` outside

    Attributes:
        omega: The :class:`~fraclab.grid.Ball` of free nodes
        f: Right-hand side on the grid (only Omega nodes matter)
        g: Exterior datum: grid values outside Omega plus its exterior rule
        kernel: An even :class:`~fraclab.kernels.Kernel`
        rhs_scale (float): Multiplies ``f``; ``1/(1-s)`` for the s-sweep
        singular_correction (bool): Add the 1D diagonal term
    """
    omega: Ball
    f: GridFunction
    g: GridFunction
    kernel: object
    lower_order: Optional[LowerOrderTerm] = None
    rhs_scale: float = 1.0
    singular_correction: bool = True

    def __post_init__(self):
        if self.f.grid != self.g.grid:
            raise ParameterError('f and g must live on the same grid', 'f')
        if self.kernel.params.dim != self.grid.dim:
            raise ParameterError('kernel dimension does not match the grid', 'kernel')
        if not self.kernel.is_even():
            raise ParameterError('the solver needs an even kernel K(z) = K(-z)', 'kernel')
        if restrict_nodes(self.grid, self.omega).size == 0:
            raise ParameterError('omega contains no grid nodes', 'omega')

    @property
    def grid(self):
        return self.g.grid

    @property
    def params(self):
        return self.kernel.params

    @property
    def rhs(self):
        """``rhs_scale * f`` at the grid nodes (flat)"""
        return self.rhs_scale * self.f.flat

    def with_rhs(self, f=None, rhs_scale=None, lower_order=False):
        kw = {}
        if f is not None:
            kw['f'] = f
        if rhs_scale is not None:
            kw['rhs_scale'] = rhs_scale
        if lower_order is not False:
            kw['lower_order'] = lower_order
        return replace(self, **kw)


@dataclass(frozen=True)
class SolverConfig(object):
    """Descent parameters

    Attributes:
        max_iterations (int): Accepted steps plus restarts before giving up
        gradient_tolerance (float): Stop when ``sqrt(sum r**2 w) <= tol``
        shrink (float): Backtracking step factor in (0,1)
        initial_step (float): First trial step
        init (str): ``'exterior'`` (g clipped to the box), ``'zero'`` or ``'random'``
        seed (int): Seed for ``init='random'``
        method (str): ``'descent'`` or ``'direct'`` (dense solve, p=2 only)
        accelerated (bool): Nesterov momentum with function-value restart
        stencil_halfwidth (float, optional): Stencil reach ``W``; default ``2L``
        max_outer (int): Fixed-point iterations for the lower-order fallback
    """
    max_iterations: int = 50000
    gradient_tolerance: float = 1e-8
    shrink: float = 0.5
    initial_step: float = 1.0
    init: str = 'exterior'
    seed: int = 0
    method: str = 'descent'
    accelerated: bool = True
    stencil_halfwidth: Optional[float] = None
    max_outer: int = 100

    def __post_init__(self):
        if not self.gradient_tolerance > 0:
            raise ParameterError('gradient_tolerance must be positive', 'gradient_tolerance')
        if not 0 < self.shrink < 1:
            raise ParameterError('shrink must lie in (0,1)', 'shrink')
        if self.max_iterations < 1:
            raise ParameterError('max_iterations must be >= 1', 'max_iterations')
        if self.init not in ('exterior', 'zero', 'random'):
            raise ParameterError(f'unknown init rule "{self.init}"', 'init')
        if self.method not in ('descent', 'direct'):
            raise ParameterError(f'unknown method "{self.method}"', 'method')

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class Solution(object):
    """Result of :func:`solve_dirichlet`

    ``u`` carries the free values on Omega and ``g`` elsewhere (with g's
    exterior rule). ``energy_history`` holds true energies of accepted
    iterates and is strictly decreasing; descent steps whose energy change
    is below float rounding are accepted on the residual, counted in
    ``metadata['floor_steps']`` and not recorded. ``final_energy`` is the
    energy of ``u`` itself.
    """
    u: GridFunction
    energy_history: List[float]
    residual: float
    iterations: int = 0
    restarts: int = 0
    method: str = 'descent'
    metadata: dict = field(default_factory=dict)
    final_energy: Optional[float] = None

    @property
    def energy(self):
        if self.final_energy is not None:
            return self.final_energy
        return self.energy_history[-1]


class _Discretization(object):
    """Precomputed lattice, weights and index sets for one problem"""
    def __init__(self, problem, stencil_halfwidth=None):
        self.problem = problem
        grid = problem.grid
        params = problem.params
        self.p = params.p
        self.dim = grid.dim
        h = grid.spacing
        self.h = h
        self.w = grid.cell_volume
        n = grid.n_per_axis
        W = 2 * grid.box_halfwidth if stencil_halfwidth is None else stencil_halfwidth
        Wk = max(1, int(round(W / h)))
        self.Wk = Wk
        en = n + 2 * Wk
        self.ext_n = en
        ext_axis = -grid.box_halfwidth + (np.arange(en) - Wk) * h
        mesh = np.meshgrid(*([ext_axis] * self.dim), indexing='ij')
        ext_nodes = np.stack([m.ravel() for m in mesh], axis=1)
        ext_shape = (en,) * self.dim
        base = problem.g.exterior.evaluate(ext_nodes).reshape(ext_shape)
        inner = tuple(slice(Wk, Wk + n) for _ in range(self.dim))
        base[inner] = problem.g.values
        self.base = base.ravel()
        self.omega_idx = restrict_nodes(grid, problem.omega)
        box_multi = np.unravel_index(self.omega_idx, grid.shape)
        self.I = np.ravel_multi_index(tuple(m + Wk for m in box_multi), ext_shape)
        self.in_omega = np.zeros(self.base.size, dtype=bool)
        self.in_omega[self.I] = True
        self.M = self.I.size

        ks = np.arange(-Wk, Wk + 1)
        if self.dim == 1:
            zs = np.arange(1, Wk + 1)[:, None]
            flat = zs[:, 0]
        else:
            z0, z1 = np.meshgrid(ks, ks, indexing='ij')
            z0, z1 = z0.ravel(), z1.ravel()
            keep = (z0 > 0) | ((z0 == 0) & (z1 > 0))
            zs = np.stack([z0[keep], z1[keep]], axis=1)
            flat = zs[:, 0] * en + zs[:, 1]
        self.offsets = flat
        self.c = self.w * problem.kernel.inverse(zs * h)
        self.tau = tail_weight(problem.kernel, (Wk + 0.5) * h)
        nodes = grid.nodes[self.omega_idx]
        self.gbar = problem.g.exterior.far_field(nodes)
        self.rhs = problem.rhs[self.omega_idx]
        chunk = max(1, CHUNK_ELEMENTS // max(self.M, 1))
        self.chunks = [slice(i, min(i + chunk, flat.size)) for i in range(0, flat.size, chunk)]

        self.sing = 0.0
        beta = self.p - 1.0 - params.sp
        if problem.singular_correction and self.dim == 1 and beta > -1:
            coef = zeta_correction(beta)
            if coef > 0:
                self.sing = coef * h ** (1.0 + beta)
        if self.sing:
            left = self.base.size - 1
            edge_lo = np.arange(left)
            touch = self.in_omega[edge_lo] | self.in_omega[edge_lo + 1]
            self.edges = edge_lo[touch]
        self.lower = problem.lower_order

    def fill(self, v):
        U = self.base.copy()
        U[self.I] = v
        return U

    def energy(self, v):
        p = self.p
        U = self.fill(v)
        total = 0.0
        for sl in self.chunks:
            off = self.offsets[sl]
            jp_idx = self.I[:, None] + off[None, :]
            jm_idx = self.I[:, None] - off[None, :]
            ep = np.abs(v[:, None] - U[jp_idx]) ** p * (2 - self.in_omega[jp_idx])
            em = np.abs(v[:, None] - U[jm_idx]) ** p * (2 - self.in_omega[jm_idx])
            total += float(np.sum((ep + em) @ self.c[sl]))
        total *= self.w / p
        total += 2.0 / p * float(np.sum(np.abs(v - self.gbar) ** p)) * self.tau * self.w
        if self.sing:
            D = (U[self.edges + 1] - U[self.edges]) / self.h
            total += self.sing / p * float(np.sum(np.abs(D) ** p)) * self.w
        total -= float(np.sum(self.rhs * v)) * self.w
        if self.lower is not None:
            total -= float(np.sum(self.lower.primitive(v))) * self.w
        return total

    def residual(self, v):
        """Energy gradient divided by the cell volume"""
        p = self.p
        U = self.fill(v)
        r = np.zeros(self.M)
        for sl in self.chunks:
            off = self.offsets[sl]
            paired = jp(v[:, None] - U[self.I[:, None] + off[None, :]], p) + \
                jp(v[:, None] - U[self.I[:, None] - off[None, :]], p)
            r += 2.0 * (paired @ self.c[sl])
        r += 2.0 * jp(v - self.gbar, p) * self.tau
        if self.sing:
            left = jp((U[self.I] - U[self.I - 1]) / self.h, p)
            right = jp((U[self.I + 1] - U[self.I]) / self.h, p)
            r += self.sing * (left - right) / self.h
        r -= self.rhs
        if self.lower is not None:
            r -= self.lower(v)
        return r

    def norm(self, r):
        return math.sqrt(float(np.sum(r * r)) * self.w)

    def rounding_floor(self, v, e):
        """Energy change (per cell volume) below which float rounding dominates"""
        scale = abs(e) + 2.0 * abs(float(np.sum(self.rhs * v)))
        if self.lower is not None:
            scale += 2.0 * abs(float(np.sum(self.lower.primitive(v))))
        return 64.0 * np.finfo(float).eps * scale

    def assemble(self):
        """``A v = b`` with ``residual(v) = A v - b`` for p=2 (lower-order term excluded)"""
        if self.p != 2:
            raise ParameterError('the linear system exists only for p=2', 'p')
        M = self.M
        A = np.zeros((M, M))
        b = self.rhs.copy()
        pos = np.full(self.base.size, -1, dtype=np.int64)
        pos[self.I] = np.arange(M)
        diag = 2.0 * (2.0 * float(np.sum(self.c)) + self.tau)
        A[np.diag_indices(M)] = diag
        b += 2.0 * self.gbar * self.tau
        couplings = [(off, 2.0 * ck) for off, ck in zip(self.offsets, self.c)]
        if self.sing:
            k = self.sing / self.h ** 2
            A[np.diag_indices(M)] += 2.0 * k
            couplings.append((1, k))
        for off, ck in couplings:
            for sign in (1, -1):
                nb = self.I + sign * off
                inside = self.in_omega[nb]
                rows = np.flatnonzero(inside)
                A[rows, pos[nb[inside]]] -= ck
                outside = np.flatnonzero(~inside)
                b[outside] += ck * self.base[nb[outside]]
        return A, b

    def initial(self, config):
        g_vals = self.base[self.I]
        if config.init == 'zero':
            return np.zeros(self.M)
        if config.init == 'random':
            rng = np.random.default_rng(config.seed)
            scale = max(1.0, float(np.max(np.abs(g_vals))) if g_vals.size else 1.0)
            return g_vals + rng.uniform(-scale, scale, self.M)
        lim = np.max(np.abs(self.problem.g.values)) if self.problem.g.values.size else 0.0
        return np.clip(g_vals, -lim, lim)

    def to_grid_function(self, v):
        vals = self.problem.g.flat.copy()
        vals[self.omega_idx] = v
        return GridFunction(self.problem.grid, vals, self.problem.g.exterior)

    def interior(self, u):
        return np.asarray(u.flat[self.omega_idx], dtype=float)


class DescentSolver(Emitter):
    """Accelerated gradient descent with backtracking and restarts

    Observable properties ``iteration``, ``energy`` and ``residual`` change
    once per accepted step; the ``on_step`` event fires with
    ``(solver, iteration=, energy=, residual=)`` and ``on_restart`` with
    ``(solver, iteration=)``. Trial energies of the line search are held
    under ``emission_lock('energy')``.

    Args:
        problem: The :class:`DirichletProblem`
        config: A :class:`SolverConfig`
    """
    _events_ = ['on_step', 'on_restart']
    iteration = Property(0)
    energy = Property(None)
    residual = Property(None)

    def __init__(self, problem, config=None, discretization=None):
        self.problem = problem
        self.config = config or SolverConfig()
        self.disc = discretization or _Discretization(problem, self.config.stencil_halfwidth)

    def run(self, v0=None):
        """Minimize from *v0* (default per ``config.init``)

        Returns:
            Solution

        Raises:
            ConvergenceError: If ``config.max_iterations`` is exhausted
        """
        cfg = self.config
        disc = self.disc
        w = disc.w
        x = disc.initial(cfg) if v0 is None else np.asarray(v0, dtype=float).copy()
        fx = disc.energy(x) / w
        rx = disc.residual(x)
        res = disc.norm(rx)
        history = [fx * w]
        steps = [0]
        floor_steps = 0
        self.energy = history[0]
        self.residual = res
        y, fy, ry = x, fx, rx
        t = 1.0
        L = 1.0 / cfg.initial_step
        restarts = 0
        it = 0
        while res > cfg.gradient_tolerance:
            if it >= cfg.max_iterations:
                raise ConvergenceError(it, res, history)
            it += 1
            g2 = float(np.sum(ry * ry))
            floor = disc.rounding_floor(x, fx)
            with self.emission_lock('energy'):
                while True:
                    x_new = y - ry / L
                    f_new = disc.energy(x_new) / w
                    self.energy = f_new * w
                    if f_new <= fy - 0.5 * g2 / L + floor:
                        break
                    L /= cfg.shrink
                    if not math.isfinite(L):
                        raise ConvergenceError(it, res, history)
                r_new = None
                if f_new <= fx + floor:
                    r_new = disc.residual(x_new)
                    res_new = disc.norm(r_new)
                    # below the rounding floor the energy cannot rank iterates
                    if f_new > fx - floor and res_new >= res:
                        r_new = None
                if r_new is None:
                    self.energy = fx * w
            if r_new is None:
                if y is x:
                    L /= cfg.shrink
                else:
                    restarts += 1
                    t = 1.0
                    y, fy, ry = x, fx, rx
                    self.emit('on_restart', self, iteration=it)
                continue
            if cfg.accelerated:
                t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
                y = x_new + ((t - 1.0) / t_new) * (x_new - x)
                t = t_new
                fy, ry = disc.energy(y) / w, disc.residual(y)
            else:
                y, fy, ry = x_new, f_new, r_new
            x, fx, rx = x_new, f_new, r_new
            res = res_new
            e = fx * w
            if e < history[-1]:
                history.append(e)
                steps.append(it)
            else:
                floor_steps += 1
            self.iteration = it
            self.energy = e
            self.residual = res
            self.emit('on_step', self, iteration=it, energy=e, residual=res)
            logger.debug('step %d: energy=%.15g residual=%.3e L=%.3e', it, e, res, L)
        logger.info('converged after %d iterations (%d restarts, %d below rounding), residual %.3e',
                    it, restarts, floor_steps, res)
        return Solution(disc.to_grid_function(x), history, res, it, restarts, 'descent',
                        {'history_iterations': steps, 'floor_steps': floor_steps},
                        final_energy=fx * w)


def _direct(disc):
    A, b = disc.assemble()
    lo = disc.lower
    if lo is not None:
        A = A - lo.lam * np.eye(disc.M)
    v = linalg.solve(A, b, assume_a='sym')
    r = disc.residual(v)
    e = disc.energy(v)
    return Solution(disc.to_grid_function(v), [e], disc.norm(r), 1, 0, 'direct',
                    {'matrix_size': disc.M})


def _curvature_guard(disc, lower):
    if disc.p != 2:
        return False, math.nan
    A, _ = disc.assemble()
    lam_min = float(linalg.eigvalsh(A, subset_by_index=[0, 0])[0])
    return lower.lipschitz < lam_min, lam_min


def _solve_plain(disc, config, v0=None):
    if config.method == 'direct':
        lo = disc.lower
        if disc.p != 2 or (lo is not None and lo.q != 2):
            raise ParameterError('method "direct" needs p=2 and a linear lower-order term', 'method')
        return _direct(disc)
    return DescentSolver(disc.problem, config, disc).run(v0)


def solve_dirichlet(problem, config=None, solver=None):
    """Minimize the discrete energy of *problem*

    With a lower-order term, the convexity guard
    ``lam (q-1) M**(q-2) < lambda_min`` (p=2) is checked first; if it fails,
    or p > 2, a :class:`RuntimeWarning` is issued and the problem is solved
    by the fixed-point splitting ``u_{k+1} = argmin E_f+Phi(clip(u_k))``.

    Args:
        problem: A :class:`DirichletProblem`
        config: A :class:`SolverConfig`
        solver: Optional :class:`DescentSolver` whose listeners should see
            the iterations (no lower-order fallback)

    Raises:
        ConvergenceError: On iteration-limit exhaustion
    """
    config = config or SolverConfig()
    if solver is not None:
        return solver.run()
    disc = _Discretization(problem, config.stencil_halfwidth)
    lower = problem.lower_order
    if lower is None:
        return _solve_plain(disc, config)
    ok, lam_min = _curvature_guard(disc, lower)
    if ok:
        logger.info('convexity guard passed: L=%.6g < lambda_min=%.6g', lower.lipschitz, lam_min)
        sol = _solve_plain(disc, config)
        sol.metadata['lambda_min'] = lam_min
        return sol
    msg = (f'lower-order term: convexity guard failed (L={lower.lipschitz:.6g}, '
           f'lambda_min={lam_min:.6g}, p={problem.params.p:g}); using fixed-point splitting')
    logger.warning(msg)
    warnings.warn(msg, RuntimeWarning)
    base = problem.with_rhs(lower_order=None)
    v = _Discretization(base, config.stencil_halfwidth).initial(config)
    M = lower.bound
    for k in range(1, config.max_outer + 1):
        fk = GridFunction(problem.grid, problem.rhs, problem.f.exterior)
        vals = fk.flat.copy()
        vals[disc.omega_idx] += lower(np.clip(v, -M, M))
        step = problem.with_rhs(f=fk.with_values(vals), rhs_scale=1.0, lower_order=None)
        sd = _Discretization(step, config.stencil_halfwidth)
        sol = _solve_plain(sd, config, None if config.method == 'direct' else v)
        v_new = sd.interior(sol.u)
        delta = float(np.max(np.abs(v_new - v))) if v.size else 0.0
        v = v_new
        logger.debug('fixed-point %d: max change %.3e', k, delta)
        if delta <= config.gradient_tolerance:
            sol.metadata.update(outer_iterations=k, fallback=True)
            sol.residual = disc.norm(disc.residual(v))
            return sol
    raise ConvergenceError(config.max_outer, delta, sol.energy_history)


def energy(u, problem, stencil_halfwidth=None):
    """Discrete energy of *u* (its Omega values; the exterior is ``problem.g``)"""
    disc = _Discretization(problem, stencil_halfwidth)
    return disc.energy(disc.interior(u))


def energy_gradient(u, problem, stencil_halfwidth=None):
    """Energy gradient divided by the cell volume, zero off Omega

    At interior node x this is ``2 sum_z J_p(u(x) - u(x+z)) c_z - f(x)``
    plus the tail and diagonal terms.
    """
    disc = _Discretization(problem, stencil_halfwidth)
    r = disc.residual(disc.interior(u))
    vals = np.zeros(problem.grid.size)
    vals[disc.omega_idx] = r
    return GridFunction(problem.grid, vals)


def assemble_linear_system(problem, stencil_halfwidth=None):
    """Dense ``(A, b, omega_idx)`` of the p=2 problem"""
    disc = _Discretization(problem, stencil_halfwidth)
    A, b = disc.assemble()
    return A, b, disc.omega_idx


def dense_linear_solve(problem, stencil_halfwidth=None):
    """Oracle for p=2: solve the assembled system with :func:`scipy.linalg.solve`"""
    return _direct(_Discretization(problem, stencil_halfwidth))


@dataclass(frozen=True)
class TestBank(object):
    """Weak-form test functions: rows of ``values`` over all grid nodes

    Every row must vanish outside ``support``.
    """
    __test__ = False

    values: np.ndarray
    support: Ball
    labels: tuple = ()


def make_test_bank(problem, support=None, cutoffs=3):
    """Node indicators of ``support`` plus radial cut-offs vanishing outside it

    ``support`` defaults to the ball of radius ``0.75 * omega.radius``.
    """
    grid = problem.grid
    om = problem.omega
    if support is None:
        support = Ball(om.center, 0.75 * om.radius)
    idx = restrict_nodes(grid, support)
    rows = np.zeros((idx.size, grid.size))
    rows[np.arange(idx.size), idx] = 1.0
    labels = [f'node {int(i)}' for i in idx]
    extra = []
    for k in range(cutoffs):
        outer = support.radius * (1.0 - 0.25 * k / max(cutoffs, 1))
        c = make_cutoff(0.5 * outer, 1.5 * outer - 1e-9 * outer, None, support.center)
        vals = c(grid.nodes)
        vals[~support.mask(grid.nodes)] = 0.0
        extra.append(vals)
        labels.append(f'cutoff r={c.r:.4g}')
    if extra:
        rows = np.vstack([rows, np.array(extra)])
    return TestBank(rows, support, tuple(labels))


def weak_residual(u, problem, test_bank):
    """``max_phi |sum_x phi(x) r(x) w|`` with ``r`` the energy gradient

    Raises:
        InvalidTestFunctionError: If a test function does not vanish outside
            its support, or the support is not compactly inside omega
    """
    grid = problem.grid
    if not problem.omega.contains_ball(test_bank.support):
        raise InvalidTestFunctionError(-1, math.inf)
    outside = ~test_bank.support.mask(grid.nodes)
    vals = np.atleast_2d(test_bank.values)
    for i, row in enumerate(vals):
        mo = float(np.max(np.abs(row[outside]))) if np.any(outside) else 0.0
        if mo > 0:
            raise InvalidTestFunctionError(i, mo)
    r = energy_gradient(u, problem).flat
    return float(np.max(np.abs(vals @ r))) * grid.cell_volume
