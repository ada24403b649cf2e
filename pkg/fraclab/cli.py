"""Batch command-line interface

::

    fraclab verify pointwise --out results
    fraclab solve --config run.json --set problem.s=0.7
    fraclab bench --workers 4

Every run writes ``run.json`` (the resolved configuration) into the output
directory, one CSV per table and, for ``verify``, ``verdict.txt``. The exit
code is 0 on success or PASS, 1 on FAIL and 2 on any error.
"""

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

import fraclab.estimates  # registers the structure target
from fraclab.config import COMMANDS, parse_config
from fraclab.diffops import h_grid
from fraclab.errors import ConfigError
from fraclab.grid import Ball, make_grid, sample, write_csv
from fraclab.regularity import classify_regime, estimate_order
from fraclab.report import VerificationReport, loglog_slope, write_table
from fraclab.seminorms import SEMINORMS, gagliardo
from fraclab.solver import DescentSolver, solve_dirichlet
from fraclab.svg import write_loglog_svg
from fraclab.testfunctions import TestFunction
from fraclab.verification import TARGETS, VerificationHarness, benchmark_problem, \
    s_sweep_to_plaplacian, solve_benchmark

__all__ = (
    'EXIT_OK', 'EXIT_FAIL', 'EXIT_ERROR', 'SCALING_TOLERANCE', 'check_scaling', 'run',
    'build_parser', 'main',
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2

BENCH_LADDERS = {1: (128, 256, 512), 2: (16, 32, 64)}
SOLVE_LADDER = (65, 129, 257)
SCALING_TOLERANCE = 0.5
SCALING_MIN_NODES = 128
TABLE_COLUMNS = {
    'bbm': ('s', 'value', 'ratio'),
    'bbm_u': ('s', 'value', 'ratio'),
    'bbm_reference': ('s', 'value', 'ratio'),
    'sweep': ('s', 'lp_error', 'gradient_error'),
    'sweep_affine': ('s', 'lp_error', 'gradient_error'),
    'trace': ('stage', 'r_i', 'r_next', 'gamma', 'M_gamma'),
    'besov_trend': ('function', 'eps', 'besov'),
    'heat_decay': ('t', 'hessian_norm'),
    'time_derivative': ('t', 'laplacian_norm'),
}


class _Output(object):
    """Files under the output directory"""
    def __init__(self, root):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def path(self, name):
        return os.path.join(self.root, name)

    def open(self, name):
        return open(self.path(name), 'w', newline='', encoding='utf-8')

    def table(self, name, columns, rows, units=''):
        with self.open(name) as fp:
            write_table(fp, columns, rows, units)

    def report(self, report, name=None):
        with self.open(name or f'{report.target}.csv') as fp:
            report.to_csv(fp)


def _solve(cfg, out):
    problem = cfg.problem.build()
    if cfg.solver.method == 'descent' and problem.lower_order is None:
        solver = DescentSolver(problem, cfg.solver)

        def on_step(instance, iteration, energy, residual, **kwargs):
            logger.debug('step %d: energy=%.12g residual=%.3e', iteration, energy, residual)
        solver.bind(on_step=on_step)
        sol = solve_dirichlet(problem, cfg.solver, solver=solver)
    else:
        sol = solve_dirichlet(problem, cfg.solver)
    with out.open('solution.csv') as fp:
        write_csv(sol.u, fp)
    steps = sol.metadata.get('history_iterations', range(len(sol.energy_history)))
    out.table('energy.csv', ('iteration', 'energy'), zip(steps, sol.energy_history),
              'iterates that strictly lowered the energy; energy is dimensionless')
    logger.info('solved in %d iterations (%s), energy %.12g, residual %.3e',
                sol.iterations, sol.method, sol.energy, sol.residual)
    return EXIT_OK


def _seminorm(cfg, out):
    opts = dict(cfg.options)
    kind = SEMINORMS.canonical(opts.pop('kind', 'gagliardo'))
    fun = TestFunction.from_dict(opts.pop('u', cfg.problem.g))
    grid = cfg.problem.grid
    u = sample(fun, grid)
    params = cfg.problem.params
    radius = float(opts.pop('radius', 0.5))
    E = Ball(tuple(opts.pop('center', (0.0,) * grid.dim)), radius)
    if kind == 'lp':
        res = SEMINORMS.build(kind, u=u, E=E, p=params.p)
    elif kind == 'gagliardo':
        res = SEMINORMS.build(kind, u=u, E=E, alpha=float(opts.pop('alpha', params.s)),
                              p=params.p, workers=cfg.workers, **opts)
    elif kind == 'nikolskii':
        hs = h_grid(grid, float(opts.pop('h_max', radius / 2)))
        res = SEMINORMS.build(kind, u=u, E=E, alpha=float(opts.pop('alpha', params.s)),
                              p=params.p, h_grid=hs)
    elif kind == 'besov2':
        hs = h_grid(grid, float(opts.pop('h_max', radius / 2)))
        res = SEMINORMS.build(kind, u=u, alpha=float(opts.pop('alpha', 1.5)), p=params.p,
                              h_grid=hs, E=E)
    elif kind == 'xps':
        res = SEMINORMS.build(kind, u=u, params=params)
    elif kind in ('snail_bracket_X', 'snail_bracket_Y'):
        F = Ball(E.center, float(opts.pop('inner_radius', 0.75 * radius)))
        res = SEMINORMS.build(kind, u=u, F=F, E=E, params=params)
    else:
        res = SEMINORMS.build(kind, u=u, f=sample(TestFunction.from_dict(cfg.problem.f), grid),
                              R=radius, params=params, workers=cfg.workers)
    meta = {k: v for k, v in res.metadata.items() if isinstance(v, (int, float, str))}
    out.table('seminorm.csv', ('kind', 'value', 'power', 'metadata'),
              [(kind, res.value, res.power, json.dumps(meta, sort_keys=True))],
              'value is the seminorm; power is value**p')
    logger.info('%s = %.12g', kind, res.value)
    return EXIT_OK


def _estimate(cfg, out):
    problem = cfg.problem.build()
    sol = solve_dirichlet(problem, cfg.solver)
    scheme = classify_regime(problem.params, cfg.options.get('tau'))
    ball = Ball(tuple(cfg.options.get('center', (0.0,) * problem.grid.dim)),
                float(cfg.options.get('radius', 0.5)))
    rep = estimate_order(sol.u, ball, problem.params.p, predicted=scheme.predicted_order,
                         tolerance=float(cfg.options.get('tolerance', 0.05)))
    row = rep.as_row()
    out.table('order.csv', tuple(row), [tuple(row.values())], 'orders are dimensionless')
    with out.open('scheme.json') as fp:
        json.dump(scheme.to_dict(), fp, indent=2, sort_keys=True)
    out.table('dyadic.csv', ('h', 'norm'), zip(rep.hs, rep.norms), 'norm = ||delta_h u||_{L^p(ball)}')
    return EXIT_OK


def _verdicts(out, reports):
    lines = [rep.verdict_line() for rep in reports]
    with out.open('verdict.txt') as fp:
        fp.write('\n'.join(lines) + '\n')
    for line in lines:
        print(line)
    return EXIT_OK if all(rep.passed for rep in reports) else EXIT_FAIL


def _write_tables(out, report):
    for name, rows in report.tables.items():
        rows = list(rows)
        width = len(rows[0]) if rows else 0
        columns = TABLE_COLUMNS.get(name, tuple(f'c{k}' for k in range(width)))
        out.table(f'{report.target}_{name}.csv', columns, rows,
                  f'table {name} of target {report.target}')


def _svg_series(report):
    if report.target == 'bbm':
        return [(key, [(1.0 - s, v) for s, v, _ in rows]) for key, rows in report.tables.items()
                if key != 'bbm']
    if report.target == 'sweep':
        rows = report.tables['sweep']
        return [('L^p error', [(1.0 - s, e) for s, e, _ in rows]),
                ('gradient error', [(1.0 - s, g) for s, _, g in rows])]
    return None


def _verify(cfg, out):
    target = cfg.options.get('target')
    if target is None:
        raise ConfigError('verify needs a target', 'options.target')
    names = list(TARGETS.names()) if target == 'all' else [target]
    opts = {k: v for k, v in cfg.options.items() if k != 'target'}
    harness = VerificationHarness(cfg.seed, cfg.workers)

    def on_job_done(instance, name=None, report=None, **kwargs):
        logger.info('job %s done: %s', name, report.verdict_line())
    harness.bind(on_job_done=on_job_done)
    for name in names:
        harness.add(name, opts if len(names) == 1 else None)
    reports = list(harness.run().values())
    for rep in reports:
        out.report(rep)
        _write_tables(out, rep)
        series = _svg_series(rep)
        if cfg.svg and series:
            write_loglog_svg(out.path(f'{rep.target}.svg'), series, title=rep.target,
                             xlabel='1 - s', ylabel='value')
    return _verdicts(out, reports)


def _sweep(cfg, out):
    opts = dict(cfg.options)
    rep = s_sweep_to_plaplacian(opts.pop('family', 'torsion'),
                                opts.pop('s_list', (0.6, 0.75, 0.9)), cfg.solver,
                                p=cfg.problem.p, n=cfg.problem.n, **opts)
    out.report(rep)
    out.table('sweep_errors.csv', ('s', 'lp_error', 'gradient_error'), rep.tables['sweep'],
              'L^p(-1,1) and gradient L^p(-1/2,1/2) errors')
    if cfg.svg:
        write_loglog_svg(out.path('sweep.svg'), _svg_series(rep), title='sweep',
                         xlabel='1 - s', ylabel='error')
    return _verdicts(out, [rep])


def _timed(func):
    t0 = time.perf_counter()
    val = func()
    return time.perf_counter() - t0, val


def check_scaling(report, workload, dim, ladder, times, expected):
    """Add a row comparing the measured wall-time exponent with *expected*

    The row enters the verdict only when the smallest rung has at least
    :data:`SCALING_MIN_NODES` nodes; below that, fixed costs dominate the
    timings and the row is informational.

    Returns:
        LogLogFit: The fit of wall time against nodes per axis
    """
    fit = loglog_slope(ladder, times)
    gap = abs(fit.slope - expected)
    small = min(ladder) ** dim < SCALING_MIN_NODES
    report.add(f'{workload}_scaling', lhs=fit.slope, rhs=expected, metric=gap,
               passed=gap <= SCALING_TOLERANCE, informational=small,
               params={'dim': dim, 'n_min': min(ladder), 'n_max': max(ladder)},
               samples=len(ladder), detail='ladder too small to time' if small else '')
    return fit


def _bench(cfg, out):
    rows, fits = [], []
    report = VerificationReport('bench')
    dims = cfg.options.get('dims', (1, 2))
    workers = max(cfg.workers, 2)
    identical = True
    for dim in dims:
        ladder = tuple(cfg.options.get(f'ladder_{dim}d', BENCH_LADDERS[dim]))
        times = []
        for n in ladder:
            grid = make_grid(dim, 1.0, n)
            u = sample(TestFunction('bump', {'radius': 0.8}), grid)
            E = Ball.centered(dim, 2.0)
            wall, single = _timed(lambda: gagliardo(u, E, 0.5, 2.0, 1).value)
            _, multi = _timed(lambda: gagliardo(u, E, 0.5, 2.0, workers).value)
            identical &= single == multi
            times.append(wall)
            rows.append(('gagliardo', dim, n, wall, repr(single), single == multi))
        fit = check_scaling(report, f'gagliardo_{dim}d', dim, ladder, times, 2 * dim)
        fits.append((f'gagliardo_{dim}d', fit.slope, 2 * dim))
    times = []
    for n in SOLVE_LADDER:
        problem = benchmark_problem(0.5, n=n)
        wall, sol = _timed(lambda: solve_benchmark(problem))
        times.append(wall)
        rows.append(('solve', 1, n, wall, repr(float(np.sum(sol.u.flat))), True))
    fits.append(('solve_1d', loglog_slope(SOLVE_LADDER, times).slope, math.nan))
    out.table('bench.csv', ('workload', 'dim', 'n', 'seconds', 'value', 'identical'), rows,
              'wall time in seconds; value is the deterministic workload result')
    out.table('bench_scaling.csv', ('workload', 'exponent', 'expected'), fits,
              'exponent of wall time against nodes per axis')
    report.add('bit_identical', metric=float(not identical), passed=identical,
               params={'workers': workers})
    out.report(report, 'bench_report.csv')
    return _verdicts(out, [report])


_COMMANDS = {
    'solve': _solve, 'seminorm': _seminorm, 'estimate': _estimate,
    'verify': _verify, 'sweep': _sweep, 'bench': _bench,
}


def run(cfg):
    """Execute *cfg* and return the exit code

    Module errors are logged with their message and mapped to
    :data:`EXIT_ERROR`.
    """
    out = _Output(cfg.out)
    with out.open('run.json') as fp:
        json.dump(cfg.to_dict(), fp, indent=2, sort_keys=True)
    try:
        return _COMMANDS[cfg.command](cfg, out)
    except (ArithmeticError, ValueError, RuntimeError, KeyError, TypeError) as exc:
        logger.error('%s failed: %s', cfg.command, exc)
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_ERROR


def _global_options(parser, top):
    """Flags accepted before and after the subcommand

    Subcommand copies default to ``SUPPRESS`` so they only override what
    was actually given.
    """
    def default(value):
        return value if top else argparse.SUPPRESS
    parser.add_argument('--config', default=default(None), help='JSON run configuration')
    parser.add_argument('--out', default=default(None), help='output directory')
    parser.add_argument('--seed', type=int, default=default(None), help='run seed')
    parser.add_argument('--workers', type=int, default=default(None), help='thread count')
    parser.add_argument('--svg', action='store_true', default=default(None),
                        help='write log-log plots')
    parser.add_argument('--set', action='append', default=default([]), metavar='KEY=VALUE',
                        help='override a dotted config key, e.g. problem.s=0.7')
    level = parser.add_mutually_exclusive_group()
    level.add_argument('-v', '--verbose', action='store_true', default=default(False))
    level.add_argument('-q', '--quiet', action='store_true', default=default(False))


def build_parser():
    parser = argparse.ArgumentParser(prog='fraclab', description=__doc__.splitlines()[0])
    _global_options(parser, top=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, top=False)
    sub = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == 'verify':
            sp.add_argument('target', choices=TARGETS.names() + ('all',))
    return parser


def _overrides(args):
    flags = {'command': args.command, 'out': args.out, 'seed': args.seed,
             'workers': args.workers, 'svg': args.svg}
    if args.command == 'verify':
        flags['options.target'] = args.target
    for item in args.set:
        key, sep, value = item.partition('=')
        if not sep:
            raise ConfigError('expected KEY=VALUE', item)
        flags[key.strip()] = value
    return flags


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        cfg = parse_config(args.config, _overrides(args))
    except (ConfigError, OSError) as exc:
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_ERROR
    return run(cfg)


if __name__ == '__main__':
    sys.exit(main())
