"""Run configuration: strict JSON files plus command-line overrides

A configuration file is a JSON object with the keys of :class:`RunConfig`;
``problem`` and ``solver`` are nested objects. Unknown keys are rejected
with their dotted path. Flags given on the command line are applied on
top of the file as dotted ``key=value`` overrides.

>>> from fraclab.config import parse_config
>>> cfg = parse_config(text='{"command": "solve", "problem": {"s": 0.5, "n": 65}}')
>>> cfg.problem.params.s, cfg.problem.n
(0.5, 65)
>>> parse_config(text='{"problem": {"s": 1.2}}')
Traceback (most recent call last):
  ...
fraclab.errors.ConfigError: key "problem.s": s must lie in (0,1)
"""

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import fraclab.estimates  # registers the structure target
from fraclab.errors import ConfigError, ParameterError
from fraclab.grid import Ball, make_grid, sample, zero_rule
from fraclab.kernels import FractionalParams, modulated_kernel, standard_kernel
from fraclab.solver import DirichletProblem, SolverConfig
from fraclab.testfunctions import TestFunction
from fraclab.verification import SWEEP_FAMILIES, TARGETS

__all__ = (
    'COMMANDS', 'COMMAND_OPTIONS', 'ProblemSpec', 'RunConfig', 'parse_config', 'apply_overrides',
)

logger = logging.getLogger(__name__)

COMMANDS = ('solve', 'seminorm', 'estimate', 'verify', 'sweep', 'bench')

COMMAND_OPTIONS = {
    'solve': (),
    'seminorm': ('kind', 'u', 'radius', 'center', 'alpha', 'h_max', 'inner_radius',
                 'diagonal_correction'),
    'estimate': ('tau', 'center', 'radius', 'tolerance'),
    'verify': ('target',),
    'sweep': ('family', 's_list'),
    'bench': ('dims', 'ladder_1d', 'ladder_2d'),
}


def _function_spec(d, key):
    if not isinstance(d, dict):
        raise ConfigError('expected an object with "tag" and "params"', key)
    try:
        return TestFunction.from_dict(d)
    except KeyError as exc:
        raise ConfigError(f'missing {exc}', key)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), key)


@dataclass(frozen=True)
class ProblemSpec(object):
    """Grid, parameters, data and kernel of a Dirichlet problem

    ``f`` and ``g`` are test-function dicts (``{"tag": ..., "params": ...}``).
    ``g`` keeps its closed form as exterior rule unless ``g_exterior`` is
    ``"zero"``.
    """
    dim: int = 1
    box_halfwidth: float = 1.0
    n: int = 257
    s: float = 0.5
    p: float = 2.0
    t: float = 0.0
    Lambda: float = 1.0
    omega_radius: float = 1.0
    f: dict = field(default_factory=lambda: {'tag': 'constant', 'params': {'c': 1.0}})
    g: dict = field(default_factory=lambda: {'tag': 'constant', 'params': {'c': 0.0}})
    g_exterior: str = 'closed_form'
    kernel: Optional[dict] = None
    rhs_scale: float = 1.0

    @property
    def params(self):
        return FractionalParams(self.dim, self.s, self.p, self.t, self.Lambda)

    @property
    def grid(self):
        return make_grid(self.dim, self.box_halfwidth, self.n)

    def make_kernel(self):
        if not self.kernel:
            return standard_kernel(self.params)
        opts = dict(self.kernel)
        return modulated_kernel(self.params, opts.pop('modulation'), **opts)

    def build(self):
        """The :class:`~fraclab.solver.DirichletProblem` described here"""
        grid = self.grid
        f = sample(TestFunction.from_dict(self.f), grid)
        gfun = TestFunction.from_dict(self.g)
        g = sample(gfun, grid, zero_rule() if self.g_exterior == 'zero' else None)
        return DirichletProblem(Ball.centered(self.dim, self.omega_radius), f, g,
                                self.make_kernel(), rhs_scale=self.rhs_scale)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RunConfig(object):
    """Everything one CLI invocation needs; serializes to ``run.json``

    Attributes:
        command (str): One of :data:`COMMANDS`
        problem: :class:`ProblemSpec`
        solver: :class:`~fraclab.solver.SolverConfig`
        options (dict): Command-specific options (target name, s list, ...)
        seed (int): Run seed; verification jobs spawn theirs from it
        out (str): Output directory
        workers (int): Thread count for pair sums and jobs
        svg (bool): Also write log-log plots
    """
    command: str = 'verify'
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    options: dict = field(default_factory=dict)
    seed: int = 0
    out: str = 'fraclab-out'
    workers: int = 1
    svg: bool = False

    def to_dict(self):
        return {
            'command': self.command, 'problem': self.problem.to_dict(),
            'solver': self.solver.to_dict(), 'options': dict(self.options), 'seed': self.seed,
            'out': self.out, 'workers': self.workers, 'svg': self.svg,
        }


_SECTIONS = {'problem': ProblemSpec, 'solver': SolverConfig}


def _known(cls):
    return {f.name for f in dataclasses.fields(cls)}


def _check_keys(d, cls, prefix):
    for key in d:
        if key not in _known(cls):
            raise ConfigError(f'unknown key (known: {", ".join(sorted(_known(cls)))})',
                              f'{prefix}{key}')


def _reject_duplicates(pairs):
    out = {}
    for key, val in pairs:
        if key in out:
            raise ConfigError('duplicate key', key)
        out[key] = val
    return out


def _load_text(text):
    try:
        data = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f'malformed JSON: {exc.msg} (column {exc.colno})', line=exc.lineno)
    if not isinstance(data, dict):
        raise ConfigError('the configuration must be a JSON object')
    return data


def _coerce(value):
    """Parse a flag value as JSON, falling back to the raw string"""
    if not isinstance(value, str):
        return value
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(data, overrides):
    """Set dotted *overrides* (``{"problem.s": 0.7}``) into nested *data*"""
    for dotted, value in overrides.items():
        if value is None:
            continue
        parts = dotted.split('.')
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError('cannot override inside a non-object value', dotted)
        node[parts[-1]] = _coerce(value)
    return data


def _check_options(command, options):
    known = set(COMMAND_OPTIONS[command])
    if command == 'verify':
        target = options.get('target')
        if target is not None and target != 'all':
            if not isinstance(target, str) or target not in TARGETS:
                raise ConfigError(f'unknown target (known: {", ".join(TARGETS.names())}, all)',
                                  'options.target')
            known |= set(TARGETS.defaults(target))
    elif command == 'sweep':
        family = options.get('family', 'torsion')
        if not isinstance(family, str) or family not in SWEEP_FAMILIES:
            raise ConfigError(f'unknown family (known: {", ".join(SWEEP_FAMILIES.names())})',
                              'options.family')
        known |= set(SWEEP_FAMILIES.defaults(family))
    for key in options:
        if key not in known:
            listed = ', '.join(sorted(known)) or 'none'
            raise ConfigError(f'unknown option for {command} (known: {listed})', f'options.{key}')


def _build_section(cls, d, prefix):
    if not isinstance(d, dict):
        raise ConfigError('expected an object', prefix.rstrip('.'))
    _check_keys(d, cls, prefix)
    try:
        return cls(**d)
    except ParameterError as exc:
        key = f'{prefix}{exc.name}' if exc.name else prefix.rstrip('.')
        raise ConfigError(exc.message, key)
    except TypeError as exc:
        raise ConfigError(str(exc), prefix.rstrip('.'))


def parse_config(path=None, overrides=None, text=None):
    """Build a validated :class:`RunConfig`

    Args:
        path (str, optional): JSON file to read
        overrides (dict, optional): Dotted keys applied after the file
        text (str, optional): JSON text instead of a file

    Raises:
        ConfigError: For malformed JSON (with line and column), unknown keys
            (with their dotted path) and violated parameter constraints
            (quoting the constraint)
    """
    data = {}
    if path is not None:
        with open(path, 'r', encoding='utf-8') as fp:
            text = fp.read()
    if text is not None:
        data = _load_text(text)
    apply_overrides(data, dict(overrides or {}))
    _check_keys(data, RunConfig, '')
    kwargs = dict(data)
    for name, cls in _SECTIONS.items():
        kwargs[name] = _build_section(cls, kwargs.get(name, {}), f'{name}.')
    problem = kwargs['problem']
    try:
        problem.params
    except ParameterError as exc:
        raise ConfigError(exc.message, f'problem.{exc.name}')
    for key in ('f', 'g'):
        _function_spec(getattr(problem, key), f'problem.{key}')
    if problem.g_exterior not in ('closed_form', 'zero'):
        raise ConfigError('g_exterior must be "closed_form" or "zero"', 'problem.g_exterior')
    if kwargs.get('command', 'verify') not in COMMANDS:
        raise ConfigError(f'unknown command (known: {", ".join(COMMANDS)})', 'command')
    if not isinstance(kwargs.get('options', {}), dict):
        raise ConfigError('expected an object', 'options')
    _check_options(kwargs.get('command', 'verify'), kwargs.get('options', {}))
    if int(kwargs.get('workers', 1)) < 1:
        raise ConfigError('workers must be >= 1', 'workers')
    cfg = RunConfig(**kwargs)
    logger.debug('parsed config %r', cfg.to_dict())
    return cfg
