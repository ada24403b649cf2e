"""Verification reports, CSV emission and log-log fits

>>> from fraclab.report import VerificationReport
>>> rep = VerificationReport('demo')
>>> rep.add('lhs<=rhs', lhs=1.0, rhs=2.0, metric=0.5, passed=True)
>>> rep.verdict_line()
'PASS demo 0.5'
"""

import csv
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import List

import numpy as np

from fraclab.errors import ParameterError

__all__ = ('ReportRow', 'VerificationReport', 'LogLogFit', 'loglog_slope', 'write_table')

logger = logging.getLogger(__name__)

REPORT_COLUMNS = (
    'target', 'name', 'params', 'samples', 'lhs', 'rhs', 'ratio', 'metric',
    'verdict', 'informational', 'detail',
)


@dataclass
class ReportRow(object):
    """One checked quantity: both sides, a metric and the verdict

    ``lhs``/``rhs`` hold the two sides with constants stripped; ``metric``
    is what the verdict is about (a worst slack, a max ratio, a slope...).
    Informational rows are recorded but do not enter the verdict.
    """
    name: str
    lhs: float = math.nan
    rhs: float = math.nan
    metric: float = math.nan
    passed: bool = True
    params: dict = field(default_factory=dict)
    samples: int = 1
    informational: bool = False
    detail: str = ''

    @property
    def ratio(self):
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    def as_list(self, target):
        params = ';'.join(f'{k}={_fmt(v)}' for k, v in self.params.items())
        return [
            target, self.name, params, self.samples, _fmt(self.lhs), _fmt(self.rhs),
            _fmt(self.ratio), _fmt(self.metric), 'PASS' if self.passed else 'FAIL',
            int(self.informational), self.detail,
        ]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


@dataclass
class VerificationReport(object):
    """Per-target collection of :class:`ReportRow`

    Args:
        target (str): Name used in the verdict line
        worst_is_min (bool): If True the worst metric is the smallest one
            (slacks); otherwise the largest (ratios, errors)
    """
    target: str
    rows: List[ReportRow] = field(default_factory=list)
    worst_is_min: bool = False
    fitted: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def add(self, name, **kwargs):
        row = ReportRow(name, **kwargs)
        self.rows.append(row)
        if not row.passed and not row.informational:
            logger.warning('%s: %s failed (lhs=%r rhs=%r metric=%r) %s',
                           self.target, name, row.lhs, row.rhs, row.metric, row.detail)

    def extend(self, other, prefix=''):
        for row in other.rows:
            row = ReportRow(**{**row.__dict__, 'name': prefix + row.name})
            self.rows.append(row)
        for key, val in other.fitted.items():
            self.fitted[prefix + key] = val

    def fit(self, name, value):
        """Record a fitted constant and log it"""
        self.fitted[name] = float(value)
        logger.info('%s: fitted %s = %.6g', self.target, name, value)

    @property
    def counted(self):
        return [r for r in self.rows if not r.informational]

    @property
    def passed(self):
        return all(r.passed for r in self.counted)

    @property
    def violations(self):
        return [r for r in self.counted if not r.passed]

    @property
    def worst(self):
        rows = self.violations or self.counted
        vals = [r.metric for r in rows if not math.isnan(r.metric)]
        if not vals:
            return math.nan
        return min(vals) if self.worst_is_min else max(vals)

    def verdict_line(self):
        return f'{"PASS" if self.passed else "FAIL"} {self.target} {self.worst:.6g}'

    def to_csv(self, fp):
        """Write the rows with a leading ``# schema:`` line"""
        fp.write('# schema: ' + ','.join(REPORT_COLUMNS) +
                 ' (lhs/rhs with constants stripped; ratio=lhs/rhs)\n')
        w = csv.writer(fp, lineterminator='\n')
        w.writerow(REPORT_COLUMNS)
        for row in self.rows:
            w.writerow(row.as_list(self.target))


LogLogFit = namedtuple('LogLogFit', ['slope', 'intercept', 'residual'])
"""Least-squares line through ``(log x, log y)``; ``residual`` is the RMS error"""


def loglog_slope(xs, ys):
    """Ordinary least squares slope of ``log(ys)`` against ``log(xs)``

    >>> round(loglog_slope([1, 2, 4, 8], [3, 12, 48, 192]).slope, 10)
    2.0

    Raises:
        ParameterError: With fewer than two usable (positive) points
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if np.count_nonzero(ok) < 2:
        raise ParameterError('need at least two positive points for a log-log fit')
    lx, ly = np.log(x[ok]), np.log(y[ok])
    coef = np.polyfit(lx, ly, 1)
    resid = ly - np.polyval(coef, lx)
    return LogLogFit(float(coef[0]), float(coef[1]),
                     float(np.sqrt(np.mean(resid ** 2))))


def write_table(fp, columns, rows, units=''):
    """Write a CSV table with a ``# schema:`` comment line

    Args:
        columns: Column names
        rows: Iterable of sequences
        units (str): Free-text note appended to the schema line
    """
    note = f' ({units})' if units else ''
    fp.write('# schema: ' + ','.join(columns) + note + '\n')
    w = csv.writer(fp, lineterminator='\n')
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
