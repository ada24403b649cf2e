"""The odd power maps ``J_p`` and ``V_p`` and their pointwise inequalities

``J_p(t) = |t|**(p-2) t`` and ``V_p(t) = |t|**((p-2)/2) t``.

>>> from fraclab.nonlinear import jp, vp
>>> float(jp(2.0, 3)), float(vp(-2.0, 4)), float(jp(0.0, 2.5))
(4.0, -4.0, 0.0)
"""

import logging
import math

import numpy as np

from fraclab.errors import ParameterError
from fraclab.report import VerificationReport

__all__ = (
    'jp', 'vp', 'odd_power_difference', 'jp_difference', 'vp_difference',
    'scalar_sides', 'INEQUALITIES', 'verify_pointwise_inequalities',
)

logger = logging.getLogger(__name__)

SLACK = 1e-12


def _check_p(p):
    if not p >= 2:
        raise ParameterError('p must satisfy p ≥ 2', 'p')


def jp(x, p):
    """``|x|**(p-2) * x``, zero at zero"""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** (p - 1.0)


def vp(x, p):
    """``|x|**((p-2)/2) * x``, zero at zero"""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** (p / 2.0)


def odd_power_difference(a, b, e):
    """``sign(a)|a|**e - sign(b)|b|**e`` without cancellation

    Same-sign pairs are evaluated as ``|b|**e * expm1(e * log1p((|a|-|b|)/|b|))``
    so near-equal arguments keep full relative precision.
    """
    shape = np.broadcast(np.asarray(a), np.asarray(b)).shape
    a, b = np.broadcast_arrays(np.atleast_1d(np.asarray(a, dtype=float)),
                               np.atleast_1d(np.asarray(b, dtype=float)))
    if e == 1.0:
        return (a - b).reshape(shape)
    out = np.sign(a) * np.abs(a) ** e - np.sign(b) * np.abs(b) ** e
    same = (np.sign(a) == np.sign(b)) & (b != 0)
    if np.any(same):
        abs_a, abs_b = np.abs(a[same]), np.abs(b[same])
        rel = (abs_a - abs_b) / abs_b
        out[same] = np.sign(b[same]) * abs_b ** e * np.expm1(e * np.log1p(rel))
    return out.reshape(shape)


def jp_difference(a, b, p):
    return odd_power_difference(a, b, p - 1.0)


def vp_difference(a, b, p):
    return odd_power_difference(a, b, p / 2.0)


def _sides(a, b, p, dJ, dV, absa, absb):
    """Both sides of every inequality for arrays of pairs

    Each entry is ``(lhs, rhs, sense)`` with ``sense`` '>=' or '<='.
    """
    d = a - b
    c = (p - 1.0) * (2.0 / p) ** 2
    sharp = 2.0 ** (2.0 - p)
    e = (p - 2.0) / 2.0
    return {
        'monotone': (dJ * d, c * dV ** 2, '>='),
        'lipschitz': (np.abs(dJ), 2.0 * (p - 1.0) / p * (absa ** e + absb ** e) * np.abs(dV), '<='),
        'holder': (dV ** 2, sharp * np.abs(d) ** p, '>='),
        'down': (dJ * d, c * sharp * np.abs(d) ** p, '>='),
        'holder_literal': (dV ** 2, np.abs(d) ** p, '>='),
        'down_literal': (dJ * d, c * np.abs(d) ** p, '>='),
    }


INEQUALITIES = ('monotone', 'lipschitz', 'holder', 'down')
"""Inequalities entering the verdict; the ``*_literal`` rows are informational"""


def scalar_sides(a, b, p):
    """Brute-force oracle using only :mod:`math` floats

    Returns:
        dict: ``name -> (lhs, rhs, sense)`` for every inequality

    >>> sides = scalar_sides(1.0, -1.0, 4.0)
    >>> sides['down']
    (4.0, 3.0, '>=')
    >>> sides['down_literal']
    (4.0, 12.0, '>=')
    """
    def J(x):
        return math.copysign(abs(x) ** (p - 1), x) if x != 0 else 0.0
    def V(x):
        return math.copysign(abs(x) ** (p / 2), x) if x != 0 else 0.0
    dJ = J(a) - J(b)
    dV = V(a) - V(b)
    d = a - b
    c = (p - 1) * (2 / p) ** 2
    sharp = 2.0 ** (2 - p)
    e = (p - 2) / 2
    return {
        'monotone': (dJ * d, c * dV * dV, '>='),
        'lipschitz': (abs(dJ), 2 * (p - 1) / p * (abs(a) ** e + abs(b) ** e) * abs(dV), '<='),
        'holder': (dV * dV, sharp * abs(d) ** p, '>='),
        'down': (dJ * d, c * sharp * abs(d) ** p, '>='),
        'holder_literal': (dV * dV, abs(d) ** p, '>='),
        'down_literal': (dJ * d, c * abs(d) ** p, '>='),
    }


def _relative_slack(lhs, rhs, sense):
    """Signed slack normalised by the larger side; negative means violated"""
    if sense == '<=':
        lhs, rhs = rhs, lhs
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    diff = lhs - rhs
    return np.where(scale > 0, diff / np.where(scale > 0, scale, 1.0), 0.0)


def _sample_pairs(rng, count):
    """Uniform pairs in ``[-10, 10]**2`` plus near-diagonal and exact pairs"""
    ab = rng.uniform(-10.0, 10.0, (count, 2))
    n_near = max(1, count // 10)
    base = rng.uniform(-10.0, 10.0, n_near)
    delta = 10.0 ** rng.uniform(-14.0, -8.0, n_near) * np.where(rng.random(n_near) < 0.5, -1, 1)
    near = np.stack([base, base + delta], axis=1)
    exact = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, -1.0], [-1.0, 1.0],
                      [0.0, 0.0], [2.0, 2.0], [10.0, -10.0], [1e-300, -1e-300]])
    return np.concatenate([ab, near, exact])


def verify_pointwise_inequalities(p_list=(2.0, 2.5, 3.0, 4.0), sample_count=100000, rng_seed=0):
    """Check the four pointwise inequalities on random and calibration pairs

    Pairs are drawn from ``[-10, 10]**2`` with extra near-diagonal pairs
    (``|a - b| < 1e-8``) and a fixed set of exact pairs including ``(1, -1)``.
    An inequality passes if its relative slack is ``>= -1e-12`` everywhere.

    The ``holder`` and ``down`` rows use the constant ``2**(2-p)``, which is
    sharp on the whole line; the rows suffixed ``_literal`` drop it, fail for
    opposite-sign pairs when ``p > 2`` and are informational only. Every
    row names its worst pair.

    Returns:
        VerificationReport: target ``pointwise``
    """
    if sample_count < 1:
        raise ParameterError('sample_count must be >= 1', 'sample_count')
    for p in p_list:
        _check_p(p)
    report = VerificationReport('pointwise', worst_is_min=True)
    ss = np.random.SeedSequence(rng_seed)
    for p, child in zip(p_list, ss.spawn(len(p_list))):
        p = float(p)
        rng = np.random.default_rng(child)
        pairs = _sample_pairs(rng, sample_count)
        a, b = pairs[:, 0], pairs[:, 1]
        dJ = jp_difference(a, b, p)
        dV = vp_difference(a, b, p)
        sides = _sides(a, b, p, dJ, dV, np.abs(a), np.abs(b))
        for name, (lhs, rhs, sense) in sides.items():
            slack = _relative_slack(lhs, rhs, sense)
            i = int(np.argmin(slack))
            worst = float(slack[i])
            informational = name not in INEQUALITIES
            report.add(
                name, lhs=float(lhs[i]), rhs=float(rhs[i]), metric=worst,
                passed=worst >= -SLACK, params={'p': p}, samples=len(a),
                informational=informational,
                detail=f'worst pair a={a[i]!r} b={b[i]!r} ({sense})',
            )
        if p == 2.0:
            for name in ('monotone', 'down'):
                lhs, rhs, _ = sides[name]
                gap = float(np.max(np.abs(_relative_slack(lhs, rhs, '>='))))
                report.add(f'{name}_equality', lhs=gap, rhs=SLACK, metric=gap,
                           passed=gap <= SLACK, params={'p': p}, samples=len(a),
                           informational=True, detail='equality at p=2')
        logger.debug('pointwise p=%g: %d pairs', p, len(a))
    return report
