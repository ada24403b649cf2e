import csv
import io
import math

import pytest

from fraclab.errors import ParameterError
from fraclab.report import ReportRow, VerificationReport, loglog_slope, write_table


def test_row_ratio():
    assert ReportRow('a', lhs=1.0, rhs=4.0).ratio == 0.25
    assert ReportRow('a', lhs=0.0, rhs=0.0).ratio == 0.0
    assert ReportRow('a', lhs=1.0, rhs=0.0).ratio == math.inf

def test_verdict_and_worst():
    rep = VerificationReport('ratios')
    rep.add('a', metric=0.5)
    rep.add('b', metric=2.0)
    rep.add('c', metric=9.0, informational=True)
    assert rep.passed
    assert rep.worst == 2.0
    assert rep.verdict_line() == 'PASS ratios 2'
    rep.add('d', metric=0.1, passed=False)
    assert not rep.passed
    assert [r.name for r in rep.violations] == ['d']
    assert rep.worst == 0.1
    assert rep.verdict_line().startswith('FAIL ratios')

def test_worst_is_min():
    rep = VerificationReport('slack', worst_is_min=True)
    rep.add('a', metric=0.5)
    rep.add('b', metric=0.25)
    assert rep.worst == 0.25

def test_informational_failure_keeps_pass():
    rep = VerificationReport('t')
    rep.add('note', metric=3.0, passed=False, informational=True)
    assert rep.passed
    assert rep.counted == []
    assert math.isnan(rep.worst)

def test_extend_with_prefix():
    inner = VerificationReport('inner')
    inner.add('x', metric=1.0)
    inner.fit('C', 2)
    outer = VerificationReport('outer')
    outer.extend(inner, prefix='s=0.5/')
    assert [r.name for r in outer.rows] == ['s=0.5/x']
    assert outer.fitted == {'s=0.5/C': 2.0}
    assert inner.rows[0].name == 'x'

def test_to_csv():
    rep = VerificationReport('demo')
    rep.add('lhs<=rhs', lhs=1.0, rhs=2.0, metric=0.5, params={'p': 2.0, 'kind': 'x'}, samples=3)
    buf = io.StringIO()
    rep.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith('# schema: target,name,params')
    rows = list(csv.reader(lines[1:]))
    assert rows[0][:3] == ['target', 'name', 'params']
    assert rows[1][0] == 'demo'
    assert rows[1][2] == 'p=2.0;kind=x'
    assert rows[1][3] == '3'
    assert float(rows[1][6]) == 0.5
    assert rows[1][8] == 'PASS'

@pytest.mark.parametrize('slope', [-1.5, 0.5, 2.0])
def test_loglog_slope(slope):
    xs = [2.0 ** -k for k in range(1, 7)]
    ys = [3.0 * x ** slope for x in xs]
    fit = loglog_slope(xs, ys)
    assert fit.slope == pytest.approx(slope)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.residual == pytest.approx(0.0, abs=1e-12)

def test_loglog_slope_skips_nonpositive():
    fit = loglog_slope([1.0, 2.0, 4.0, 8.0], [1.0, 0.0, 16.0, 64.0])
    assert fit.slope == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        loglog_slope([1.0, 2.0], [1.0, 0.0])

def test_write_table():
    buf = io.StringIO()
    write_table(buf, ['h', 'norm'], [(0.5, 1.0), (0.25, 0.5)], units='h in box units')
    lines = buf.getvalue().splitlines()
    assert lines[0] == '# schema: h,norm (h in box units)'
    assert lines[1] == 'h,norm'
    assert lines[2] == '0.5,1.0'
