import json

import pytest

from fraclab.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, build_parser, check_scaling, main
from fraclab.report import VerificationReport
from fraclab.verification import VerificationHarness


def small_solve(out, *extra):
    return ['solve', '--out', str(out), '-q', *extra, '--set', 'problem.n=33',
            '--set', 'solver.method=direct']


def test_parser_requires_command():
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args([])
    assert excinfo.value.code == 2

def test_solve_writes_outputs(tmp_path):
    assert main(small_solve(tmp_path)) == EXIT_OK
    run = json.loads((tmp_path / 'run.json').read_text())
    assert run['command'] == 'solve'
    assert run['problem']['n'] == 33
    assert run['solver']['method'] == 'direct'
    assert (tmp_path / 'solution.csv').exists()
    assert (tmp_path / 'energy.csv').exists()

def test_solve_from_config_file(tmp_path):
    cfg = tmp_path / 'run.json'
    cfg.write_text(json.dumps({'problem': {'n': 33, 's': 0.3, 'p': 3.0}}))
    out = tmp_path / 'out'
    assert main(['solve', '--config', str(cfg), '--out', str(out), '-q']) == EXIT_OK
    run = json.loads((out / 'run.json').read_text())
    assert run['problem']['s'] == 0.3

def test_seminorm(tmp_path):
    argv = ['seminorm', '--out', str(tmp_path), '-q', '--set', 'problem.n=65',
            '--set', 'options.kind=lp',
            '--set', 'options.u={"tag": "constant", "params": {"c": 2.0}}']
    assert main(argv) == EXIT_OK
    lines = (tmp_path / 'seminorm.csv').read_text().splitlines()
    assert any(line.startswith('lp,') for line in lines)

def test_verify_order(tmp_path):
    assert main(['verify', 'order', '--out', str(tmp_path), '-q']) == EXIT_OK
    verdict = (tmp_path / 'verdict.txt').read_text()
    assert verdict.startswith('PASS order ')
    assert (tmp_path / 'order.csv').exists()

def test_verify_fail_exit_code(tmp_path, monkeypatch):
    failing = VerificationReport('order')
    failing.add('slope', lhs=0.5, rhs=0.75, metric=0.25, passed=False)
    monkeypatch.setattr(VerificationHarness, 'run', lambda self: {'order': failing})
    assert main(['verify', 'order', '--out', str(tmp_path), '-q']) == EXIT_FAIL
    assert (tmp_path / 'verdict.txt').read_text() == 'FAIL order 0.25\n'

@pytest.mark.parametrize('extra', [
    ['--set', 'problem.bogus=1'],
    ['--set', 'novalue'],
    ['--set', 'problem.s=1.5'],
    ['--set', 'problem.p=3', '--set', 'solver.method=direct'],
])
def test_errors_exit_2(tmp_path, capsys, extra):
    argv = ['solve', '--out', str(tmp_path), '-q', '--set', 'problem.n=33', *extra]
    assert main(argv) == EXIT_ERROR
    assert 'error:' in capsys.readouterr().err

def test_malformed_config_file(tmp_path, capsys):
    cfg = tmp_path / 'bad.json'
    cfg.write_text('{"seed": 1,\n "out": }')
    assert main(['solve', '--config', str(cfg)]) == EXIT_ERROR
    assert 'line 2' in capsys.readouterr().err

def test_missing_config_file(tmp_path):
    assert main(['solve', '--config', str(tmp_path / 'absent.json')]) == EXIT_ERROR

def test_global_flags_before_command(tmp_path):
    argv = ['--out', str(tmp_path), '-q', '--set', 'problem.n=33',
            '--set', 'solver.method=direct', 'solve']
    args = build_parser().parse_args(argv)
    assert args.out == str(tmp_path)
    assert args.quiet
    assert main(argv) == EXIT_OK
    run = json.loads((tmp_path / 'run.json').read_text())
    assert run['solver']['method'] == 'direct'

def test_bench(tmp_path):
    argv = ['bench', '--out', str(tmp_path), '-q', '--set', 'options.dims=[1]',
            '--set', 'options.ladder_1d=[17, 33]']
    assert main(argv) == EXIT_OK
    rows = (tmp_path / 'bench.csv').read_text().splitlines()
    assert sum(line.startswith('gagliardo,') for line in rows) == 2
    assert (tmp_path / 'bench_scaling.csv').exists()
    assert (tmp_path / 'verdict.txt').read_text().startswith('PASS bench ')
    report = (tmp_path / 'bench_report.csv').read_text().splitlines()
    scaling = [line.split(',') for line in report if line.startswith('bench,gagliardo_1d_scaling,')]
    assert len(scaling) == 1
    # 17 nodes per axis: timing is not counted
    assert scaling[0][9] == '1'

@pytest.mark.parametrize('argv', [
    ['verify', 'pointwise', '--set', 'options.bogus=1'],
    ['solve', '--set', 'options.radius=0.5'],
])
def test_unknown_option_exits_2(tmp_path, capsys, argv):
    assert main(['--out', str(tmp_path), '-q', *argv]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert 'error:' in err
    assert 'options.' in err
    assert not (tmp_path / 'verdict.txt').exists()

@pytest.mark.parametrize('dim,ladder,power,passed', [
    (1, (128, 256, 512), 2.0, True),
    (1, (128, 256, 512), 2.4, True),
    (1, (128, 256, 512), 1.0, False),
    (2, (16, 32, 64), 4.0, True),
    (2, (16, 32, 64), 3.0, False),
])
def test_check_scaling(dim, ladder, power, passed):
    report = VerificationReport('bench')
    times = [1e-3 * (n / ladder[0]) ** power for n in ladder]
    fit = check_scaling(report, f'gagliardo_{dim}d', dim, ladder, times, 2 * dim)
    assert fit.slope == pytest.approx(power)
    row = report.rows[0]
    assert row.name == f'gagliardo_{dim}d_scaling'
    assert not row.informational
    assert row.passed is passed
    assert report.passed is passed

def test_check_scaling_small_ladder_is_informational():
    report = VerificationReport('bench')
    check_scaling(report, 'gagliardo_1d', 1, (17, 33), [1.0, 1.1], 2)
    assert report.rows[0].informational
    assert not report.rows[0].passed
    assert report.passed
