import json

import pytest

from fraclab.config import COMMANDS, ProblemSpec, RunConfig, apply_overrides, parse_config
from fraclab.errors import ConfigError
from fraclab.kernels import FractionalParams


def test_defaults():
    cfg = parse_config()
    assert cfg == RunConfig()
    assert cfg.command == 'verify'
    assert cfg.problem.params == FractionalParams(1, 0.5, 2.0)
    assert cfg.solver.method == 'descent'

def test_overrides_are_coerced():
    cfg = parse_config(overrides={
        'command': 'solve', 'problem.s': '0.7', 'problem.n': '33', 'solver.init': 'zero',
        'workers': None,
    })
    assert cfg.command == 'solve'
    assert cfg.problem.s == 0.7
    assert cfg.problem.n == 33
    assert cfg.solver.init == 'zero'
    assert cfg.workers == 1

def test_overrides_apply_after_file(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'command': 'solve', 'problem': {'s': 0.3, 'p': 3.0}}))
    cfg = parse_config(str(path), {'problem.s': 0.6})
    assert cfg.problem.s == 0.6
    assert cfg.problem.p == 3.0

def test_apply_overrides_nests():
    data = apply_overrides({}, {'options.target': 'order', 'options.n': '65'})
    assert data == {'options': {'target': 'order', 'n': 65}}
    with pytest.raises(ConfigError) as excinfo:
        apply_overrides({'seed': 1}, {'seed.x': 2})
    assert excinfo.value.key == 'seed.x'

@pytest.mark.parametrize('text,key', [
    ('{"problem": {"bogus": 1}}', 'problem.bogus'),
    ('{"bogus": 1}', 'bogus'),
    ('{"solver": {"shrink": 1.5}}', 'solver.shrink'),
    ('{"problem": {"s": 1.2}}', 'problem.s'),
    ('{"problem": {"g_exterior": "mirror"}}', 'problem.g_exterior'),
    ('{"problem": {"f": {"params": {}}}}', 'problem.f'),
    ('{"command": "plot"}', 'command'),
    ('{"workers": 0}', 'workers'),
    ('{"options": [1]}', 'options'),
    ('{"seed": 1, "seed": 2}', 'seed'),
    ('{"command": "verify", "options": {"target": "pointwise", "bogus": 1}}', 'options.bogus'),
    ('{"command": "verify", "options": {"target": "nope"}}', 'options.target'),
    ('{"command": "solve", "options": {"radius": 0.5}}', 'options.radius'),
    ('{"command": "sweep", "options": {"family": "affine", "c": 2.0}}', 'options.c'),
    ('{"command": "bench", "options": {"ladder_3d": [4]}}', 'options.ladder_3d'),
])
def test_rejects(text, key):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text=text)
    assert excinfo.value.key == key
    assert f'key "{key}"' in str(excinfo.value)

def test_unknown_key_lists_known():
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text='{"problem": {"sigma": 1}}')
    assert 'omega_radius' in excinfo.value.message

def test_malformed_json_has_line():
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text='{\n  "seed": ,\n}')
    assert excinfo.value.line == 2
    assert str(excinfo.value).startswith('line 2:')
    with pytest.raises(ConfigError):
        parse_config(text='[1, 2]')

def test_build_problem():
    spec = ProblemSpec(n=33, s=0.4, g={'tag': 'affine', 'params': {'a': [1.0], 'b': 0.0}},
                       g_exterior='zero', omega_radius=0.5)
    problem = spec.build()
    assert problem.grid.shape == (33,)
    assert problem.omega.radius == 0.5
    assert problem.g.exterior.is_zero
    assert problem.kernel.is_standard

def test_to_dict_is_json():
    cfg = parse_config(text='{"command": "sweep", "options": {"family": "affine"}}')
    d = json.loads(json.dumps(cfg.to_dict()))
    assert d['command'] == 'sweep'
    assert d['options'] == {'family': 'affine'}
    assert set(d['problem']) >= {'s', 'p', 'n', 'f', 'g'}
    assert 'sweep' in COMMANDS

@pytest.mark.parametrize('command,options', [
    ('verify', {'target': 'caccioppoli', 'n': 65, 's_list': [0.5]}),
    ('verify', {'target': 'structure', 'p': 3.0}),
    ('sweep', {'family': 'torsion', 'c': 2.0, 's_list': [0.6, 0.9]}),
    ('seminorm', {'kind': 'gagliardo', 'diagonal_correction': True}),
    ('bench', {'dims': [1], 'ladder_1d': [17, 33]}),
])
def test_accepts_command_options(command, options):
    cfg = parse_config(text=json.dumps({'command': command, 'options': options}))
    assert cfg.options == options

def test_unknown_option_lists_known():
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text='{"command": "verify", "options": {"target": "order", "beta": 1}}')
    assert 'betas' in excinfo.value.message
    assert 'target' in excinfo.value.message
