import io
import math

import numpy as np
import pytest

from fraclab.errors import ParameterError, SamplingError
from fraclab.grid import (
    Ball, ExteriorRule, GridFunction, affine_rule, make_grid, read_csv, restrict_nodes,
    sample, write_csv, zero_rule,
)
from fraclab.testfunctions import TestFunction


@pytest.mark.parametrize('dim,L,n', [(3, 1.0, 9), (1, 0.0, 9), (1, -1.0, 9), (1, 1.0, 7)])
def test_make_grid_rejects(dim, L, n):
    with pytest.raises(ParameterError):
        make_grid(dim, L, n)

def test_grid_geometry(grid2d):
    assert grid2d.spacing == 2.0 / 16
    assert grid2d.shape == (17, 17)
    assert grid2d.size == 289
    assert grid2d.nodes.shape == (289, 2)
    assert grid2d.cell_volume == pytest.approx(grid2d.spacing ** 2)
    # last axis varies fastest
    assert grid2d.nodes[1].tolist() == [-1.0, -1.0 + grid2d.spacing]
    with pytest.raises(ValueError):
        grid2d.nodes[0, 0] = 5.0

def test_index_of(grid1d):
    flat, hit = grid1d.index_of([[0.0], [grid1d.spacing * 0.5], [3.0]])
    assert hit.tolist() == [True, False, False]
    assert flat[0] == 64

def test_ball_mask_is_strict():
    g = make_grid(1, 1.0, 9)
    idx = restrict_nodes(g, Ball((0.0,), 0.5))
    assert g.nodes[idx, 0].tolist() == [-0.25, 0.0, 0.25]

def test_ball_geometry():
    outer = Ball((0.0, 0.0), 1.0)
    inner = Ball((0.25, 0.0), 0.5)
    assert outer.dim == 2
    assert outer.volume() == pytest.approx(math.pi)
    assert Ball((0.0,), 0.5).volume() == 1.0
    assert outer.contains_ball(inner)
    assert outer.gap_to(inner) == pytest.approx(0.25)
    assert not inner.contains_ball(outer)
    with pytest.raises(ParameterError):
        Ball((0.0,), 0.0)

def test_restrict_nodes_accepts_grid_and_function(bump):
    ball = Ball((0.0,), 0.3)
    assert restrict_nodes(bump, ball).tolist() == restrict_nodes(bump.grid, ball).tolist()

def test_sample_uses_closed_form_exterior(grid1d):
    fun = TestFunction('affine', {'a': (2.0,), 'b': 1.0})
    u = sample(fun, grid1d)
    assert u.exterior.kind == 'closed_form'
    out = u.evaluate([[3.0], [-5.0], [0.0]])
    assert out.tolist() == [7.0, -9.0, 1.0]

def test_sample_rejects_non_finite(grid1d):
    u = sample(TestFunction('power', {'beta': 1.0}), grid1d)
    assert u.flat[64] == 0.0
    with pytest.raises(SamplingError) as excinfo:
        GridFunction(grid1d, np.full(grid1d.size, np.nan))
    assert 'not finite' in str(excinfo.value)

def test_values_are_read_only(bump):
    with pytest.raises(ValueError):
        bump.values[0] = 1.0

def test_exterior_rule_algebra():
    a = affine_rule((1.0,), 2.0)
    shifted = a.shifted(np.array([0.5]))
    assert shifted.kind == 'affine'
    assert shifted.b == 2.5
    diff = ExteriorRule.combine([(1.0, shifted), (-1.0, a)])
    assert diff.kind == 'affine'
    assert diff.evaluate([[10.0], [-3.0]]).tolist() == [0.5, 0.5]
    assert ExteriorRule.combine([(1.0, a), (-1.0, a)]).evaluate([[4.0]]).tolist() == [0.0]
    assert ExteriorRule.combine([(0.0, a)]).kind == 'zero'
    assert zero_rule().growth_degree() == -math.inf
    assert a.growth_degree() == 1.0

def test_closed_form_rule_shift():
    fun = TestFunction('power', {'beta': 2.0})
    u = sample(fun, make_grid(1, 1.0, 9))
    rule = u.exterior.shifted(np.array([1.0]))
    assert rule.evaluate([[2.0]]).tolist() == [9.0]
    combo = ExteriorRule.combine([(1.0, rule), (-1.0, u.exterior)])
    assert combo.kind == 'combination'
    assert combo.evaluate([[2.0]]).tolist() == [5.0]
    assert ExteriorRule.from_dict(combo.to_dict()).evaluate([[2.0]]).tolist() == [5.0]

def test_unknown_exterior_kind():
    with pytest.raises(ParameterError):
        ExteriorRule('quadratic')

def test_scaled_function_scales_rule(grid1d):
    u = sample(TestFunction('affine', {'a': (1.0,), 'b': 0.0}), grid1d, affine_rule((1.0,)))
    v = u.scaled(3.0)
    assert v.evaluate([[2.0]]).tolist() == [6.0]
    assert v.flat[-1] == 3.0

def test_csv_round_trip_is_exact(grid2d):
    fun = TestFunction('gaussian', {'sigma': 0.3}, center=(0.1, -0.2))
    u = sample(fun, grid2d)
    buf = io.StringIO()
    write_csv(u, buf)
    text = buf.getvalue()
    assert text.startswith('# schema: x,y,value')
    v = read_csv(io.StringIO(text))
    assert v.grid == u.grid
    assert np.array_equal(v.values, u.values)
    assert v.exterior.kind == 'closed_form'
    assert v.evaluate([[3.0, 3.0]]).tolist() == u.evaluate([[3.0, 3.0]]).tolist()

def test_csv_file_paths_are_logged(tmp_path, grid1d, caplog):
    u = sample(TestFunction('bump', {'radius': 0.5}), grid1d, zero_rule())
    path = tmp_path / 'u.csv'
    with caplog.at_level('DEBUG', logger='fraclab.grid'):
        write_csv(u, str(path))
        v = read_csv(str(path))
    assert np.array_equal(v.values, u.values)
    messages = [rec.getMessage() for rec in caplog.records]
    assert f'wrote 129 nodes to {path}' in messages
    assert f'reading grid function from {path}' in messages
