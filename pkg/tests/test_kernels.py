import math

import numpy as np
import pytest

from fraclab.errors import KernelBoundsError, ParameterError
from fraclab.kernels import (
    MODULATIONS, FractionalParams, kernel_bounds_check, modulated_kernel, standard_kernel,
    tail_weight,
)


@pytest.mark.parametrize('kwargs,name', [
    (dict(dim=3, s=0.5, p=2.0), 'dim'),
    (dict(dim=1, s=0.0, p=2.0), 's'),
    (dict(dim=1, s=1.0, p=2.0), 's'),
    (dict(dim=1, s=0.5, p=1.5), 'p'),
    (dict(dim=1, s=0.5, p=2.0, t=0.6), 't'),
    (dict(dim=1, s=0.5, p=2.0, t=-0.1), 't'),
    (dict(dim=1, s=0.5, p=2.0, Lambda=0.5), 'Lambda'),
])
def test_params_constraints(kwargs, name):
    with pytest.raises(ParameterError) as excinfo:
        FractionalParams(**kwargs)
    assert excinfo.value.name == name

def test_params_derived():
    params = FractionalParams(2, 0.6, 3.0, t=0.3)
    assert params.sp == pytest.approx(1.8)
    assert params.p_conj == pytest.approx(1.5)
    assert params.kappa == pytest.approx(1.05)
    assert params.Gamma == pytest.approx(3.1 / 3)
    assert params.singular_exponent == pytest.approx(3.8)
    assert params.replace(s=0.5).sp == pytest.approx(1.5)
    assert FractionalParams(**params.to_dict()) == params

def test_standard_kernel():
    k = standard_kernel(FractionalParams(2, 0.5, 2.0))
    z = np.array([[3.0, 4.0]])
    assert k(z)[0] == pytest.approx(5.0 ** 3)
    assert k.inverse(np.zeros((1, 2)))[0] == math.inf
    assert k.is_standard
    assert k.is_even()

def test_angular_modulation_stays_in_bounds():
    params = FractionalParams(2, 0.5, 2.0, Lambda=3.0)
    k = modulated_kernel(params, 'angular')
    check = kernel_bounds_check(k, 2048)
    assert check.passed
    assert check.worst_ratio <= 3.0
    assert k.is_even()
    assert k.to_dict()['modulation'] == 'angular'

def test_angular_modulation_needs_two_dims():
    with pytest.raises(ParameterError):
        modulated_kernel(FractionalParams(1, 0.5, 2.0, Lambda=2.0), 'angular')

def test_radial_step_out_of_bounds():
    params = FractionalParams(1, 0.5, 2.0, Lambda=2.0)
    with pytest.raises(KernelBoundsError) as excinfo:
        modulated_kernel(params, 'radial_step', inner=3.0)
    assert 'radial_step' in str(excinfo.value)
    assert excinfo.value.worst_ratio == pytest.approx(3.0)

def test_callable_modulation():
    params = FractionalParams(1, 0.5, 2.0, Lambda=2.0)
    def wavy(z):
        return 1.0 + 0.5 * np.sin(z[:, 0]) ** 2
    k = modulated_kernel(params, wavy)
    assert k.tag == 'wavy'
    assert not k.angular_only

def test_modulations_registry():
    assert set(MODULATIONS.names()) == {'angular', 'radial_step'}

def test_kernel_bounds_check_probe_count():
    with pytest.raises(ParameterError):
        kernel_bounds_check(standard_kernel(FractionalParams(1, 0.5, 2.0)), 0)

@pytest.mark.parametrize('s,p', [(0.3, 2.0), (0.5, 3.0), (0.8, 2.0)])
def test_tail_weight_1d_closed_form(s, p):
    params = FractionalParams(1, s, p)
    W = 1.5
    expected = 2.0 * W ** (-s * p) / (s * p)
    assert tail_weight(standard_kernel(params), W) == pytest.approx(expected, rel=1e-12)

def test_tail_weight_1d_quadrature_matches_closed_form():
    params = FractionalParams(1, 0.5, 2.0, Lambda=2.0)
    def one(z):
        return np.ones(z.shape[0])
    k = modulated_kernel(params, one)
    assert tail_weight(k, 2.0) == pytest.approx(2.0 * 2.0 ** -1.0, rel=1e-8)

def test_tail_weight_2d_standard():
    params = FractionalParams(2, 0.5, 2.0)
    W = 1.0
    val = tail_weight(standard_kernel(params), W)
    # the cube contains the disc of radius W and lies in the disc of radius W*sqrt(2)
    sp = params.sp
    upper = 2 * math.pi * W ** (-sp) / sp
    lower = 2 * math.pi * (W * math.sqrt(2)) ** (-sp) / sp
    assert lower < val < upper

def test_tail_weight_rejects_nonpositive():
    with pytest.raises(ParameterError):
        tail_weight(standard_kernel(FractionalParams(1, 0.5, 2.0)), 0.0)
