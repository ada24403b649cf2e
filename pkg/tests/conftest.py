import pytest


class Recorder(object):
    """Collects what a progress monitor announces"""
    def __init__(self):
        self.calls = []
        self.values = []
        self.changes = {}

    def on_progress(self, *args, **kwargs):
        self.calls.append((args, kwargs))

    def on_change(self, instance, value, **kwargs):
        self.values.append(value)
        self.changes.setdefault(kwargs['property'].name, []).append(kwargs)

    @property
    def steps(self):
        return [kw.get('iteration') for _, kw in self.calls]


@pytest.fixture
def recorder():
    return Recorder()


@pytest.fixture
def monitor_cls():
    from fraclab.events import Emitter, Property

    class Monitor(Emitter):
        _events_ = ['on_step']
        energy = Property()

        def step(self, iteration, **kwargs):
            return self.emit('on_step', self, iteration=iteration, **kwargs)

    return Monitor


@pytest.fixture
def monitor(monitor_cls):
    return monitor_cls()


@pytest.fixture
def grid1d():
    from fraclab.grid import make_grid
    return make_grid(1, 1.0, 129)

@pytest.fixture
def grid2d():
    from fraclab.grid import make_grid
    return make_grid(2, 1.0, 17)

@pytest.fixture
def bump(grid1d):
    from fraclab.grid import sample, zero_rule
    from fraclab.testfunctions import TestFunction
    return sample(TestFunction('bump', {'radius': 0.5}), grid1d, zero_rule())


@pytest.fixture(scope='module')
def torsion_solution():
    """Direct p=2 solve of the s=0.5 torsion problem on 129 nodes"""
    from fraclab.verification import benchmark_problem, solve_benchmark
    problem = benchmark_problem(0.5, n=129)
    return problem, solve_benchmark(problem)
