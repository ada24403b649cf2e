import numpy as np
import pytest

from fraclab.events import Emitter, EventExistsError, EventNotFoundError, Property


def test_step_reaches_bound_method(recorder, monitor):
    monitor.bind(on_step=recorder.on_progress)
    for i in range(3):
        monitor.step(i, energy=-0.5 * i)
    assert recorder.steps == [0, 1, 2]
    args, kwargs = recorder.calls[-1]
    assert args == (monitor,)
    assert kwargs['energy'] == -1.0


def test_register_after_construction(recorder, monitor):
    monitor.register_event('on_restart', 'on_converged')
    monitor.bind(on_restart=recorder.on_progress, on_converged=recorder.on_progress)
    monitor.emit('on_restart', monitor, iteration=7)
    monitor.emit('on_converged', monitor, iteration=9)
    assert recorder.steps == [7, 9]
    assert monitor.get_event('on_restart').name == 'on_restart'


def test_events_merge_along_hierarchy(recorder, monitor_cls):
    class Restarting(monitor_cls):
        _events_ = ['on_restart']
        iteration = Property(0)

    assert Restarting._EVENTS_ == {'on_step', 'on_restart'}
    assert set(Restarting._PROPERTIES_) == {'energy', 'iteration'}
    assert monitor_cls._EVENTS_ == {'on_step'}

    solver = Restarting()
    solver.bind(on_step=recorder.on_progress, on_restart=recorder.on_progress)
    solver.step(1)
    solver.emit('on_restart', solver, iteration=2)
    assert recorder.steps == [1, 2]
    assert len(list(solver.get_event('on_restart').listeners.callbacks())) == 1


@pytest.mark.parametrize('by_instance', [False, True])
def test_unbind(recorder, monitor, by_instance):
    monitor.bind(on_step=recorder.on_progress, energy=recorder.on_change)
    monitor.step(0)
    monitor.energy = 1.0
    monitor.unbind(recorder if by_instance else recorder.on_progress)
    monitor.step(1)
    monitor.energy = 2.0
    assert recorder.steps == [0]
    if by_instance:
        assert recorder.values == [1.0]
    else:
        assert recorder.values == [1.0, 2.0]


def test_listeners_are_weak(monitor):
    class Watcher(object):
        def __init__(self):
            self.seen = 0
        def on_step(self, *args, **kwargs):
            self.seen += 1

    watcher = Watcher()
    monitor.bind(on_step=watcher.on_step)
    monitor.step(0)
    assert watcher.seen == 1
    del watcher
    assert list(monitor.get_event('on_step').listeners.callbacks()) == []
    monitor.step(1)


def test_plain_function_listeners(monitor):
    steps, energies = [], []
    def on_step(instance, iteration=None, **kwargs):
        steps.append(iteration)
    def on_energy(instance, value, **kwargs):
        energies.append(value)

    monitor.bind(on_step=on_step, energy=on_energy)
    monitor.step(4)
    monitor.energy = -0.25
    monitor.unbind(on_step, on_energy)
    monitor.step(5)
    monitor.energy = -0.5
    assert steps == [4]
    assert energies == [-0.25]


def test_rebinding_inside_a_callback(monitor):
    class Handoff(object):
        def on_step(self, instance, **kwargs):
            instance.unbind(self)
            instance.bind(on_step=successor.on_step)

    calls = []
    class Successor(object):
        def on_step(self, instance, iteration=None, **kwargs):
            calls.append(iteration)

    successor = Successor()
    first = Handoff()
    monitor.bind(on_step=first.on_step)
    monitor.step(0)
    monitor.step(1)
    assert calls[-1] == 1


def test_false_return_stops_dispatch(monitor):
    def veto(*args, **kwargs):
        return False
    monitor.bind(on_step=veto)
    assert monitor.step(0) is False
    monitor.unbind(veto)
    assert monitor.step(1) is None


def test_property_change_payload(recorder, monitor_cls):
    monitor = monitor_cls()
    assert monitor.energy is None
    monitor.bind(energy=recorder.on_change)
    monitor.energy = 2.0
    monitor.energy = 2.0
    monitor.energy = 1.5
    assert recorder.values == [2.0, 1.5]
    last = recorder.changes['energy'][-1]
    assert last['old'] == 2.0
    assert last['property'] is monitor_cls.energy


def test_property_values_are_per_instance(monitor_cls):
    a, b = monitor_cls(), monitor_cls()
    a.energy = 3.0
    assert a.energy == 3.0
    assert b.energy is None


def test_array_property_compares_by_identity(monitor):
    seen = []
    def on_energy(instance, value, **kwargs):
        seen.append(value)
    monitor.bind(energy=on_energy)
    field = np.linspace(0.0, 1.0, 5)
    monitor.energy = field
    monitor.energy = field
    monitor.energy = field.copy()
    assert len(seen) == 2


def test_emission_lock_keeps_last(recorder, monitor):
    monitor.bind(on_step=recorder.on_progress)
    with monitor.emission_lock('on_step'):
        for i in range(10):
            monitor.step(i)
        assert recorder.calls == []
    assert recorder.steps == [9]


def test_emission_lock_nests(recorder, monitor):
    monitor.bind(on_step=recorder.on_progress)
    with monitor.emission_lock('on_step'):
        monitor.step(0)
        with monitor.emission_lock('on_step'):
            monitor.step(1)
        assert recorder.calls == []
    assert recorder.steps == [1]


def test_emission_lock_without_emit(recorder, monitor):
    monitor.bind(on_step=recorder.on_progress)
    with monitor.emission_lock('on_step'):
        pass
    assert recorder.calls == []


def test_emission_lock_on_property(recorder, monitor):
    monitor.bind(energy=recorder.on_change)
    with monitor.emission_lock('energy'):
        monitor.energy = 1.0
        monitor.energy = 0.5
    assert recorder.values == [0.5]


def test_unknown_event_names(monitor):
    def callback(*args, **kwargs):
        pass
    attempts = [
        lambda: monitor.bind(on_finish=callback),
        lambda: monitor.emit('on_finish'),
        lambda: monitor.get_event('on_finish'),
        lambda: monitor.emission_lock('on_finish'),
    ]
    for attempt in attempts:
        with pytest.raises(EventNotFoundError) as excinfo:
            attempt()
        assert '"on_finish"' in str(excinfo.value)


@pytest.mark.parametrize('name', ['on_step', 'energy'])
def test_register_existing_name(monitor, name):
    with pytest.raises(EventExistsError) as excinfo:
        monitor.register_event(name)
    assert f'"{name}"' in str(excinfo.value)


def test_plain_emitter_has_no_events():
    class Quiet(Emitter):
        pass
    assert Quiet._EVENTS_ == set()
    with pytest.raises(EventNotFoundError):
        Quiet().emit('on_step')
