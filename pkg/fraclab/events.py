"""Observable progress for long-running numerical work

Solvers and verification harnesses derive from :class:`Emitter` so that
callers can watch iterations without the numerical code knowing about
logging, progress bars or CSV writers.

.. doctest:: events_module

    >>> from fraclab.events import Emitter, Property

    >>> class Counter(Emitter):
    ...     _events_ = ['on_done']
    ...     count = Property(0)

    >>> seen = []
    >>> def on_count(instance, value, **kwargs):
    ...     seen.append(value)

    >>> c = Counter()
    >>> c.bind(count=on_count)
    >>> c.count = 3
    >>> c.count = 3
    >>> seen
    [3]
"""

import types
import weakref

__all__ = (
    'EventNotFoundError', 'EventExistsError', 'Event', 'Property', 'Emitter',
)


class EventNotFoundError(KeyError):
    """Raised when binding to or emitting an event that was never declared
    """
    def __init__(self, name):
        self.name = name

    def __str__(self):
        return f'Event "{self.name}" not registered'


class EventExistsError(RuntimeError):
    """Raised when registering an event or property name twice
    """
    def __init__(self, name):
        self.name = name

    def __str__(self):
        return f'"{self.name}" already exists'


class _ListenerSet(weakref.WeakValueDictionary):
    """Weak references to bound methods and plain functions

    Methods are keyed by ``(function, id(instance))`` with the instance as
    the weakly held value; functions by ``('function', id(function))``.
    """
    def add(self, cb):
        if isinstance(cb, types.FunctionType):
            self['function', id(cb)] = cb
        else:
            self[cb.__func__, id(cb.__self__)] = cb.__self__
    def discard(self, obj):
        if isinstance(obj, types.FunctionType):
            key = ('function', id(obj))
            if key in self:
                del self[key]
        elif isinstance(obj, types.MethodType):
            key = (obj.__func__, id(obj.__self__))
            if key in self:
                del self[key]
        else:
            for key in [k for k, v in list(self.items()) if v is obj]:
                del self[key]
    def callbacks(self):
        for key in set(self.keys()):
            obj = self.get(key)
            if obj is None:
                continue
            f, _ = key
            if f == 'function':
                yield obj
            else:
                yield getattr(obj, f.__name__)


class _HoldLock(object):
    """Re-entrant context manager that defers an event until release

    Only the last emission captured while held is dispatched.
    """
    def __init__(self, event):
        self.event = event
        self.depth = 0
        self.last_event = None
    @property
    def held(self):
        return self.depth > 0
    def __enter__(self):
        if self.depth == 0:
            self.last_event = None
        self.depth += 1
        return self
    def __exit__(self, *args):
        self.depth -= 1
        if self.depth > 0 or self.last_event is None:
            return
        args, kwargs = self.last_event
        self.last_event = None
        self.event(*args, **kwargs)


class Event(object):
    """A named event and its listeners
    """
    __slots__ = ('name', 'listeners', 'emission_lock')
    def __init__(self, name):
        self.name = name
        self.listeners = _ListenerSet()
        self.emission_lock = _HoldLock(self)
    def __call__(self, *args, **kwargs):
        if self.emission_lock.held:
            self.emission_lock.last_event = (args, kwargs)
            return
        for cb in self.listeners.callbacks():
            if cb(*args, **kwargs) is False:
                return False
    def __repr__(self):
        return f'<{self.__class__.__name__}: {self.name}>'


class Property(object):
    """Observable attribute declared at class level on an :class:`Emitter`

    Setting a new value emits an event named after the attribute with
    ``(instance, value, old=..., property=...)``. Assigning an equal value
    emits nothing.

    Args:
        default: Initial value for every instance
    """
    def __init__(self, default=None):
        self.name = ''
        self.default = default
    def __set_name__(self, owner, name):
        self.name = name
    def __get__(self, obj, objcls=None):
        if obj is None:
            return self
        return obj._Emitter__values.get(self.name, self.default)
    def __set__(self, obj, value):
        old = self.__get__(obj)
        if _equal(old, value):
            return
        obj._Emitter__values[self.name] = value
        obj.emit(self.name, obj, value, old=old, property=self)
    def __repr__(self):
        return f'<{self.__class__.__name__}: {self.name}>'


def _equal(a, b):
    try:
        return bool(a == b)
    except (TypeError, ValueError):
        return a is b


class Emitter(object):
    """Base class for objects that announce progress

    Subclasses declare events in ``_events_`` and observable state as
    :class:`Property` attributes::

        class DescentSolver(Emitter):
            _events_ = ['on_step', 'on_restart']
            energy = Property()

    Both are inherited and merged along the class hierarchy.
    """
    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        props = dict(getattr(cls, '_PROPERTIES_', {}))
        events = set(getattr(cls, '_EVENTS_', set()))
        for key, val in cls.__dict__.items():
            if key == '_events_':
                events |= set(val)
            elif isinstance(val, Property):
                props[key] = val
        cls._PROPERTIES_ = props
        cls._EVENTS_ = events

    def __new__(cls, *args, **kwargs):
        obj = super().__new__(cls)
        obj.__values = {}
        obj.__events = {name: Event(name) for name in getattr(cls, '_EVENTS_', ())}
        for name in getattr(cls, '_PROPERTIES_', {}):
            obj.__events[name] = Event(name)
        return obj
    def register_event(self, *names):
        """Declare events after construction

        Raises:
            EventExistsError: If the name is already an event or property
        """
        for name in names:
            if name in self.__events:
                raise EventExistsError(name)
            self.__events[name] = Event(name)
    def get_event(self, name):
        """Look up the :class:`Event` for an event or property name

        Raises:
            EventNotFoundError: If no such event exists
        """
        try:
            return self.__events[name]
        except KeyError:
            raise EventNotFoundError(name)
    def bind(self, **kwargs):
        """Subscribe callbacks by event or property name

        Callbacks are held by weak reference.

        Raises:
            EventNotFoundError: If a name was never declared
        """
        for name, cb in kwargs.items():
            self.get_event(name).listeners.add(cb)

    def unbind(self, *args):
        """Remove callbacks, given as the bound methods, functions or
        listener instances
        """
        for e in self.__events.values():
            for arg in args:
                e.listeners.discard(arg)
    def emit(self, name, /, *args, **kwargs):
        """Dispatch an event; a listener returning :obj:`False` stops dispatch

        Raises:
            EventNotFoundError: If the event was never declared
        """
        return self.get_event(name)(*args, **kwargs)
    def emission_lock(self, name):
        """Hold emissions of *name* and dispatch only the last on exit

        >>> class Gauge(Emitter):
        ...     _events_ = ['on_value']
        >>> def show(value):
        ...     print(value)
        >>> p = Gauge()
        >>> p.bind(on_value=show)
        >>> with p.emission_lock('on_value'):
        ...     p.emit('on_value', 1)
        ...     p.emit('on_value', 2)
        2
        """
        return self.get_event(name).emission_lock
