"""Name-keyed factories

Test-function tags, kernel modulations and verification targets are looked
up by name from the command line and from JSON configs, so each lives in a
:class:`Registry`.

>>> from fraclab.registry import Registry
>>> shapes = Registry('shape')
>>> @shapes.register('square', aliases=['sq'], params={'side': 1.0})
... def square(side):
...     return side * side
>>> shapes.build('sq')
1.0
>>> shapes.build('square', side=3.0)
9.0
"""

__all__ = ('Registry', 'UnknownNameError')


class UnknownNameError(KeyError):
    """Raised when a name is not registered
    """
    def __init__(self, kind, name, known):
        self.kind = kind
        self.name = name
        self.known = tuple(known)

    def __str__(self):
        return f'unknown {self.kind} "{self.name}" (known: {", ".join(self.known)})'


class Registry(object):
    """Map of names (and aliases) to callables with default keyword params

    Args:
        kind (str): Human-readable name of what is registered, used in errors
    """
    def __init__(self, kind):
        self.kind = kind
        self._entries = {}
        self._aliases = {}
    def register(self, name, obj=None, aliases=(), params=None):
        """Register *obj* under *name*; usable as a decorator when *obj* is omitted
        """
        def _do_register(obj):
            self._entries[name] = (obj, dict(params or {}))
            for alias in aliases:
                self._aliases[alias] = name
            return obj
        if obj is None:
            return _do_register
        return _do_register(obj)
    def canonical(self, name):
        name = self._aliases.get(name, name)
        if name not in self._entries:
            raise UnknownNameError(self.kind, name, self.names())
        return name
    def get(self, name):
        """Return the registered callable"""
        return self._entries[self.canonical(name)][0]
    def defaults(self, name):
        """Return a copy of the default keyword parameters"""
        return dict(self._entries[self.canonical(name)][1])
    def build(self, name, **kwargs):
        """Call the registered object with defaults overridden by *kwargs*
        """
        obj, params = self._entries[self.canonical(name)]
        merged = dict(params)
        merged.update(kwargs)
        return obj(**merged)
    def names(self):
        return tuple(sorted(self._entries))
    def __contains__(self, name):
        name = self._aliases.get(name, name)
        return name in self._entries
    def __iter__(self):
        return iter(self.names())
