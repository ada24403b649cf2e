"""Exception types raised throughout :mod:`fraclab`

Each exception derives from the closest builtin so callers may catch either
the specific class or e.g. :class:`ValueError`.
"""

__all__ = (
    'ParameterError', 'AlignmentError', 'SamplingError', 'DomainError',
    'DivergenceError', 'KernelBoundsError', 'ConvergenceError',
    'ResolutionError', 'InvalidTestFunctionError', 'ConfigError',
)


class ParameterError(ValueError):
    """Raised when an argument violates a documented constraint

    Args:
        message (str): The violated constraint, quoted verbatim
        name (str, optional): Name of the offending parameter
    """
    def __init__(self, message, name=None):
        super().__init__(message)
        self.message = message
        self.name = name

    def __str__(self):
        if self.name is None:
            return self.message
        return f'{self.name}: {self.message}'


class AlignmentError(ParameterError):
    """Raised when a translation is not an integer multiple of the grid spacing
    """
    def __init__(self, h, spacing):
        self.h = tuple(h)
        self.spacing = spacing
        super().__init__(f'translation {self.h} is not a multiple of spacing {spacing!r}')

    def __str__(self):
        return self.message


class SamplingError(ValueError):
    """Raised when a test function evaluates to a non-finite value at a node
    """
    def __init__(self, tag, node, value):
        self.tag = tag
        self.node = tuple(float(v) for v in node)
        self.value = value

    def __str__(self):
        return f'"{self.tag}" is not finite at node {self.node} (got {self.value!r})'


class DomainError(ValueError):
    """Raised when a point or ball lies outside the region an operation needs
    """
    def __init__(self, message):
        super().__init__(message)
        self.message = message

    def __str__(self):
        return self.message


class DivergenceError(ArithmeticError):
    """Raised when a tail integral of an exterior rule does not converge

    Attributes:
        rule: The :class:`~fraclab.grid.ExteriorRule` that failed
        reason (str): Which weight the rule is not integrable against
    """
    def __init__(self, rule, reason):
        self.rule = rule
        self.reason = reason

    def __str__(self):
        return f'exterior rule {self.rule.describe()} diverges: {self.reason}'


class KernelBoundsError(ValueError):
    """Raised when a kernel modulation leaves ``[1/Lambda, Lambda]``
    """
    def __init__(self, tag, worst_ratio, Lambda):
        self.tag = tag
        self.worst_ratio = worst_ratio
        self.Lambda = Lambda

    def __str__(self):
        return (
            f'modulation "{self.tag}" violates the ellipticity bounds: '
            f'worst ratio {self.worst_ratio:.6g} > Lambda = {self.Lambda:.6g}'
        )


class ConvergenceError(RuntimeError):
    """Raised when an iterative method exhausts its iteration budget

    Attributes:
        history (list): Energies of the accepted iterates
        residual (float): Stationarity measure at the last iterate
    """
    def __init__(self, iterations, residual, history):
        self.iterations = iterations
        self.residual = residual
        self.history = list(history)

    def __str__(self):
        return (
            f'iteration limit reached after {self.iterations} iterations '
            f'(residual {self.residual:.3e})'
        )


class ResolutionError(ValueError):
    """Raised when the grid is too coarse for the requested translations

    Attributes:
        required_n (int): Smallest nodes-per-axis count that would suffice
    """
    def __init__(self, spacing, h0, required_n):
        self.spacing = spacing
        self.h0 = h0
        self.required_n = required_n

    def __str__(self):
        return (
            f'grid spacing {self.spacing:.6g} exceeds h0 = {self.h0:.6g}; '
            f'requires n >= {self.required_n}'
        )


class InvalidTestFunctionError(ValueError):
    """Raised when a weak-form test function does not vanish outside its support
    """
    def __init__(self, index, max_outside):
        self.index = index
        self.max_outside = max_outside

    def __str__(self):
        return (
            f'test function {self.index} does not vanish outside its support '
            f'(max |phi| = {self.max_outside:.3e})'
        )


class ConfigError(ValueError):
    """Raised for malformed or inconsistent run configurations

    Attributes:
        key (str): Dotted path of the offending key, if any
        line (int): Line number in the config file, if known
    """
    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.message = message
        self.key = key
        self.line = line

    def __str__(self):
        loc = []
        if self.line is not None:
            loc.append(f'line {self.line}')
        if self.key is not None:
            loc.append(f'key "{self.key}"')
        if not loc:
            return self.message
        return f'{", ".join(loc)}: {self.message}'
