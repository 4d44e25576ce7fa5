"""Exception types raised across the package."""


class HodgeNetError(Exception):
    pass


class MalformedSimplexError(HodgeNetError, ValueError):
    pass


class EmptyDimensionError(HodgeNetError, ValueError):
    pass


class MissingSimplexError(HodgeNetError, KeyError):
    pass


class ComplexFormatError(HodgeNetError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class NumericalFailure(HodgeNetError, ArithmeticError):
    """An iterative solver failed to converge."""

    def __init__(self, message, iterations=None):
        self.iterations = iterations
        super().__init__(message)


class DivergedError(HodgeNetError, ArithmeticError):
    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class SizeGuardError(HodgeNetError, ValueError):
    pass


class GenerationFailure(HodgeNetError, RuntimeError):
    pass


class NonFiniteError(HodgeNetError, ArithmeticError):
    def __init__(self, message, layer=None):
        self.layer = layer
        super().__init__(message)
