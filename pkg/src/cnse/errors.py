"""Exception hierarchy shared by the solver and the harness."""


class CNSEError(Exception):
    """Base class for all package errors."""


class CalmingDomainError(CNSEError, ValueError):
    """A calming function received a non-finite argument."""


class GridMismatchError(CNSEError, ValueError):
    """Two fields (or records) live on incompatible grids / sample times."""


class NonFiniteError(CNSEError, FloatingPointError):
    """A non-finite value appeared while evaluating the nonlinearity."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class BlowUpError(NonFiniteError):
    """The time integration produced NaN/Inf."""

    def __init__(self, message, time, index=None):
        super().__init__(message, index)
        self.time = time


class CalmingBoundViolation(CNSEError, AssertionError):
    """max |zeta(u)| exceeded the certified sup-norm bound during a run."""


class ConfigError(CNSEError, ValueError):
    """Malformed or inconsistent configuration."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line
