"""Exception hierarchy shared by every opwire module."""


class OpwireError(Exception):
    """Base class for all library errors."""


class InvalidDiagram(OpwireError, ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__("invalid wiring diagram:\n" + str(report))


class InterfaceMismatch(OpwireError, ValueError):
    pass


class NonFiniteType(OpwireError, TypeError):
    pass


class NonRealType(OpwireError, TypeError):
    pass


class UnknownState(OpwireError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class PartialInput(OpwireError, ValueError):
    pass


class DimensionMismatch(OpwireError, ValueError):
    pass


class IllPosedLoop(OpwireError, ArithmeticError):
    """An instantaneous feedback loop has no unique solution."""


class ExplosionGuard(OpwireError, RuntimeError):
    """An enumeration would exceed the configured size cap."""

    def __init__(self, what, size, cap):
        self.size = size
        self.cap = cap
        super().__init__(f"{what}: {size} candidates exceeds cap {cap} "
                         "(raise it with --max-enum or OPWIRE_MAX_ENUM)")


class HorizonMismatch(OpwireError, ValueError):
    pass


class MissingAssignment(OpwireError, LookupError):
    pass


class DepthExceeded(OpwireError, RecursionError):
    pass


class MixedAlgebra(OpwireError, TypeError):
    pass


DEFAULT_MAX_ENUM = 10 ** 6


def check_cap(what, size, cap=None):
    """Raise :class:`ExplosionGuard` if ``size`` exceeds ``cap``."""
    cap = DEFAULT_MAX_ENUM if cap is None else cap
    if size > cap:
        raise ExplosionGuard(what, size, cap)


class ModelSyntaxError(OpwireError, ValueError):
    """Malformed JSON; carries a 1-based line and column."""

    def __init__(self, msg, line, column):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {msg}")


class SchemaError(OpwireError, ValueError):
    """Well-formed JSON of the wrong shape; ``path`` is a JSON pointer."""

    def __init__(self, path, msg):
        self.path = path or "/"
        super().__init__(f"{self.path}: {msg}")


class ModelValidationError(OpwireError, ValueError):
    """Schema-correct model that breaks a structural invariant."""

    def __init__(self, path, reason):
        self.path = path or "/"
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")
