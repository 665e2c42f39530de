"""Exception types shared across the package."""


class UavPecError(Exception):
    """Base class for all package errors."""


class ValidationError(UavPecError, ValueError):
    """A scenario or config field violates its invariant."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class SchemaVersionError(UavPecError):
    """Stored file carries an unsupported schema version."""

    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"schema version {found!r} is not supported (expected {expected})")


class ChannelDomainError(UavPecError, ValueError):
    """A radio quantity was requested outside its valid domain."""


class InfeasibleError(UavPecError):
    """An allocation (or a scenario) cannot satisfy a model constraint.

    ``device`` and ``position`` are ``None`` when the violation is not tied
    to a single index.
    """

    def __init__(self, constraint, device=None, position=None, detail=""):
        self.constraint = constraint
        self.device = device
        self.position = position
        where = []
        if device is not None:
            where.append(f"device {device}")
        if position is not None:
            where.append(f"position {position}")
        loc = f" at {', '.join(where)}" if where else ""
        msg = f"{constraint} infeasible{loc}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class SizeGuardError(UavPecError):
    """Exhaustive search refused because the instance is too large."""
