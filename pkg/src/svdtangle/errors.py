"""Exception and warning types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed arguments: non-finite entries, mismatched shapes, bad indices."""


class PreconditionError(ValueError):
    """An operation was called on data that does not satisfy its contract."""


class DegeneracyError(RuntimeError):
    """A sample has (near) repeated singular values and the policy is ``fail``."""


class PathDegeneracyError(RuntimeError):
    """No usable reference remains because every earlier sample is blacklisted."""


class NotApplicableError(RuntimeError):
    """The requested check is undefined for this path (e.g. blacklisted samples)."""


class DegenerateSampleWarning(UserWarning):
    """Emitted when a sample is matched despite close singular values or a tie."""
