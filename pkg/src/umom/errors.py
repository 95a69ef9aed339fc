"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class CapExceeded(InvalidArgument):
    """An exhaustive enumeration would exceed its evaluation cap."""

    def __init__(self, what, required, cap):
        self.what = what
        self.required = required
        self.cap = cap
        super().__init__(f"{what}: {required} evaluations required, cap is {cap}")


class MomentDoesNotExist(InvalidArgument):
    pass


class ValueNotInSupport(InvalidArgument):
    pass


class FitError(ValueError):
    pass


class InsufficientPoints(FitError):
    pass


class NonpositiveSlope(FitError):
    pass


class ReplicationError(RuntimeError):
    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"replication {index}: {cause}")


class ConfigError(ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
