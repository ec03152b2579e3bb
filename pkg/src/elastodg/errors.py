"""Exception types raised by the solver."""


class InvalidArgument(ValueError):
    pass


class ConstitutiveViolation(ValueError):
    """Raised when the stress law loses strict monotonicity (sigma' <= 0)."""


class UnsupportedConfiguration(ValueError):
    pass


class NumericalError(RuntimeError):
    """Fatal numerical failure; ``payload`` carries diagnostics."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload or {}
