"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class SSDNNError(Exception):
    exit_code = 1


class ConfigError(SSDNNError, ValueError):
    """Bad configuration or usage."""

    exit_code = 1


class DataError(SSDNNError, ValueError):
    """Malformed data or dimension mismatch."""

    exit_code = 2


class NumericalError(SSDNNError, ArithmeticError):
    exit_code = 3


class TrainingDiverged(NumericalError):
    """Raised when an optimizer step produces non-finite parameters."""


class NoPowerLawFit(NumericalError):
    """The two raw bias averages cannot be described by c * b**(-lam/2)."""

    def __init__(self, b1_hat, b2_hat):
        self.b1_hat = b1_hat
        self.b2_hat = b2_hat
        super().__init__(
            f"bias is unidentified: B1={b1_hat!r} and B2={b2_hat!r} must be "
            "nonzero and share a sign"
        )
