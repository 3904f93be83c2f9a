"""Exception hierarchy for ptspec."""


class PtSpecError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PtSpecError, ValueError):
    pass


class IntegrationOverflow(PtSpecError, ArithmeticError):
    """Trajectory magnitude exceeded the guard; usually a badly wrong mu."""


class StepMisaligned(PtSpecError, ValueError):
    """The integration mesh does not contain the delta positions."""


class NoConvergence(PtSpecError):
    def __init__(self, message, state=None, residual_norm=None):
        super().__init__(message)
        self.state = state
        self.residual_norm = residual_norm


class JacobianSingular(PtSpecError):
    pass


class NoConvergenceQR(PtSpecError):
    pass


class PathLost(PtSpecError):
    def __init__(self, message, n_label=None, gamma=None, g=None):
        super().__init__(message)
        self.n_label = n_label
        self.gamma = gamma
        self.g = g


class NotABranchPoint(PtSpecError):
    pass


class MissingGamma(PtSpecError, KeyError):
    pass


class InsufficientData(PtSpecError, ValueError):
    pass


class IoError(PtSpecError, OSError):
    """Unreadable or inconsistent data file."""
