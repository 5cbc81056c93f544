"""Exception and warning types shared across the package."""


class RcnsError(Exception):
    pass


class DomainError(RcnsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(RcnsError, ValueError):
    """Invalid parameters, shape keys or configuration values."""


class RegimeError(RcnsError, ValueError):
    """Functional requested in the wrong far-field regime."""


class PreconditionError(RcnsError, ValueError):
    pass


class ParityError(RcnsError, TypeError):
    """Operation requires a field of the other parity."""


class ChecksumError(RcnsError, IOError):
    pass


class NumericalFailure(RcnsError, RuntimeError):
    """Non-finite values appeared during time integration."""

    def __init__(self, message, t=None, node=None):
        super().__init__(message)
        self.t = t
        self.node = node


class ScenarioError(ConfigError):
    """Scenario text failed validation; carries every violation found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class FloorWarning(UserWarning):
    """Density sits at the solver floor over a large part of a probe interval."""


class CavitationWarning(UserWarning):
    pass
