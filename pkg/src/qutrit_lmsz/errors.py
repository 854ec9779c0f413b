"""Exception hierarchy shared by all modules."""


class QutritError(Exception):
    """Base class for package errors."""


class ConfigError(QutritError, ValueError):
    """Invalid configuration document or parameter value."""


class FieldDomainError(QutritError, ValueError):
    """A field protocol was evaluated outside the range it covers."""


class SymmetryViolationError(QutritError, ValueError):
    """A matrix does not commute with the constant of motion within tolerance."""


class PreconditionError(QutritError, ValueError):
    """An operation was called with parameters outside its validity conditions."""


class NonConvergenceError(QutritError, RuntimeError):
    """A window-widening or tolerance loop gave up before meeting its target."""


class IntegrationError(QutritError, RuntimeError):
    """The ODE integrator failed (step-size underflow or tolerance not met)."""
