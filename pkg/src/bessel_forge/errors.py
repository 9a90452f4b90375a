"""Exception hierarchy shared by every module."""

from __future__ import annotations


class BesselForgeError(Exception):
    """Base class for all errors raised by the package."""


# --- weight expressions -------------------------------------------------------


class WeightSyntaxError(BesselForgeError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(WeightSyntaxError):
    pass


class ArityError(WeightSyntaxError):
    pass


class WeightDomainError(BesselForgeError, ValueError):
    """A weight was evaluated outside its domain (log of r <= 0, 1/0, ...)."""

    def __init__(self, message: str, r: float | None = None):
        super().__init__(message if r is None else f"{message} (r={r!r})")
        self.r = r


# --- numerics -----------------------------------------------------------------


class QuadratureError(BesselForgeError):
    """Adaptive quadrature failed; carries the best value found so far."""

    def __init__(self, message: str, value: float = float("nan"),
                 abs_error: float = float("inf"), abscissa: float | None = None):
        super().__init__(message)
        self.value = value
        self.abs_error = abs_error
        self.abscissa = abscissa


class DivergenceError(BesselForgeError):
    """An improper integral is provably (or numerically) divergent."""


class MonteCarloError(BesselForgeError):
    pass


class ODEError(BesselForgeError):
    """The radial solver stopped; ``r`` is where it happened, when known."""

    def __init__(self, message: str, r: float | None = None):
        super().__init__(message)
        self.r = r


# --- geometry / hypotheses ----------------------------------------------------


class GaugeUnavailableError(BesselForgeError):
    """The geometry has no closed-form gauge (Engel, Cartan)."""


class HypothesisViolation(BesselForgeError):
    """A precondition of an identity or inequality fails at a point."""


class ParameterRangeError(BesselForgeError, ValueError):
    pass


class SpecError(BesselForgeError):
    """A CLI run-spec failed validation."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
        self.detail = message
