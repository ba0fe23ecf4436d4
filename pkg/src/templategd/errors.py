"""Exception types raised across the package."""


class TemplateGDError(Exception):
    """Base class for all package errors."""


class ParameterError(TemplateGDError, ValueError):
    """A constructor or operation received an out-of-range parameter."""


class DimensionError(ParameterError):
    """Class count or vector length is invalid (e.g. k < 2)."""


class ShapeError(TemplateGDError, ValueError):
    """Array shapes do not agree."""


class DomainError(TemplateGDError, ValueError):
    """Argument outside the domain of a function (e.g. an inverse tail)."""


class TailConstraintError(ParameterError):
    """Tail-function parameters violate the tail-function definition."""


class NumericError(TemplateGDError, FloatingPointError):
    """A non-finite value appeared in an input or an iterate."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class InvariantError(TemplateGDError):
    """A stored object violates one of its invariants."""


class ConstructionError(TemplateGDError):
    """A randomized construction failed after its retry budget."""


class FeasibilityError(ParameterError):
    """Inputs violate the feasibility inequality of a construction."""


class FitError(TemplateGDError, ValueError):
    """Not enough data for a scaling fit."""


class ConfigError(TemplateGDError, ValueError):
    """Experiment configuration is malformed."""
