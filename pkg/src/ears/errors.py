"""Exception hierarchy shared by every module in the package."""


class EarsError(Exception):
    pass


class NormalizationError(EarsError, ValueError):
    """Weights cannot be turned into a probability distribution."""


class DomainError(EarsError, ValueError):
    """An argument lies outside the domain of the operation."""


class ShapeError(EarsError, ValueError):
    """Vocabulary sizes or sequence lengths do not line up."""


class ConfigError(EarsError, ValueError):
    """An experiment or policy configuration is invalid."""
