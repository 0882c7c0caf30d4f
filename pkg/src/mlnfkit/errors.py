"""Exception types shared across modules."""


class MLNFError(Exception):
    """Base class for toolkit errors."""


class DomainError(MLNFError, ValueError):
    """Argument outside the documented domain (e.g. negative frequency)."""


class DegenerateInputError(DomainError):
    """Coincident arguments make a closed form degenerate."""


class QuadratureError(MLNFError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SingularityError(DomainError):
    """Requested evaluation at a genuine singular point."""


class ConfigError(MLNFError):
    """Malformed or unresolvable run configuration."""
