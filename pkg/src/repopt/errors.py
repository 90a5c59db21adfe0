"""Exception types shared across the package."""


class RepoptError(Exception):
    """Base class for all package errors."""


class ValidationError(RepoptError):
    """An input violates a documented precondition or invariant."""


class InfeasibleError(RepoptError):
    """No parameter choice can satisfy the requested success probability."""


class DegenerateDistillationError(RepoptError):
    """Distillation succeeded with probability zero; output state undefined."""


class CapabilityError(RepoptError):
    """The platform does not support the requested operation."""


class StructuralError(RepoptError):
    """Scheme trees were combined in a geometrically invalid way."""


class SizeGuardError(RepoptError):
    """A brute-force run would exceed the configured enumeration budget."""


class ConfigError(RepoptError):
    """A run configuration file failed validation."""
