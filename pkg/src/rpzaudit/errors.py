"""Exception types shared across the pipeline."""


class RpzAuditError(Exception):
    """Base class for all errors raised by this package."""


class InvalidCoordinateError(RpzAuditError):
    """Latitude/longitude outside valid ranges or non-finite."""


class InvalidPolygonError(RpzAuditError):
    """Polygon ring with fewer than 3 vertices or bad coordinates."""


class ValidationError(RpzAuditError):
    """Input data violates a hard contract (duplicate ids, bad dimensions, ...)."""


class DegenerateVectorError(RpzAuditError):
    """Zero-norm embedding vector where a direction is required."""


class ConfigError(RpzAuditError):
    """Configuration values violate their invariants."""


class ContractViolationError(RpzAuditError):
    """A caller passed a value outside the documented domain."""
