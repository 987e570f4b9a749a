"""Exception types shared across the toolkit."""


class BeaconPlanError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(BeaconPlanError):
    """Raised for empty grids or mismatched grid shapes."""


class ZoneError(BeaconPlanError):
    """Raised when a restricted-zone polygon is invalid for the target plan."""

    def __init__(self, message, zone_index=None):
        super().__init__(message)
        self.zone_index = zone_index


class NoWalkableAreaError(BeaconPlanError):
    """Raised when a plan contains no interior free-space region."""


class TemplateError(BeaconPlanError):
    """Raised for unusable building-block templates."""


class ModelError(BeaconPlanError):
    """Raised for untrainable input or use of an untrained classifier."""


class TraceError(BeaconPlanError):
    """Raised when graph tracing preconditions are violated."""


class ScaleError(BeaconPlanError):
    """Raised when physical-unit conversion metadata is missing or invalid."""


class ProjectError(BeaconPlanError):
    """Raised for unreadable, corrupt, or inconsistent project archives."""


class EditError(BeaconPlanError):
    """Raised when a post-processing edit cannot be applied."""
