"""Typed errors shared across the package.

Everything raised on purpose derives from SafeSceneError so callers can
catch the package's failures without also swallowing programming bugs.
"""


class SafeSceneError(Exception):
    """Base class for all errors raised by this package."""


# geometry
class NonPositiveDepth(SafeSceneError):
    """Back-projection was given a depth <= 0."""


class RayParallelToPlane(SafeSceneError):
    """The back-projected ray never meets the table plane."""


class IntersectionBehindCamera(SafeSceneError):
    """Ray/plane intersection lies at a non-positive ray parameter."""


class PointBehindCamera(SafeSceneError):
    """Projection was asked for a point at camera-frame z <= 0."""


# kinematics and fixed-shape data
class LengthMismatch(SafeSceneError):
    """A joint vector does not match the chain's degree-of-freedom count."""


# time ordering
class NonMonotonicTimestamp(SafeSceneError):
    """Timestamps must be strictly increasing within a session."""


class InsufficientHistory(SafeSceneError):
    """A prediction was requested from fewer than two track points."""


# replay
class IndexOutOfRange(SafeSceneError, IndexError):
    """Sample index outside the recording."""


class NonSequentialReplay(SafeSceneError):
    """Flag recomputation requires consuming frames in order; use seek."""


# session files
class RecordingError(SafeSceneError):
    """Base class for session-file failures."""


class ParseError(RecordingError):
    """The file is not parseable YAML (or not text at all)."""


class SchemaError(RecordingError):
    """Parsed YAML does not match the session schema."""


class ValidationError(RecordingError):
    """Schema-shaped data breaks a value invariant."""


class IoFailure(RecordingError):
    """The operating system refused a read or write."""


# control plane
class ApiError(SafeSceneError):
    """Base class for operator API failures; carries an HTTP status."""

    status = 400

    @property
    def kind(self) -> str:
        return type(self).__name__


class InvalidTransition(ApiError):
    """The requested state change is not allowed from the current mode."""

    status = 409


class DependencyNotRunning(ApiError):
    """A pipeline stage was started before the stage it depends on."""

    status = 409


class NotFound(ApiError):
    """The referenced session or resource does not exist."""

    status = 404


class BadRequest(ApiError):
    """A request parameter is missing or out of range."""

    status = 422
