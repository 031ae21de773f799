"""Exception types shared across the toolkit."""


class FaceVitalsError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(FaceVitalsError, ValueError):
    """An argument violates an operation precondition."""


class InsufficientDataError(FaceVitalsError):
    """The input is too short (or too empty) for the requested estimate."""


class InsufficientPeaksError(InsufficientDataError):
    """Fewer beats were detected than the estimator needs."""


class DegenerateInputError(FaceVitalsError):
    """The input is structurally valid but carries no usable signal."""


class NoFaceError(FaceVitalsError):
    """The annotated region does not intersect the frame."""


class UnusableRecordingError(FaceVitalsError):
    """Too many frames failed extraction, or quality gates reject the recording."""


class ConfigurationError(FaceVitalsError):
    """A required configuration artifact is missing or malformed."""


class StorageError(FaceVitalsError):
    """The session store is unavailable or rejected the operation."""
