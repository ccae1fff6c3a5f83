"""Exception types raised across the package."""


class CalibError(Exception):
    """Base class for all package errors."""


class DimensionError(CalibError, ValueError):
    """Raster dimensions are invalid or do not match."""


class DegenerateRayError(CalibError, ValueError):
    """A ray cannot be z-normalized (nonpositive third component)."""

    def __init__(self, pixel, value):
        self.pixel = pixel
        self.value = value
        super().__init__(f"degenerate ray at pixel (x={pixel[0]}, y={pixel[1]}): third component {value!r}")


class CoverageError(CalibError, ValueError):
    """An output pixel's preimage falls outside the input raster."""


class DegenerateConfigurationError(CalibError):
    """A linear system is singular or too ill-conditioned to trust."""


class SolverDegenerateError(CalibError):
    """A minimal sample cannot determine a model (e.g. equal ray components)."""


class InvalidCandidateError(CalibError):
    """A minimal solver produced a physically invalid model (nonpositive focal)."""


class CalibrationFailedError(CalibError):
    """RANSAC found no valid candidate for at least one axis."""


class AmbiguousPoseError(CalibError):
    """No pose decomposition wins the cheirality vote clearly."""


class RasterFormatError(CalibError):
    """A raster file violates the on-disk format."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class PlaneVisibilityError(CalibError, ValueError):
    """A synthetic surface is not entirely in front of the camera."""
