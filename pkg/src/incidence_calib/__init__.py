"""Camera intrinsic calibration from incidence fields."""

from .camera import (
    CropResizeTransform,
    IncidenceField,
    Intrinsics,
    Normalization,
    SimpleCamera,
    apply_transform,
    backproject,
    incidence_from_intrinsics,
    normalize_field,
    transform_field,
)
from .ransac import CalibrationResult, Mode, RansacConfig, calibrate, calibrate_4dof, calibrate_simple

__version__ = "0.1.0"
