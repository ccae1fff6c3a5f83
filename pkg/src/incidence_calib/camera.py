"""Pinhole intrinsics, incidence fields, crop/resize transforms and back-projection.

Pixel convention used throughout the package: pixel ``(i, j)`` of an ``H x W``
raster sits at ``x = j, y = i``, i.e. integer pixel centers with the origin at
the center of the top-left pixel. Skew is always zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import CoverageError, DegenerateRayError, DimensionError

__all__ = [
    "Intrinsics",
    "SimpleCamera",
    "Normalization",
    "IncidenceField",
    "CropResizeTransform",
    "PointCloud",
    "pixel_grid",
    "incidence_from_intrinsics",
    "normalize_field",
    "apply_transform",
    "transform_field",
    "backproject",
]


@dataclass(frozen=True)
class Intrinsics:
    """4-DoF pinhole intrinsics (focal lengths and principal point, pixels)."""

    fx: float
    fy: float
    bx: float
    by: float

    def __post_init__(self):
        for name in ("fx", "fy", "bx", "by"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    @classmethod
    def from_matrix(cls, K) -> "Intrinsics":
        K = np.asarray(K, dtype=np.float64)
        if K.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {K.shape}")
        return cls(K[0, 0], K[1, 1], K[0, 2], K[1, 2])

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.bx], [0.0, self.fy, self.by], [0.0, 0.0, 1.0]])

    def inverse(self) -> np.ndarray:
        """Closed-form inverse of :meth:`matrix`."""
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.bx / self.fx],
                [0.0, 1.0 / self.fy, -self.by / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.fx, self.fy, self.bx, self.by)


@dataclass(frozen=True)
class SimpleCamera:
    """Single focal length, principal point at the image center ``(w/2, h/2)``."""

    f: float
    w: int
    h: int

    def to_intrinsics(self) -> Intrinsics:
        return Intrinsics(self.f, self.f, self.w / 2, self.h / 2)


class Normalization(str, Enum):
    UNIT = "unit"
    Z_ONE = "z_one"


def _check_dims(width, height, minimum=1):
    if int(width) != width or int(height) != height:
        raise DimensionError(f"dimensions must be integers, got {width}x{height}")
    if width < minimum or height < minimum:
        raise DimensionError(f"dimensions must be at least {minimum}, got {width}x{height}")


@dataclass(frozen=True, eq=False)
class IncidenceField:
    """Per-pixel incidence rays, shape ``(H, W, 3)``.

    Invalid pixels are stored as all-NaN rays and are ignored by consumers.
    The normalization invariants are checked on construction.
    """

    rays: np.ndarray
    state: Normalization = Normalization.Z_ONE

    def __post_init__(self):
        rays = np.asarray(self.rays, dtype=np.float64)
        if rays.ndim != 3 or rays.shape[2] != 3:
            raise DimensionError(f"rays must have shape (H, W, 3), got {rays.shape}")
        _check_dims(rays.shape[1], rays.shape[0])
        state = Normalization(self.state)
        valid = np.all(np.isfinite(rays), axis=2)
        v = rays[valid]
        if state is Normalization.Z_ONE:
            if np.any(v[:, 2] != 1.0):
                raise ValueError("z_one field must have third component exactly 1")
        else:
            if np.any(np.abs(np.linalg.norm(v, axis=1) - 1.0) > 1e-9) or np.any(v[:, 2] <= 0):
                raise ValueError("unit field must hold unit rays with positive third component")
        rays.setflags(write=False)
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "state", state)

    @property
    def height(self) -> int:
        return self.rays.shape[0]

    @property
    def width(self) -> int:
        return self.rays.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        return np.all(np.isfinite(self.rays), axis=2)


def pixel_grid(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(x, y)`` coordinate rasters of shape ``(height, width)``."""
    x, y = np.meshgrid(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
    return x, y


def incidence_from_intrinsics(K: Intrinsics, width: int, height: int) -> IncidenceField:
    """Generate the z-normalized incidence field ``v = K^-1 [x, y, 1]``."""
    _check_dims(width, height, minimum=2)
    x, y = pixel_grid(width, height)
    rays = np.stack([(x - K.bx) / K.fx, (y - K.by) / K.fy, np.ones_like(x)], axis=-1)
    return IncidenceField(rays, Normalization.Z_ONE)


def normalize_field(V: IncidenceField | np.ndarray, target: Normalization | str) -> IncidenceField:
    """Rescale every ray to unit length or to third component one.

    ``V`` may also be a raw ``(H, W, 3)`` ray array at arbitrary positive scale.
    Directions are preserved. Converting requires a positive third component;
    the first offending pixel is reported otherwise.
    """
    target = Normalization(target)
    if isinstance(V, IncidenceField):
        if V.state is target:
            return V
        rays = V.rays
    else:
        rays = np.asarray(V, dtype=np.float64)
        if rays.ndim != 3 or rays.shape[2] != 3:
            raise DimensionError(f"rays must have shape (H, W, 3), got {rays.shape}")
    valid = np.all(np.isfinite(rays), axis=2)
    z = rays[..., 2]
    bad = valid & ~(z > 0)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise DegenerateRayError((int(j), int(i)), float(z[i, j]))
    if target is Normalization.Z_ONE:
        out = rays / z[..., None]
        out[..., 2] = np.where(valid, 1.0, np.nan)
    else:
        out = rays / np.linalg.norm(rays, axis=2, keepdims=True)
    return IncidenceField(out, target)


@dataclass(frozen=True)
class CropResizeTransform:
    """Axis-aligned pixel map ``x' = df * x + dc`` (resize scales then crop offsets).

    Acts on intrinsics by left multiplication with its 3x3 matrix.
    """

    df_x: float
    df_y: float
    dc_x: float
    dc_y: float

    def __post_init__(self):
        for name in ("df_x", "df_y", "dc_x", "dc_y"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.df_x > 0 and self.df_y > 0):
            raise ValueError(f"scale factors must be positive, got {self.df_x}, {self.df_y}")

    @classmethod
    def identity(cls) -> "CropResizeTransform":
        return cls(1.0, 1.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, M) -> "CropResizeTransform":
        M = np.asarray(M, dtype=np.float64)
        return cls(M[0, 0], M[1, 1], M[0, 2], M[1, 2])

    def matrix(self) -> np.ndarray:
        return np.array([[self.df_x, 0.0, self.dc_x], [0.0, self.df_y, self.dc_y], [0.0, 0.0, 1.0]])

    def inverse(self) -> "CropResizeTransform":
        return CropResizeTransform(
            1.0 / self.df_x, 1.0 / self.df_y, -self.dc_x / self.df_x, -self.dc_y / self.df_y
        )

    def compose(self, other: "CropResizeTransform") -> "CropResizeTransform":
        """Return ``self @ other``: apply ``other`` first, then ``self``."""
        return CropResizeTransform(
            self.df_x * other.df_x,
            self.df_y * other.df_y,
            self.df_x * other.dc_x + self.dc_x,
            self.df_y * other.dc_y + self.dc_y,
        )

    def map_points(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        return np.stack([self.df_x * xy[..., 0] + self.dc_x, self.df_y * xy[..., 1] + self.dc_y], axis=-1)

    def is_identity(self, tol: float = 0.0) -> bool:
        return (
            abs(self.df_x - 1) <= tol
            and abs(self.df_y - 1) <= tol
            and abs(self.dc_x) <= tol
            and abs(self.dc_y) <= tol
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.df_x, self.df_y, self.dc_x, self.dc_y)


def apply_transform(T: CropResizeTransform, K: Intrinsics) -> Intrinsics:
    """Intrinsics of the edited image, ``K' = dK @ K``."""
    return Intrinsics(T.df_x * K.fx, T.df_y * K.fy, T.df_x * K.bx + T.dc_x, T.df_y * K.by + T.dc_y)


def _nearest_index(coord, size, axis_name):
    # Half-pixel margin around the outermost pixel centers counts as covered.
    eps = 1e-9
    if np.any(coord < -0.5 - eps) or np.any(coord > size - 0.5 + eps):
        worst = coord.min() if coord.min() < -0.5 - eps else coord.max()
        raise CoverageError(
            f"preimage {axis_name}={worst:.6g} outside input raster [-0.5, {size - 0.5}]"
        )
    return np.clip(np.floor(coord + 0.5), 0, size - 1).astype(np.intp)


def transform_field(
    T: CropResizeTransform, V: IncidenceField, out_width: int, out_height: int
) -> IncidenceField:
    """Resample ``V`` onto the edited raster: ``V'(x') = V(dK^-1 x')``.

    Nearest-neighbor lookup, so rays are copied bit-exactly from the input.
    """
    _check_dims(out_width, out_height)
    # (x' - dc) / df rather than the precomputed inverse: exact when the preimage is integral.
    xs = (np.arange(out_width, dtype=np.float64) - T.dc_x) / T.df_x
    ys = (np.arange(out_height, dtype=np.float64) - T.dc_y) / T.df_y
    j = _nearest_index(xs, V.width, "x")
    i = _nearest_index(ys, V.height, "y")
    return IncidenceField(V.rays[np.ix_(i, j)], V.state)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Camera-frame points, with the ``(x, y)`` pixel each one came from."""

    points: np.ndarray
    pixels: np.ndarray

    def __len__(self):
        return len(self.points)


def backproject(depth, V: IncidenceField) -> PointCloud:
    """Lift each valid pixel to ``P = d * v``; nonpositive or NaN depths are skipped."""
    d = np.asarray(getattr(depth, "depth", depth), dtype=np.float64)
    if d.shape != (V.height, V.width):
        raise DimensionError(f"depth shape {d.shape} does not match field {V.height}x{V.width}")
    if V.state is not Normalization.Z_ONE:
        raise ValueError("backproject requires a z_one incidence field")
    with np.errstate(invalid="ignore"):
        valid = np.isfinite(d) & (d > 0) & V.valid_mask
    i, j = np.nonzero(valid)
    points = d[i, j, None] * V.rays[i, j]
    return PointCloud(points, np.stack([j, i], axis=1))
