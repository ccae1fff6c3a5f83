"""Ground-truth generators: intrinsics, analytic surfaces, field corruption, edits."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .camera import (
    CropResizeTransform,
    IncidenceField,
    Intrinsics,
    Normalization,
    incidence_from_intrinsics,
    normalize_field,
    pixel_grid,
)
from .depth_normal import DepthMap, NormalMap
from .errors import PlaneVisibilityError

__all__ = [
    "Plane",
    "SurfaceScene",
    "PlanarScene",
    "NoiseModel",
    "random_intrinsics",
    "random_plane",
    "make_planar_scene",
    "make_quadratic_scene",
    "corrupt_field",
    "edit_from",
    "make_edit",
]


def random_intrinsics(rng: np.random.Generator, dims: tuple[int, int], simple: bool = False) -> Intrinsics:
    """Draw intrinsics for a ``dims = (width, height)`` image.

    Focal lengths are uniform in ``[0.3, 3] * max(w, h)``; the principal point is
    uniform in the central 80% of the image, or exactly the center when ``simple``.
    """
    w, h = dims
    lo, hi = 0.3 * max(w, h), 3.0 * max(w, h)
    if simple:
        f = rng.uniform(lo, hi)
        return Intrinsics(f, f, w / 2, h / 2)
    fx, fy = rng.uniform(lo, hi, size=2)
    bx = rng.uniform(0.1 * w, 0.9 * w)
    by = rng.uniform(0.1 * h, 0.9 * h)
    return Intrinsics(fx, fy, bx, by)


@dataclass(frozen=True)
class Plane:
    """Plane ``n . P + c = 0`` with a unit, camera-facing normal."""

    normal: tuple[float, float, float]
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        n = n / np.linalg.norm(n)
        object.__setattr__(self, "normal", tuple(float(v) for v in n))
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True, eq=False)
class SurfaceScene:
    """Depth, analytic depth gradients, normals and the true field of one view."""

    K: Intrinsics
    depth: DepthMap
    grad_x: np.ndarray
    grad_y: np.ndarray
    normals: NormalMap
    field: IncidenceField
    labels: np.ndarray

    @property
    def width(self) -> int:
        return self.depth.width

    @property
    def height(self) -> int:
        return self.depth.height

    def analytic_gradient(self, x, y):
        """Callback for ``depth_gradient(..., scheme="analytic_callback")``."""
        i = np.asarray(y, dtype=np.intp)
        j = np.asarray(x, dtype=np.intp)
        return self.grad_x[i, j], self.grad_y[i, j]

    def interior_mask(self, radius: int = 1) -> np.ndarray:
        """Pixels whose ``(2r+1)^2`` neighbourhood lies in-image on a single surface patch."""
        lab = self.labels
        ok = np.zeros(lab.shape, dtype=bool)
        r = radius
        core = lab[r:-r, r:-r]
        inner = np.ones(core.shape, dtype=bool)
        h, w = lab.shape
        for di in range(-r, r + 1):
            for dj in range(-r, r + 1):
                inner &= lab[r + di : h - r + di, r + dj : w - r + dj] == core
        ok[r:-r, r:-r] = inner
        return ok


@dataclass(frozen=True, eq=False)
class PlanarScene(SurfaceScene):
    planes: tuple[Plane, ...] = ()

    def plane_residual(self) -> float:
        """Max ``|n . (d v) + c|`` over all pixels, using each pixel's own plane."""
        worst = 0.0
        v = self.field.rays
        for k, plane in enumerate(self.planes):
            sel = self.labels == k
            P = self.depth.depth[sel, None] * v[sel]
            worst = max(worst, float(np.max(np.abs(P @ np.asarray(plane.normal) + plane.offset))))
        return worst


def _tilted_normal(tilt, azimuth):
    return np.array([np.sin(tilt) * np.cos(azimuth), np.sin(tilt) * np.sin(azimuth), -np.cos(tilt)])


def random_plane(
    rng: np.random.Generator,
    rays: np.ndarray,
    tilt_deg: tuple[float, float] = (15.0, 50.0),
    depth_range: tuple[float, float] = (2.0, 6.0),
    margin: float = 0.05,
    max_tries: int = 1000,
) -> Plane:
    """A random plane seen by every ray in ``rays`` (shape ``(N, 3)``, z_one).

    The normal is tilted away from the optical axis by an angle in ``tilt_deg``;
    the offset puts the depth at the mean ray uniform in ``depth_range``.
    """
    center = rays.mean(axis=0)
    for _ in range(max_tries):
        tilt = np.deg2rad(rng.uniform(*tilt_deg))
        n = _tilted_normal(tilt, rng.uniform(0, 2 * np.pi))
        if np.max(rays @ n) < -margin * np.max(np.linalg.norm(rays, axis=1)):
            d0 = rng.uniform(*depth_range)
            return Plane(tuple(n), -d0 * float(center @ n))
    raise PlaneVisibilityError(f"no visible plane found in {max_tries} tries")


def _strip_labels(width, height, n):
    x, _ = pixel_grid(width, height)
    return np.minimum((x * n // width).astype(np.intp), n - 1)


def make_planar_scene(
    K: Intrinsics,
    width: int,
    height: int,
    planes: list[Plane] | None = None,
    rng: np.random.Generator | None = None,
    n_planes: int = 1,
    **plane_kwargs,
) -> PlanarScene:
    """Piecewise-planar scene: vertical strips, one plane per strip.

    Pass explicit ``planes`` or an ``rng`` to draw ``n_planes`` visible random
    planes. Depth is ``d = -c / (n . v)``; gradients and normals are analytic.
    """
    V = incidence_from_intrinsics(K, width, height)
    v = V.rays
    if planes is None:
        if rng is None:
            raise ValueError("give either planes or rng")
        labels = _strip_labels(width, height, n_planes)
        planes = [random_plane(rng, v[labels == k], **plane_kwargs) for k in range(n_planes)]
    else:
        planes = [p if isinstance(p, Plane) else Plane(*p) for p in planes]
        labels = _strip_labels(width, height, len(planes))

    depth = np.empty((height, width))
    gx = np.empty_like(depth)
    gy = np.empty_like(depth)
    normals = np.empty((height, width, 3))
    for k, plane in enumerate(planes):
        sel = labels == k
        n = np.asarray(plane.normal)
        L = v[sel] @ n
        if np.any(L >= 0) or (plane.offset <= 0):
            raise PlaneVisibilityError(f"plane {k} is not in front of the camera over its region")
        depth[sel] = -plane.offset / L
        gx[sel] = plane.offset * n[0] / (K.fx * L**2)
        gy[sel] = plane.offset * n[1] / (K.fy * L**2)
        normals[sel] = n
    return PlanarScene(
        K, DepthMap(depth), gx, gy, NormalMap(normals), V, labels, planes=tuple(planes)
    )


def make_quadratic_scene(
    K: Intrinsics,
    width: int,
    height: int,
    z0: float = 3.0,
    slope: tuple[float, float] = (0.3, -0.2),
    curvature: float = 0.05,
) -> SurfaceScene:
    """Curved surface ``Z = z0 + a X + b Y + g (X^2 + Y^2)`` with analytic depth derivatives."""
    V = incidence_from_intrinsics(K, width, height)
    vx, vy = V.rays[..., 0], V.rays[..., 1]
    a, b = slope
    g = curvature
    s = vx**2 + vy**2
    q = a * vx + b * vy
    disc = (1 - q) ** 2 - 4 * g * s * z0
    if np.any(disc < 0) or np.any(1 - q <= 0):
        raise PlaneVisibilityError("surface is not intersected by every ray in front of the camera")
    # Stable root of g*s*d^2 + (q - 1)*d + z0 = 0 that tends to the planar solution as g -> 0.
    d = 2 * z0 / ((1 - q) + np.sqrt(disc))
    dF_dd = 2 * g * s * d + q - 1
    gx = -(g * d**2 * 2 * vx / K.fx + d * a / K.fx) / dF_dd
    gy = -(g * d**2 * 2 * vy / K.fy + d * b / K.fy) / dF_dd
    X, Y = d * vx, d * vy
    n = np.stack([-(a + 2 * g * X), -(b + 2 * g * Y), np.ones_like(X)], axis=-1)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    P = d[..., None] * V.rays
    n[np.sum(n * P, axis=-1) > 0] *= -1
    labels = np.zeros((height, width), dtype=np.intp)
    return SurfaceScene(K, DepthMap(d), gx, gy, NormalMap(n), V, labels)


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian angular ray noise plus uniformly drawn outlier rays.

    ``angular_sigma`` is in degrees, per tangent-plane component. Outlier rays
    have their first two z-normalized components uniform in
    ``[-outlier_box, outlier_box]``.
    """

    angular_sigma: float = 0.0
    outlier_fraction: float = 0.0
    outlier_box: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.outlier_fraction < 1:
            raise ValueError(f"outlier_fraction must be in [0, 1), got {self.outlier_fraction}")
        if self.angular_sigma < 0 or self.outlier_box <= 0:
            raise ValueError("angular_sigma must be >= 0 and outlier_box > 0")

    def to_dict(self) -> dict:
        return asdict(self)


def _perturb_directions(u, sigma_rad, rng):
    # Rotate unit rays u (N, 3) by a tangent-plane Gaussian offset.
    helper = np.where(np.abs(u[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = np.cross(u, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(u, e1)
    g = rng.normal(0.0, sigma_rad, size=(len(u), 2))
    theta = np.linalg.norm(g, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = (g[:, :1] * e1 + g[:, 1:] * e2) / theta[:, None]
    w = np.nan_to_num(w)
    return np.cos(theta)[:, None] * u + np.sin(theta)[:, None] * w


def corrupt_field(V: IncidenceField, model: NoiseModel) -> tuple[IncidenceField, np.ndarray]:
    """Apply ``model`` to the valid rays of ``V``.

    Exactly ``floor(outlier_fraction * N)`` valid pixels become outliers; the
    rest are perturbed. Returns the corrupted field (same normalization state
    as ``V``) and a boolean inlier mask.
    """
    rng = np.random.default_rng(model.seed)
    valid = V.valid_mask
    idx = np.flatnonzero(valid)
    n_out = int(np.floor(model.outlier_fraction * len(idx)))
    out_idx = rng.choice(idx, size=n_out, replace=False) if n_out else np.empty(0, dtype=np.intp)
    inlier = valid.copy()
    inlier.flat[out_idx] = False

    z = normalize_field(V, Normalization.Z_ONE).rays.reshape(-1, 3).copy()
    in_idx = np.flatnonzero(inlier)
    if model.angular_sigma > 0 and len(in_idx):
        u = z[in_idx] / np.linalg.norm(z[in_idx], axis=1, keepdims=True)
        u = _perturb_directions(u, np.deg2rad(model.angular_sigma), rng)
        z[in_idx] = u / u[:, 2:]
        z[in_idx, 2] = 1.0
    if n_out:
        z[out_idx, :2] = rng.uniform(-model.outlier_box, model.outlier_box, size=(n_out, 2))
        z[out_idx, 2] = 1.0
    out = IncidenceField(z.reshape(V.rays.shape), Normalization.Z_ONE)
    return normalize_field(out, V.state), inlier


def edit_from(scale: tuple[float, float], origin: tuple[float, float]) -> CropResizeTransform:
    """Resize by ``scale`` then crop with top-left corner at ``origin`` (resized pixels)."""
    return CropResizeTransform(scale[0], scale[1], -origin[0], -origin[1])


def make_edit(
    rng: np.random.Generator, width: int = 640, height: int = 480, max_scale: float = 2.0
) -> CropResizeTransform:
    """Random resize (per-axis scale uniform in ``[1, max_scale]``) then in-bounds crop.

    The crop keeps the output at ``width x height``; integer crop origins are
    drawn so that every output pixel's preimage lies on or inside the outermost
    input pixel centers.
    """
    sx, sy = rng.uniform(1.0, max_scale, size=2)
    ox = rng.integers(0, int(np.floor((sx - 1) * (width - 1))) + 1)
    oy = rng.integers(0, int(np.floor((sy - 1) * (height - 1))) + 1)
    return edit_from((sx, sy), (float(ox), float(oy)))
