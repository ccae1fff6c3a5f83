"""Intrinsics from depth / surface-normal consistency.

A pixel on a locally planar surface satisfies ``n . grad(d v) = 0`` along both
image axes. Clearing denominators gives one row linear in the unknowns
``X = [fy, by, r*bx, r]`` with ``r = fy / fx``:

    a1*fy + a2*by + a3*(r*bx) + a4*r = -a5

Four rows give a square system (solved by Gauss-Jordan elimination); more rows
are solved in the least-squares sense. Each plane contributes rows of rank two
only, so three planes with linearly independent normals are needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .camera import Intrinsics, pixel_grid
from .errors import DegenerateConfigurationError, DimensionError

CONDITION_LIMIT = 1e12
USABLE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class DepthMap:
    depth: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float64)
        if d.ndim != 2:
            raise DimensionError(f"depth must be 2-D, got shape {d.shape}")
        object.__setattr__(self, "depth", d)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.isfinite(self.depth) & (self.depth > 0)


@dataclass(frozen=True, eq=False)
class NormalMap:
    """Unit normals, shape ``(H, W, 3)``; invalid pixels are NaN."""

    normals: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normals, dtype=np.float64)
        if n.ndim != 3 or n.shape[2] != 3:
            raise DimensionError(f"normals must have shape (H, W, 3), got {n.shape}")
        object.__setattr__(self, "normals", n)

    @property
    def height(self) -> int:
        return self.normals.shape[0]

    @property
    def width(self) -> int:
        return self.normals.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        return np.all(np.isfinite(self.normals), axis=2)


@dataclass(frozen=True)
class ConstraintRow:
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    axis: str
    pixel: tuple[float, float]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3, self.a4, self.a5])

    @property
    def usable(self) -> bool:
        return bool(np.max(np.abs(self.coefficients)) > USABLE_EPS)

    def evaluate(self, K: Intrinsics) -> float:
        """Left-hand side of the cleared constraint; zero for the true intrinsics."""
        return (
            self.a1 * K.fx * K.fy
            + self.a2 * K.fx * K.by
            + self.a3 * K.fy * K.bx
            + self.a4 * K.fy
            + self.a5 * K.fx
        )


@dataclass(frozen=True)
class DepthNormalSolution:
    K: Intrinsics
    r: float
    residual: float
    condition_number: float


def depth_gradient(
    D: DepthMap,
    scheme: str = "sobel",
    callback: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Depth derivatives along x and y, in depth units per pixel.

    ``sobel`` uses the 3x3 Sobel kernel scaled by 1/8 so a unit ramp has unit
    slope; ``central`` uses centered differences. Both leave a one-pixel NaN
    border. ``analytic_callback`` evaluates ``callback(x, y)`` on the pixel grid.
    """
    d = D.depth
    if scheme == "analytic_callback":
        if callback is None:
            raise ValueError("analytic_callback scheme needs a callback")
        x, y = pixel_grid(D.width, D.height)
        gx, gy = callback(x, y)
        return np.asarray(gx, dtype=np.float64), np.asarray(gy, dtype=np.float64)
    if D.height < 3 or D.width < 3:
        raise DimensionError(f"stencil gradients need at least 3x3, got {D.height}x{D.width}")
    gx = np.full_like(d, np.nan)
    gy = np.full_like(d, np.nan)
    if scheme == "central":
        gx[1:-1, 1:-1] = (d[1:-1, 2:] - d[1:-1, :-2]) / 2
        gy[1:-1, 1:-1] = (d[2:, 1:-1] - d[:-2, 1:-1]) / 2
    elif scheme == "sobel":
        dx = d[:, 2:] - d[:, :-2]
        dy = d[2:, :] - d[:-2, :]
        gx[1:-1, 1:-1] = (dx[:-2] + 2 * dx[1:-1] + dx[2:]) / 8
        gy[1:-1, 1:-1] = (dy[:, :-2] + 2 * dy[:, 1:-1] + dy[:, 2:]) / 8
    else:
        raise ValueError(f"unknown gradient scheme {scheme!r}")
    return gx, gy


def _row_coefficients(x, y, d, g, n, axis):
    # Vectorized over leading dimensions; returns (..., 5).
    n1, n2, n3 = n[..., 0], n[..., 1], n[..., 2]
    if axis == "x":
        cols = (n3 * g, -n2 * g, -n1 * g, n1 * (x * g + d), n2 * y * g)
    elif axis == "y":
        cols = (n3 * g, -n2 * g, -n1 * g, n1 * x * g, n2 * (y * g + d))
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


def build_constraint_row(pixel, d: float, grad: float, n, axis: str) -> ConstraintRow:
    """Constraint row at ``pixel = (x, y)`` from depth, its derivative along ``axis``, and normal."""
    x, y = float(pixel[0]), float(pixel[1])
    a = _row_coefficients(x, y, float(d), float(grad), np.asarray(n, dtype=np.float64), axis)
    return ConstraintRow(*map(float, a), axis=axis, pixel=(x, y))


def constraint_rows(
    D: DepthMap,
    gradients: tuple[np.ndarray, np.ndarray],
    N: NormalMap,
    n_rows: int | None = None,
    rng: np.random.Generator | None = None,
    mask: np.ndarray | None = None,
) -> np.ndarray:
    """Stack usable rows from whole rasters, shape ``(n, 5)``.

    Rows are drawn uniformly (without replacement) over usable
    ``(pixel, axis)`` pairs; ``n_rows=None`` keeps all of them.
    """
    x, y = pixel_grid(D.width, D.height)
    valid = D.valid_mask & N.valid_mask
    if mask is not None:
        valid &= mask
    blocks = []
    for axis, g in zip(("x", "y"), gradients):
        ok = valid & np.isfinite(g)
        rows = _row_coefficients(x[ok], y[ok], D.depth[ok], g[ok], N.normals[ok], axis)
        blocks.append(rows[np.max(np.abs(rows), axis=1) > USABLE_EPS])
    rows = np.concatenate(blocks)
    if n_rows is not None:
        if n_rows > len(rows):
            raise ValueError(f"requested {n_rows} rows, only {len(rows)} usable")
        rng = np.random.default_rng() if rng is None else rng
        rows = rows[np.sort(rng.choice(len(rows), size=n_rows, replace=False))]
    return rows


def _as_coefficients(rows) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        a = np.asarray(rows, dtype=np.float64)
    else:
        a = np.array([r.coefficients for r in rows], dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 5:
        raise ValueError(f"expected rows of 5 coefficients, got shape {a.shape}")
    return a


def gauss_jordan(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a square system by Gauss-Jordan elimination with partial pivoting."""
    n = A.shape[0]
    M = np.concatenate([np.array(A, dtype=np.float64), np.reshape(b, (n, 1)).astype(np.float64)], axis=1)
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(M[col:, col])))
        if M[pivot, col] == 0.0:
            raise DegenerateConfigurationError("singular system in Gauss-Jordan elimination")
        if pivot != col:
            M[[col, pivot]] = M[[pivot, col]]
        M[col] /= M[col, col]
        for row in range(n):
            if row != col:
                M[row] -= M[row, col] * M[col]
    return M[:, n]


def _unpack(X, residual, cond) -> DepthNormalSolution:
    fy, by, rbx, r = (float(v) for v in X)
    if not (r > 0 and fy > 0):
        raise DegenerateConfigurationError(f"solution has nonpositive focal (fy={fy:.6g}, r={r:.6g})")
    return DepthNormalSolution(Intrinsics(fy / r, fy, rbx / r, by), r, residual, cond)


def _condition(A):
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise DegenerateConfigurationError(f"constraint system is degenerate (condition number {cond:.3g})")
    return cond


def solve_minimal(rows: Sequence[ConstraintRow] | np.ndarray) -> DepthNormalSolution:
    """Exact solution from four constraint rows."""
    a = _as_coefficients(rows)
    if a.shape[0] != 4:
        raise ValueError(f"minimal solver takes exactly 4 rows, got {a.shape[0]}")
    if np.any(np.max(np.abs(a), axis=1) <= USABLE_EPS):
        raise DegenerateConfigurationError("minimal sample contains an unusable (all-zero) row")
    A, B = a[:, :4], -a[:, 4]
    cond = _condition(A)
    X = gauss_jordan(A, B)
    return _unpack(X, float(np.linalg.norm(A @ X - B)), cond)


def solve_least_squares(rows: Sequence[ConstraintRow] | np.ndarray) -> DepthNormalSolution:
    """Least-squares solution ``argmin ||A X - B||`` over all usable rows."""
    a = _as_coefficients(rows)
    a = a[np.max(np.abs(a), axis=1) > USABLE_EPS]
    if a.shape[0] < 4:
        raise ValueError(f"need at least 4 usable rows, got {a.shape[0]}")
    if a.shape[0] == 4:
        return solve_minimal(a)
    A, B = a[:, :4], -a[:, 4]
    cond = _condition(A)
    X, _, rank, _ = np.linalg.lstsq(A, B, rcond=None)
    if rank < 4:
        raise DegenerateConfigurationError(f"constraint matrix is rank deficient (rank {rank})")
    return _unpack(X, float(np.linalg.norm(A @ X - B)), cond)


def normals_from_depth(D: DepthMap, K: Intrinsics) -> NormalMap:
    """Per-pixel normals from centered-difference tangents of the back-projected depth.

    Normals face the camera (``n . P < 0``). Border pixels and pixels with
    invalid neighbours or degenerate tangents are NaN.
    """
    if D.height < 3 or D.width < 3:
        raise DimensionError(f"need at least 3x3 depth, got {D.height}x{D.width}")
    x, y = pixel_grid(D.width, D.height)
    d = np.where(D.valid_mask, D.depth, np.nan)
    P = d[..., None] * np.stack([(x - K.bx) / K.fx, (y - K.by) / K.fy, np.ones_like(x)], axis=-1)
    tx = P[1:-1, 2:] - P[1:-1, :-2]
    ty = P[2:, 1:-1] - P[:-2, 1:-1]
    n = np.cross(tx, ty)
    norm = np.linalg.norm(n, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(norm > 1e-300, n / norm, np.nan)
    flip = np.sum(n * P[1:-1, 1:-1], axis=-1) > 0
    n[flip] *= -1
    out = np.full_like(P, np.nan)
    out[1:-1, 1:-1] = n
    return NormalMap(out)
