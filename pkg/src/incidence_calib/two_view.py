"""Two-view relative pose from uncalibrated correspondences plus estimated intrinsics.

Pose convention: a point ``X1`` in camera-1 coordinates is ``X2 = R X1 + t`` in
camera 2. Fundamental matrices satisfy ``x2^T F x1 = 0`` in pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import Intrinsics
from .errors import AmbiguousPoseError, DegenerateConfigurationError

CHEIRALITY_MAJORITY = 0.6


@dataclass(frozen=True, eq=False)
class CorrespondenceSet:
    x1: np.ndarray
    x2: np.ndarray
    inliers: np.ndarray
    dims1: tuple[int, int]
    dims2: tuple[int, int]
    points: np.ndarray | None = None

    def __post_init__(self):
        if np.shape(self.x1) != np.shape(self.x2) or np.shape(self.x1)[-1] != 2:
            raise ValueError("x1 and x2 must both have shape (N, 2)")

    def __len__(self):
        return len(self.x1)


@dataclass(frozen=True, eq=False)
class RelativePose:
    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.float64)
        if abs(np.linalg.det(R) - 1) > 1e-9 or not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ValueError("R must be a proper rotation")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t / np.linalg.norm(t))


def skew(t) -> np.ndarray:
    return np.array([[0, -t[2], t[1]], [t[2], 0, -t[0]], [-t[1], t[0], 0]], dtype=np.float64)


def rotation_from_axis_angle(axis, angle_deg) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    a = np.radians(angle_deg)
    S = skew(axis)
    return np.eye(3) + np.sin(a) * S + (1 - np.cos(a)) * (S @ S)


def rotation_between(a, b) -> np.ndarray:
    """Smallest rotation taking direction ``a`` to direction ``b``."""
    a = np.asarray(a, dtype=np.float64) / np.linalg.norm(a)
    b = np.asarray(b, dtype=np.float64) / np.linalg.norm(b)
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    if s < 1e-15:
        if a @ b > 0:
            return np.eye(3)
        perp = np.cross(a, [1.0, 0.0, 0.0] if abs(a[0]) < 0.9 else [0.0, 1.0, 0.0])
        return rotation_from_axis_angle(perp, 180.0)
    return rotation_from_axis_angle(axis, np.degrees(np.arctan2(s, a @ b)))


def look_at_pose(camera_center, target, roll_deg: float = 0.0, view_ray=(0.0, 0.0, 1.0)) -> tuple[np.ndarray, np.ndarray]:
    """Pose ``(R, t)`` of a second camera at ``camera_center`` whose ``view_ray`` passes through ``target``.

    ``camera_center`` and ``target`` are in camera-1 coordinates (x right, y down,
    z forward); ``view_ray`` is a camera-2 direction, the optical axis by default.
    """
    C = np.asarray(camera_center, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - C
    z /= np.linalg.norm(z)
    x = np.cross([0.0, 1.0, 0.0], z)
    if np.linalg.norm(x) < 1e-9:
        raise ValueError("viewing direction is parallel to the camera-1 y axis")
    x /= np.linalg.norm(x)
    R = rotation_from_axis_angle([0, 0, 1], roll_deg) @ np.stack([x, np.cross(z, x), z])
    R = rotation_between([0.0, 0.0, 1.0], view_ray) @ R
    return R, -R @ C


def project(K: Intrinsics, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.stack([K.fx * X[:, 0] / X[:, 2] + K.bx, K.fy * X[:, 1] / X[:, 2] + K.by], axis=1)


def fundamental_from_pose(K1: Intrinsics, K2: Intrinsics, R, t) -> np.ndarray:
    F = K2.inverse().T @ skew(t) @ np.asarray(R) @ K1.inverse()
    return F / np.linalg.norm(F)


def synth_pair(
    rng: np.random.Generator,
    K1: Intrinsics,
    K2: Intrinsics,
    R,
    t,
    n_points: int,
    noise_px: float = 0.0,
    dims1: tuple[int, int] = (640, 480),
    dims2: tuple[int, int] | None = None,
    depth_range: tuple[float, float] = (2.0, 8.0),
) -> CorrespondenceSet:
    """Random 3D points visible in both views, projected with optional Gaussian pixel noise.

    Candidates are back-projected from random pixels of either camera at depths
    in ``depth_range`` and kept when they project inside both images, so views
    with very different fields of view still share points.
    """
    if n_points < 8:
        raise ValueError(f"need at least 8 correspondences, got {n_points}")
    dims2 = dims1 if dims2 is None else dims2
    R = np.asarray(R, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)

    def lift(K, dims, m):
        px = rng.uniform([0, 0], dims, size=(m, 2))
        d = rng.uniform(*depth_range, size=m)
        return d[:, None] * np.stack([(px[:, 0] - K.bx) / K.fx, (px[:, 1] - K.by) / K.fy, np.ones(m)], axis=1)

    kept = []
    total = 0
    for _ in range(100):
        m = 2 * n_points
        X1 = np.concatenate([lift(K1, dims1, m), (lift(K2, dims2, m) - t) @ R])
        X1 = X1[rng.permutation(2 * m)]
        X2 = X1 @ R.T + t
        ok = (X1[:, 2] > 0.1) & (X2[:, 2] > 0.1)
        p1 = np.full((2 * m, 2), -1.0)
        p2 = np.full((2 * m, 2), -1.0)
        p1[ok] = project(K1, X1[ok])
        p2[ok] = project(K2, X2[ok])
        ok &= np.all((p1 >= 0) & (p1 <= dims1), axis=1) & np.all((p2 >= 0) & (p2 <= dims2), axis=1)
        kept.append(X1[ok])
        total += int(ok.sum())
        if total >= n_points:
            break
    else:
        raise DegenerateConfigurationError("could not place enough points in front of both cameras")
    X1 = np.concatenate(kept)[:n_points]
    x1 = project(K1, X1)
    x2 = project(K2, X1 @ R.T + t)
    if noise_px > 0:
        x1 = x1 + rng.normal(0, noise_px, size=x1.shape)
        x2 = x2 + rng.normal(0, noise_px, size=x2.shape)
    return CorrespondenceSet(x1, x2, np.ones(n_points, dtype=bool), tuple(dims1), tuple(dims2), X1)


def _hartley(x):
    c = x.mean(axis=0)
    scale = np.sqrt(2) / np.mean(np.linalg.norm(x - c, axis=1))
    return np.array([[scale, 0, -scale * c[0]], [0, scale, -scale * c[1]], [0, 0, 1]])


def _homog(x):
    return np.concatenate([x, np.ones((len(x), 1))], axis=1)


def eight_point(corr: CorrespondenceSet) -> np.ndarray:
    """Normalized eight-point estimate of ``F``, rank 2, unit Frobenius norm."""
    x1 = np.asarray(corr.x1, dtype=np.float64)[corr.inliers]
    x2 = np.asarray(corr.x2, dtype=np.float64)[corr.inliers]
    if len(x1) < 8:
        raise ValueError(f"need at least 8 correspondences, got {len(x1)}")
    for x in (x1, x2):
        sv = np.linalg.svd(x - x.mean(axis=0), compute_uv=False)
        if sv[-1] <= 1e-9 * sv[0]:
            raise DegenerateConfigurationError("correspondences are collinear")
    T1, T2 = _hartley(x1), _hartley(x2)
    a = _homog(x1) @ T1.T
    b = _homog(x2) @ T2.T
    A = np.einsum("ni,nj->nij", b, a).reshape(-1, 9)
    _, s, Vt = np.linalg.svd(A)
    if s[7] <= 1e-10 * s[0]:
        raise DegenerateConfigurationError("eight-point system has a multi-dimensional null space")
    F = Vt[-1].reshape(3, 3)
    U, S, Vt = np.linalg.svd(F)
    F = U @ np.diag([S[0], S[1], 0.0]) @ Vt
    F = T2.T @ F @ T1
    return F / np.linalg.norm(F)


def epipolar_residuals(F, x1, x2) -> np.ndarray:
    return np.einsum("ni,ij,nj->n", _homog(x2), F, _homog(x1))


def symmetric_epipolar_distance(F, x1, x2) -> np.ndarray:
    """Mean of the two point-to-epipolar-line distances, per correspondence (pixels)."""
    h1, h2 = _homog(x1), _homog(x2)
    l2 = h1 @ F.T
    l1 = h2 @ F
    r = np.abs(np.sum(h2 * l2, axis=1))
    return 0.5 * (r / np.linalg.norm(l2[:, :2], axis=1) + r / np.linalg.norm(l1[:, :2], axis=1))


def triangulate(P1, P2, x1, x2) -> np.ndarray:
    """Linear (DLT) triangulation of matched normalized or pixel points."""
    A = np.stack(
        [
            x1[:, :1] * P1[2] - P1[0],
            x1[:, 1:2] * P1[2] - P1[1],
            x2[:, :1] * P2[2] - P2[0],
            x2[:, 1:2] * P2[2] - P2[1],
        ],
        axis=1,
    )
    X = np.linalg.svd(A)[2][:, -1]
    return X[:, :3] / X[:, 3:]


def essential_from_fundamental(F, K1: Intrinsics, K2: Intrinsics) -> np.ndarray:
    return K2.matrix().T @ F @ K1.matrix()


def decompose_essential(E) -> list[tuple[np.ndarray, np.ndarray]]:
    U, _, Vt = np.linalg.svd(E)
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    R1, R2 = U @ W @ Vt, U @ W.T @ Vt
    t = U[:, 2]
    return [(R1, t), (R1, -t), (R2, t), (R2, -t)]


def pose_from_uncalibrated(corr: CorrespondenceSet, K1: Intrinsics, K2: Intrinsics, F=None) -> RelativePose:
    """Upgrade ``F`` to ``E`` with the given intrinsics and pick the pose by cheirality.

    Raises ``AmbiguousPoseError`` when the best decomposition has fewer than 60%
    of points in front of both cameras or ties with another.
    """
    F = eight_point(corr) if F is None else F
    E = essential_from_fundamental(F, K1, K2)
    x1 = (_homog(corr.x1[corr.inliers]) @ K1.inverse().T)[:, :2]
    x2 = (_homog(corr.x2[corr.inliers]) @ K2.inverse().T)[:, :2]
    P1 = np.hstack([np.eye(3), np.zeros((3, 1))])
    votes = []
    for R, t in decompose_essential(E):
        X = triangulate(P1, np.hstack([R, t[:, None]]), x1, x2)
        z2 = X @ R[2] + t[2]
        votes.append(int(np.count_nonzero((X[:, 2] > 0) & (z2 > 0))))
    order = np.argsort(votes)[::-1]
    best = int(order[0])
    if votes[best] < CHEIRALITY_MAJORITY * len(x1) or votes[best] == votes[int(order[1])]:
        raise AmbiguousPoseError(f"cheirality votes {votes} out of {len(x1)} points")
    R, t = decompose_essential(E)[best]
    return RelativePose(R, t)
