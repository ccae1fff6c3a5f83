"""Error metrics and aggregation for the benchmarks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import Intrinsics


@dataclass(frozen=True)
class IntrinsicError:
    """Relative focal errors and image-size-normalized principal-point errors."""

    e_fx: float
    e_fy: float
    e_bx: float
    e_by: float

    @property
    def e_f(self) -> float:
        return max(self.e_fx, self.e_fy)

    @property
    def e_b(self) -> float:
        return max(self.e_bx, self.e_by)

    def to_dict(self) -> dict:
        return {"e_f": self.e_f, "e_fx": self.e_fx, "e_fy": self.e_fy, "e_b": self.e_b, "e_bx": self.e_bx, "e_by": self.e_by}


def intrinsic_error(K_est: Intrinsics, K_gt: Intrinsics, width: int, height: int) -> IntrinsicError:
    return IntrinsicError(
        abs(K_est.fx - K_gt.fx) / K_gt.fx,
        abs(K_est.fy - K_gt.fy) / K_gt.fy,
        abs(K_est.bx - K_gt.bx) / width,
        abs(K_est.by - K_gt.by) / height,
    )


def fov_y(K: Intrinsics, height: float) -> float:
    """Vertical field of view in degrees."""
    return float(np.degrees(2 * np.arctan(height / (2 * K.fy))))


@dataclass(frozen=True)
class PoseError:
    rotation_error: float
    translation_angle_error: float

    @property
    def max_error(self) -> float:
        return max(self.rotation_error, self.translation_angle_error)


def rotation_angle(R) -> float:
    """Geodesic angle of a rotation matrix, degrees."""
    c = (np.trace(R) - 1) / 2
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


def pose_error(R_est, t_est, R_gt, t_gt) -> PoseError:
    """Rotation geodesic error and angle between translation directions, in degrees.

    Translations are compared as directions, without folding their sign.
    """
    R_est, R_gt = np.asarray(R_est, float), np.asarray(R_gt, float)
    t_est, t_gt = np.asarray(t_est, float), np.asarray(t_gt, float)
    ne, ng = np.linalg.norm(t_est), np.linalg.norm(t_gt)
    if ne == 0 or ng == 0:
        raise ValueError("translation must be nonzero")
    rot = rotation_angle(R_est.T @ R_gt)
    trans = float(np.degrees(np.arccos(np.clip(t_est @ t_gt / (ne * ng), -1.0, 1.0))))
    return PoseError(rot, trans)


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    median: float
    accuracy: dict[float, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "median": self.median,
            "accuracy": {f"{k:g}": v for k, v in sorted(self.accuracy.items())},
        }


def aggregate(errors, thresholds=()) -> Summary:
    """Mean, median and fraction of errors strictly below each threshold.

    ``PoseError`` entries are reduced to their larger component first.
    """
    values = [e.max_error if isinstance(e, PoseError) else float(e) for e in errors]
    if not values:
        raise ValueError("cannot aggregate an empty sequence")
    a = np.asarray(values, dtype=np.float64)
    acc = {float(t): float(np.mean(a < t)) for t in thresholds}
    return Summary(len(a), float(np.mean(a)), float(np.median(a)), acc)
