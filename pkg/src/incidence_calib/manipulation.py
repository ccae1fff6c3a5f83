"""Crop/resize detection and restoration from calibrated intrinsics."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .camera import CropResizeTransform, Intrinsics, SimpleCamera, apply_transform

DEFAULT_THRESHOLD = 0.02


class Case(str, Enum):
    KNOWN_ORIGINAL = "known_original"
    SIMPLE_ASSUMPTION = "simple_assumption"


@dataclass(frozen=True)
class ManipulationVerdict:
    edited: bool
    delta: CropResizeTransform
    deviation: float
    case: Case

    @property
    def label(self) -> str:
        return "edited" if self.edited else "genuine"


@dataclass(frozen=True, eq=False)
class RestorationBox:
    """The edited image's corners expressed in original-image pixels, shape ``(4, 2)``.

    Corner order: ``(0, 0), (w, 0), (0, h), (w, h)``.
    """

    corners: np.ndarray
    iou_vs_ground_truth: float | None = None

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        c = np.asarray(self.corners)
        return (float(c[:, 0].min()), float(c[:, 1].min()), float(c[:, 0].max()), float(c[:, 1].max()))

    @classmethod
    def from_bounds(cls, x0, y0, x1, y1) -> "RestorationBox":
        return cls(np.array([[x0, y0], [x1, y0], [x0, y1], [x1, y1]], dtype=np.float64))


def detect_known_original(
    K_est: Intrinsics, K_orig: Intrinsics, width: int, height: int, threshold: float = DEFAULT_THRESHOLD
) -> ManipulationVerdict:
    """Case 1: ``dK = K_est K_orig^-1``; edited when it deviates from identity.

    Offsets are normalized by the analysed image's ``width`` and ``height``.
    """
    delta = CropResizeTransform.from_matrix(K_est.matrix() @ K_orig.inverse())
    deviation = max(
        abs(delta.df_x - 1), abs(delta.df_y - 1), abs(delta.dc_x) / width, abs(delta.dc_y) / height
    )
    return ManipulationVerdict(deviation > threshold, delta, float(deviation), Case.KNOWN_ORIGINAL)


def detect_simple_assumption(
    K_est: Intrinsics, width: int, height: int, threshold: float = DEFAULT_THRESHOLD
) -> ManipulationVerdict:
    """Case 2: edited when ``K_est`` breaks equal focals / centered principal point.

    Blind to aspect-preserving resizes and centered crops, which keep the
    assumption intact. ``delta`` is the simple-camera restoration transform.
    """
    deviation = max(
        abs(K_est.fx / K_est.fy - 1), abs(K_est.bx - width / 2) / width, abs(K_est.by - height / 2) / height
    )
    delta, _, _ = restore_without_original(K_est, width, height)
    return ManipulationVerdict(deviation > threshold, delta, float(deviation), Case.SIMPLE_ASSUMPTION)


def restore_known_original(dims: tuple[int, int], delta: CropResizeTransform) -> RestorationBox:
    """Map the corners of a ``dims = (w, h)`` edited image back through ``dK^-1``."""
    w, h = dims
    corners = np.array([[0, 0], [w, 0], [0, h], [w, h]], dtype=np.float64)
    return RestorationBox(delta.inverse().map_points(corners))


def restore_without_original(
    K_est: Intrinsics, width: int, height: int
) -> tuple[CropResizeTransform, tuple[int, int], Intrinsics]:
    """Undo a crop/resize by mapping ``K_est`` back onto a simple camera.

    The restored focal is the geometric mean of ``fx`` and ``fy``; each axis of
    the ``width x height`` canvas is rescaled by ``f / f_axis`` and rounded.
    Returns ``(dK, (w, h), K_restored)`` with ``dK^-1 K_est == K_restored``.
    """
    f = float(np.sqrt(K_est.fx * K_est.fy))
    w = int(round(width * f / K_est.fx))
    h = int(round(height * f / K_est.fy))
    target = SimpleCamera(f, w, h).to_intrinsics()
    delta = CropResizeTransform.from_matrix(K_est.matrix() @ target.inverse())
    restored = apply_transform(delta.inverse(), K_est)
    if abs(restored.fx - restored.fy) > 1e-9 * f or max(abs(restored.bx - w / 2), abs(restored.by - h / 2)) > 1.0:
        raise AssertionError(f"restoration did not reach a simple camera: {restored}")
    return delta, (w, h), restored


def box_iou(a: RestorationBox, b: RestorationBox) -> float:
    ax0, ay0, ax1, ay1 = a.bounds
    bx0, by0, bx1, by1 = b.bounds
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return float(inter / union) if union > 0 else 0.0
