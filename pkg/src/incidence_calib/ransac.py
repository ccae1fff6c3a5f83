"""Fixed-iteration RANSAC recovering intrinsics from an incidence field.

Along each image axis a z-normalized ray satisfies ``v = (x - b) / f``, so two
pixels determine ``(f, b)`` for that axis and the axes decouple. ``four_dof``
mode draws two-point candidates and keeps, per axis, the one with the most
inliers. ``simple`` mode fixes the principal point at the image center and
enumerates a focal grid, scoring both axes together.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

from ._kernels import count_inliers
from .camera import IncidenceField, Intrinsics, Normalization, normalize_field, pixel_grid
from .errors import CalibrationFailedError, InvalidCandidateError, SolverDegenerateError

log = logging.getLogger(__name__)

DEGENERATE_EPS = 1e-12


class Mode(str, Enum):
    FOUR_DOF = "4dof"
    SIMPLE = "simple"


@dataclass(frozen=True)
class RansacConfig:
    """RANSAC settings.

    ``f_min`` / ``f_max`` default to ``0.3`` / ``3`` times the larger image
    dimension. ``refine_rounds`` is the number of least-squares polish rounds
    run on the winning candidate's inlier set (0 returns the raw candidate).
    """

    iterations: int = 256
    candidates: int = 64
    score_samples: int = 4096
    threshold_x: float = 0.02
    threshold_y: float = 0.02
    f_min: float | None = None
    f_max: float | None = None
    focal_steps: int = 2048
    seed: int = 0
    refine_rounds: int = 3

    def __post_init__(self):
        if min(self.iterations, self.candidates, self.score_samples) < 1:
            raise ValueError("iterations, candidates and score_samples must be >= 1")
        if self.focal_steps < 0 or self.refine_rounds < 0:
            raise ValueError("focal_steps and refine_rounds must be >= 0")
        if not (self.threshold_x > 0 and self.threshold_y > 0):
            raise ValueError("inlier thresholds must be positive")
        if self.f_min is not None and self.f_max is not None and not 0 < self.f_min < self.f_max:
            raise ValueError(f"need 0 < f_min < f_max, got {self.f_min}, {self.f_max}")

    def focal_bounds(self, width: int, height: int) -> tuple[float, float]:
        m = max(width, height)
        lo = 0.3 * m if self.f_min is None else self.f_min
        hi = 3.0 * m if self.f_max is None else self.f_max
        if not 0 < lo < hi:
            raise ValueError(f"need 0 < f_min < f_max, got {lo}, {hi}")
        return lo, hi

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RansacConfig":
        return cls(**d)


@dataclass(frozen=True)
class CalibrationResult:
    K: Intrinsics
    score_x: int
    score_y: int
    total_scored: int
    mode: Mode
    config: RansacConfig
    residual_x: float
    residual_y: float

    def to_dict(self) -> dict:
        return {
            "K": {"fx": self.K.fx, "fy": self.K.fy, "bx": self.K.bx, "by": self.K.by},
            "score_x": self.score_x,
            "score_y": self.score_y,
            "total_scored": self.total_scored,
            "mode": self.mode.value,
            "residual_x": self.residual_x,
            "residual_y": self.residual_y,
            "config": self.config.to_dict(),
        }


def _axis_solve(c1, c2, v1, v2):
    """Vectorized per-axis two-point solve; invalid candidates come back as NaN."""
    dv = v1 - v2
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(np.abs(dv) > DEGENERATE_EPS, (c1 - c2) / dv, np.nan)
        b = 0.5 * (c1 - v1 * f + c2 - v2 * f)
    bad = ~(f > 0)
    return np.where(bad, np.nan, f), np.where(bad, np.nan, b)


def two_point_solver(p1, p2, v1, v2) -> Intrinsics:
    """Intrinsics from two pixels ``p = (x, y)`` and their z-normalized rays."""
    p1, p2, v1, v2 = (np.asarray(a, dtype=np.float64) for a in (p1, p2, v1, v2))
    params = []
    for k, name in enumerate("xy"):
        if abs(v1[k] - v2[k]) <= DEGENERATE_EPS:
            raise SolverDegenerateError(f"equal {name} ray components: {v1[k]!r}")
        f = (p1[k] - p2[k]) / (v1[k] - v2[k])
        if not f > 0:
            raise InvalidCandidateError(f"nonpositive focal f_{name}={f!r}")
        params.append((f, 0.5 * (p1[k] - v1[k] * f + p2[k] - v2[k] * f)))
    (fx, bx), (fy, by) = params
    return Intrinsics(fx, fy, bx, by)


def score_axis(K: Intrinsics, pixels, rays, axis: str, threshold: float) -> int:
    """Number of samples whose ray residual along ``axis`` is strictly below ``threshold``."""
    k = {"x": 0, "y": 1}[axis]
    f, b = (K.fx, K.bx) if k == 0 else (K.fy, K.by)
    c = np.asarray(pixels, dtype=np.float64)[:, k]
    v = np.asarray(rays, dtype=np.float64)[:, k]
    return int(np.count_nonzero(np.abs((c - b) / f - v) < threshold))


def _samples(V: IncidenceField):
    if V.state is not Normalization.Z_ONE:
        V = normalize_field(V, Normalization.Z_ONE)
    valid = V.valid_mask
    if valid.all():
        x, y = pixel_grid(V.width, V.height)
        return x.ravel(), y.ravel(), V.rays[..., 0].ravel(), V.rays[..., 1].ravel()
    i, j = np.nonzero(valid)
    rays = V.rays[i, j]
    return j.astype(np.float64), i.astype(np.float64), rays[:, 0].copy(), rays[:, 1].copy()


def _score_subset(n, cfg):
    if n <= cfg.score_samples:
        return np.arange(n)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0,)))
    return np.sort(rng.choice(n, size=cfg.score_samples, replace=False))


def _draw_pairs(n, cfg):
    first, second = [], []
    for it in range(cfg.iterations):
        # One stream per iteration so the draw is independent of evaluation order.
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1, it)))
        i1 = rng.integers(0, n, size=cfg.candidates)
        i2 = rng.integers(0, n - 1, size=cfg.candidates)
        i2 += i2 >= i1
        first.append(i1)
        second.append(i2)
    return np.concatenate(first), np.concatenate(second)


def _inliers(c, v, f, b, thr):
    return np.abs((c - b) / f - v) < thr


def _rms(c, v, f, b, thr):
    r = (c - b) / f - v
    r = r[np.abs(r) < thr]
    return float(np.sqrt(np.mean(r**2))) if len(r) else float("nan")


def _refit_axis(c, v, f, b, thr):
    # Linear fit v = alpha * c + beta over the inliers, i.e. in ray space.
    m = _inliers(c, v, f, b, thr)
    if np.count_nonzero(m) < 2 or np.ptp(c[m]) == 0:
        return None
    A = np.stack([c[m], np.ones(np.count_nonzero(m))], axis=1)
    (alpha, beta), *_ = np.linalg.lstsq(A, v[m], rcond=None)
    if not alpha > 0:
        return None
    return 1.0 / alpha, -beta / alpha


def _best_axis(c, v, c_s, v_s, i1, i2, thr, rounds, name):
    f, b = _axis_solve(c[i1], c[i2], v[i1], v[i2])
    scores = count_inliers(c_s, v_s, f, b, thr)
    best = int(np.argmax(scores))
    if scores[best] < 0:
        raise CalibrationFailedError(f"every {name}-axis candidate was degenerate")
    fb, bb = float(f[best]), float(b[best])
    for _ in range(rounds):
        refit = _refit_axis(c_s, v_s, fb, bb, thr)
        if refit is None:
            break
        fb, bb = refit
    score = int(np.count_nonzero(_inliers(c_s, v_s, fb, bb, thr)))
    return fb, bb, score


def calibrate_4dof(V: IncidenceField, cfg: RansacConfig | None = None) -> CalibrationResult:
    """Assumption-free calibration; x and y parameters are selected independently."""
    cfg = cfg or RansacConfig()
    x, y, vx, vy = _samples(V)
    n = len(x)
    if n < 2:
        raise CalibrationFailedError(f"need at least 2 valid pixels, got {n}")
    s = _score_subset(n, cfg)
    i1, i2 = _draw_pairs(n, cfg)
    fx, bx, sx = _best_axis(x, vx, x[s], vx[s], i1, i2, cfg.threshold_x, cfg.refine_rounds, "x")
    fy, by, sy = _best_axis(y, vy, y[s], vy[s], i1, i2, cfg.threshold_y, cfg.refine_rounds, "y")
    K = Intrinsics(fx, fy, bx, by)
    log.debug("4dof: K=%s scores=(%d, %d)/%d", K, sx, sy, len(s))
    return CalibrationResult(
        K,
        sx,
        sy,
        len(s),
        Mode.FOUR_DOF,
        cfg,
        _rms(x[s], vx[s], fx, bx, cfg.threshold_x),
        _rms(y[s], vy[s], fy, by, cfg.threshold_y),
    )


def focal_grid(f_min: float, f_max: float, steps: int) -> np.ndarray:
    """``steps + 1`` evenly spaced focal candidates; a single ``f_min`` when ``steps == 0``."""
    if steps == 0:
        return np.array([float(f_min)])
    return f_min + np.arange(steps + 1) / steps * (f_max - f_min)


def calibrate_simple(
    V: IncidenceField,
    width: int | None = None,
    height: int | None = None,
    cfg: RansacConfig | None = None,
) -> CalibrationResult:
    """Single-focal calibration with the principal point pinned to ``(w/2, h/2)``.

    Ties in the summed score go to the smaller focal length.
    """
    cfg = cfg or RansacConfig()
    width = V.width if width is None else width
    height = V.height if height is None else height
    x, y, vx, vy = _samples(V)
    if len(x) < 1:
        raise CalibrationFailedError("field has no valid pixels")
    s = _score_subset(len(x), cfg)
    x, y, vx, vy = x[s], y[s], vx[s], vy[s]
    cx, cy = width / 2, height / 2
    focals = focal_grid(*cfg.focal_bounds(width, height), cfg.focal_steps)

    def total(fs):
        return count_inliers(x, vx, fs, np.full_like(fs, cx), cfg.threshold_x) + count_inliers(
            y, vy, fs, np.full_like(fs, cy), cfg.threshold_y
        )

    scores = total(focals)
    f = float(focals[int(np.argmax(scores))])
    for _ in range(cfg.refine_rounds):
        # Ray-space fit of v = (c - center) / f through the fixed center, both axes pooled.
        mx = _inliers(x, vx, f, cx, cfg.threshold_x)
        my = _inliers(y, vy, f, cy, cfg.threshold_y)
        u = np.concatenate([x[mx] - cx, y[my] - cy])
        w = np.concatenate([vx[mx], vy[my]])
        denom = float(u @ u)
        if denom == 0 or not float(u @ w) > 0:
            break
        f = denom / float(u @ w)
    K = Intrinsics(f, f, cx, cy)
    return CalibrationResult(
        K,
        score_axis(K, np.stack([x, y], 1), np.stack([vx, vy], 1), "x", cfg.threshold_x),
        score_axis(K, np.stack([x, y], 1), np.stack([vx, vy], 1), "y", cfg.threshold_y),
        len(s),
        Mode.SIMPLE,
        cfg,
        _rms(x, vx, f, cx, cfg.threshold_x),
        _rms(y, vy, f, cy, cfg.threshold_y),
    )


def calibrate(V: IncidenceField, mode: Mode | str = Mode.FOUR_DOF, cfg: RansacConfig | None = None) -> CalibrationResult:
    mode = Mode(mode)
    if mode is Mode.SIMPLE:
        return calibrate_simple(V, cfg=cfg)
    return calibrate_4dof(V, cfg)


def with_seed(cfg: RansacConfig, seed: int) -> RansacConfig:
    return replace(cfg, seed=seed)
