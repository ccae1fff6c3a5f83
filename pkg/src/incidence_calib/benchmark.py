"""Seeded synthetic benchmark: calibration error, manipulation detection, two-view pose."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .camera import CropResizeTransform, Intrinsics, apply_transform, incidence_from_intrinsics
from .config import BenchmarkGrid, RunConfig
from .errors import AmbiguousPoseError, CalibrationFailedError, DegenerateConfigurationError
from .manipulation import box_iou, detect_known_original, restore_known_original
from .metrics import IntrinsicError, PoseError, aggregate, intrinsic_error, pose_error
from .ransac import RansacConfig, calibrate_4dof, calibrate_simple
from .synth import NoiseModel, corrupt_field, make_edit, random_intrinsics
from .two_view import look_at_pose, pose_from_uncalibrated, synth_pair

# Stream tags keep each trial type's randomness independent of the others.
_CALIB, _SIMPLE, _MANIP, _POSE, _NOISE = range(5)


def _rng(seed, tag):
    return np.random.default_rng([seed, tag])


def _noisy_field(K, dims, sigma, fraction, seed, tag):
    V = incidence_from_intrinsics(K, *dims)
    noise_seed = int(_rng(seed, _NOISE * 16 + tag).integers(2**31))
    return corrupt_field(V, NoiseModel(sigma, fraction, seed=noise_seed))[0]


@dataclass(frozen=True)
class CalibrationTrial:
    K_gt: Intrinsics
    K_est: Intrinsics
    error: IntrinsicError


def calibration_trial(
    seed: int,
    dims: tuple[int, int],
    sigma: float,
    fraction: float,
    cfg: RansacConfig,
    simple_data: bool = False,
    simple_mode: bool = False,
) -> CalibrationTrial:
    """Calibrate one corrupted field drawn from random (optionally central) intrinsics."""
    K = random_intrinsics(_rng(seed, _SIMPLE if simple_data else _CALIB), dims, simple=simple_data)
    V = _noisy_field(K, dims, sigma, fraction, seed, _SIMPLE if simple_data else _CALIB)
    cfg = replace(cfg, seed=seed)
    res = calibrate_simple(V, *dims, cfg) if simple_mode else calibrate_4dof(V, cfg)
    return CalibrationTrial(K, res.K, intrinsic_error(res.K, K, *dims))


@dataclass(frozen=True)
class ManipulationTrial:
    edited: bool
    detected: bool
    iou: float
    delta_gt: CropResizeTransform
    delta_est: CropResizeTransform
    K_gt: Intrinsics
    K_est: Intrinsics

    @property
    def correct(self) -> bool:
        return self.edited == self.detected


def manipulation_trial(
    seed: int,
    dims: tuple[int, int],
    edited: bool,
    sigma: float,
    fraction: float,
    cfg: RansacConfig,
    threshold: float = 0.02,
) -> ManipulationTrial:
    """Edit (or not) a random camera, calibrate the edited field, compare with the known original.

    The edited field is generated analytically from ``dK @ K``, i.e. an ideal
    resampling of the original field.
    """
    rng = _rng(seed, _MANIP)
    K = random_intrinsics(rng, dims)
    T = make_edit(rng, *dims) if edited else CropResizeTransform.identity()
    K_edit = apply_transform(T, K)
    V = _noisy_field(K_edit, dims, sigma, fraction, seed, _MANIP)
    res = calibrate_4dof(V, replace(cfg, seed=seed))
    verdict = detect_known_original(res.K, K, *dims, threshold=threshold)
    iou = box_iou(restore_known_original(dims, verdict.delta), restore_known_original(dims, T))
    return ManipulationTrial(edited, verdict.edited, iou, T, verdict.delta, K_edit, res.K)


def pose_trial(
    seed: int,
    K1: Intrinsics,
    K2: Intrinsics,
    K1_est: Intrinsics,
    K2_est: Intrinsics,
    dims: tuple[int, int],
    n_points: int = 100,
    noise_px: float = 0.5,
):
    """Pose error using estimated intrinsics on a random synthetic pair.

    An ambiguous cheirality vote counts as a 180 degree failure.
    """
    rng = _rng(seed, _POSE)
    # the scene sits on camera 1's image-center ray; camera 2 is placed on a
    # sphere around camera 1 with its image-center ray through the scene too
    # (edited cameras may have their principal point outside the image)
    w, h = dims
    target = 5.0 * K1.inverse() @ [w / 2, h / 2, 1.0]
    direction = rng.normal(size=3)
    center = rng.uniform(0.3, 1.0) * direction / np.linalg.norm(direction)
    R, t = look_at_pose(center, target, rng.uniform(-10.0, 10.0), K2.inverse() @ [w / 2, h / 2, 1.0])
    corr = synth_pair(rng, K1, K2, R, t, n_points, noise_px, dims, dims, depth_range=(4.0, 6.0))
    try:
        pose = pose_from_uncalibrated(corr, K1_est, K2_est)
    except (AmbiguousPoseError, DegenerateConfigurationError):
        return PoseError(180.0, 180.0)
    return pose_error(pose.R, pose.t, R, t)


def _summary(values, thresholds=()):
    return aggregate(values, thresholds).to_dict()


def benchmark_cell(grid: BenchmarkGrid, cfg: RansacConfig, sigma: float, fraction: float, threshold: float) -> dict:
    dims = (grid.width, grid.height)
    four, simple4, simple_asm, manip, poses = [], [], [], [], []
    failures = 0
    for seed in range(grid.seeds):
        try:
            a = calibration_trial(seed, dims, sigma, fraction, cfg)
            b = calibration_trial(seed, dims, sigma, fraction, cfg, simple_data=True)
            c = calibration_trial(seed, dims, sigma, fraction, cfg, simple_data=True, simple_mode=True)
            m = manipulation_trial(seed, dims, seed % 2 == 1, sigma, fraction, cfg, threshold)
        except CalibrationFailedError:
            failures += 1
            continue
        four.append(a.error)
        simple4.append(b.error)
        simple_asm.append(c.error)
        manip.append(m)
        poses.append(pose_trial(seed, a.K_gt, m.K_gt, a.K_est, m.K_est, dims, grid.pose_points, grid.pose_noise_px))
    if not four:
        raise CalibrationFailedError(f"every trial failed at sigma={sigma}, outliers={fraction}")
    edited = [m for m in manip if m.edited]
    return {
        "kind": "row",
        "angular_sigma": sigma,
        "outlier_fraction": fraction,
        "trials": len(four),
        "failures": failures,
        "e_f_4dof": _summary([e.e_f for e in four]),
        "e_b_4dof": _summary([e.e_b for e in four]),
        "e_f_central_4dof": _summary([e.e_f for e in simple4]),
        "e_b_central_4dof": _summary([e.e_b for e in simple4]),
        "e_f_central_simple": _summary([e.e_f for e in simple_asm]),
        "e_b_central_simple": _summary([e.e_b for e in simple_asm]),
        "detect_acc": float(np.mean([m.correct for m in manip])),
        "miou": float(np.mean([m.iou for m in edited])) if edited else None,
        "pose": _summary(poses, grid.pose_thresholds),
    }


def run_benchmark(run: RunConfig) -> list[dict]:
    """One record per (sigma, outlier fraction) cell, plus a trailing meta record."""
    grid = run.benchmark
    rows = [
        benchmark_cell(grid, run.ransac, sigma, fraction, grid.detect_threshold)
        for sigma in grid.angular_sigmas
        for fraction in grid.outlier_fractions
    ]
    rows.append({"kind": "meta", "config_hash": run.hash(), "seed": run.seed, "command": "benchmark"})
    return rows


def format_table(rows: list[dict]) -> str:
    head = (
        f"{'sigma':>6} {'outl':>5} | {'e_f mean':>9} {'e_f med':>9} {'e_b med':>9} | "
        f"{'ctr 4dof':>9} {'ctr asm':>9} | {'acc':>5} {'mIOU':>6} | "
        f"{'@5':>5} {'@10':>5} {'@20':>5}"
    )
    lines = [head, "-" * len(head)]
    for r in rows:
        if r.get("kind") != "row":
            continue
        acc = r["pose"]["accuracy"]
        miou = "  n/a" if r["miou"] is None else f"{r['miou']:6.4f}"
        lines.append(
            f"{r['angular_sigma']:6.2f} {r['outlier_fraction']:5.2f} | "
            f"{r['e_f_4dof']['mean']:9.2e} {r['e_f_4dof']['median']:9.2e} {r['e_b_4dof']['median']:9.2e} | "
            f"{r['e_f_central_4dof']['median']:9.2e} {r['e_f_central_simple']['median']:9.2e} | "
            f"{r['detect_acc']:5.3f} {miou} | "
            + " ".join(f"{acc[k]:5.2f}" for k in sorted(acc, key=float))
        )
    return "\n".join(lines)
