"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary
(and immediately, when run with ``-s``).
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from incidence_calib import benchmark as bench
from incidence_calib.camera import CropResizeTransform, Intrinsics, apply_transform, incidence_from_intrinsics, transform_field
from incidence_calib.cli import main
from incidence_calib.config import BenchmarkGrid, RunConfig, save_config
from incidence_calib.depth_normal import constraint_rows, depth_gradient, solve_least_squares
from incidence_calib.metrics import fov_y, intrinsic_error
from incidence_calib.ransac import RansacConfig, calibrate_4dof
from incidence_calib.synth import make_planar_scene, random_intrinsics

W, H = 640, 480
CFG = RansacConfig()


def criterion(name, passed, detail):
    ACCEPTANCE.append((name, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    assert passed, f"{name}: {detail}"


def test_exactness():
    calibrate_4dof(incidence_from_intrinsics(Intrinsics(500, 500, 320, 240), W, H), CFG)  # compile warmup
    worst_f = worst_b = 0.0
    times = []
    for seed in range(100):
        K = random_intrinsics(np.random.default_rng([seed, 100]), (W, H))
        V = incidence_from_intrinsics(K, W, H)
        t0 = time.perf_counter()
        res = calibrate_4dof(V, RansacConfig(seed=seed))
        times.append(time.perf_counter() - t0)
        err = intrinsic_error(res.K, K, W, H)
        worst_f, worst_b = max(worst_f, err.e_f), max(worst_b, err.e_b)
    slowest = max(times)
    criterion(
        "exactness",
        worst_f < 1e-6 and worst_b < 1e-6 and slowest < 0.2,
        f"100 clean 640x480 fields, max e_f={worst_f:.2e}, max e_b={worst_b:.2e}, "
        f"runtime median {1e3 * np.median(times):.0f} ms, max {1e3 * slowest:.0f} ms (< 200 ms)",
    )


def test_invariance():
    worst = 0.0
    checked = 0
    for seed in range(100):
        rng = np.random.default_rng([seed, 200])
        w, h = 96, 72
        K = random_intrinsics(rng, (w, h))
        s = rng.choice([0.5, 1.0, 2.0, 3.0, 4.0], size=2)
        T = CropResizeTransform(s[0], s[1], -float(rng.integers(0, 9)), -float(rng.integers(0, 9)))
        ow = int(np.floor((w - 1) * T.df_x + T.dc_x)) + 1
        oh = int(np.floor((h - 1) * T.df_y + T.dc_y)) + 1
        resampled = transform_field(T, incidence_from_intrinsics(K, w, h), ow, oh)
        generated = incidence_from_intrinsics(apply_transform(T, K), ow, oh)
        xs = (np.arange(ow) - T.dc_x) / T.df_x
        ys = (np.arange(oh) - T.dc_y) / T.df_y
        ii = np.nonzero(ys == np.round(ys))[0]
        jj = np.nonzero(xs == np.round(xs))[0]
        diff = np.abs(resampled.rays[np.ix_(ii, jj)] - generated.rays[np.ix_(ii, jj)])
        worst = max(worst, float(diff.max()))
        checked += diff.shape[0] * diff.shape[1]
    criterion(
        "invariance",
        worst < 1e-9,
        f"100 (K, dK) pairs, {checked} exact-preimage pixels, max component difference {worst:.2e} (< 1e-9)",
    )


def test_robustness():
    errs = [bench.calibration_trial(s, (W, H), 0.2, 0.3, CFG).error for s in range(50)]
    mf = float(np.median([e.e_f for e in errs]))
    mb = float(np.median([e.e_b for e in errs]))
    criterion(
        "robustness",
        mf < 0.05 and mb < 0.05,
        f"30% outliers + 0.2 deg noise, 50 seeds, median e_f={mf:.2e}, median e_b={mb:.2e} (< 0.05)",
    )


def test_depth_normal_solver():
    w, h = 160, 120
    rel, exact, sobel = [], [], []
    for seed in range(100):
        rng = np.random.default_rng([seed, 400])
        K = random_intrinsics(rng, (w, h))
        scene = make_planar_scene(K, w, h, rng=rng, n_planes=3)
        m = scene.interior_mask()
        a = solve_least_squares(constraint_rows(scene.depth, (scene.grad_x, scene.grad_y), scene.normals, mask=m))
        b = solve_least_squares(constraint_rows(scene.depth, depth_gradient(scene.depth, "sobel"), scene.normals, mask=m))
        rel.append(np.max(np.abs(np.subtract(a.K.as_tuple(), K.as_tuple())) / np.abs(K.as_tuple())))
        exact.append(intrinsic_error(a.K, K, w, h).e_f)
        sobel.append(intrinsic_error(b.K, K, w, h).e_f)
    med_exact = float(np.median(exact))
    med_sobel = float(np.median(sobel))
    criterion(
        "depth/normal solver",
        max(rel) < 1e-6 and med_sobel > med_exact,
        f"100 planar scenes, analytic gradients max rel error {max(rel):.2e} (< 1e-6); "
        f"median e_f analytic {med_exact:.2e} < Sobel {med_sobel:.2e}",
    )


def test_simple_mode_on_central_data():
    four, simple = [], []
    for s in range(50):
        four.append(bench.calibration_trial(s, (W, H), 0.2, 0.3, CFG, simple_data=True).error.e_f)
        simple.append(bench.calibration_trial(s, (W, H), 0.2, 0.3, CFG, simple_data=True, simple_mode=True).error.e_f)
    m4, ms = float(np.median(four)), float(np.median(simple))
    criterion(
        "simple-camera mode",
        ms <= m4,
        f"central-point data, 30% outliers, 50 seeds, median e_f simple {ms:.2e} <= 4-DoF {m4:.2e}",
    )


def _manipulation_suite(fraction, sigma, n=100):
    trials = [bench.manipulation_trial(s, (W, H), s % 2 == 1, sigma, fraction, CFG) for s in range(n)]
    acc = float(np.mean([t.correct for t in trials]))
    miou = float(np.mean([t.iou for t in trials if t.edited]))
    return acc, miou


def test_manipulation():
    acc_clean, miou_clean = _manipulation_suite(0.0, 0.0)
    acc_noisy, miou_noisy = _manipulation_suite(0.3, 0.0)
    criterion(
        "manipulation",
        acc_clean == 1.0 and miou_clean == pytest.approx(1.0, abs=1e-9) and acc_noisy >= 0.9,
        f"100 trials (50 edited) each; clean acc={acc_clean:.3f}, mIOU={miou_clean:.9f}; "
        f"30% outliers acc={acc_noisy:.3f} (>= 0.9), mIOU={miou_noisy:.4f}",
    )


def test_fov():
    value = fov_y(Intrinsics(1.0, H / 2, 0, 0), H)
    criterion("fov", abs(value - 90.0) < 1e-9, f"fov_y(f_y = h/2) = {value!r} deg")


def test_two_view():
    dims = (W, H)

    def run(e_f, noise, seed):
        rng = np.random.default_rng([seed, 800])
        K1, K2 = random_intrinsics(rng, dims), random_intrinsics(rng, dims)

        def scaled(K):
            return Intrinsics(K.fx * (1 + e_f), K.fy * (1 + e_f), K.bx, K.by)

        return bench.pose_trial(seed, K1, K2, scaled(K1), scaled(K2), dims, 100, noise)

    exact = [run(0.0, 0.0, s) for s in range(50)]
    worst_r = max(e.rotation_error for e in exact)
    worst_t = max(e.translation_angle_error for e in exact)
    levels = (0.0, 0.05, 0.1, 0.2)
    medians = [float(np.median([run(e, 0.5, s).max_error for s in range(50)])) for e in levels]
    monotone = all(a < b for a, b in zip(medians, medians[1:]))
    criterion(
        "two-view",
        worst_r < 0.1 and worst_t < 0.1 and monotone,
        f"GT intrinsics noiseless max rot {worst_r:.2e} deg, max trans {worst_t:.2e} deg (< 0.1); "
        f"median pose error at e_f {levels} with 0.5 px noise: " + ", ".join(f"{m:.2f}" for m in medians),
    )


def test_cli_determinism(tmp_path):
    cfg = tmp_path / "bench.json"
    grid = BenchmarkGrid(outlier_fractions=(0.0, 0.3), angular_sigmas=(0.2,), seeds=2, width=160, height=120)
    save_config(RunConfig(benchmark=grid), cfg)
    field = "{dir}/synth/field.incf"
    commands = {
        "synth": ["synth", "--edit", "random", "--outlier-fraction", "0.3", "--angular-sigma", "0.2", "--width", "320", "--height", "240"],
        "calibrate": ["calibrate", field],
        "calibrate --mode simple": ["calibrate", field, "--mode", "simple"],
        "detect": ["detect", field],
        "detect --orig-K": ["detect", field, "--orig-K", "300,310,150,120"],
        "restore": ["restore", field],
        "posepair": ["posepair", "--intrinsics", "ransac"],
        "benchmark": ["benchmark", "--config", str(cfg)],
    }
    mismatched = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        for name, argv in commands.items():
            argv = [a.format(dir=d) for a in argv]
            out = d / "synth" if name == "synth" else d / f"{name.replace(' ', '_')}.jsonl"
            assert main([*argv, "--seed", "17", "--out", str(out)]) == 0, name
    for p in sorted((tmp_path / "a").rglob("*")):
        if p.is_file():
            q = tmp_path / "b" / p.relative_to(tmp_path / "a")
            if p.read_bytes() != q.read_bytes():
                mismatched.append(str(p.relative_to(tmp_path / "a")))
    n_files = sum(1 for p in (tmp_path / "a").rglob("*") if p.is_file())
    criterion(
        "determinism",
        not mismatched,
        f"{len(commands)} commands rerun with seed 17, {n_files} output files, "
        + (f"mismatched: {mismatched}" if mismatched else "all byte-identical"),
    )
