"""Command-line interface.

Exit codes: 0 success, 1 usage/IO error, 2 malformed raster, 3 calibration failure.
Machine-readable output (``--out``) is JSON lines with sorted keys.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import benchmark as bench
from .camera import CropResizeTransform, Intrinsics, apply_transform, incidence_from_intrinsics
from .config import RunConfig, load_config
from .errors import CalibrationFailedError, DegenerateRayError, RasterFormatError
from .manipulation import (
    box_iou,
    detect_known_original,
    detect_simple_assumption,
    restore_known_original,
    restore_without_original,
)
from .metrics import intrinsic_error
from .ransac import Mode, calibrate
from .raster import read_field, write_depth, write_field
from .synth import NoiseModel, corrupt_field, edit_from, make_edit, make_planar_scene, random_intrinsics

log = logging.getLogger("incidence_calib")

EXIT_USAGE, EXIT_RASTER, EXIT_CALIB = 1, 2, 3


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _k_dict(K: Intrinsics) -> dict:
    return {"fx": K.fx, "fy": K.fy, "bx": K.bx, "by": K.by}


def _delta_dict(T: CropResizeTransform) -> dict:
    return {"df_x": T.df_x, "df_y": T.df_y, "dc_x": T.dc_x, "dc_y": T.dc_y}


def _parse_k(text: str) -> Intrinsics:
    try:
        values = [float(v) for v in text.split(",")]
        return Intrinsics(*values)
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"expected fx,fy,bx,by with positive focals: {exc}") from None


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    cfg = replace(cfg, ransac=replace(cfg.ransac, seed=cfg.seed))
    if getattr(args, "mode", None):
        cfg = replace(cfg, mode=Mode(args.mode))
    return cfg


def _emit(records: list[dict], out) -> None:
    if out is None:
        return
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise CommandError(f"cannot write {out}: {exc}", EXIT_USAGE) from None


def _load_field(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc}", EXIT_USAGE) from None
    try:
        V = read_field(path)
    except (RasterFormatError, DegenerateRayError) as exc:
        raise CommandError(f"malformed raster {path}: {exc}", EXIT_RASTER) from None
    return V, hashlib.sha256(data).hexdigest()


def _load_gt(path):
    if path is None:
        return None
    return json.loads(Path(path).read_text())


def _calibrate(V, cfg: RunConfig):
    try:
        return calibrate(V, cfg.mode, cfg.ransac)
    except CalibrationFailedError as exc:
        raise CommandError(f"calibration failed: {exc}", EXIT_CALIB) from None


def _fmt_k(K: Intrinsics) -> str:
    return f"fx={K.fx:.6f} fy={K.fy:.6f} bx={K.bx:.6f} by={K.by:.6f}"


def _fmt_delta(T: CropResizeTransform) -> str:
    return f"df_x={T.df_x:.6f} df_y={T.df_y:.6f} dc_x={T.dc_x:.6f} dc_y={T.dc_y:.6f}"


def cmd_calibrate(args) -> int:
    cfg = _run_config(args)
    V, digest = _load_field(args.field)
    res = _calibrate(V, cfg)
    print(f"mode: {res.mode.value}")
    print(f"K: {_fmt_k(res.K)}")
    print(f"score: x={res.score_x} y={res.score_y} of {res.total_scored}")
    record = {
        "command": "calibrate",
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "field_sha256": digest,
        "width": V.width,
        "height": V.height,
        **{k: v for k, v in res.to_dict().items() if k != "config"},
    }
    gt = _load_gt(args.gt)
    if gt is not None:
        err = intrinsic_error(res.K, Intrinsics(**gt["K"]), V.width, V.height)
        record["error"] = err.to_dict()
        print(f"error vs ground truth: e_f={err.e_f:.3e} e_b={err.e_b:.3e}")
    _emit([record], args.out)
    return 0


def _gt_delta(gt):
    return None if gt is None else CropResizeTransform(**gt["edit"])


def cmd_detect(args) -> int:
    cfg = _run_config(args)
    V, digest = _load_field(args.field)
    res = _calibrate(V, cfg)
    dims = (V.width, V.height)
    if args.orig_k is not None:
        verdict = detect_known_original(res.K, args.orig_k, *dims, threshold=args.threshold)
    else:
        verdict = detect_simple_assumption(res.K, *dims, threshold=args.threshold)
    box = restore_known_original(dims, verdict.delta)
    gt_delta = _gt_delta(_load_gt(args.gt))
    iou = None if gt_delta is None else box_iou(box, restore_known_original(dims, gt_delta))
    print(f"verdict: {verdict.label}")
    print(f"case: {verdict.case.value}  deviation={verdict.deviation:.6f}  threshold={args.threshold}")
    print(f"delta: {_fmt_delta(verdict.delta)}")
    print("box: ({:.3f}, {:.3f}) - ({:.3f}, {:.3f})".format(*box.bounds))
    if iou is not None:
        print(f"iou vs ground truth: {iou:.6f}")
    _emit(
        [
            {
                "command": "detect",
                "config_hash": cfg.hash(),
                "seed": cfg.seed,
                "field_sha256": digest,
                "K": _k_dict(res.K),
                "verdict": verdict.label,
                "case": verdict.case.value,
                "deviation": verdict.deviation,
                "threshold": args.threshold,
                "delta": _delta_dict(verdict.delta),
                "box": list(box.bounds),
                "iou": iou,
            }
        ],
        args.out,
    )
    return 0


def cmd_restore(args) -> int:
    cfg = _run_config(args)
    V, digest = _load_field(args.field)
    res = _calibrate(V, cfg)
    dims = (V.width, V.height)
    record = {"command": "restore", "config_hash": cfg.hash(), "seed": cfg.seed, "field_sha256": digest, "K": _k_dict(res.K)}
    if args.orig_k is not None:
        delta = detect_known_original(res.K, args.orig_k, *dims).delta
        box = restore_known_original(dims, delta)
        record.update(case="known_original", delta=_delta_dict(delta), box=list(box.bounds))
        print("box in original image: ({:.3f}, {:.3f}) - ({:.3f}, {:.3f})".format(*box.bounds))
    else:
        delta, (w, h), K_rest = restore_without_original(res.K, *dims)
        box = restore_known_original(dims, delta)
        record.update(
            case="simple_assumption",
            delta=_delta_dict(delta),
            restored_dims=[w, h],
            restored_K=_k_dict(K_rest),
            box=list(box.bounds),
        )
        print(f"restored canvas: {w}x{h}  K: {_fmt_k(K_rest)}")
        print("box in restored canvas: ({:.3f}, {:.3f}) - ({:.3f}, {:.3f})".format(*box.bounds))
    print(f"delta: {_fmt_delta(delta)}")
    _emit([record], args.out)
    return 0


def cmd_synth(args) -> int:
    cfg = _run_config(args)
    if args.width < 2 or args.height < 2:
        raise CommandError(f"dimensions must be at least 2x2, got {args.width}x{args.height}", EXIT_USAGE)
    rng = np.random.default_rng(cfg.seed)
    dims = (args.width, args.height)
    K_orig = random_intrinsics(rng, dims, simple=args.simple)
    if args.edit == "random":
        T = make_edit(rng, *dims)
    elif args.edit == "centered":
        s = args.scale
        T = edit_from((s, s), ((s - 1) * args.width / 2, (s - 1) * args.height / 2))
    else:
        T = CropResizeTransform.identity()
    K = apply_transform(T, K_orig)
    noise = cfg.noise
    if args.outlier_fraction is not None or args.angular_sigma is not None:
        noise = replace(
            noise,
            outlier_fraction=noise.outlier_fraction if args.outlier_fraction is None else args.outlier_fraction,
            angular_sigma=noise.angular_sigma if args.angular_sigma is None else args.angular_sigma,
        )
    noise = replace(noise, seed=cfg.seed)
    V, _ = corrupt_field(incidence_from_intrinsics(K, *dims), noise)
    scene = make_planar_scene(K, *dims, rng=rng, n_planes=args.planes)

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_field(out / "field.incf", V)
        write_depth(out / "depth.incf", scene.depth)
        sidecar = {
            "config_hash": cfg.hash(),
            "seed": cfg.seed,
            "width": args.width,
            "height": args.height,
            "K": _k_dict(K),
            "K_orig": _k_dict(K_orig),
            "edit": _delta_dict(T),
            "noise": noise.to_dict(),
            "planes": [{"normal": list(p.normal), "offset": p.offset} for p in scene.planes],
        }
        (out / "gt.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise CommandError(f"cannot write to {out}: {exc}", EXIT_USAGE) from None
    print(f"wrote {out / 'field.incf'}, {out / 'depth.incf'}, {out / 'gt.json'}")
    print(f"K: {_fmt_k(K)}")
    return 0


def cmd_benchmark(args) -> int:
    cfg = _run_config(args)
    rows = bench.run_benchmark(cfg)
    print(bench.format_table(rows))
    _emit(rows, args.out)
    return 0


def cmd_posepair(args) -> int:
    cfg = _run_config(args)
    rng = np.random.default_rng([cfg.seed, 7])
    dims = (640, 480)
    K1, K2 = random_intrinsics(rng, dims), random_intrinsics(rng, dims)
    if args.intrinsics == "ransac":
        est = [calibrate(incidence_from_intrinsics(K, *dims), Mode.FOUR_DOF, cfg.ransac).K for K in (K1, K2)]
    else:
        e = 1 + args.focal_error
        est = [Intrinsics(K.fx * e, K.fy * e, K.bx, K.by) for K in (K1, K2)]
    err = bench.pose_trial(cfg.seed, K1, K2, est[0], est[1], dims, args.points, args.noise_px)
    print(f"rotation error: {err.rotation_error:.6f} deg")
    print(f"translation angle error: {err.translation_angle_error:.6f} deg")
    _emit(
        [
            {
                "command": "posepair",
                "config_hash": cfg.hash(),
                "seed": cfg.seed,
                "intrinsics": args.intrinsics,
                "focal_error": args.focal_error,
                "K1": _k_dict(K1),
                "K2": _k_dict(K2),
                "K1_est": _k_dict(est[0]),
                "K2_est": _k_dict(est[1]),
                "rotation_error": err.rotation_error,
                "translation_angle_error": err.translation_angle_error,
            }
        ],
        args.out,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    common.add_argument("--out", type=Path, default=None, help="machine-readable output path")
    common.add_argument("-v", "--verbose", action="store_true")

    with_mode = argparse.ArgumentParser(add_help=False)
    with_mode.add_argument("--mode", choices=[m.value for m in Mode], default=None)

    parser = argparse.ArgumentParser(prog="incidence-calib", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", parents=[common, with_mode], help="recover K from an incidence-field raster")
    p.add_argument("field")
    p.add_argument("--gt", type=Path, default=None, help="ground-truth sidecar for error reporting")
    p.set_defaults(func=cmd_calibrate)

    for name, func, text in (
        ("detect", cmd_detect, "detect crop/resize edits"),
        ("restore", cmd_restore, "restore crop/resize edits"),
    ):
        p = sub.add_parser(name, parents=[common, with_mode], help=text)
        p.add_argument("field")
        p.add_argument("--orig-K", dest="orig_k", type=_parse_k, default=None, metavar="FX,FY,BX,BY")
        p.add_argument("--threshold", type=float, default=0.02)
        p.add_argument("--gt", type=Path, default=None, help="ground-truth sidecar (edit used for IOU)")
        p.set_defaults(func=func)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic field, depth map and sidecar")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--simple", action="store_true", help="central principal point, equal focals")
    p.add_argument("--edit", choices=["none", "random", "centered"], default="none")
    p.add_argument("--scale", type=float, default=1.5, help="scale for --edit centered")
    p.add_argument("--outlier-fraction", type=float, default=None)
    p.add_argument("--angular-sigma", type=float, default=None)
    p.add_argument("--planes", type=int, default=3)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("benchmark", parents=[common], help="run the synthetic benchmark grid")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("posepair", parents=[common], help="two-view pose with estimated intrinsics")
    p.add_argument("--intrinsics", choices=["gt", "ransac"], default="gt")
    p.add_argument("--focal-error", type=float, default=0.0)
    p.add_argument("--noise-px", type=float, default=0.5)
    p.add_argument("--points", type=int, default=100)
    p.set_defaults(func=cmd_posepair)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "synth" and args.out is None:
        parser.error("synth requires --out DIR")
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())
