"""Independent oracle for the frozen reference values used by the test suite.

Uses exact rational arithmetic (``fractions``) and closed forms only; nothing
here imports the package. Run once to regenerate ``tests/data/oracles.json``:

    python3 scripts/oracles.py
"""

import json
import math
from fractions import Fraction as Fr
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


def kmat(fx, fy, bx, by):
    return [[Fr(fx), 0, Fr(bx)], [0, Fr(fy), Fr(by)], [0, 0, 1]]


def kvals(M):
    return [M[0][0], M[1][1], M[0][2], M[1][2]]


def ray(fx, fy, bx, by, x, y):
    return [(Fr(x) - bx) / Fr(fx), (Fr(y) - by) / Fr(fy), Fr(1)]


def as_float(v):
    return [float(a) for a in v]


def two_point(c1, c2, v1, v2):
    f = (Fr(c1) - Fr(c2)) / (Fr(v1) - Fr(v2))
    return f, (Fr(c1) - Fr(v1) * f + Fr(c2) - Fr(v2) * f) / 2


def normal_deviation_doubled_fx(n):
    # backprojecting with fx doubled maps P -> diag(1/2, 1, 1) P; normals map by the inverse transpose
    m = [2 * n[0], n[1], n[2]]
    dot = sum(a * b for a, b in zip(n, m))
    return math.degrees(math.acos(dot / math.sqrt(sum(a * a for a in n)) / math.sqrt(sum(a * a for a in m))))


def main():
    o = {}
    o["ray_at_origin"] = as_float(ray(500, 500, 320, 240, 0, 0))
    o["unit_to_z_one"] = as_float([Fr(6, 10) / Fr(8, 10), 0, 1])
    o["apply_scale2"] = as_float(kvals(matmul(kmat(2, 2, 0, 0), kmat(500, 500, 320, 240))))
    o["apply_crop100"] = as_float(kvals(matmul(kmat(1, 1, -100, 0), kmat(500, 500, 320, 240))))
    fx, bx = two_point(0, 100, Fr(-1, 2), Fr(1, 2))
    fy, by = two_point(0, 100, Fr(-1, 2), Fr(1, 2))
    o["two_point_K"] = as_float([fx, fy, bx, by])

    # manipulation
    o["deviation_focal_half_percent"] = float(Fr(5, 1000))
    o["deviation_crop50_640"] = float(Fr(50, 640))
    o["box_scale2_640x480"] = [0.0, 0.0, 320.0, 240.0]
    f_tilde = math.sqrt(1000 * 500)
    o["restore_f_tilde"] = f_tilde
    o["restore_dims"] = [round(640 * f_tilde / 1000), round(480 * f_tilde / 500)]
    o["iou_unit_offset"] = float(Fr(1, 7))
    o["edit_scale2_origin_100_50"] = [2.0, 2.0, -100.0, -50.0]

    # metrics
    o["e_f_ten_percent"] = 0.1
    o["fov_f_equals_h"] = math.degrees(2 * math.atan(0.5))
    o["fov_f_half_h"] = 90.0
    vals = [Fr(1), Fr(2), Fr(3), Fr(100)]
    o["median_1_2_3_100"] = float((vals[1] + vals[2]) / 2)
    o["mean_1_2_3_100"] = float(sum(vals) / 4)

    # noise: the angle of an isotropic 2D Gaussian tangent perturbation is Rayleigh distributed
    o["mean_noise_angle_sigma_0_2"] = 0.2 * math.sqrt(math.pi / 2)
    # z-normalized rays uniform in [-1, 1] per axis, probability of landing in a +-0.02 band
    o["uniform_band_fraction_0_02"] = 0.04 / 2.0
    # two-view noise: each distance is |N(0, s)| from the point's own noise plus the
    # transferred line error; the lower bound is the single-image term s * sqrt(2 / pi)
    o["epipolar_mean_lower_0_5px"] = 0.5 * math.sqrt(2 / math.pi)

    # simple-mode grid: f_min + i / N_f * (f_max - f_min) hits 500 at i = 400 for [100, 2000], N_f = 1900
    i = Fr(500 - 100) / Fr(2000 - 100) * 1900
    o["simple_grid_index_500"] = int(i) if i.denominator == 1 else None

    # normal deviation when fx is doubled, for the fixed test plane
    o["normal_plane"] = [0.3, -0.2, -1.0]
    o["normal_deviation_doubled_fx_deg"] = normal_deviation_doubled_fx(o["normal_plane"])

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(o, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
