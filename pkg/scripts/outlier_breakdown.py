"""Calibration error as the outlier fraction approaches the breakdown point.

    python3 scripts/outlier_breakdown.py --seeds 20 --sigma 0.2
"""

import argparse

import numpy as np

from incidence_calib.benchmark import calibration_trial
from incidence_calib.errors import CalibrationFailedError
from incidence_calib.ransac import RansacConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--fractions", type=float, nargs="+", default=[0.0, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95])
    p.add_argument("--simple", action="store_true", help="central cameras, simple-mode calibration")
    args = p.parse_args()

    cfg = RansacConfig()
    print(f"{'outliers':>8} {'median e_f':>11} {'median e_b':>11} {'e_f < 0.05':>10} {'failed':>6}")
    for fraction in args.fractions:
        ef, eb, failed = [], [], 0
        for seed in range(args.seeds):
            try:
                t = calibration_trial(
                    seed, (640, 480), args.sigma, fraction, cfg, simple_data=args.simple, simple_mode=args.simple
                )
            except CalibrationFailedError:
                failed += 1
                continue
            ef.append(t.error.e_f)
            eb.append(t.error.e_b)
        print(
            f"{fraction:8.2f} {np.median(ef):11.3e} {np.median(eb):11.3e} "
            f"{np.mean(np.asarray(ef) < 0.05):10.2f} {failed:6d}"
        )


if __name__ == "__main__":
    main()
