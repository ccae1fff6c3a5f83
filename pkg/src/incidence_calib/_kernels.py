"""Compiled inner loops for candidate scoring."""

import numba
import numpy as np


@numba.njit(cache=True)
def count_inliers(coords, rays, focals, centers, threshold):
    """Count ``|(coords - b) / f - rays| < threshold`` for every candidate ``(f, b)``.

    Candidates with a nonpositive or non-finite focal get a count of -1.
    """
    n_cand = focals.shape[0]
    out = np.empty(n_cand, dtype=np.int64)
    for c in range(n_cand):
        f = focals[c]
        b = centers[c]
        if not (f > 0.0 and np.isfinite(f) and np.isfinite(b)):
            out[c] = -1
            continue
        n = 0
        for i in range(coords.shape[0]):
            if abs((coords[i] - b) / f - rays[i]) < threshold:
                n += 1
        out[c] = n
    return out
