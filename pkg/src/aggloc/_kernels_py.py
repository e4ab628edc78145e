"""Pure-numpy greedy assignment kernels (fallback for the compiled module).

Both kernels must stay bit-for-bit equivalent to `_kernels_cy`; the test
suite checks them against each other and against brute-force oracles.
`order` lists user indexes by decreasing priority (ties already resolved).
"""

from __future__ import annotations

import numpy as np


def top_k_fill(
    priors: np.ndarray, counts: np.ndarray, order: np.ndarray, out: np.ndarray
) -> None:
    """For each (roi, epoch) cell mark the `counts` users with highest prior.

    Ties on the prior value go to the user earlier in `order`.  Cells with
    zero count are left empty; counts >= the population mark everyone.
    """
    n_users = priors.shape[0]
    ranks = np.empty(n_users, dtype=np.int64)
    ranks[order] = np.arange(n_users, dtype=np.int64)
    for s in range(priors.shape[1]):
        for t in range(priors.shape[2]):
            want = int(counts[s, t])
            if want <= 0:
                continue
            if want >= n_users:
                out[:, s, t] = 1
                continue
            column = priors[:, s, t]
            top = np.lexsort((ranks, -column))[:want]
            out[top, s, t] = 1


def capacity_fill(
    priors: np.ndarray, counts: np.ndarray, order: np.ndarray, out: np.ndarray
) -> int:
    """Assign users in `order` to every positive-prior ROI with spare capacity.

    Per epoch, stops as soon as the assignments cover the whole released
    column mass.  Returns the total mass left unconsumed after all users.
    """
    n_rois, n_epochs = counts.shape
    unconsumed = 0
    for t in range(n_epochs):
        column = counts[:, t]
        column_total = int(column.sum())
        if column_total == 0:
            continue
        assigned = np.zeros(n_rois, dtype=np.int64)
        total = 0
        for u in order:
            take = (priors[u, :, t] > 0.0) & (assigned < column)
            if take.any():
                out[u, take, t] = 1
                assigned[take] += 1
                total += int(take.sum())
            if total == column_total:
                break
        unconsumed += column_total - total
    return unconsumed
