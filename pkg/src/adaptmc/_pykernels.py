"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np


def rescale_accumulate(idx, vals, d, scale):
    out = np.bincount(idx, weights=vals, minlength=d).astype(np.float64)
    if scale != 1.0:
        out *= scale
    return out


def project_residual(Q, x):
    r = np.array(x, dtype=np.float64, copy=True)
    coef = np.zeros(Q.shape[1])
    for _ in range(2):
        s = Q.T @ r
        coef += s
        r -= Q @ s
    return coef, float(r @ r)


def orthogonalize(U, x):
    q = np.array(x, dtype=np.float64, copy=True)
    for _ in range(2):
        for j in range(U.shape[1]):
            q -= (U[:, j] @ q) * U[:, j]
    return q, float(np.sqrt(q @ q))


def mark_seen(seen, rows):
    fresh = np.unique(rows[seen[rows] == 0])
    seen[fresh] = 1
    return int(fresh.size)
