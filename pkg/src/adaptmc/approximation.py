"""Two-pass adaptive low-rank approximation and its passive baseline.

Pass 1 estimates every column's squared norm from a few entries. Pass 2
spends samples on each column in proportion to that estimate and builds
a zero-filled rescaled sketch. The answer is the sketch's best rank-r
truncation.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .sampling import InvalidArgument, as_generator


class DegenerateInput(ValueError):
    """The input carries no energy to allocate or normalize by."""


@dataclass(frozen=True)
class NormEstimates:
    c_hat: np.ndarray
    f_hat: float
    m1: int


@dataclass(frozen=True)
class SampleAllocation:
    per_column: np.ndarray
    total: int
    # sum of the unrounded targets; compare with ``total`` for rounding drift
    requested: float


@dataclass
class ApproxResult:
    x_hat: np.ndarray
    sketch: np.ndarray
    allocation: SampleAllocation
    norm_estimates: NormEstimates
    unique_entries_observed: int
    raw_queries: int
    singular_values_of_sketch: np.ndarray


def _column_streams(rng, n):
    return as_generator(rng).spawn(n)


def estimate_column_norms(oracle, m1, rng, full_read=False):
    """``c_hat[t] = (d/m1) * ||x_t[omega_t]||^2`` with a fresh omega_t per column.

    ``full_read`` reads every column completely instead, giving exact norms.
    """
    d, n = oracle.shape
    if not 1 <= m1 <= d:
        raise InvalidArgument(f"need 1 <= m1 <= d={d}, got {m1}")
    c_hat = np.empty(n)
    if full_read:
        for t in range(n):
            x = oracle.query_column(t)
            c_hat[t] = x @ x
        m1 = d
    else:
        for t, g in enumerate(_column_streams(rng, n)):
            rows = g.integers(0, d, size=m1, dtype=np.int64)
            vals = oracle.query_rows(t, rows)
            c_hat[t] = d / m1 * (vals @ vals)
    return NormEstimates(c_hat, float(c_hat.sum()), int(m1))


def allocate_samples(est, m2, n, d):
    """``m_{2,t} = clamp(round(m2 * n * c_hat_t / f_hat), 1, d)``."""
    if m2 < 1:
        raise InvalidArgument("m2 must be >= 1")
    if est.f_hat <= 0:
        raise DegenerateInput("all column norm estimates are zero; nothing to allocate")
    raw = m2 * n * est.c_hat / est.f_hat
    per = np.clip(np.floor(raw + 0.5), 1, d).astype(np.int64)
    return SampleAllocation(per, int(per.sum()), float(raw.sum()))


def uniform_allocation(m, n, d):
    if not 1 <= m <= d:
        raise InvalidArgument(f"need 1 <= m <= d={d}, got {m}")
    per = np.full(n, int(m), dtype=np.int64)
    return SampleAllocation(per, int(per.sum()), float(per.sum()))


def build_sketch(oracle, alloc, rng):
    """Column t of the sketch is the zero-filled rescale of ``m_{2,t}`` fresh draws."""
    d, n = oracle.shape
    if alloc.per_column.shape != (n,):
        raise InvalidArgument("allocation length does not match n")
    S = np.zeros((d, n), order="F")
    for t, g in enumerate(_column_streams(rng, n)):
        mt = int(alloc.per_column[t])
        rows = g.integers(0, d, size=mt, dtype=np.int64)
        vals = oracle.query_rows(t, rows)
        S[:, t] = kernels.rescale_accumulate(rows, vals, d, d / mt)
    return S


def deterministic_svd(A):
    """Thin SVD, singular values nonincreasing, each left vector's first
    nonzero component made nonnegative."""
    U, s, Vt = np.linalg.svd(np.asarray(A, dtype=np.float64), full_matrices=False)
    for j in range(U.shape[1]):
        nz = np.flatnonzero(np.abs(U[:, j]) > 0)
        if nz.size and U[nz[0], j] < 0:
            U[:, j] *= -1.0
            Vt[j, :] *= -1.0
    return U, s, Vt


def truncate_to_rank(A, r, svd=None):
    A = np.asarray(A, dtype=np.float64)
    if not 0 <= r <= min(A.shape):
        raise InvalidArgument(f"rank {r} outside [0, {min(A.shape)}]")
    if r == 0:
        return np.zeros_like(A)
    U, s, Vt = deterministic_svd(A) if svd is None else svd
    return (U[:, :r] * s[:r]) @ Vt[:r, :]


def _finish(oracle, S, r, alloc, est):
    svd = deterministic_svd(S)
    X_hat = truncate_to_rank(S, r, svd=svd)
    led = oracle.snapshot_ledger()
    return ApproxResult(
        x_hat=X_hat,
        sketch=S,
        allocation=alloc,
        norm_estimates=est,
        unique_entries_observed=led.unique_entries,
        raw_queries=led.raw_queries,
        singular_values_of_sketch=svd[1],
    )


def adaptive_approximate(oracle, m1, m2, r, rng):
    """Norm-estimation pass, proportional sketch pass, rank-r truncation.

    Pass 1 and pass 2 use independent child streams of ``rng``.
    """
    d, n = oracle.shape
    if not 1 <= r <= min(d, n):
        raise InvalidArgument(f"r must lie in [1, {min(d, n)}]")
    g1, g2 = as_generator(rng).spawn(2)
    est = estimate_column_norms(oracle, m1, g1)
    alloc = allocate_samples(est, m2, n, d)
    S = build_sketch(oracle, alloc, g2)
    return _finish(oracle, S, r, alloc, est)


def passive_approximate(oracle, m_per_column, r, rng):
    """Uniform ``m_per_column`` draws per column, then rank-r truncation."""
    d, n = oracle.shape
    if not 1 <= r <= min(d, n):
        raise InvalidArgument(f"r must lie in [1, {min(d, n)}]")
    alloc = uniform_allocation(m_per_column, n, d)
    S = build_sketch(oracle, alloc, as_generator(rng).spawn(1)[0])
    if not np.any(S):
        raise DegenerateInput("every sampled entry is zero")
    est = NormEstimates(np.zeros(n), 0.0, 0)
    return _finish(oracle, S, r, alloc, est)


def passive_entry_sample(oracle, budget, r, rng):
    """Observe ``budget`` distinct entries chosen uniformly over the whole
    matrix, rescale the zero fill by ``dn/budget`` and truncate to rank r."""
    d, n = oracle.shape
    if not 1 <= budget <= d * n:
        raise InvalidArgument("budget must lie in [1, d*n]")
    rng = as_generator(rng)
    flat = np.sort(rng.choice(d * n, size=int(budget), replace=False))
    rows, cols = flat % d, flat // d
    S = np.zeros((d, n), order="F")
    for t in np.unique(cols):
        sel = cols == t
        S[rows[sel], t] = oracle.query_rows(int(t), rows[sel])
    S *= d * n / budget
    return truncate_to_rank(S, r)
