"""Synthetic low-rank instances with controlled coherence, and the
hidden-direction family that defeats passive sampling.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .sampling import InvalidArgument, as_generator
from .subspace import OrthoBasis, block_sizes

ROW_MODES = ("incoherent-gaussian", "coherent-basis", "sign")
NORM_MODES = ("constant", "uniform-0.9-1.1", "log-normal")


class AdjustedSpecWarning(UserWarning):
    """Requested coherence is not exactly realizable; see realized_mu0."""


@dataclass(frozen=True)
class InstanceSpec:
    d: int
    n: int
    r: int
    mu0_target: float = 1.0
    row_mode: str = "incoherent-gaussian"
    column_norm_mode: str = "constant"
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.n < 1 or self.r < 1:
            raise InvalidArgument("d, n, r must be >= 1")
        if self.d > self.n:
            raise InvalidArgument(f"need d <= n, got d={self.d}, n={self.n}")
        if self.r > self.d:
            raise InvalidArgument("rank exceeds d")
        if not 1.0 <= self.mu0_target <= self.d / self.r:
            raise InvalidArgument(f"mu0 must lie in [1, d/r] = [1, {self.d / self.r}]")
        if self.row_mode not in ROW_MODES:
            raise InvalidArgument(f"row_mode must be one of {ROW_MODES}")
        if self.column_norm_mode not in NORM_MODES:
            raise InvalidArgument(f"column_norm_mode must be one of {NORM_MODES}")
        if self.noise_sigma < 0:
            raise InvalidArgument("noise_sigma must be >= 0")


@dataclass
class GeneratedInstance:
    matrix: np.ndarray
    low_rank_part: np.ndarray
    true_rank: int
    realized_mu0: float
    realized_column_mu: float
    meta: dict = field(default_factory=dict)


def subspace_coherence(U):
    """``(d/k) * max_i ||P_U e_i||^2`` for an orthonormal d x k basis."""
    cols = U.columns if isinstance(U, OrthoBasis) else np.asarray(U, dtype=np.float64)
    d, k = cols.shape
    if k == 0:
        raise InvalidArgument("coherence of the zero subspace is undefined")
    return float(d / k * np.max(np.einsum("ij,ij->i", cols, cols)))


def column_coherence(X, warn=True):
    """Max over nonzero columns of ``d ||x_t||_inf^2 / ||x_t||_2^2``.

    Zero columns are skipped, with a RuntimeWarning unless ``warn`` is off.
    """
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[0]
    sq = np.einsum("ij,ij->j", X, X)
    nz = sq > 0
    if not nz.any():
        raise InvalidArgument("all columns are zero")
    if warn and not nz.all():
        warnings.warn(f"skipping {int((~nz).sum())} zero columns", RuntimeWarning, stacklevel=2)
    peak = np.max(np.abs(X[:, nz]), axis=0) ** 2
    return float(np.max(d * peak / sq[nz]))


def block_basis(d, sizes):
    U = np.zeros((d, len(sizes)))
    start = 0
    for j, s in enumerate(sizes):
        U[start:start + s, j] = 1.0 / math.sqrt(s)
        start += s
    return U


def _column_norms(mode, n, rng):
    if mode == "constant":
        return np.ones(n)
    if mode == "uniform-0.9-1.1":
        return rng.uniform(0.9, 1.1, size=n)
    return rng.lognormal(0.0, 1.0, size=n)


def make_low_rank(spec, rng=None):
    """Rank-r matrix with a block-indicator column space of coherence ~mu0.

    Row factors: Gaussian (incoherent rows), Rademacher signs (columns of
    constant magnitude on their support) or r random standard basis
    vectors (maximally coherent rows). Columns are then rescaled to norms
    drawn per ``column_norm_mode``. With ``noise_sigma > 0`` a Gaussian
    matrix with entry variance ``sigma^2 / (d n)`` is added.
    """
    rng = as_generator(spec.seed if rng is None else rng)
    d, n, r = spec.d, spec.n, spec.r
    sizes = block_sizes(d, r, spec.mu0_target)
    exact = abs(d / (r * spec.mu0_target) - sizes[0]) < 1e-12 and len(set(sizes)) == 1
    U = block_basis(d, sizes)

    if spec.row_mode == "incoherent-gaussian":
        W = rng.standard_normal((r, n))
    elif spec.row_mode == "sign":
        W = rng.choice([-1.0, 1.0], size=(r, n))
    else:
        W = np.zeros((r, n))
        cols = rng.choice(n, size=r, replace=False)
        W[np.arange(r), cols] = 1.0
    A = U @ W
    norms = np.sqrt(np.einsum("ij,ij->j", A, A))
    target = _column_norms(spec.column_norm_mode, n, rng)
    scale = np.divide(target, norms, out=np.zeros(n), where=norms > 0)
    A *= scale
    A = np.asfortranarray(A)

    X = A
    if spec.noise_sigma > 0:
        R = rng.standard_normal((d, n)) * (spec.noise_sigma / math.sqrt(d * n))
        X = np.asfortranarray(A + R)

    # span(U W) = U span(W): factor the small r x n matrix, not the d x n one
    Wu, ws, _ = np.linalg.svd(W, full_matrices=False)
    keep = ws > 1e-10 * ws[0] if ws[0] > 0 else ws > 0
    col_space = OrthoBasis.from_matrix(U @ Wu[:, keep])
    true_rank = col_space.k
    mu0 = subspace_coherence(col_space)
    if not exact:
        warnings.warn(
            f"blocks of sizes {sorted(set(sizes))}: realized mu0 = {mu0:.4g} "
            f"(target {spec.mu0_target})",
            AdjustedSpecWarning,
            stacklevel=2,
        )
    return GeneratedInstance(
        matrix=X,
        low_rank_part=A,
        true_rank=true_rank,
        realized_mu0=mu0,
        realized_column_mu=column_coherence(X, warn=False) if np.any(X) else float("nan"),
        meta={"block_sizes": sizes, "spec": spec},
    )


def _hard_layout(d, n, r, mu0):
    l_real = d / (r * mu0)
    l = int(round(l_real))
    if abs(l_real - l) > 1e-9 or l < 1:
        raise InvalidArgument(f"d/(r mu0) = {l_real:.4g} must be a positive integer")
    if n <= r - 1 or r < 1:
        raise InvalidArgument("need 1 <= r and n > r - 1")
    free = d - (r - 1) * l
    if free < l:
        raise InvalidArgument("not enough free coordinates to hide the last direction")
    return l, free


def hard_family_member(d, n, r, mu0, support, signs, hidden_col):
    """Deterministic member of the hidden-direction family."""
    l, free = _hard_layout(d, n, r, mu0)
    X = np.zeros((d, n))
    for j in range(r - 1):
        X[j * l:(j + 1) * l, j] = 1.0 / math.sqrt(l)
    offset = (r - 1) * l
    X[offset + np.asarray(support), hidden_col] = np.asarray(signs) / math.sqrt(l)
    return np.asfortranarray(X)


def make_lower_bound_instance(d, n, r, mu0, rng=None):
    """Rank-r matrix whose last direction hides in one unknown column.

    The first r-1 columns hold constant blocks of size l = d/(r mu0); the
    r-th direction sits on a random l-subset of the remaining coordinates
    with random signs, in a random column among those not yet used.
    """
    l, free = _hard_layout(d, n, r, mu0)
    rng = as_generator(rng)
    support = np.sort(rng.choice(free, size=l, replace=False))
    signs = rng.choice([-1.0, 1.0], size=l)
    hidden_col = int(rng.integers(r - 1, n))
    X = hard_family_member(d, n, r, mu0, support, signs, hidden_col)
    col_space = OrthoBasis.from_matrix(X[:, list(range(r - 1)) + [hidden_col]])
    return GeneratedInstance(
        matrix=X,
        low_rank_part=X.copy(order="F"),
        true_rank=col_space.k,
        realized_mu0=subspace_coherence(col_space),
        realized_column_mu=column_coherence(X, warn=False),
        meta={
            "block": l,
            "hidden_column": hidden_col,
            "hidden_support": (r - 1) * l + support,
            "signs": signs,
        },
    )


def enumerate_hard_family(d, n, r, mu0):
    """Every member of the family (tiny sizes only)."""
    l, free = _hard_layout(d, n, r, mu0)
    for col in range(r - 1, n):
        for support in itertools.combinations(range(free), l):
            for signs in itertools.product((-1.0, 1.0), repeat=l):
                yield hard_family_member(d, n, r, mu0, support, signs, col)
