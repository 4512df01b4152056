"""Subsampled projection residuals, column reconstruction and the
concentration-bound factors that sandwich the residual.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .sampling import InvalidArgument, as_generator, draw_indices

RANK_TOL = 1e-10
DEFAULT_TAU_REL = 1e-8


class SingularSystem(ArithmeticError):
    """The subsampled basis is numerically rank deficient."""


@dataclass(frozen=True)
class OrthoBasis:
    """A d x k matrix with orthonormal columns; k may be zero."""

    columns: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.columns, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] > c.shape[0]:
            raise InvalidArgument(f"bad basis shape {c.shape}")
        object.__setattr__(self, "columns", c)

    @classmethod
    def empty(cls, d):
        return cls(np.zeros((d, 0)))

    @classmethod
    def from_matrix(cls, A):
        """Orthonormal basis for the column span of A (rank-revealing)."""
        A = np.asarray(A, dtype=np.float64)
        if A.shape[1] == 0:
            return cls.empty(A.shape[0])
        u, s, _ = np.linalg.svd(A, full_matrices=False)
        keep = s > RANK_TOL * max(s[0], np.finfo(float).tiny) if s.size else s > 0
        return cls(u[:, keep])

    @property
    def d(self):
        return self.columns.shape[0]

    @property
    def k(self):
        return self.columns.shape[1]

    def orthonormality_error(self):
        if self.k == 0:
            return 0.0
        G = self.columns.T @ self.columns
        return float(np.abs(G - np.eye(self.k)).max())

    def extend(self, x, rel_tol=1e-12):
        """Gram-Schmidt ``x`` into the basis.

        Returns ``(basis, added)``; ``added`` is False when x has no
        component outside the span at relative level ``rel_tol``.
        """
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise InvalidArgument("vector length does not match basis")
        q, nrm = kernels.orthogonalize(self.columns, x)
        xn = float(np.linalg.norm(x))
        if xn == 0.0 or nrm <= rel_tol * xn:
            return self, False
        return OrthoBasis(np.column_stack([self.columns, q / nrm])), True


class ResidualReport(NamedTuple):
    energy: float
    sigma_min: float
    sigma_max: float


class SubsampledProjector:
    """Cached factorization of the row-subsampled basis ``U[omega]``.

    Built once per (basis, omega) pair; reused for every column probed
    with that pair.
    """

    def __init__(self, U, omega):
        Ucols = U.columns if isinstance(U, OrthoBasis) else np.asarray(U, dtype=np.float64)
        if Ucols.shape[0] != omega.d:
            raise InvalidArgument("basis rows do not match omega.d")
        self.U = Ucols
        self.omega = omega
        self._init_from_rows(Ucols[omega.entries, :])

    @classmethod
    def from_rows(cls, U_omega):
        self = cls.__new__(cls)
        self.U = None
        self.omega = None
        self._init_from_rows(np.asarray(U_omega, dtype=np.float64))
        return self

    def _init_from_rows(self, U_omega):
        if not np.all(np.isfinite(U_omega)):
            raise InvalidArgument("non-finite subsampled basis")
        m, k = U_omega.shape
        self.k = k
        if k == 0:
            self.sigma_min = self.sigma_max = 0.0
            self.full_rank = True
            self.Q = np.zeros((m, 0))
            self._V = np.zeros((0, 0))
            self._s = np.zeros(0)
            return
        Q, s, Vt = np.linalg.svd(U_omega, full_matrices=False)
        self.sigma_max = float(s[0])
        self.sigma_min = float(s[-1]) if m >= k else 0.0
        self.full_rank = m >= k and self.sigma_min >= RANK_TOL * self.sigma_max
        keep = s > RANK_TOL * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
        self.Q = np.ascontiguousarray(Q[:, keep])
        self._V = Vt[keep, :].T
        self._s = s[keep]

    def residual(self, x_omega):
        x_omega = np.ascontiguousarray(x_omega, dtype=np.float64)
        if x_omega.shape != (self.Q.shape[0],):
            raise InvalidArgument("probe length does not match subsampled basis")
        if not np.all(np.isfinite(x_omega)):
            raise InvalidArgument("non-finite probe values")
        coef, energy = kernels.project_residual(self.Q, x_omega)
        return ResidualReport(energy, self.sigma_min, self.sigma_max), coef

    def coefficients(self, x_omega, projected=None):
        """Least-squares coefficients c minimizing ||U_omega c - x_omega||."""
        if not self.full_rank:
            raise SingularSystem(
                f"sigma_min/sigma_max = {self.sigma_min / max(self.sigma_max, 1e-300):.3e}"
            )
        if self.k == 0:
            return np.zeros(0)
        proj = self.Q.T @ x_omega if projected is None else projected
        return self._V @ (proj / self._s)


def residual_energy(x_omega, U_omega):
    """``||x_omega - P_{span(U_omega)} x_omega||^2`` with a condition report."""
    x_omega = np.asarray(x_omega, dtype=np.float64)
    U_omega = np.asarray(U_omega, dtype=np.float64)
    if U_omega.ndim != 2 or U_omega.shape[0] != x_omega.shape[0]:
        raise InvalidArgument("row counts of probe and basis differ")
    if not (np.all(np.isfinite(x_omega)) and np.all(np.isfinite(U_omega))):
        raise InvalidArgument("non-finite input")
    report, _ = SubsampledProjector.from_rows(U_omega).residual(x_omega)
    return report


def reconstruct_column(U, omega, x_omega):
    """``U c`` where c solves the least-squares fit on the sampled rows."""
    proj = SubsampledProjector(U, omega)
    c = proj.coefficients(np.asarray(x_omega, dtype=np.float64))
    return proj.U @ c


def exceeds_threshold(energy, x_omega, tau_rel=DEFAULT_TAU_REL):
    """The floating-point stand-in for "residual > 0"."""
    return energy > tau_rel * float(np.dot(x_omega, x_omega))


@dataclass(frozen=True)
class BoundParams:
    alpha: float
    beta: float
    gamma: float
    lower_factor: float
    upper_factor: float
    valid: bool
    m_required: float


def projection_bound_factors(m, d, r, mu_U, mu_v, delta):
    """Factors ``lower, upper`` such that, w.p. >= 1 - 4 delta,

        lower * ||v||^2 <= ||y_omega - P y_omega||^2 <= upper * ||v||^2

    for y = x + v with x in an r-dim subspace U and v orthogonal to it.
    ``lower_factor`` is NaN when the sample-size precondition fails.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidArgument(f"delta must lie in (0, 1), got {delta}")
    if m <= 0 or d <= 0 or r <= 0 or mu_U <= 0 or mu_v <= 0:
        raise InvalidArgument("m, d, r, mu_U, mu_v must be positive")
    L1 = math.log(1.0 / delta)
    Ld = math.log(2.0 * d / delta)
    alpha = math.sqrt(2.0 * mu_v / m * L1) + 2.0 * mu_v / (3.0 * m) * L1
    beta = (1.0 + 2.0 * L1) ** 2
    gamma = math.sqrt(8.0 * r * mu_U / (3.0 * m) * Ld)
    m_required = max(8.0 / 3.0 * r * mu_U * Ld, 4.0 * mu_v * L1)
    valid = m >= m_required and gamma < 1.0
    upper = (1.0 + alpha) * m / d
    lower = (m * (1.0 - alpha) - r * mu_U * beta / (1.0 - gamma)) / d if valid else math.nan
    return BoundParams(alpha, beta, gamma, lower, upper, valid, m_required)


def block_sizes(d, r, mu0):
    """Sizes of r disjoint blocks, each of size floor(d/(r mu0)).

    The leftover ``floor(d/mu0) - r*floor(l)`` coordinates go to the last
    block; everything past the blocks stays zero.
    """
    size = d / (r * mu0)
    base = int(math.floor(size))
    if base < 1:
        raise InvalidArgument(f"block size d/(r mu0) = {size:.3g} < 1")
    sizes = [base] * r
    sizes[-1] += max(0, int(math.floor(d / mu0)) - r * base)
    return sizes


def _trial_vectors(d, sizes, rng):
    """Block basis U, in-span x and orthogonal v with known coherences."""
    r = len(sizes)
    perm = rng.permutation(d)
    U = np.zeros((d, r))
    v = np.zeros(d)
    start = 0
    for j, s in enumerate(sizes):
        rows = perm[start:start + s]
        U[rows, j] = 1.0 / math.sqrt(s)
        half = s // 2
        # balanced signs inside a block keep v orthogonal to that block
        pick = rng.permutation(s)[: 2 * half]
        signs = np.concatenate([np.ones(half), -np.ones(half)])
        v[rows[pick]] = rng.permutation(signs)
        start += s
    rest = perm[start:]
    v[rest] = rng.choice([-1.0, 1.0], size=rest.size)
    support = np.count_nonzero(v)
    v /= math.sqrt(support)
    x = U @ rng.standard_normal(r)
    return U, x, v, d / support


def _v_coherence(d, sizes):
    covered = sum(sizes)
    support = sum(2 * (s // 2) for s in sizes) + (d - covered)
    return d / support


def projection_check_setup(d, r, mu0, m, delta):
    """Block layout and bound factors for a coverage check; raises if
    ``m`` misses the sample-size precondition."""
    sizes = block_sizes(d, r, mu0)
    mu_U = (d / r) / min(sizes)
    mu_v = _v_coherence(d, sizes)
    params = projection_bound_factors(m, d, r, mu_U, mu_v, delta)
    if not params.valid:
        raise InvalidArgument(
            f"m={m} below the required {params.m_required:.1f} (or gamma >= 1)"
        )
    return sizes, params


def projection_trial(d, sizes, params, m, rng):
    """One draw; returns (sandwich held, residual / ||v||^2)."""
    U, x, v, _ = _trial_vectors(d, sizes, rng)
    omega = draw_indices(d, m, rng)
    y = x + v
    energy = residual_energy(y[omega.entries], U[omega.entries]).energy
    vv = float(v @ v)
    slack = 1e-12 * vv
    held = params.lower_factor * vv - slack <= energy <= params.upper_factor * vv + slack
    return bool(held), energy / vv


def validate_projection_bounds(d, r, mu0, m, delta, trials, rng):
    """Fraction of random trials in which the residual sandwich holds.

    Each trial draws a row-permuted block subspace (coherence ``mu0``), a
    vector inside it plus a sign-balanced orthogonal component, and a
    fresh index list of size ``m``.
    """
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    sizes, params = projection_check_setup(d, r, mu0, m, delta)
    rng = as_generator(rng)
    held = sum(projection_trial(d, sizes, params, m, rng)[0] for _ in range(trials))
    return held / trials
