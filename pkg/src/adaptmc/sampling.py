"""Index sampling, row subsampling and the zero-fill rescale operator.

Indices are 0-based. Every stochastic function takes an explicit
``numpy.random.Generator``; nothing touches global random state.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


class InvalidArgument(ValueError):
    """Raised for out-of-contract arguments (bad dimensions, ranges, shapes)."""


@dataclass(frozen=True)
class IndexList:
    """An ordered multiset of row indices drawn from ``range(d)``."""

    entries: np.ndarray
    d: int

    def __post_init__(self):
        e = np.ascontiguousarray(self.entries, dtype=np.int64)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        if self.d < 1:
            raise InvalidArgument("d must be >= 1")
        if e.ndim != 1:
            raise InvalidArgument("entries must be one-dimensional")
        if e.size and (e.min() < 0 or e.max() >= self.d):
            raise InvalidArgument("index out of range [0, d)")

    def __len__(self):
        return int(self.entries.size)

    @property
    def m(self):
        return len(self)

    def unique(self):
        return np.unique(self.entries)


@dataclass(frozen=True)
class RescaledSketchVector:
    values: np.ndarray
    source: IndexList


def as_generator(rng):
    """Accept a Generator, a SeedSequence or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def draw_indices(d, m, rng):
    """Draw ``m`` indices i.i.d. uniform on ``[0, d)`` (with replacement)."""
    if d < 1 or m < 1:
        raise InvalidArgument(f"need d >= 1 and m >= 1, got d={d}, m={m}")
    rng = as_generator(rng)
    return IndexList(rng.integers(0, d, size=m, dtype=np.int64), int(d))


def subsample_vector(x, omega):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != omega.d:
        raise InvalidArgument(f"vector length {x.shape} does not match d={omega.d}")
    return x[omega.entries]


def subsample_basis(U, omega):
    """Rows ``omega`` of a d x k basis matrix (k may be 0)."""
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape[0] != omega.d:
        raise InvalidArgument(f"basis rows {U.shape} do not match d={omega.d}")
    return U[omega.entries, :]


def zero_fill_rescale(x_values, omega, d):
    """Unbiased full-length estimate ``(d/m) * sum_s x(i_s) e_{i_s}``.

    ``x_values`` is either a mapping ``index -> value`` covering every
    sampled index, or an array aligned with ``omega.entries``. Repeated
    indices accumulate with multiplicity.
    """
    if omega.d != d:
        raise InvalidArgument(f"omega.d={omega.d} does not match d={d}")
    if isinstance(x_values, dict):
        try:
            vals = np.array([x_values[int(i)] for i in omega.entries], dtype=np.float64)
        except KeyError as exc:
            raise InvalidArgument(f"no value supplied for sampled index {exc}") from None
    else:
        vals = np.ascontiguousarray(x_values, dtype=np.float64)
        if vals.shape != (omega.m,):
            raise InvalidArgument("aligned values must have one entry per sample")
    out = kernels.rescale_accumulate(omega.entries, vals, int(d), d / omega.m)
    return RescaledSketchVector(out, omega)
