"""Streaming adaptive exact completion of a low-rank matrix.

One pass over the columns. A basis U for the column space grows only
when a column's sampled residual against U is nonzero; every other column
is rebuilt from its m sampled entries by least squares on U.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .sampling import InvalidArgument, as_generator, draw_indices
from .subspace import (
    DEFAULT_TAU_REL,
    OrthoBasis,
    SingularSystem,
    SubsampledProjector,
    exceeds_threshold,
)


@dataclass
class CompletionResult:
    estimate: np.ndarray
    basis: OrthoBasis
    fully_observed_columns: list
    unique_entries_observed: int
    raw_queries: int
    per_column_residuals: np.ndarray
    resample_events: int
    fallback_columns: list = field(default_factory=list)
    # fully read columns that added no new direction to the basis
    redundant_observations: int = 0


def adaptive_complete(oracle, m, tau_rel=DEFAULT_TAU_REL, rng=None):
    """Complete the matrix behind ``oracle`` with ``m`` probes per column.

    A column whose subsampled basis turns out rank deficient is read in
    full (fallback). Such a column joins the basis only if it carries a
    new direction; either way the index list is redrawn.
    """
    d, n = oracle.shape
    if not 1 <= m <= d:
        raise InvalidArgument(f"need 1 <= m <= d={d}, got m={m}")
    rng = as_generator(rng)
    basis = OrthoBasis.empty(d)
    omega = draw_indices(d, m, rng)
    proj = SubsampledProjector(basis, omega)
    est = np.zeros((d, n), order="F")
    residuals = np.zeros(n)
    observed = []
    fallbacks = []
    redundant = 0
    resamples = 0

    for t in range(n):
        x_om = oracle.query_rows(t, omega.entries)
        report, coef = proj.residual(x_om)
        residuals[t] = report.energy
        if exceeds_threshold(report.energy, x_om, tau_rel):
            x = oracle.query_column(t)
            est[:, t] = x
            basis, added = basis.extend(x)
            observed.append(t)
            redundant += not added
        else:
            try:
                c = proj.coefficients(x_om, coef)
                est[:, t] = basis.columns @ c
                continue
            except SingularSystem:
                x = oracle.query_column(t)
                est[:, t] = x
                basis, added = basis.extend(x)
                observed.append(t)
                fallbacks.append(t)
                redundant += not added
        resamples += 1
        omega = draw_indices(d, m, rng)
        proj = SubsampledProjector(basis, omega)

    ledger = oracle.snapshot_ledger()
    return CompletionResult(
        estimate=est,
        basis=basis,
        fully_observed_columns=observed,
        unique_entries_observed=ledger.unique_entries,
        raw_queries=ledger.raw_queries,
        per_column_residuals=residuals,
        resample_events=resamples,
        fallback_columns=fallbacks,
        redundant_observations=redundant,
    )


def completion_risk_bound(m, r, mu0):
    """Upper bound ``10 r^2 exp(-sqrt(m / (32 r mu0)))`` on P(estimate != X)."""
    if m <= 0 or r <= 0 or mu0 <= 0:
        raise InvalidArgument("m, r, mu0 must be positive")
    return 10.0 * r * r * math.exp(-math.sqrt(m / (32.0 * r * mu0)))


def samples_for_risk(delta, r, mu0):
    """Per-column probe count ``32 r mu0 log^2(10 r^2 / delta)`` reaching risk delta."""
    if delta <= 0 or r <= 0 or mu0 <= 0:
        raise InvalidArgument("delta, r, mu0 must be positive")
    return 32.0 * r * mu0 * math.log(10.0 * r * r / delta) ** 2
