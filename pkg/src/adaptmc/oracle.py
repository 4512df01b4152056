"""Query-counting access to a hidden matrix.

Algorithms only ever see entries through :class:`EntryOracle`. The
harness owns the truth and computes errors; the oracle owns the ledger.
"""

import threading
from dataclasses import dataclass

import numpy as np

from . import kernels
from .sampling import InvalidArgument


class BudgetExceeded(RuntimeError):
    """The oracle's unique-entry cap would be exceeded by a query."""


@dataclass(frozen=True)
class Ledger:
    raw_queries: int
    unique_entries: int
    per_column_unique: tuple

    def per_column_quantiles(self, qs=(0.0, 0.25, 0.5, 0.75, 1.0)):
        if not self.per_column_unique:
            return tuple(0.0 for _ in qs)
        return tuple(float(v) for v in np.quantile(self.per_column_unique, qs))


class EntryOracle:
    """Wraps a d x n matrix and counts raw and unique entry reads.

    ``budget_cap`` limits unique entries. ``log_accesses`` keeps an
    ordered (row, col) log; past ``log_limit`` entries the log turns into
    a uniform reservoir sample of that size.
    """

    def __init__(self, matrix, budget_cap=None, log_accesses=False,
                 log_limit=1_000_000, seed=0):
        hidden = np.asfortranarray(matrix, dtype=np.float64)
        if hidden.ndim != 2:
            raise InvalidArgument("oracle needs a 2-D matrix")
        if not np.all(np.isfinite(hidden)):
            raise InvalidArgument("matrix has non-finite entries")
        self._hidden = hidden
        self.d, self.n = hidden.shape
        self.budget_cap = budget_cap
        self._seen = np.zeros((self.n, self.d), dtype=np.uint8)
        self._per_col = np.zeros(self.n, dtype=np.int64)
        self.raw_queries = 0
        self.unique_entries = 0
        self._lock = threading.Lock()
        self._log_on = log_accesses
        self._log_limit = log_limit
        self._log = []
        self._log_seen = 0
        self._log_rng = np.random.default_rng(seed)
        self.column_order = []

    @property
    def shape(self):
        return (self.d, self.n)

    @property
    def access_log(self):
        return list(self._log)

    def _check_col(self, col):
        if not 0 <= col < self.n:
            raise InvalidArgument(f"column {col} out of range [0, {self.n})")

    def _record(self, rows, col):
        if not self.column_order or self.column_order[-1] != col:
            self.column_order.append(col)
        if not self._log_on:
            return
        for r in rows:
            self._log_seen += 1
            if len(self._log) < self._log_limit:
                self._log.append((int(r), col))
            else:
                j = int(self._log_rng.integers(0, self._log_seen))
                if j < self._log_limit:
                    self._log[j] = (int(r), col)

    def query_rows(self, col, rows):
        """Entries ``X[rows, col]``; duplicates are charged as raw reads."""
        col = int(col)
        self._check_col(col)
        rows = np.ascontiguousarray(rows, dtype=np.int64)
        if rows.size and (rows.min() < 0 or rows.max() >= self.d):
            raise InvalidArgument("row index out of range")
        with self._lock:
            seen = self._seen[col]
            if self.budget_cap is not None:
                fresh = np.unique(rows[seen[rows] == 0]).size
                if self.unique_entries + fresh > self.budget_cap:
                    raise BudgetExceeded(
                        f"cap {self.budget_cap} exceeded "
                        f"({self.unique_entries} used, {fresh} requested)"
                    )
            new = kernels.mark_seen(seen, rows)
            self._per_col[col] += new
            self.unique_entries += new
            self.raw_queries += int(rows.size)
            self._record(rows, col)
        return self._hidden[rows, col].copy()

    def query(self, row, col):
        return float(self.query_rows(col, np.array([row]))[0])

    def query_column(self, col):
        return self.query_rows(col, np.arange(self.d, dtype=np.int64))

    def snapshot_ledger(self):
        with self._lock:
            return Ledger(
                int(self.raw_queries),
                int(self.unique_entries),
                tuple(int(v) for v in self._per_col),
            )
