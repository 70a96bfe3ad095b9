"""Interval series ingestion and windowing.

Interval observations are stored as two dense ``(T, n)`` matrices of lower
and upper bounds.  Windowing stacks ``w`` consecutive observations
time-major (all n series at the oldest time first), so that the lag-d
sub-blocks of a block-Toeplitz precision matrix line up with cross-series
dependence at time difference d.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IntervalOrderViolation,
    MissingCell,
    ParseError,
    WindowTooLarge,
)

CSV_HEADER = ["t", "series", "lower", "upper"]


@dataclass(frozen=True)
class IntervalSeries:
    """An n-dimensional interval-valued series over T time steps."""

    lower: np.ndarray  # (T, n)
    upper: np.ndarray  # (T, n)

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.ndim != 2 or lower.shape != upper.shape:
            raise ParseError("lower/upper must be matching (T, n) matrices")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ParseError("interval series contains non-finite entries")
        bad = np.argwhere(lower > upper)
        if bad.size:
            t, i = bad[0]
            raise IntervalOrderViolation(
                int(t) + 1, int(i) + 1, lower[t, i], upper[t, i]
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def T(self) -> int:
        return self.lower.shape[0]

    @property
    def n(self) -> int:
        return self.lower.shape[1]


@dataclass(frozen=True)
class WindowBatch:
    """Full-width windows of an interval series, vectorized time-major.

    Row ``r`` holds the ``w`` observations ending at time ``t = r + w``
    (1-based).  Entry ``j`` of a row is series ``j % n`` at time offset
    ``j // n`` from the start of the window.
    """

    n: int
    w: int
    lower_vecs: np.ndarray  # (count, n*w)
    upper_vecs: np.ndarray  # (count, n*w)
    source_index: np.ndarray = field(repr=False)  # row -> ending time t

    def __post_init__(self):
        if self.lower_vecs.shape != self.upper_vecs.shape:
            raise ParseError("window bound matrices must have equal shape")
        if np.any(self.lower_vecs > self.upper_vecs):
            raise IntervalOrderViolation(0, 0, float("nan"), float("nan"))

    @property
    def count(self) -> int:
        return self.lower_vecs.shape[0]

    @property
    def dim(self) -> int:
        return self.n * self.w


def read_interval_csv(path) -> IntervalSeries:
    """Parse a long-format ``t,series,lower,upper`` CSV into an IntervalSeries."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise ParseError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                t = int(row[0])
                series = int(row[1])
                lo = float(row[2])
                hi = float(row[3])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if t < 1 or series < 1:
                raise ParseError(f"{path}:{lineno}: indices must be 1-based positive")
            rows.append((t, series, lo, hi))

    if not rows:
        raise ParseError(f"{path}: no data rows")

    T = max(r[0] for r in rows)
    n = max(r[1] for r in rows)
    lower = np.full((T, n), np.nan)
    upper = np.full((T, n), np.nan)
    for t, series, lo, hi in rows:
        if not np.isnan(lower[t - 1, series - 1]):
            raise ParseError(f"duplicate cell (t={t}, series={series})")
        if lo > hi:
            raise IntervalOrderViolation(t, series, lo, hi)
        lower[t - 1, series - 1] = lo
        upper[t - 1, series - 1] = hi

    missing = np.argwhere(np.isnan(lower))
    if missing.size:
        t, i = missing[0]
        raise MissingCell(f"missing cell (t={int(t) + 1}, series={int(i) + 1})")
    return IntervalSeries(lower=lower, upper=upper)


def write_interval_csv(series: IntervalSeries, path) -> None:
    """Write a series back to the long CSV format, round-trip exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for t in range(series.T):
            for i in range(series.n):
                writer.writerow(
                    [t + 1, i + 1, repr(float(series.lower[t, i])),
                     repr(float(series.upper[t, i]))]
                )


def build_windows(series: IntervalSeries, w: int) -> WindowBatch:
    """Build the T - w + 1 full-width windows of width ``w``.

    Shorter leading windows are dropped: the Gaussian model needs a fixed
    dimension n*w.
    """
    if w < 1:
        raise WindowTooLarge(f"window width must be >= 1, got {w}")
    if w > series.T:
        raise WindowTooLarge(f"window width {w} exceeds series length {series.T}")
    count = series.T - w + 1
    n = series.n
    lower_vecs = np.empty((count, n * w))
    upper_vecs = np.empty((count, n * w))
    for r in range(count):
        lower_vecs[r] = series.lower[r : r + w].reshape(-1)
        upper_vecs[r] = series.upper[r : r + w].reshape(-1)
    source_index = np.arange(w, series.T + 1)
    return WindowBatch(
        n=n, w=w, lower_vecs=lower_vecs, upper_vecs=upper_vecs,
        source_index=source_index,
    )
