"""Interval forecast-error metrics and a ridge baseline predictor.

Distances between paired intervals live in (center, half-width)
coordinates: d1 is Euclidean there, dK a kernel-weighted quadratic form.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    KernelNotSPD,
    ParseError,
    RowMismatch,
    ShapeMismatch,
    SingularDesign,
)

DEFAULT_KERNEL = np.array([[5.0, 1.0], [1.0, 1.0]])


@dataclass(frozen=True)
class IntervalForecast:
    predicted_lower: np.ndarray  # (T_f, n)
    predicted_upper: np.ndarray
    actual_lower: np.ndarray
    actual_upper: np.ndarray

    def __post_init__(self):
        shape = self.predicted_lower.shape
        for m in (self.predicted_upper, self.actual_lower, self.actual_upper):
            if m.shape != shape:
                raise ShapeMismatch("forecast matrices must share one shape")
        if np.any(self.predicted_lower > self.predicted_upper):
            raise ShapeMismatch("predicted lower exceeds upper")


def _center_halfwidth(lo, hi):
    return (lo + hi) / 2.0, (hi - lo) / 2.0


def d1(a, b) -> float:
    """Euclidean distance between intervals in (center, half-width)."""
    ca, ra = _center_halfwidth(*a)
    cb, rb = _center_halfwidth(*b)
    return float(np.hypot(ca - cb, ra - rb))


def dK(a, b, kernel: np.ndarray = DEFAULT_KERNEL) -> float:
    """Kernel quadratic-form distance between intervals."""
    kernel = np.asarray(kernel, dtype=float)
    if kernel.shape != (2, 2) or np.any(np.linalg.eigvalsh(kernel) <= 0):
        raise KernelNotSPD("kernel must be a 2x2 SPD matrix")
    ca, ra = _center_halfwidth(*a)
    cb, rb = _center_halfwidth(*b)
    v = np.array([ca - cb, ra - rb])
    return float(np.sqrt(v @ kernel @ v))


def mde(forecast: IntervalForecast, metric: str = "d1",
        kernel: np.ndarray = DEFAULT_KERNEL) -> float:
    """Mean distance over every (step, series) pair in the horizon."""
    if metric == "d1":
        dist = d1
        args = ()
    elif metric == "dK":
        dist = dK
        args = (kernel,)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    T_f, n = forecast.predicted_lower.shape
    if T_f < 1:
        raise ShapeMismatch("empty forecast horizon")
    total = 0.0
    for t in range(T_f):
        for i in range(n):
            a = (forecast.actual_lower[t, i], forecast.actual_upper[t, i])
            b = (forecast.predicted_lower[t, i], forecast.predicted_upper[t, i])
            total += dist(a, b, *args)
    return total / (T_f * n)


class RidgePredictor:
    """Closed-form ridge regression with an unpenalized intercept."""

    def __init__(self, features: np.ndarray, targets: np.ndarray,
                 ridge: float = 0.0):
        X = np.asarray(features, dtype=float)
        Y = np.asarray(targets, dtype=float)
        if X.shape[0] != Y.shape[0]:
            raise ShapeMismatch("feature and target row counts differ")
        if ridge < 0:
            raise ValueError("ridge must be nonnegative")
        self._x_mean = X.mean(axis=0)
        self._y_mean = Y.mean(axis=0)
        Xc = X - self._x_mean
        Yc = Y - self._y_mean
        gram = Xc.T @ Xc
        p = gram.shape[0]
        if ridge == 0.0 and np.linalg.matrix_rank(gram) < p:
            raise SingularDesign("rank-deficient design with ridge = 0")
        self.coef = np.linalg.solve(gram + ridge * np.eye(p), Xc.T @ Yc)

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        return (X - self._x_mean) @ self.coef + self._y_mean


def intervals_from_center_range(centers: np.ndarray, half_widths: np.ndarray):
    """Rebuild (lower, upper) from predictions; negative widths clamp to 0.

    Returns ``(lower, upper, clamp_count)``.
    """
    hw = np.asarray(half_widths, dtype=float)
    clamped = int(np.sum(hw < 0))
    hw = np.maximum(hw, 0.0)
    return centers - hw, centers + hw, clamped


def ridge_baseline(train_features, train_targets, ridge: float = 0.0
                   ) -> RidgePredictor:
    return RidgePredictor(train_features, train_targets, ridge)


def load_features(path, count: int) -> np.ndarray:
    """Read a ``windowRow,f1..fp`` CSV aligned to window rows 0..count-1."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if not header or header[0].strip() != "windowRow":
            raise ParseError(f"{path}: first column must be windowRow")
        p = len(header) - 1
        if p < 1:
            raise ParseError(f"{path}: no feature columns")
        rows = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected {p + 1} fields, got {len(row)}"
                )
            try:
                key = int(row[0])
                vals = [float(x) for x in row[1:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if key in rows:
                raise ParseError(f"{path}:{lineno}: duplicate windowRow {key}")
            rows[key] = vals
    out = np.empty((count, p))
    for r in range(count):
        if r not in rows:
            raise RowMismatch(f"windowRow {r} missing from {path}")
        out[r] = rows[r]
    return out
