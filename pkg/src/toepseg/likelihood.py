"""Gaussian costs for interval bounds, cluster moments, and the SCAD penalty."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyCluster,
    InvalidA,
    NotPositiveDefinite,
)
from .ingest import WindowBatch
from .toeplitz import ToeplitzMatrix

LOG_2PI = float(np.log(2.0 * np.pi))

DEFAULT_SCAD_A = 3.7


@dataclass(frozen=True)
class ClusterMoments:
    """Sample means and MLE covariances of a cluster's lower/upper vectors."""

    count: int
    mean_lower: np.ndarray
    mean_upper: np.ndarray
    cov_lower: np.ndarray
    cov_upper: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean_lower.shape[0]


@dataclass(frozen=True)
class ClusterModel:
    """One cluster: two bound means sharing a block-Toeplitz precision."""

    mean_lower: np.ndarray
    mean_upper: np.ndarray
    precision: ToeplitzMatrix
    log_det_precision: float
    lam: float
    precision_dense: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, mean_lower, mean_upper, precision: ToeplitzMatrix, lam: float
              ) -> "ClusterModel":
        """Construct with a cached dense view and Cholesky log-determinant."""
        dense = precision.dense()
        try:
            chol = np.linalg.cholesky(dense)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("cluster precision is not SPD") from None
        log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
        return cls(
            mean_lower=np.asarray(mean_lower, dtype=float),
            mean_upper=np.asarray(mean_upper, dtype=float),
            precision=precision,
            log_det_precision=log_det,
            lam=float(lam),
            precision_dense=dense,
        )

    @property
    def dim(self) -> int:
        return self.mean_lower.shape[0]


def neg_log_lik(y: np.ndarray, mean: np.ndarray, precision: np.ndarray,
                log_det: float) -> float:
    """Gaussian negative log-density, quadratic form in the precision.

    The normalizing constant uses the actual vector dimension; it cancels
    in any argmin over clusters sharing that dimension.
    """
    y = np.asarray(y, dtype=float)
    mean = np.asarray(mean, dtype=float)
    d = y.shape[0]
    if mean.shape[0] != d or precision.shape != (d, d):
        raise DimensionMismatch("y, mean, and precision dimensions disagree")
    resid = y - mean
    quad = float(resid @ precision @ resid)
    return 0.5 * quad - 0.5 * log_det + 0.5 * d * LOG_2PI


def cluster_cost(lower: np.ndarray, upper: np.ndarray, model: ClusterModel) -> float:
    """Sum of the lower- and upper-bound negative log-likelihoods."""
    return neg_log_lik(
        lower, model.mean_lower, model.precision_dense, model.log_det_precision
    ) + neg_log_lik(
        upper, model.mean_upper, model.precision_dense, model.log_det_precision
    )


def empirical_moments(batch: WindowBatch, members) -> ClusterMoments:
    """Means and MLE covariances (divisor m, symmetrized) of member rows."""
    members = np.asarray(members, dtype=int)
    if members.size == 0:
        raise EmptyCluster("cannot compute moments of an empty cluster")
    lo = batch.lower_vecs[members]
    up = batch.upper_vecs[members]
    mean_lower = lo.mean(axis=0)
    mean_upper = up.mean(axis=0)
    dl = lo - mean_lower
    du = up - mean_upper
    m = members.size
    cov_lower = dl.T @ dl / m
    cov_upper = du.T @ du / m
    cov_lower = 0.5 * (cov_lower + cov_lower.T)
    cov_upper = 0.5 * (cov_upper + cov_upper.T)
    return ClusterMoments(
        count=m,
        mean_lower=mean_lower,
        mean_upper=mean_upper,
        cov_lower=cov_lower,
        cov_upper=cov_upper,
    )


def _check_scad_args(b: float, lam: float, a: float) -> None:
    if a <= 2.0:
        raise InvalidA(f"SCAD clipping constant must exceed 2, got {a}")
    if b < 0 or lam < 0:
        raise ValueError("b and lambda must be nonnegative")


def scad(b: float, lam: float, a: float = DEFAULT_SCAD_A) -> float:
    """SCAD penalty value: linear up to lam, clipped-quadratic, then flat."""
    _check_scad_args(b, lam, a)
    if b <= lam:
        return lam * b
    if b >= a * lam:
        return lam * lam * (a + 1.0) / 2.0
    return lam * lam + (a * lam * (b - lam) - (b * b - lam * lam) / 2.0) / (a - 1.0)


def scad_derivative(b: float, lam: float, a: float = DEFAULT_SCAD_A) -> float:
    """Derivative of the SCAD penalty; exactly 0 in the clipped region."""
    _check_scad_args(b, lam, a)
    if b <= lam:
        return lam
    return max(a * lam - b, 0.0) / (a - 1.0)


def scad_matrix(theta_abs: np.ndarray, lam: float, a: float = DEFAULT_SCAD_A
                ) -> np.ndarray:
    """Vectorized scad() over a matrix of absolute values."""
    if a <= 2.0:
        raise InvalidA(f"SCAD clipping constant must exceed 2, got {a}")
    b = np.asarray(theta_abs, dtype=float)
    flat = lam * lam * (a + 1.0) / 2.0
    mid = lam * lam + (a * lam * (b - lam) - (b * b - lam * lam) / 2.0) / (a - 1.0)
    return np.where(b <= lam, lam * b, np.where(b >= a * lam, flat, mid))


def scad_derivative_matrix(theta_abs: np.ndarray, lam: float,
                           a: float = DEFAULT_SCAD_A) -> np.ndarray:
    """Vectorized scad_derivative() over a matrix of absolute values."""
    if a <= 2.0:
        raise InvalidA(f"SCAD clipping constant must exceed 2, got {a}")
    b = np.asarray(theta_abs, dtype=float)
    return np.where(b <= lam, lam, np.maximum(a * lam - b, 0.0) / (a - 1.0))
