"""Temporally consistent cluster assignment of windows.

For fixed cluster models, the minimum of per-window cost plus a
per-transition penalty beta over all label paths is found exactly by
dynamic programming over the chain; a brute-force enumerator serves as
the test oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EmptyBatch, ModelDimensionMismatch, TooManyPaths
from .ingest import WindowBatch
from .likelihood import ClusterModel

BRUTE_FORCE_PATH_LIMIT = 10**6


@dataclass(frozen=True)
class AssignmentPath:
    """Cluster label per window (1-based) and the achieved objective."""

    labels: np.ndarray
    objective: float
    K: int
    beta: float


def cost_matrix(batch: WindowBatch, models) -> np.ndarray:
    """count x K matrix of per-window, per-cluster Gaussian costs."""
    if batch.count == 0:
        raise EmptyBatch("window batch is empty")
    d = batch.dim
    count = batch.count
    K = len(models)
    costs = np.empty((count, K))
    for k, model in enumerate(models):
        if model.dim != d:
            raise ModelDimensionMismatch(
                f"model {k + 1} has dimension {model.dim}, batch has {d}"
            )
        const = -model.log_det_precision + d * np.log(2.0 * np.pi)
        dl = batch.lower_vecs - model.mean_lower
        du = batch.upper_vecs - model.mean_upper
        quad = np.einsum("ri,ij,rj->r", dl, model.precision_dense, dl)
        quad += np.einsum("ri,ij,rj->r", du, model.precision_dense, du)
        costs[:, k] = 0.5 * quad + const
    return costs


def _path_objective(labels, costs: np.ndarray, beta: float) -> float:
    # left-to-right accumulation; bit-identical between solver and oracle
    obj = costs[0, labels[0]]
    for t in range(1, len(labels)):
        if labels[t] != labels[t - 1]:
            obj = obj + beta
        obj = obj + costs[t, labels[t]]
    return float(obj)


def viterbi_assign(batch: WindowBatch, models, beta: float) -> AssignmentPath:
    """Globally optimal label path; argmin ties go to the smallest index."""
    costs = cost_matrix(batch, models)
    count, K = costs.shape
    delta = costs[0].copy()
    backptr = np.zeros((count, K), dtype=int)
    for t in range(1, count):
        new_delta = np.empty(K)
        for k in range(K):
            # staying in k is free; arriving from any other cluster pays beta
            best_j = 0
            best = delta[0] + (0.0 if 0 == k else beta)
            for j in range(1, K):
                cand = delta[j] + (0.0 if j == k else beta)
                if cand < best:
                    best = cand
                    best_j = j
            backptr[t, k] = best_j
            new_delta[k] = best + costs[t, k]
        delta = new_delta
    labels = np.empty(count, dtype=int)
    labels[-1] = int(np.argmin(delta))
    for t in range(count - 2, -1, -1):
        labels[t] = backptr[t + 1, labels[t + 1]]
    # accumulate the objective in the same order as the brute-force oracle
    # so the two agree exactly
    objective = _path_objective(labels, costs, beta)
    return AssignmentPath(labels=labels + 1, objective=objective, K=K, beta=beta)


def brute_force_assign(batch: WindowBatch, models, beta: float) -> AssignmentPath:
    """Exact minimizer by enumeration; ties go to the lexicographically
    smallest label sequence."""
    costs = cost_matrix(batch, models)
    count, K = costs.shape
    if K**count > BRUTE_FORCE_PATH_LIMIT:
        raise TooManyPaths(f"{K}^{count} paths exceed the enumeration guard")
    best_labels = None
    best_obj = np.inf
    for labels in itertools.product(range(K), repeat=count):
        obj = _path_objective(labels, costs, beta)
        if obj < best_obj:
            best_obj = obj
            best_labels = labels
    return AssignmentPath(
        labels=np.asarray(best_labels) + 1, objective=best_obj, K=K, beta=beta
    )
