"""Symmetric block-Toeplitz index algebra and projection.

A symmetric block-Toeplitz matrix of block size n and w block lags is
determined by w sub-blocks C(0)..C(w-1) (C(0) symmetric).  Every entry of
the dense (n*w) x (n*w) expansion belongs to exactly one equal-value
group; the projection onto the Toeplitz set averages over those groups.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True)
class BlockToeplitzIndex:
    """Coordinate groups of equal-valued entries in the dense expansion.

    ``keys[g] = (d, i, j)`` identifies group g with entry (i, j) of the
    lag-d sub-block; ``rows[g]/cols[g]`` list every dense coordinate of
    that value, counting both symmetric copies.
    """

    n: int
    w: int
    keys: tuple
    rows: tuple  # tuple of int arrays
    cols: tuple

    @property
    def group_count(self) -> int:
        return len(self.keys)

    @property
    def dim(self) -> int:
        return self.n * self.w


def build_index(n: int, w: int) -> BlockToeplitzIndex:
    """Enumerate the n(n+1)/2 + (w-1)n^2 entry groups for block size n, w lags.

    Group cardinalities: w for diagonal entries of C(0), 2w for its
    off-diagonal entries, 2(w-d) for entries of C(d), d >= 1.
    """
    if n < 1 or w < 1:
        raise DimensionMismatch(f"n and w must be >= 1, got n={n}, w={w}")
    keys = []
    rows = []
    cols = []
    for i in range(n):
        for j in range(i, n):
            r, c = [], []
            for b in range(w):
                r.append(b * n + i)
                c.append(b * n + j)
                if i != j:
                    r.append(b * n + j)
                    c.append(b * n + i)
            keys.append((0, i, j))
            rows.append(np.asarray(r))
            cols.append(np.asarray(c))
    for d in range(1, w):
        for i in range(n):
            for j in range(n):
                r, c = [], []
                for b in range(w - d):
                    r.append((b + d) * n + i)
                    c.append(b * n + j)
                    r.append(b * n + j)
                    c.append((b + d) * n + i)
                keys.append((d, i, j))
                rows.append(np.asarray(r))
                cols.append(np.asarray(c))
    return BlockToeplitzIndex(
        n=n, w=w, keys=tuple(keys), rows=tuple(rows), cols=tuple(cols)
    )


@dataclass(frozen=True)
class ToeplitzMatrix:
    """Block-Toeplitz matrix stored as its w sub-blocks."""

    n: int
    w: int
    blocks: tuple  # w arrays of shape (n, n); blocks[0] symmetric

    def dense(self) -> np.ndarray:
        n, w = self.n, self.w
        out = np.zeros((n * w, n * w))
        for brow in range(w):
            for bcol in range(w):
                d = brow - bcol
                if d >= 0:
                    blk = self.blocks[d]
                else:
                    blk = self.blocks[-d].T
                out[brow * n : (brow + 1) * n, bcol * n : (bcol + 1) * n] = blk
        return out

    @classmethod
    def from_blocks(cls, blocks) -> "ToeplitzMatrix":
        blocks = tuple(np.asarray(b, dtype=float) for b in blocks)
        n = blocks[0].shape[0]
        return cls(n=n, w=len(blocks), blocks=blocks)


def _group_mean(values: np.ndarray) -> float:
    # anchored mean: exact when all group members are equal
    v0 = values[0]
    return float(v0 + np.sum(values - v0) / values.size)


def project_average(
    theta: np.ndarray,
    lambda_dual: np.ndarray,
    rho: float,
    idx: BlockToeplitzIndex,
) -> ToeplitzMatrix:
    """Project onto the block-Toeplitz set by group averaging.

    Each group takes the value mean(theta_g) + rho * mean(lambda_g), the
    minimizer of the separable per-group quadratic of the consensus step.
    """
    d = idx.dim
    if theta.shape != (d, d) or lambda_dual.shape != (d, d):
        raise DimensionMismatch(
            f"expected {(d, d)} matrices, got {theta.shape} and {lambda_dual.shape}"
        )
    blocks = [np.zeros((idx.n, idx.n)) for _ in range(idx.w)]
    for (lag, i, j), r, c in zip(idx.keys, idx.rows, idx.cols):
        value = _group_mean(theta[r, c]) + rho * _group_mean(lambda_dual[r, c])
        blocks[lag][i, j] = value
        if lag == 0:
            blocks[0][j, i] = value
    return ToeplitzMatrix.from_blocks(blocks)


def is_block_toeplitz(m: np.ndarray, idx: BlockToeplitzIndex, tol: float) -> bool:
    """True iff ``m`` is symmetric and group-constant within ``tol``."""
    d = idx.dim
    if m.shape != (d, d):
        raise DimensionMismatch(f"expected {(d, d)}, got {m.shape}")
    if np.max(np.abs(m - m.T), initial=0.0) > tol:
        return False
    for r, c in zip(idx.rows, idx.cols):
        vals = m[r, c]
        if vals.max() - vals.min() > tol:
            return False
    return True
