"""Synthetic interval data with known regime structure, for tests and demos."""

from __future__ import annotations

import numpy as np

from .ingest import IntervalSeries, WindowBatch
from .toeplitz import ToeplitzMatrix, build_index, project_average


def sparse_toeplitz_precision(n: int, w: int, coupling: float,
                              lag: int = 1, diag: float = 1.0
                              ) -> ToeplitzMatrix:
    """SPD block-Toeplitz precision with a single nonzero lag pattern."""
    blocks = [np.zeros((n, n)) for _ in range(w)]
    blocks[0][:] = diag * np.eye(n)
    if 0 < lag < w:
        blocks[lag][:] = coupling * np.eye(n)
    tm = ToeplitzMatrix.from_blocks(blocks)
    dense = tm.dense()
    vals = np.linalg.eigvalsh(dense)
    if vals.min() <= 1e-8:
        # lift the diagonal enough to restore positive definiteness
        blocks[0][:] += (1e-6 - vals.min()) * np.eye(n)
        tm = ToeplitzMatrix.from_blocks(blocks)
    return tm


def _sample_windows(rng, precision: ToeplitzMatrix, mean_lower, mean_upper,
                    count: int):
    dense = precision.dense()
    cov = np.linalg.inv(dense)
    cov = 0.5 * (cov + cov.T)
    chol = np.linalg.cholesky(cov)
    d = dense.shape[0]
    lo = mean_lower + rng.standard_normal((count, d)) @ chol.T
    up = mean_upper + rng.standard_normal((count, d)) @ chol.T
    # the bound gap is several standard deviations wide; clamp the rare
    # crossings so the batch invariant holds
    up = np.maximum(up, lo)
    return lo, up


def regime_window_batch(
    n: int = 2,
    w: int = 3,
    windows_per_regime: int = 400,
    segments: int = 4,
    gap: float = 8.0,
    seed: int = 0,
):
    """Windows drawn from two distinct sparse Toeplitz regimes, interleaved
    in contiguous segments.  Returns ``(batch, true_labels, precisions)``.
    """
    rng = np.random.default_rng(seed)
    d = n * w
    prec_a = sparse_toeplitz_precision(n, w, coupling=0.45, lag=1, diag=1.0)
    prec_b = sparse_toeplitz_precision(n, w, coupling=-0.45, lag=w - 1,
                                       diag=2.0)
    means = [
        (np.zeros(d), np.full(d, gap)),
        (np.full(d, 0.5), np.full(d, gap + 0.5)),
    ]
    seg_len = 2 * windows_per_regime // segments
    lows, ups, labels = [], [], []
    for s in range(segments):
        regime = s % 2
        prec = prec_a if regime == 0 else prec_b
        lo, up = _sample_windows(rng, prec, means[regime][0],
                                 means[regime][1], seg_len)
        lows.append(lo)
        ups.append(up)
        labels.extend([regime + 1] * seg_len)
    lower_vecs = np.vstack(lows)
    upper_vecs = np.vstack(ups)
    count = lower_vecs.shape[0]
    batch = WindowBatch(
        n=n, w=w, lower_vecs=lower_vecs, upper_vecs=upper_vecs,
        source_index=np.arange(w, w + count),
    )
    return batch, np.asarray(labels), (prec_a, prec_b)


def two_regime_series(
    n: int = 2,
    T: int = 400,
    segments: int = 4,
    seed: int = 0,
) -> IntervalSeries:
    """An interval series whose center dynamics switch between two AR(1)
    regimes, for end-to-end demos."""
    rng = np.random.default_rng(seed)
    seg_len = T // segments
    centers = np.zeros((T, n))
    widths = np.zeros((T, n))
    c = np.zeros(n)
    for t in range(T):
        regime = min(t // seg_len, segments - 1) % 2
        if regime == 0:
            c = 0.9 * c + 0.3 * rng.standard_normal(n)
            widths[t] = 0.5 + 0.1 * np.abs(rng.standard_normal(n))
        else:
            c = -0.5 * c + 1.0 * rng.standard_normal(n)
            widths[t] = 1.5 + 0.4 * np.abs(rng.standard_normal(n))
        centers[t] = c
    return IntervalSeries(lower=centers - widths, upper=centers + widths)


def random_spd_toeplitz(n: int, w: int, rng) -> ToeplitzMatrix:
    """Random SPD matrix projected onto the block-Toeplitz set, then
    diagonally shifted back into the SPD cone."""
    d = n * w
    A = rng.standard_normal((d, d))
    spd = A @ A.T / d + np.eye(d)
    idx = build_index(n, w)
    tm = project_average(spd, np.zeros((d, d)), 1.0, idx)
    dense = tm.dense()
    lift = np.linalg.eigvalsh(dense).min()
    if lift <= 1e-6:
        blocks = [b.copy() for b in tm.blocks]
        blocks[0][:] += (1e-3 - lift) * np.eye(n)
        tm = ToeplitzMatrix.from_blocks(blocks)
    return tm
