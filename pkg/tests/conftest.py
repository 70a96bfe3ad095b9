import numpy as np
import pytest

from toepseg import (
    ClusterModel,
    IntervalSeries,
    ToeplitzMatrix,
    WindowBatch,
    build_index,
    build_windows,
    project_average,
)


def random_spd_toeplitz(n, w, rng, lift=1.0):
    """Random SPD block-Toeplitz matrix via projection plus diagonal lift."""
    d = n * w
    A = rng.standard_normal((d, d))
    spd = A @ A.T / d + lift * np.eye(d)
    idx = build_index(n, w)
    tm = project_average(spd, np.zeros((d, d)), 1.0, idx)
    lo = np.linalg.eigvalsh(tm.dense()).min()
    if lo <= 1e-6:
        blocks = [b.copy() for b in tm.blocks]
        blocks[0][:] += (1e-3 - lo) * np.eye(n)
        tm = ToeplitzMatrix.from_blocks(blocks)
    return tm


def random_models(n, w, K, rng):
    d = n * w
    models = []
    for _ in range(K):
        mlo = rng.standard_normal(d)
        mup = mlo + np.abs(rng.standard_normal(d)) + 0.5
        models.append(
            ClusterModel.build(mlo, mup, random_spd_toeplitz(n, w, rng), 0.1)
        )
    return models


def random_batch(n, w, count, rng, gap=5.0):
    d = n * w
    lo = rng.standard_normal((count, d))
    up = lo + gap + np.abs(rng.standard_normal((count, d)))
    return WindowBatch(
        n=n, w=w, lower_vecs=lo, upper_vecs=up,
        source_index=np.arange(w, w + count),
    )


def series_from_arrays(lower, upper):
    return IntervalSeries(lower=np.asarray(lower, dtype=float),
                          upper=np.asarray(upper, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_batch(rng):
    return random_batch(2, 2, 12, rng)


def batch_from_series(lower, upper, w):
    return build_windows(series_from_arrays(lower, upper), w)
