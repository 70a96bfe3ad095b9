import numpy as np
import pytest

from toepseg import brute_force_assign, cost_matrix, viterbi_assign
from toepseg.errors import EmptyBatch, ModelDimensionMismatch, TooManyPaths
from toepseg.ingest import WindowBatch

from conftest import random_batch, random_models


class TestCostMatrix:
    def test_shape_and_positivity_structure(self, rng):
        b = random_batch(2, 2, 6, rng)
        models = random_models(2, 2, 3, rng)
        costs = cost_matrix(b, models)
        assert costs.shape == (6, 3)
        assert np.isfinite(costs).all()

    def test_empty_batch_rejected(self, rng):
        b = WindowBatch(n=1, w=1, lower_vecs=np.zeros((0, 1)),
                        upper_vecs=np.zeros((0, 1)),
                        source_index=np.zeros(0, dtype=int))
        with pytest.raises(EmptyBatch):
            cost_matrix(b, random_models(1, 1, 2, rng))

    def test_dimension_mismatch_rejected(self, rng):
        b = random_batch(2, 2, 4, rng)
        with pytest.raises(ModelDimensionMismatch):
            cost_matrix(b, random_models(2, 3, 2, rng))


class TestViterbi:
    def test_single_cluster_sums_costs(self, rng):
        b = random_batch(1, 2, 5, rng)
        models = random_models(1, 2, 1, rng)
        path = viterbi_assign(b, models, beta=2.0)
        assert np.array_equal(path.labels, np.ones(5, dtype=int))
        assert path.objective == pytest.approx(
            cost_matrix(b, models)[:, 0].sum(), rel=1e-12)

    def test_zero_beta_is_pointwise_argmin(self, rng):
        b = random_batch(2, 2, 10, rng)
        models = random_models(2, 2, 3, rng)
        path = viterbi_assign(b, models, beta=0.0)
        costs = cost_matrix(b, models)
        assert np.array_equal(path.labels, np.argmin(costs, axis=1) + 1)

    def test_single_window(self, rng):
        b = random_batch(2, 1, 1, rng)
        models = random_models(2, 1, 3, rng)
        path = viterbi_assign(b, models, beta=5.0)
        costs = cost_matrix(b, models)
        assert path.labels[0] == np.argmin(costs[0]) + 1
        assert path.objective == costs[0].min()

    def test_huge_beta_forces_constant_path(self, rng):
        b = random_batch(2, 2, 8, rng)
        models = random_models(2, 2, 3, rng)
        path = viterbi_assign(b, models, beta=1e9)
        assert len(set(path.labels.tolist())) == 1

    def test_ties_go_to_smallest_index(self, rng):
        # duplicate models create exact per-window cost ties
        b = random_batch(2, 2, 6, rng)
        m = random_models(2, 2, 1, rng)[0]
        path = viterbi_assign(b, [m, m, m], beta=0.7)
        assert np.array_equal(path.labels, np.ones(6, dtype=int))

    def test_matches_brute_force(self, rng):
        for trial in range(30):
            count = int(rng.integers(1, 8))
            K = int(rng.integers(1, 4))
            beta = float(rng.choice([0.0, 0.5, 2.0]))
            b = random_batch(1, 2, count, rng)
            models = random_models(1, 2, K, rng)
            fast = viterbi_assign(b, models, beta)
            slow = brute_force_assign(b, models, beta)
            assert fast.objective == slow.objective
            assert np.array_equal(fast.labels, slow.labels)

    def test_objective_matches_label_accumulation(self, rng):
        b = random_batch(2, 2, 7, rng)
        models = random_models(2, 2, 2, rng)
        beta = 1.5
        path = viterbi_assign(b, models, beta)
        costs = cost_matrix(b, models)
        obj = costs[0, path.labels[0] - 1]
        for t in range(1, 7):
            if path.labels[t] != path.labels[t - 1]:
                obj += beta
            obj += costs[t, path.labels[t] - 1]
        assert path.objective == pytest.approx(obj, rel=1e-12)


class TestBruteForce:
    def test_path_guard(self, rng):
        b = random_batch(1, 1, 25, rng)
        models = random_models(1, 1, 3, rng)
        with pytest.raises(TooManyPaths):
            brute_force_assign(b, models, 1.0)
