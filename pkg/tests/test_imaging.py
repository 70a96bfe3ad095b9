import json

import numpy as np
import pytest
from PIL import Image

from toepseg import (
    AssignmentPath,
    RpConfig,
    build_image_dataset,
    jrp_fuse,
    jrp_image,
    rp_matrix,
    thresholds_from_quantile,
)
from toepseg.errors import (
    DegenerateDistances,
    DimensionMismatch,
    SideMismatch,
    WindowTooShortForTrajectory,
)

from conftest import random_batch


def cfg_with(eps, m=1, kappa=1):
    return RpConfig(m=m, kappa=kappa, thresholds=np.atleast_1d(eps))


class TestRpMatrix:
    def test_hand_oracle(self):
        out = rp_matrix(np.array([0.0, 1.0, 3.0]), cfg_with(1.5), 0)
        assert np.array_equal(out, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])

    def test_eps_above_max_distance_gives_all_ones(self):
        vals = np.array([0.0, 1.0, 3.0])
        out = rp_matrix(vals, cfg_with(10.0), 0)
        assert np.array_equal(out, np.ones((3, 3), dtype=np.uint8))

    def test_eps_below_min_positive_distance_gives_identity(self):
        vals = np.array([0.0, 1.0, 3.0])
        out = rp_matrix(vals, cfg_with(0.5), 0)
        assert np.array_equal(out, np.eye(3, dtype=np.uint8))

    def test_ties_count_as_recurrent(self):
        out = rp_matrix(np.array([0.0, 1.0]), cfg_with(1.0), 0)
        assert np.array_equal(out, np.ones((2, 2), dtype=np.uint8))

    def test_diagonal_always_one(self, rng):
        vals = rng.standard_normal(6)
        out = rp_matrix(vals, cfg_with(1e-12), 0)
        assert np.all(np.diag(out) == 1)

    def test_embedding_shrinks_side(self, rng):
        vals = rng.standard_normal(7)
        out = rp_matrix(vals, cfg_with(1.0, m=3, kappa=2), 0)
        assert out.shape == (3, 3)

    def test_delay_vectors_used(self):
        # m=2, kappa=1 on [0, 0, 5]: trajectories (0,0) and (0,5)
        out = rp_matrix(np.array([0.0, 0.0, 5.0]), cfg_with(1.0, m=2), 0)
        assert np.array_equal(out, np.eye(2, dtype=np.uint8))

    def test_window_too_short_rejected(self):
        with pytest.raises(WindowTooShortForTrajectory):
            rp_matrix(np.array([0.0, 1.0, 2.0]), cfg_with(1.0, m=3), 0)


class TestJrpFuse:
    def test_elementwise_product(self, rng):
        a = (rng.random((4, 4)) > 0.5).astype(np.uint8)
        b = (rng.random((4, 4)) > 0.5).astype(np.uint8)
        out = jrp_fuse([a, b])
        assert np.array_equal(out, a * b)

    def test_single_matrix_is_identity_of_fusion(self, rng):
        a = (rng.random((3, 3)) > 0.5).astype(np.uint8)
        assert np.array_equal(jrp_fuse([a]), a)

    def test_zero_off_diagonal_absorbs(self, rng):
        a = np.ones((3, 3), dtype=np.uint8)
        out = jrp_fuse([a, np.eye(3, dtype=np.uint8)])
        assert np.array_equal(out, np.eye(3, dtype=np.uint8))

    def test_side_mismatch_rejected(self):
        with pytest.raises(SideMismatch):
            jrp_fuse([np.ones((2, 2)), np.ones((3, 3))])
        with pytest.raises(SideMismatch):
            jrp_fuse([])


class TestThresholds:
    def test_median_of_known_distances(self):
        # one window [0, 1, 3] on both bound sides: distances {1, 2, 3}
        from toepseg.ingest import WindowBatch

        vals = np.array([[0.0, 1.0, 3.0]])
        b = WindowBatch(n=1, w=3, lower_vecs=vals, upper_vecs=vals.copy(),
                        source_index=np.array([3]))
        thr = thresholds_from_quantile(b, RpConfig(m=1, kappa=1, quantile=0.5))
        assert thr[0] == pytest.approx(2.0)

    def test_quantile_near_one_gives_all_ones_rp(self, rng):
        b = random_batch(1, 5, 10, rng)
        thr = thresholds_from_quantile(b, RpConfig(quantile=0.999999))
        cfg = RpConfig(thresholds=thr)
        out = rp_matrix(b.lower_vecs[0].reshape(5, 1)[:, 0], cfg, 0)
        assert np.array_equal(out, np.ones((5, 5), dtype=np.uint8))

    def test_constant_series_warns_and_floors(self):
        from toepseg.ingest import WindowBatch

        vals = np.ones((3, 4))
        b = WindowBatch(n=1, w=4, lower_vecs=vals, upper_vecs=vals.copy(),
                        source_index=np.arange(4, 7))
        with pytest.warns(DegenerateDistances):
            thr = thresholds_from_quantile(b, RpConfig(quantile=0.1))
        assert thr[0] > 0.0
        out = rp_matrix(vals[0], RpConfig(thresholds=thr), 0)
        assert np.all(out == 1)

    def test_deterministic_across_calls(self, rng):
        b = random_batch(2, 4, 300, rng)
        cfg = RpConfig(quantile=0.2)
        t1 = thresholds_from_quantile(b, cfg)
        t2 = thresholds_from_quantile(b, cfg)
        assert np.array_equal(t1, t2)


class TestJrpImage:
    def test_fuses_across_series(self, rng):
        b = random_batch(2, 4, 3, rng)
        cfg = RpConfig(thresholds=np.array([0.8, 0.8]))
        img = jrp_image(b, 1, "lower", cfg, label=2)
        r0 = rp_matrix(b.lower_vecs[1].reshape(4, 2)[:, 0], cfg, 0)
        r1 = rp_matrix(b.lower_vecs[1].reshape(4, 2)[:, 1], cfg, 1)
        assert np.array_equal(img.pixels, r0 * r1)
        assert img.label == 2 and img.bound_side == "lower"


class TestBuildImageDataset:
    @pytest.fixture
    def dataset(self, rng, tmp_path):
        b = random_batch(2, 4, 6, rng)
        labels = np.array([1, 1, 2, 2, 1, 3])
        path = AssignmentPath(labels=labels, objective=0.0, K=3, beta=0.0)
        cfg = RpConfig(quantile=0.3)
        out = tmp_path / "imgs"
        manifest = build_image_dataset(b, path, cfg, out)
        return b, labels, manifest, out

    def test_two_images_per_window(self, dataset):
        b, _, manifest, out = dataset
        assert len(manifest) == 2 * b.count
        assert len(list(out.glob("*.png"))) == 2 * b.count

    def test_labels_propagated(self, dataset):
        _, labels, manifest, _ = dataset
        for entry in manifest:
            assert entry["label"] == labels[entry["windowRow"]]
            assert entry["file"].startswith(f"cls{entry['label']}_")

    def test_pixels_are_eight_bit_binary(self, dataset):
        _, _, manifest, out = dataset
        img = Image.open(out / manifest[0]["file"])
        arr = np.asarray(img)
        assert img.mode == "L"
        assert set(np.unique(arr)) <= {0, 255}

    def test_reruns_byte_identical(self, rng, tmp_path):
        b = random_batch(2, 4, 5, rng)
        path = AssignmentPath(labels=np.ones(5, dtype=int), objective=0.0,
                              K=1, beta=0.0)
        cfg = RpConfig(quantile=0.3)
        d1, d2 = tmp_path / "a", tmp_path / "b"
        build_image_dataset(b, path, cfg, d1)
        build_image_dataset(b, path, cfg, d2)
        for f in sorted(d1.iterdir()):
            assert f.read_bytes() == (d2 / f.name).read_bytes()

    def test_manifest_matches_directory(self, dataset):
        _, _, manifest, out = dataset
        listed = {e["file"] for e in manifest}
        on_disk = {p.name for p in out.glob("*.png")}
        assert listed == on_disk
        assert json.loads((out / "manifest.json").read_text()) == manifest

    def test_label_count_mismatch_rejected(self, rng, tmp_path):
        b = random_batch(1, 3, 4, rng)
        path = AssignmentPath(labels=np.ones(3, dtype=int), objective=0.0,
                              K=1, beta=0.0)
        with pytest.raises(DimensionMismatch):
            build_image_dataset(b, path, RpConfig(quantile=0.5), tmp_path)
