"""
Tests for HoG features

Patch extraction, descriptor properties and the binary difference features.
"""

import numpy as np
import pytest

from eyecenter.vision.geometry import build_transform
from eyecenter.vision.hog import (
    DiffFeature,
    Eye,
    HogConfig,
    compute_hog,
    eval_diff_feature,
    extract_patch,
    sample_pool,
)
from models import GrayImage, Point2
from tests.helpers import corners_from_anchors


def anchor_with_distance(distance):
    anchor, _ = build_transform(corners_from_anchors((50, 50), (50 + distance, 50)))
    return anchor


class TestHogConfig:
    """Tests for HogConfig"""

    def test_defaults(self):
        cfg = HogConfig()
        assert cfg.patch_size == 40
        assert cfg.dimension == 96

    @pytest.mark.parametrize('kwargs', [{'e_hog': 0.0}, {'patch_fraction': 1.5}, {'patch_fraction': 0.0}])
    def test_invalid_values(self, kwargs):
        with pytest.raises(ValueError):
            HogConfig(**kwargs)


class TestExtractPatch:
    """Tests for extract_patch"""

    def test_constant_image(self):
        image = GrayImage(np.full((120, 160), 128, dtype=np.uint8))
        patch = extract_patch(image, Point2(60, 40), anchor_with_distance(80), HogConfig())
        assert patch.shape == (40, 40)
        assert np.allclose(patch, 128.0)

    def test_unit_scale_samples_source_pixels(self):
        """With |E_inter| = e_hog the sampling step is one source pixel"""
        ramp = np.tile(np.arange(200, dtype=np.uint8), (120, 1))
        patch = extract_patch(GrayImage(ramp), Point2(100, 60), anchor_with_distance(100), HogConfig())
        steps = np.diff(patch[0])
        assert np.allclose(steps, 1.0)

    def test_corner_center_clamps(self):
        image = GrayImage(np.random.default_rng(1).integers(0, 256, (60, 80)).astype(np.uint8))
        patch = extract_patch(image, Point2(0, 0), anchor_with_distance(100), HogConfig())
        assert patch.shape == (40, 40)
        assert np.all(np.isfinite(patch))
        # every sample left of and above the image repeats the corner pixel
        assert np.allclose(patch[:20, :20], float(image.pixels[0, 0]))


class TestComputeHog:
    """Tests for compute_hog"""

    def test_constant_patch_gives_zero_descriptor(self):
        h = compute_hog(np.full((40, 40), 77.0))
        assert h.shape == (96,)
        assert not h.any()

    def test_unit_norm_and_range(self):
        patch = np.random.default_rng(2).uniform(0, 255, (40, 40))
        h = compute_hog(patch)
        assert np.linalg.norm(h) == pytest.approx(1.0, abs=1e-6)
        assert h.min() >= 0.0 and h.max() <= 1.0

    def test_vertical_step_edge_uses_zero_degree_bin(self):
        patch = np.zeros((40, 40))
        patch[:, 20:] = 100.0
        h = compute_hog(patch).reshape(16, 6)
        assert h[:, 1:].sum() == pytest.approx(0.0, abs=1e-12)
        # only the cells touching the edge columns 19 and 20 see the gradient
        edge_cells = [r * 4 + c for r in range(4) for c in (1, 2)]
        assert h[edge_cells, 0].sum() == pytest.approx(h[:, 0].sum())
        assert h[:, 0].sum() > 0

    def test_offset_invariance(self):
        patch = np.random.default_rng(3).uniform(0, 150, (40, 40))
        assert np.allclose(compute_hog(patch), compute_hog(patch + 50.0), atol=1e-6)

    def test_gain_invariance(self):
        patch = np.random.default_rng(4).uniform(0, 100, (40, 40))
        assert np.allclose(compute_hog(patch), compute_hog(2.5 * patch), atol=1e-4)

    def test_scale_normalization(self):
        """The same scene at D and 2D gives nearly the same descriptor"""
        def scene(scale):
            size = int(200 * scale)
            ys, xs = np.mgrid[0:size, 0:size] / scale
            return 128.0 + 90.0 * np.sin(xs / 6.0) * np.cos(ys / 9.0)

        cfg = HogConfig()
        h1 = compute_hog(extract_patch(scene(1.0), Point2(100, 100), anchor_with_distance(100), cfg))
        h2 = compute_hog(extract_patch(scene(2.0), Point2(200, 200), anchor_with_distance(200), cfg))
        assert np.linalg.norm(h1 - h2) < 0.05

    def test_soft_binning_preserves_norm(self):
        patch = np.random.default_rng(5).uniform(0, 255, (40, 40))
        h = compute_hog(patch, HogConfig(soft_binning=True))
        assert np.linalg.norm(h) == pytest.approx(1.0, abs=1e-6)


class TestDiffFeature:
    """Tests for DiffFeature and eval_diff_feature"""

    def test_identical_dimensions_rejected(self):
        with pytest.raises(ValueError):
            DiffFeature(Eye.RIGHT, 3, 3, 0.0)

    def test_threshold_comparison(self):
        right = np.zeros(96)
        right[0], right[1] = 0.5, 0.2
        assert eval_diff_feature(DiffFeature(Eye.RIGHT, 0, 1, 0.1), right, np.zeros(96))

    def test_strict_inequality(self):
        h = np.full(96, 0.1)
        assert not eval_diff_feature(DiffFeature(Eye.LEFT, 4, 9, 0.0), np.zeros(96), h)

    def test_threshold_one_never_passes(self):
        rng = np.random.default_rng(6)
        h = compute_hog(rng.uniform(0, 255, (40, 40)))
        for a, b in [(0, 1), (10, 50), (95, 3)]:
            assert not eval_diff_feature(DiffFeature(Eye.RIGHT, a, b, 1.0), h, h)

    def test_depends_only_on_selected_eye(self):
        rng = np.random.default_rng(7)
        right = rng.uniform(0, 0.3, 96)
        feature = DiffFeature(Eye.RIGHT, 5, 17, 0.01)
        expected = eval_diff_feature(feature, right, rng.uniform(0, 0.3, 96))
        for _ in range(10):
            assert eval_diff_feature(feature, right, rng.uniform(0, 0.3, 96)) == expected

    def test_batch_matches_single(self):
        rng = np.random.default_rng(8)
        descriptors = rng.uniform(0, 0.3, (20, 2, 96))
        feature = DiffFeature(Eye.LEFT, 2, 40, 0.02)
        batch = feature.evaluate_batch(descriptors)
        single = [feature.evaluate(d[0], d[1]) for d in descriptors]
        assert batch.tolist() == single


class TestSamplePool:
    """Tests for sample_pool"""

    def test_pool_size(self):
        assert len(sample_pool(np.random.default_rng(0), 20)) == 20

    def test_reproducible(self):
        assert sample_pool(np.random.default_rng(11), 20) == sample_pool(np.random.default_rng(11), 20)

    def test_zero_threshold_range(self):
        pool = sample_pool(np.random.default_rng(0), 20, (0.0, 0.0))
        assert all(f.threshold == 0.0 for f in pool)

    def test_thresholds_within_range(self):
        pool = sample_pool(np.random.default_rng(1), 200, (-0.3, 0.3))
        # thresholds are stored at float32 precision
        assert all(-0.3 - 1e-6 <= f.threshold <= 0.3 + 1e-6 for f in pool)
        assert all(f.dim_a != f.dim_b for f in pool)
        assert {f.eye for f in pool} == {Eye.RIGHT, Eye.LEFT}

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            sample_pool(np.random.default_rng(0), 0)
