"""
Tests for the synthetic face renderer and corpus generation
"""

from dataclasses import replace
from unittest.mock import Mock

import numpy as np
import pytest

from eyecenter.events import EventType, event_manager
from eyecenter.services.synthesis_service import (
    SynthParams,
    assign_splits,
    build_corpus,
    flip_sample,
    render_synthetic_eye,
)
from models import AnnotationSource, Point2


@pytest.fixture
def plain_params():
    """E = 50 with iris radius 10 at (50, 50) and (150, 50)"""
    return SynthParams(
        image_size=(200, 100),
        interocular_range=(100.0, 100.0),
        iris_radius_frac=0.2,
        gaze_offset_range=(0.0, 0.0),
        closure_range=(1.0, 1.0),
        face_jitter_px=0.0,
    )


class TestSynthParams:
    """Tests for SynthParams validation"""

    @pytest.mark.parametrize('kwargs', [
        {'iris_radius_frac': 0.7},
        {'closure_range': (0.8, 0.4)},
        {'closure_range': (0.0, 0.5)},
        {'noise_sigma': -1.0},
        {'image_size': (120, 80)},
    ])
    def test_invalid_values(self, kwargs):
        with pytest.raises(ValueError):
            SynthParams(**kwargs)

    def test_to_dict_is_json_friendly(self):
        data = SynthParams().to_dict()
        assert data['image_size'] == [384, 286]
        assert data['iris_radius_frac'] == 0.2


class TestRenderSyntheticEye:
    """Tests for render_synthetic_eye"""

    def test_ground_truth_geometry(self, plain_params):
        image, annotation = render_synthetic_eye(plain_params)
        assert (image.width, image.height) == (200, 100)
        assert annotation.right_center == Point2(50.0, 50.0)
        assert annotation.left_center == Point2(150.0, 50.0)
        assert annotation.corners.right_outer == Point2(25.0, 50.0)
        assert annotation.corners.left_outer == Point2(175.0, 50.0)
        assert annotation.source is AnnotationSource.SYNTHETIC
        assert annotation.occlusion == (0.0, 0.0)

    def test_iris_boundary_crosses_half_level_at_the_radius(self, plain_params):
        """Along the center row the iris edge sits at rho = 10"""
        image, _ = render_synthetic_eye(plain_params)
        row = image.pixels[50].astype(float)
        # half-way between the iris rim (85) and the sclera (220)
        assert abs(row[60] - 152.5) <= 0.5
        assert abs(row[40] - 152.5) <= 0.5
        assert row[59] <= 85 and row[41] <= 85
        assert row[61] == 220 and row[39] == 220

    def test_pupil_is_darkest(self, plain_params):
        image, _ = render_synthetic_eye(plain_params)
        assert image.pixels[50, 50] == 25
        assert image.pixels.min() == 25

    def test_contours_follow_the_lids(self, plain_params):
        _, annotation = render_synthetic_eye(plain_params)
        right, left = annotation.contours
        assert len(right) == 16
        distances = np.hypot(*(right.points - [50.0, 50.0]).T)
        assert np.allclose(distances, 25.0)

    def test_closed_lids_hide_the_iris(self):
        params = SynthParams(image_size=(200, 100), interocular_range=(100.0, 100.0), iris_radius_frac=0.4,
                             gaze_offset_range=(0.0, 0.0), closure_range=(0.3, 0.3), face_jitter_px=0.0)
        _, annotation = render_synthetic_eye(params)
        assert all(o > 0.3 for o in annotation.occlusion)

    def test_same_seed_same_image(self, varied_params):
        first = render_synthetic_eye(varied_params, np.random.default_rng(4))
        second = render_synthetic_eye(varied_params, np.random.default_rng(4))
        assert first[0] == second[0]
        assert first[1] == second[1]

    def test_noise_and_blur_keep_ground_truth(self, plain_params):
        noisy = replace(plain_params, noise_sigma=4.0, blur_sigma=1.0)
        clean_image, clean = render_synthetic_eye(plain_params)
        noisy_image, annotation = render_synthetic_eye(noisy)
        assert annotation.centers == clean.centers
        assert noisy_image != clean_image


class TestFlipSample:
    """Tests for flip_sample"""

    def test_eyes_swap_roles(self, varied_params):
        image, annotation = render_synthetic_eye(varied_params)
        flipped_image, flipped = flip_sample(image, annotation)
        w = image.width
        assert flipped.right_center == Point2(w - 1 - annotation.left_center.x, annotation.left_center.y)
        assert flipped.right_center.x < flipped.left_center.x
        assert flipped.corners.right_outer.x < flipped.corners.left_outer.x
        assert flipped.image_id.endswith('_flip')
        assert np.array_equal(flipped_image.pixels, image.pixels[:, ::-1])

    def test_double_flip_restores_geometry(self, varied_params):
        image, annotation = render_synthetic_eye(varied_params)
        again_image, again = flip_sample(*flip_sample(image, annotation))
        assert again_image == image
        assert np.allclose(again.corners.as_array(), annotation.corners.as_array(), atol=1e-9)
        for a, b in zip(again.centers, annotation.centers):
            assert a.distance_to(b) < 1e-9
        for a, b in zip(again.contours, annotation.contours):
            assert np.allclose(a.points, b.points, atol=1e-9)


class TestCorpus:
    """Tests for build_corpus and assign_splits"""

    def test_split_sizes_are_exact(self):
        ids = [f"img_{i}" for i in range(10)]
        splits = assign_splits(ids, seed=3, test_fraction=0.2)
        assert splits.count('test') == 2
        assert splits == assign_splits(ids, seed=3, test_fraction=0.2)

    def test_split_fraction_range(self):
        with pytest.raises(ValueError):
            assign_splits(['a', 'b'], seed=0, test_fraction=1.0)

    def test_digest_is_deterministic(self, varied_params):
        _, first = build_corpus(varied_params, 4, seed=11)
        _, second = build_corpus(varied_params, 4, seed=11)
        _, other = build_corpus(varied_params, 4, seed=12)
        assert first.digest == second.digest
        assert first.digest != other.digest

    def test_threads_do_not_change_the_corpus(self, varied_params):
        items, manifest = build_corpus(varied_params, 5, seed=2)
        threaded_items, threaded = build_corpus(varied_params, 5, seed=2, threads=3)
        assert manifest.digest == threaded.digest
        assert all(a[0] == b[0] for a, b in zip(items, threaded_items))

    def test_manifest_records(self, varied_params):
        items, manifest = build_corpus(varied_params, 5, seed=2, test_fraction=0.4)
        assert manifest.count == 5
        assert len(manifest.split_ids('test')) == 2
        assert [r.image_id for r in manifest.records] == [a.image_id for _, a in items]
        assert items[0][1].image_path == 'images/synth_00000.png'

    def test_count_must_be_positive(self, varied_params):
        with pytest.raises(ValueError):
            build_corpus(varied_params, 0)


@pytest.mark.integration
class TestSynthesisService:
    """Tests for writing and reading a corpus directory"""

    def test_generate_and_load(self, app, varied_params, tmp_path):
        observer = Mock()
        event_manager.subscribe(EventType.CORPUS_BUILT, observer)

        manifest = app.synthesis_service.generate_corpus(tmp_path, varied_params, 5, seed=9)

        for name in ('annotations.txt', 'train.txt', 'test.txt', 'manifest.json'):
            assert (tmp_path / name).exists()
        assert len(list((tmp_path / 'images').glob('*.png'))) == 5
        assert observer.update.call_count == 1

        loaded = app.synthesis_service.load_corpus(tmp_path)
        assert len(loaded) == 5
        test_items = app.synthesis_service.load_corpus(tmp_path, split='test')
        assert [a.image_id for _, a in test_items] == list(manifest.split_ids('test'))

        rendered, _ = build_corpus(varied_params, 5, seed=9)
        assert loaded[0][0] == rendered[0][0]
