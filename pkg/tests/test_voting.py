"""
Tests for the hand-crafted voting detector

Score function, masked candidates, hill-climbing and the full per-eye detector.
"""

import numpy as np
import pytest

from eyecenter.services.synthesis_service import SynthParams, render_synthetic_eye
from eyecenter.utils import DegenerateEyeRegionError
from eyecenter.vision.circlefit import EdgePointSet, RobustFitConfig
from eyecenter.vision.geometry import mask_pixels
from eyecenter.vision.voting import (
    NEIGHBORS,
    VoteConfig,
    VotingField,
    detect_eye,
    detect_handcrafted,
    edge_support,
    find_candidates,
    hill_climb,
    score_at,
    score_map,
)
from models import Candidate, CircleEstimate, EyeContour, Point2
from tests.helpers import circle_contour, dark_disk_image

# one dark disk of radius 16 at (60, 60); corners 40 px apart give E = 40 and a [12, 20] band
DISK_CENTER = (60, 60)
CORNERS = (Point2(40.0, 60.0), Point2(80.0, 60.0))


@pytest.fixture
def disk_image():
    return dark_disk_image(120, 120, [DISK_CENTER], 16)


def graded_disk_image(center, radius, size=120):
    """Bright square with a disk that darkens toward its center"""
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    rho = np.hypot(xs - center[0], ys - center[1])
    coverage = np.clip(0.5 + radius - rho, 0.0, 1.0)
    inside = 40.0 + 80.0 * np.clip(rho / radius, 0.0, 1.0)
    return np.rint(220.0 * (1.0 - coverage) + inside * coverage).astype(np.uint8)


class TestVoteConfig:
    """Tests for VoteConfig"""

    def test_defaults(self):
        cfg = VoteConfig()
        assert cfg.radius_band == (0.3, 0.5)
        assert cfg.default_iris_radius_frac == 0.2
        assert cfg.candidate_threshold_frac == 0.8

    def test_smoothing_is_clamped(self):
        cfg = VoteConfig()
        assert cfg.smoothing_sigma(10.0) == 1.0
        assert cfg.smoothing_sigma(40.0) == pytest.approx(2.0)
        assert cfg.smoothing_sigma(400.0) == 5.0

    @pytest.mark.parametrize('kwargs', [
        {'radius_band': (0.5, 0.3)}, {'radius_band': (0.0, 0.5)}, {'candidate_threshold_frac': 1.0},
        {'erosion_frac': 0.0},
    ])
    def test_invalid_values(self, kwargs):
        with pytest.raises(ValueError):
            VoteConfig(**kwargs)


class TestScoreAt:
    """Tests for score_at and VotingField"""

    def test_uniform_image_scores_zero(self):
        image = np.full((80, 80), 90, dtype=np.uint8)
        assert score_at(image, Point2(40, 40), 40.0) == 0.0

    def test_white_center_scores_zero(self):
        image = dark_disk_image(120, 120, [DISK_CENTER], 16, background=255.0)
        # 30 px from the disk center the smoothed image is still pure white
        assert score_at(image, Point2(90, 60), 40.0) == pytest.approx(0.0, abs=1e-6)

    def test_true_center_beats_displaced_points(self, disk_image):
        field = VotingField(disk_image, 40.0)
        best = score_at(disk_image, Point2(*DISK_CENTER), 40.0, field=field)
        assert best > 0
        for radius in (4.0, 6.0, 10.0, 25.0):
            for angle in np.deg2rad(np.arange(0, 360, 45)):
                p = Point2(60 + radius * np.cos(angle), 60 + radius * np.sin(angle))
                assert score_at(disk_image, p, 40.0, field=field) < best

    def test_offset_invariance_with_frozen_weight(self, disk_image):
        base = disk_image.astype(np.float64)
        field = VotingField(base, 40.0)
        shifted = VotingField(base + 20.0, 40.0)
        for x, y in [(60, 60), (55, 62), (70, 50)]:
            a = field.score(x, y) / field.darkness(x, y)
            b = shifted.score(x, y) / shifted.darkness(x, y)
            assert a == pytest.approx(b, abs=1e-6)

    def test_annulus_outside_image(self):
        image = dark_disk_image(40, 40, [(20, 20)], 8)
        assert score_at(image, Point2(500, 500), 40.0) == 0.0

    def test_band_follows_eye_size(self):
        """Corners 50 px apart give annulus radii in [15, 25]"""
        field = VotingField(np.zeros((10, 10)), 50.0)
        assert (field.r_min, field.r_max) == (15.0, 25.0)
        radii, _ = field.ring_scores(5.0, 5.0)
        assert radii[0] == 15.0 and radii[-1] == 25.0

    def test_non_positive_eye_size(self):
        with pytest.raises(ValueError):
            VotingField(np.zeros((10, 10)), 0.0)


class TestFindCandidates:
    """Tests for find_candidates"""

    def test_single_disk(self, disk_image):
        candidates = find_candidates(disk_image, circle_contour(60, 60, 20), CORNERS)
        assert len(candidates) >= 1
        top = candidates[0]
        assert top.position.distance_to(Point2(*DISK_CENTER)) <= 1.5
        assert all(c.position.distance_to(Point2(*DISK_CENTER)) <= 3.0 for c in candidates)
        # initial radius is 0.2 E
        assert top.radius == pytest.approx(8.0)

    def test_sorted_by_score(self, disk_image):
        candidates = find_candidates(disk_image, circle_contour(60, 60, 20), CORNERS)
        scores = [c.score for c in candidates]
        assert scores == sorted(scores, reverse=True)

    def test_includes_the_masked_maximum(self, disk_image):
        contour = circle_contour(60, 60, 20)
        field = VotingField(disk_image, 40.0)
        candidates = find_candidates(disk_image, contour, CORNERS, field=field)
        assert candidates[0].score == pytest.approx(max(
            field.score(float(x), float(y))
            for x in range(40, 81) for y in range(40, 81)
            if Point2(x, y).distance_to(Point2(60, 60)) <= 16.0
        ))

    def test_two_disks(self):
        image = dark_disk_image(200, 120, [(75, 60), (125, 60)], 16)
        contour = EyeContour([[40, 35], [160, 35], [160, 85], [40, 85]])
        corners = (Point2(40.0, 60.0), Point2(160.0, 60.0))
        candidates = find_candidates(image, contour, corners, VoteConfig(radius_band=(0.1, 0.2)))
        assert len(candidates) >= 2
        top_two = sorted(c.position.x for c in candidates[:2])
        assert abs(top_two[0] - 75) <= 2 and abs(top_two[1] - 125) <= 2

    def test_all_bright_region(self):
        image = np.full((120, 120), 230, dtype=np.uint8)
        assert find_candidates(image, circle_contour(60, 60, 20), CORNERS) == []

    def test_empty_mask(self, disk_image):
        with pytest.raises(DegenerateEyeRegionError):
            find_candidates(disk_image, circle_contour(60, 60, 1.0), CORNERS)


class TestHillClimb:
    """Tests for hill_climb"""

    def test_climbs_to_a_local_maximum(self, disk_image):
        field = VotingField(disk_image, 40.0)
        start = Candidate(Point2(62.0, 58.0), 8.0, 0.0)
        start_score, _ = field.best_ring(62, 58)
        result = hill_climb(disk_image, start, 40.0, field=field)

        x, y = int(result.position.x), int(result.position.y)
        assert result.score >= start_score
        assert result.position.distance_to(Point2(*DISK_CENTER)) <= 2.0
        assert 12.0 <= result.radius <= 20.0
        # stopping rule: no neighbor scores higher
        for dx, dy in NEIGHBORS:
            assert field.best_ring(x + dx, y + dy)[0] <= result.score

    def test_stationary_at_a_local_maximum(self, disk_image):
        field = VotingField(disk_image, 40.0)
        first = hill_climb(disk_image, Candidate(Point2(63.0, 61.0), 8.0, 0.0), 40.0, field=field)
        again = hill_climb(disk_image, first, 40.0, field=field)
        assert again.position == first.position
        assert again.score == first.score

    def test_flat_image_does_not_move(self):
        image = np.full((60, 60), 100, dtype=np.uint8)
        result = hill_climb(image, Candidate(Point2(30.0, 30.0), 5.0, 0.0), 20.0)
        assert result.position == Point2(30.0, 30.0)


@pytest.mark.slow
class TestExhaustiveSearch:
    """Candidate search and hill-climbing against brute-force maxima on rendered disks"""

    def setup_method(self):
        rng = np.random.default_rng(21)
        self.disks = [((60.0 + rng.uniform(-2.0, 2.0), 60.0 + rng.uniform(-2.0, 2.0)), rng.uniform(13.0, 19.0))
                      for _ in range(20)]
        self.contour = circle_contour(60, 60, 20)

    def test_top_candidate_is_the_masked_argmax(self):
        for center, radius in self.disks:
            image = graded_disk_image(center, radius)
            field = VotingField(image, 40.0)
            pixels = mask_pixels(self.contour, VoteConfig().erosion_frac * 40.0, field.shape)
            brute = [score_at(image, Point2(float(x), float(y)), 40.0, field=field) for x, y in pixels]
            assert np.array_equal(score_map(field, pixels), brute)

            top = find_candidates(image, self.contour, CORNERS, field=field)[0]
            best = pixels[int(np.argmax(brute))]
            assert top.position == Point2(float(best[0]), float(best[1]))

    def test_hill_climb_reaches_the_ring_argmax(self):
        window = [(x, y) for y in range(40, 81) for x in range(40, 81)
                  if np.hypot(x - 60, y - 60) <= 20.0]
        for center, radius in self.disks:
            image = graded_disk_image(center, radius)
            field = VotingField(image, 40.0)
            top = find_candidates(image, self.contour, CORNERS, field=field)[0]
            climbed = hill_climb(image, top, 40.0, field=field)

            ring_best = []
            for x, y in window:
                radii, scores = field.ring_scores(float(x), float(y))
                k = int(np.argmax(scores))
                ring_best.append((scores[k], radii[k], x, y))
            score, best_radius, x, y = max(ring_best, key=lambda t: t[0])
            assert climbed.position == Point2(float(x), float(y))
            assert climbed.score == score
            assert climbed.radius == best_radius


class TestEdgeSupport:
    """Tests for edge_support"""

    def test_counts_only_points_inside_the_scan_range(self):
        # scan reach is 3 px at r = 10; a peak within one step of the end is a boundary hit
        edges = EdgePointSet(np.array([[10.0, 0.0], [0.0, 12.9], [-7.5, 0.0]]),
                             np.array([2.0, 5.0, 1.0]), np.zeros(3))
        assert edge_support(edges, CircleEstimate(0.0, 0.0, 10.0), RobustFitConfig()) == pytest.approx(3.0)

    def test_empty_edges(self):
        assert edge_support(EdgePointSet.empty(), CircleEstimate(0.0, 0.0, 10.0), RobustFitConfig()) == 0.0


class TestDetectEye:
    """Tests for detect_eye and detect_handcrafted"""

    @pytest.mark.parametrize('seed', [5, 6, 7])
    def test_iris_smaller_than_the_radius_band(self, seed):
        params = SynthParams()
        image, annotation = render_synthetic_eye(params, np.random.default_rng(seed), image_id='default_face')
        e = annotation.corners.right_outer.distance_to(annotation.corners.right_inner)
        right, left = detect_handcrafted(image, annotation.corners, annotation.contours, edge_sigma=2.0)
        for eye, truth in ((right, annotation.right_center), (left, annotation.left_center)):
            assert not eye.flagged
            assert eye.center.distance_to(truth) < 1.5
            assert eye.radius == pytest.approx(params.iris_radius_frac * e, abs=1.0)

    def test_synthetic_face(self, open_eye_face):
        image, annotation = open_eye_face
        right, left = detect_handcrafted(image, annotation.corners, annotation.contours)
        assert not right.flagged and not left.flagged
        assert right.center.distance_to(annotation.right_center) < 1.0
        assert left.center.distance_to(annotation.left_center) < 1.0

    def test_no_candidates_falls_back_to_corner_midpoint(self):
        image = np.full((120, 120), 230, dtype=np.uint8)
        eye = detect_eye(image, circle_contour(60, 60, 20), CORNERS)
        assert eye.flagged
        assert eye.center == Point2(60.0, 60.0)
        assert eye.radius == pytest.approx(8.0)

    def test_iris_at_the_mask_edge_does_not_crash(self):
        image = dark_disk_image(120, 120, [(45, 60)], 14)
        eye = detect_eye(image, circle_contour(60, 60, 20), CORNERS)
        assert np.isfinite(eye.center.x) and np.isfinite(eye.center.y)
        assert eye.flagged or eye.center.distance_to(Point2(60, 60)) <= 30.0
