"""
Tests for circle refinement

Edge extraction, the Tukey loss and the robust prior-anchored circle fit.
"""

import numpy as np
import pytest
from scipy.optimize import least_squares

from eyecenter.utils import CircleFitError
from eyecenter.vision.circlefit import (
    EdgePointSet,
    RobustFitConfig,
    edge_sigma,
    extract_edge_points,
    plain_circle_cost,
    refine,
    robust_fit,
    tukey_rho,
    tukey_weights,
)
from eyecenter.vision.geometry import EyeAnchor
from models import CircleEstimate, Point2
from tests.helpers import circle_contour, dark_disk_image


def circle_points(a, b, r, n=24):
    theta = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([a + r * np.cos(theta), b + r * np.sin(theta)])


class TestRobustFitConfig:
    """Tests for RobustFitConfig"""

    def test_sample_angles_cover_both_sectors(self):
        angles = RobustFitConfig().sample_angles()
        assert len(angles) == 38
        assert angles[0] == -45.0 and angles[-1] == 225.0
        assert 45.0 in angles and 135.0 in angles

    @pytest.mark.parametrize('kwargs', [
        {'w2': -0.1}, {'tukey_final_factor': 0.0}, {'angle_cutoff_deg': 90.0}, {'scan_step': 0.0},
    ])
    def test_invalid_values(self, kwargs):
        with pytest.raises(ValueError):
            RobustFitConfig(**kwargs)


class TestExtractEdgePoints:
    """Tests for extract_edge_points"""

    def setup_method(self):
        self.image = dark_disk_image(120, 120, [(60, 60)], 20)
        self.init = CircleEstimate(60.0, 60.0, 20.0)

    def test_points_lie_on_the_disk_boundary(self):
        edges = extract_edge_points(self.image, self.init, None)
        assert len(edges) > 30
        distances = np.hypot(edges.points[:, 0] - 60.0, edges.points[:, 1] - 60.0)
        assert np.all(np.abs(distances - 20.0) < 0.75)

    def test_uniform_image_gives_no_points(self):
        edges = extract_edge_points(np.full((120, 120), 128, dtype=np.uint8), self.init, None)
        assert len(edges) == 0

    def test_sector_rule(self):
        edges = extract_edge_points(self.image, self.init, None)
        angles = np.mod(edges.angles, 360.0)
        assert not np.any((angles > 45.0) & (angles < 135.0))
        assert not np.any((angles > 225.0) & (angles < 315.0))

    def test_mask_excluding_everything_is_flagged(self):
        far_away = circle_contour(10, 10, 4)
        edges = extract_edge_points(self.image, self.init, far_away)
        assert len(edges) == 0
        assert edges.flagged

    def test_mask_keeps_samples_inside(self):
        opening = circle_contour(60, 60, 30)
        edges = extract_edge_points(self.image, self.init, opening)
        assert len(edges) > 30
        assert not edges.flagged


class TestPlainCircleCost:
    """Tests for plain_circle_cost"""

    def test_points_on_the_circle(self):
        assert plain_circle_cost(circle_points(0, 0, 10), 0, 0, 10) == pytest.approx(0.0, abs=1e-20)

    def test_single_point(self):
        assert plain_circle_cost([[12.0, 0.0]], 0, 0, 10) == pytest.approx(4.0)

    def test_translation_invariance(self):
        points = np.random.default_rng(0).uniform(-5, 5, (10, 2))
        shifted = points + [17.0, -4.0]
        assert plain_circle_cost(shifted, 18.0, -3.0, 4.0) == pytest.approx(plain_circle_cost(points, 1.0, 1.0, 4.0))

    def test_accepts_points(self):
        assert plain_circle_cost([Point2(0, 5)], 0, 0, 3) == pytest.approx(4.0)


class TestTukey:
    """Tests for tukey_rho and tukey_weights"""

    def test_zero_at_origin(self):
        assert float(tukey_rho(0.0, 2.0)) == 0.0

    def test_monotone_and_saturating(self):
        u = np.linspace(0.0, 5.0, 200)
        rho = tukey_rho(u, 2.0)
        assert np.all(np.diff(rho) >= 0)
        assert np.allclose(rho[u >= 2.0], 4.0 / 6.0)

    def test_symmetric(self):
        u = np.linspace(-3, 3, 13)
        assert np.allclose(tukey_rho(u, 1.5), tukey_rho(-u, 1.5))

    def test_weights_vanish_beyond_scale(self):
        w = tukey_weights([0.0, 0.5, 2.0, 3.0], 2.0)
        assert w[0] == 1.0
        assert 0.0 < w[1] < 1.0
        assert w[2] == 0.0 and w[3] == 0.0


class TestRobustFit:
    """Tests for robust_fit"""

    def test_noise_free_points_at_the_prior(self):
        fit = robust_fit(circle_points(0, 0, 10), (0.0, 0.0, 10.0), 10.0)
        assert fit.refined
        assert (fit.a, fit.b, fit.r) == pytest.approx((0.0, 0.0, 10.0), abs=1e-6)

    def test_outliers_are_ignored(self):
        points = circle_points(0, 0, 10)
        outliers = [0, 5, 10, 15, 20]
        points[outliers] *= 1.5
        fit = robust_fit(points, (0.0, 0.0, 10.0), 10.0)
        assert np.hypot(fit.a, fit.b) < 0.1
        assert fit.r == pytest.approx(10.0, abs=0.2)

    def test_outliers_with_offset_start(self):
        points = circle_points(0, 0, 10)
        points[[1, 9, 17]] *= 1.5
        fit = robust_fit(points, (0.8, -0.6, 10.5), 10.5, RobustFitConfig(w2=0.0, w3=0.0))
        assert np.hypot(fit.a, fit.b) < 0.1
        assert fit.r == pytest.approx(10.0, abs=0.2)
        assert fit.inlier_fraction < 1.0

    def test_cost_trace_never_increases(self):
        rng = np.random.default_rng(1)
        points = circle_points(4, -2, 12, n=40) + rng.normal(scale=0.3, size=(40, 2))
        fit = robust_fit(points, (5.0, -1.0, 11.0), 11.0)
        trace = np.array(fit.cost_trace)
        assert len(trace) >= 2
        assert np.all(np.diff(trace) <= 1e-15)
        assert fit.iterations <= RobustFitConfig().max_iterations

    def test_strong_priors_dominate(self):
        cfg = RobustFitConfig(w2=1e9, w3=1e9)
        fit = robust_fit(circle_points(5, 5, 12), (0.0, 0.0, 10.0), 10.0, cfg)
        assert (fit.a, fit.b, fit.r) == pytest.approx((0.0, 0.0, 10.0), abs=1e-3)

    def test_matches_least_squares_without_priors(self):
        rng = np.random.default_rng(2)
        points = circle_points(3, -2, 15, n=40) + rng.normal(scale=0.02, size=(40, 2))
        fit = robust_fit(points, (2.0, -1.0, 14.0), 14.0, RobustFitConfig(w2=0.0, w3=0.0))

        def residuals(p):
            return np.hypot(points[:, 0] - p[0], points[:, 1] - p[1]) - p[2]

        oracle = least_squares(residuals, [2.0, -1.0, 14.0]).x
        assert np.allclose([fit.a, fit.b, fit.r], oracle, atol=1e-3)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(3)
        points = circle_points(0, 0, 9, n=30) + rng.normal(scale=0.2, size=(30, 2))
        shift = np.array([30.0, -12.0])
        base = robust_fit(points, (0.5, 0.5, 9.0), 9.0)
        moved = robust_fit(points + shift, (30.5, -11.5, 9.0), 9.0)
        assert moved.a == pytest.approx(base.a + 30.0, abs=1e-6)
        assert moved.b == pytest.approx(base.b - 12.0, abs=1e-6)
        assert moved.r == pytest.approx(base.r, abs=1e-6)

    def test_joint_scaling_equivariance(self):
        rng = np.random.default_rng(4)
        points = circle_points(2, -1, 11, n=30) + rng.normal(scale=0.2, size=(30, 2))
        base = robust_fit(points, (2.8, -0.4, 10.0), 10.0)
        scaled = robust_fit(points * 3.0, (8.4, -1.2, 30.0), 30.0)
        assert (scaled.a, scaled.b, scaled.r) == pytest.approx((3 * base.a, 3 * base.b, 3 * base.r), abs=1e-6)

    def test_default_priors_barely_move_a_clean_fit(self):
        fit = robust_fit(circle_points(0, 0, 12), (2.0, 0.0, 12.0), 12.0)
        assert np.hypot(fit.a, fit.b) < 0.05
        assert fit.r == pytest.approx(12.0, abs=0.05)

    def test_recovers_noisy_circles_with_outliers(self):
        """Default weights recover at least 95 of 100 perturbed circles"""
        rng = np.random.default_rng(11)
        recovered = 0
        for _ in range(100):
            a, b = rng.uniform(-50.0, 50.0, size=2)
            r = rng.uniform(10.0, 40.0)
            theta = rng.uniform(0.0, 2.0 * np.pi) + 2.0 * np.pi * np.arange(24) / 24
            normals = np.column_stack([np.cos(theta), np.sin(theta)])
            points = np.column_stack([a, b]) + r * normals + rng.normal(scale=0.2, size=(24, 2))
            outliers = rng.choice(24, size=5, replace=False)
            shifts = rng.uniform(3.0, 8.0, size=5) * rng.choice([-1.0, 1.0], size=5)
            points[outliers] += shifts[:, None] * normals[outliers]

            direction = rng.uniform(0.0, 2.0 * np.pi)
            offset = rng.uniform(0.0, 2.0)
            r_prior = r * (1.0 + rng.uniform(-0.2, 0.2))
            prior = (a + offset * np.cos(direction), b + offset * np.sin(direction), r_prior)
            fit = robust_fit(points, prior, r_prior)

            assert fit.iterations <= 30
            assert np.all(np.diff(fit.cost_trace) <= 1e-12)
            if np.hypot(fit.a - a, fit.b - b) < 0.3 and abs(fit.r - r) < 0.5:
                recovered += 1
        assert recovered >= 95

    @pytest.mark.parametrize('r_init', [0.0, -3.0])
    def test_non_positive_r_init_raises(self, r_init):
        with pytest.raises(ValueError):
            robust_fit(circle_points(0, 0, 10), (0.0, 0.0, 10.0), r_init)

    def test_too_few_points_fall_back_to_prior(self):
        fit = robust_fit([[1.0, 0.0], [0.0, 1.0]], (4.0, 5.0, 6.0), 8.0)
        assert not fit.refined
        assert (fit.a, fit.b, fit.r) == (4.0, 5.0, 6.0)

    def test_empty_edge_set(self):
        fit = robust_fit(EdgePointSet.empty(), (4.0, 5.0, 6.0), 6.0)
        assert not fit.refined

    def test_non_finite_points_raise(self):
        points = circle_points(0, 0, 10)
        points[3] = np.nan
        with pytest.raises(CircleFitError):
            robust_fit(points, (0.0, 0.0, 10.0), 10.0)


class TestRefine:
    """Tests for refine"""

    def setup_method(self):
        # |E_inter| = 200 gives r_init = r_default = 20
        self.anchor = EyeAnchor(Point2(0.0, 0.0), Point2(200.0, 0.0))

    def test_edge_sigma(self):
        assert edge_sigma(self.anchor) == pytest.approx(4.0)
        assert edge_sigma(EyeAnchor(Point2(0, 0), Point2(20, 0))) == 1.0

    def test_offset_start_reaches_the_iris(self):
        image = dark_disk_image(120, 120, [(60, 60)], 20)
        start = Point2(62.0, 58.5)
        right, left = refine(image, (start, start), self.anchor)
        assert right.refined and left.refined
        assert np.hypot(right.a - 60.0, right.b - 60.0) < 0.3

    def test_uniform_image_keeps_regressor_center(self):
        image = np.full((120, 120), 140, dtype=np.uint8)
        centers = (Point2(40.0, 60.0), Point2(80.0, 60.0))
        right, left = refine(image, centers, self.anchor)
        assert not right.refined and not left.refined
        assert right.center == centers[0] and left.center == centers[1]
        assert right.r == pytest.approx(20.0)
