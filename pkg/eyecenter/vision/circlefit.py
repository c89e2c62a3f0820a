"""
Robust iris circle refinement
Edge points along radial scan lines and a Tukey-weighted Gauss-Newton circle fit
anchored to prior center and radius
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from models import CircleEstimate, EyeContour, Point2
from eyecenter.utils.error_handlers import CircleFitError
from eyecenter.vision.geometry import EyeAnchor, points_in_eye_mask
from eyecenter.vision.imaging import GradientField, ImageLike

logger = logging.getLogger('eyecenter.detection')

ABS_COST_FLOOR = 1e-24
DEFAULT_RADIUS_FRAC = 0.1


@dataclass(frozen=True)
class RobustFitConfig:
    """Edge extraction and robust fit parameters"""
    w1: float = 1.0
    w2: float = 0.1
    w3: float = 0.1
    max_iterations: int = 30
    rel_tolerance: float = 1e-4
    tukey_initial_factor: float = 0.3
    tukey_final_factor: float = 0.1
    scan_fraction: float = 0.3
    angle_cutoff_deg: float = 25.0
    sectors: Tuple[Tuple[float, float], ...] = ((-45.0, 45.0), (135.0, 225.0))
    angle_step_deg: float = 5.0
    scan_step: float = 0.25
    max_step_halvings: int = 8

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3) < 0:
            raise ValueError("fit weights must be non-negative")
        if self.tukey_initial_factor <= 0 or self.tukey_final_factor <= 0:
            raise ValueError("Tukey factors must be positive")
        if not 0 < self.angle_cutoff_deg < 90:
            raise ValueError(f"angle cutoff must be in (0, 90) degrees, got {self.angle_cutoff_deg}")
        if self.max_iterations < 1 or self.angle_step_deg <= 0 or self.scan_step <= 0:
            raise ValueError("iteration count and sampling steps must be positive")

    def sample_angles(self) -> np.ndarray:
        """Sample angles in degrees, both sector ends included"""
        step = self.angle_step_deg
        return np.concatenate([np.arange(lo, hi + step / 2.0, step) for lo, hi in self.sectors])


@dataclass(frozen=True, eq=False)
class EdgePointSet:
    """Iris edge points with their gradient alignment and the circle angle they came from"""
    points: np.ndarray
    scores: np.ndarray
    angles: np.ndarray
    flagged: bool = False

    def __len__(self):
        return len(self.points)

    @classmethod
    def empty(cls, flagged: bool = True) -> 'EdgePointSet':
        return cls(np.zeros((0, 2)), np.zeros(0), np.zeros(0), flagged)

    @classmethod
    def from_points(cls, points) -> 'EdgePointSet':
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return cls(points, np.ones(len(points)), np.zeros(len(points)))


def edge_sigma(anchor: EyeAnchor) -> float:
    """Smoothing of the edge-scoring gradients: max(1, 0.02 |E_inter|) px"""
    return max(1.0, 0.02 * anchor.distance)


def extract_edge_points(image: ImageLike, init: CircleEstimate, contour: Optional[EyeContour],
                        cfg: RobustFitConfig = RobustFitConfig(),
                        gradients: Optional[GradientField] = None) -> EdgePointSet:
    """
    Strongest outward edge along radial scan lines crossing the initial circle

    Args:
        image: Grayscale image (ignored when gradients are given)
        init: Initial circle; scan lines cover r +- scan_fraction * r
        contour: Eye opening; samples on the circle outside it are dropped (None keeps all)
        cfg: Fit configuration
        gradients: Precomputed gradient field of the image

    Returns:
        EdgePointSet, flagged when the mask excluded every sample
    """
    if gradients is None:
        gradients = GradientField(image, 1.0)

    theta = np.deg2rad(cfg.sample_angles())
    normals = np.column_stack([np.cos(theta), np.sin(theta)])
    center = np.array([init.a, init.b])

    if contour is not None:
        on_circle = center + init.r * normals
        keep = points_in_eye_mask(on_circle, contour, 0.0)
        theta, normals = theta[keep], normals[keep]
        if len(theta) == 0:
            logger.debug(f"eye mask excludes every scan line of circle ({init.a:.1f}, {init.b:.1f}, {init.r:.1f})")
            return EdgePointSet.empty(flagged=True)

    reach = cfg.scan_fraction * init.r
    radii = init.r + np.arange(-reach, reach + cfg.scan_step / 2.0, cfg.scan_step)
    xs = center[0] + radii[None, :] * normals[:, 0:1]
    ys = center[1] + radii[None, :] * normals[:, 1:2]
    gx, gy = gradients.sample(xs, ys)
    alignment = gx * normals[:, 0:1] + gy * normals[:, 1:2]

    best = np.argmax(alignment, axis=1)
    rows = np.arange(len(theta))
    score = alignment[rows, best]
    magnitude = np.hypot(gx[rows, best], gy[rows, best])
    with np.errstate(divide='ignore', invalid='ignore'):
        cosine = np.where(magnitude > 0, score / magnitude, -1.0)
    keep = (score > 0) & (cosine >= np.cos(np.deg2rad(cfg.angle_cutoff_deg)))

    offset = _parabolic_offsets(alignment, best) * cfg.scan_step
    radius = radii[best] + offset
    points = center + radius[:, None] * normals
    return EdgePointSet(points[keep], score[keep], np.rad2deg(theta[keep]))


def _parabolic_offsets(profile: np.ndarray, peak: np.ndarray) -> np.ndarray:
    """Sub-sample offset of each row's peak from a parabola through its neighbors"""
    n = profile.shape[1]
    rows = np.arange(len(peak))
    inner = (peak > 0) & (peak < n - 1)
    before = profile[rows, np.clip(peak - 1, 0, n - 1)]
    at = profile[rows, peak]
    after = profile[rows, np.clip(peak + 1, 0, n - 1)]
    curvature = before - 2.0 * at + after
    valid = inner & (curvature < 0)
    with np.errstate(divide='ignore', invalid='ignore'):
        offset = np.where(valid, 0.5 * (before - after) / curvature, 0.0)
    return np.clip(offset, -0.5, 0.5)


def plain_circle_cost(points, a: float, b: float, r: float) -> float:
    """Sum of squared radial residuals of the points to circle (a, b, r)"""
    points = _as_points(points)
    d = np.hypot(points[:, 0] - a, points[:, 1] - b)
    return float(np.sum((d - r) ** 2))


def tukey_rho(u, c: float) -> np.ndarray:
    """Tukey biweight loss; saturates at c^2/6 for |u| >= c"""
    u = np.asarray(u, dtype=np.float64)
    x = np.minimum((u / c) ** 2, 1.0)
    return (c * c / 6.0) * (1.0 - (1.0 - x) ** 3)


def tukey_weights(u, c: float) -> np.ndarray:
    """IRLS weights psi(u)/u of the Tukey loss"""
    u = np.asarray(u, dtype=np.float64)
    x = (u / c) ** 2
    return np.where(x < 1.0, (1.0 - x) ** 2, 0.0)


def _as_points(points) -> np.ndarray:
    if isinstance(points, EdgePointSet):
        return points.points
    if len(points) and isinstance(points[0], Point2):
        return np.array([p.as_array() for p in points])
    return np.asarray(points, dtype=np.float64).reshape(-1, 2)


@dataclass
class _Problem:
    """
    Robust circle cost in units of the initial radius

    Residual losses are divided by the squared final Tukey scale and prior
    offsets by r_init squared; both terms are dimensionless.
    """
    points: np.ndarray
    prior: np.ndarray
    cfg: RobustFitConfig
    c: float = 1.0
    data_scale: float = 1.0
    prior_scale: float = 1.0

    def residuals(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        delta = self.points - p[:2]
        d = np.hypot(delta[:, 0], delta[:, 1])
        return d - p[2], delta, d

    def cost(self, p: np.ndarray) -> float:
        res, _, _ = self.residuals(p)
        cfg = self.cfg
        value = (cfg.w1 * float(np.mean(tukey_rho(res, self.c))) / self.data_scale ** 2
                 + (cfg.w2 * ((p[0] - self.prior[0]) ** 2 + (p[1] - self.prior[1]) ** 2)
                    + cfg.w3 * (p[2] - self.prior[2]) ** 2) / self.prior_scale ** 2)
        if not np.isfinite(value):
            raise CircleFitError(f"robust circle cost became non-finite at {p.tolist()}")
        return value

    def step(self, p: np.ndarray) -> np.ndarray:
        """Gauss-Newton step of the IRLS surrogate at p"""
        cfg = self.cfg
        res, delta, d = self.residuals(p)
        d = np.maximum(d, 1e-12)
        jacobian = np.column_stack([-delta[:, 0] / d, -delta[:, 1] / d, -np.ones(len(d))])
        weights = tukey_weights(res, self.c) * cfg.w1 / (len(res) * self.data_scale ** 2)
        prior_weights = np.array([cfg.w2, cfg.w2, cfg.w3]) / self.prior_scale ** 2

        hessian = (jacobian * weights[:, None]).T @ jacobian + 2.0 * np.diag(prior_weights)
        gradient = jacobian.T @ (weights * res) + 2.0 * prior_weights * (p - self.prior)
        step, *_ = np.linalg.lstsq(hessian, -gradient, rcond=None)
        return step


def robust_fit(points, prior: Tuple[float, float, float], r_init: float,
               cfg: RobustFitConfig = RobustFitConfig()) -> CircleEstimate:
    """
    Fit a circle to edge points with the Tukey-robust, prior-anchored cost

    The Tukey scale starts at tukey_initial_factor * r_init and drops to
    tukey_final_factor * r_init the first time the relative cost change falls
    under rel_tolerance; iteration then continues within the same budget.
    A step that raises the cost is halved up to max_step_halvings times.
    Residual losses are measured in units of the final Tukey scale and prior
    offsets in units of r_init, so the fit is equivariant to joint scaling.

    Args:
        points: EdgePointSet, list of Point2 or (N, 2) array
        prior: (a0, b0, r_default) in pixels
        r_init: Initial radius, also the Tukey scale reference
        cfg: Fit configuration

    Returns:
        CircleEstimate; refined=False when fewer than 3 points were given

    Raises:
        CircleFitError: if the cost becomes non-finite
        ValueError: if r_init is not positive
    """
    a0, b0, r_default = (float(v) for v in prior)
    if not r_init > 0:
        raise ValueError(f"initial radius must be positive, got {r_init}")
    xy = _as_points(points)
    if len(xy) < 3:
        return CircleEstimate(a0, b0, r_default, iterations=0, refined=False)

    problem = _Problem(xy, np.array([a0, b0, r_default]), cfg, c=cfg.tukey_initial_factor * r_init,
                       data_scale=cfg.tukey_final_factor * r_init, prior_scale=r_init)
    p = np.array([a0, b0, r_init], dtype=np.float64)
    cost = problem.cost(p)
    trace = [cost]
    final_phase = False
    iterations = 0

    while iterations < cfg.max_iterations:
        step = problem.step(p)
        accepted = None
        scale = 1.0
        for _ in range(cfg.max_step_halvings + 1):
            candidate = p + scale * step
            if candidate[2] > 0:
                candidate_cost = problem.cost(candidate)
                if candidate_cost <= cost:
                    accepted = candidate, candidate_cost
                    break
            scale *= 0.5

        if accepted is None:
            converged = True
        else:
            iterations += 1
            p, new_cost = accepted
            converged = (new_cost <= ABS_COST_FLOOR
                         or abs(cost - new_cost) <= cfg.rel_tolerance * max(cost, ABS_COST_FLOOR))
            cost = new_cost
            trace.append(cost)

        if not converged:
            continue
        if final_phase:
            break
        final_phase = True
        # a smaller Tukey scale never raises rho, so the trace stays non-increasing
        problem.c = cfg.tukey_final_factor * r_init
        cost = problem.cost(p)
        trace.append(cost)

    res, _, _ = problem.residuals(p)
    inliers = float(np.mean(np.abs(res) < problem.c))
    return CircleEstimate(float(p[0]), float(p[1]), float(p[2]), final_cost=cost, iterations=iterations,
                          inlier_fraction=inliers, refined=True, cost_trace=tuple(trace))


def refine(image: ImageLike, regressor_centers: Sequence[Point2], anchor: EyeAnchor,
           contours: Optional[Sequence[Optional[EyeContour]]] = None,
           cfg: RobustFitConfig = RobustFitConfig()) -> Tuple[CircleEstimate, CircleEstimate]:
    """
    Refine both regressed centers to iris circle fits

    r_init and r_default are 0.1 |E_inter|; the prior center is the regressor output.

    Args:
        image: Grayscale image
        regressor_centers: (right, left) centers in image pixels
        anchor: Eye anchor of the face
        contours: Optional (right, left) eye-opening polygons
        cfg: Fit configuration

    Returns:
        (right, left) CircleEstimate; an eye without usable edges keeps its
        regressor center with refined=False
    """
    contours = contours or (None, None)
    r_default = DEFAULT_RADIUS_FRAC * anchor.distance
    gradients = GradientField(image, edge_sigma(anchor))

    estimates = []
    for center, contour in zip(regressor_centers, contours):
        init = CircleEstimate(center.x, center.y, r_default, refined=False)
        edges = extract_edge_points(image, init, contour, cfg, gradients)
        estimates.append(robust_fit(edges, (center.x, center.y, r_default), r_default, cfg))
    return estimates[0], estimates[1]
