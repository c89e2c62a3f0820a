"""
Hand-crafted eye-center detector
Radius-band gradient-alignment voting inside the eroded eye mask, candidate
hill-climbing over center and radius, then robust circle refinement
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models import Candidate, CircleEstimate, EyeContour, EyeCorners, Point2
from eyecenter.utils.error_handlers import DegenerateEyeRegionError
from eyecenter.vision.circlefit import EdgePointSet, RobustFitConfig, extract_edge_points, robust_fit
from eyecenter.vision.geometry import eye_size, mask_pixels
from eyecenter.vision.imaging import GradientField, ImageLike, as_float_image, sample_bilinear, smooth

logger = logging.getLogger('eyecenter.detection')

GRADIENT_FLOOR = 1e-6

# 8-neighborhood in a fixed order; earlier entries win ties between neighbors
NEIGHBORS = ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))


@dataclass(frozen=True)
class VoteConfig:
    """Voting detector parameters, as fractions of the eye size E"""
    radius_band: Tuple[float, float] = (0.3, 0.5)
    default_iris_radius_frac: float = 0.2
    candidate_threshold_frac: float = 0.8
    smoothing_sigma_frac: float = 0.05
    erosion_frac: float = 0.05
    ring_half_width: float = 0.5

    def __post_init__(self):
        lo, hi = self.radius_band
        if not 0 < lo <= hi:
            raise ValueError(f"radius band must be positive and well-ordered, got {self.radius_band}")
        for name in ('default_iris_radius_frac', 'candidate_threshold_frac',
                     'smoothing_sigma_frac', 'erosion_frac'):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must be in (0, 1), got {value}")

    def smoothing_sigma(self, e: float) -> float:
        return min(max(self.smoothing_sigma_frac * e, 1.0), 5.0)


@dataclass(frozen=True)
class HandcraftedEye:
    """Outcome of the voting detector for one eye"""
    center: Point2
    radius: float
    score: float
    flagged: bool = False
    refined: bool = False
    candidates: int = 0


class VotingField:
    """
    Smoothed image, unit gradients and darkness weights for one eye size

    The darkness weight at a center is 255 minus the smoothed intensity there.
    """

    def __init__(self, image: ImageLike, e: float, cfg: VoteConfig = VoteConfig()):
        if not e > 0:
            raise ValueError(f"eye size must be positive, got {e}")
        self.e = e
        self.cfg = cfg
        self.smoothed = smooth(as_float_image(image), cfg.smoothing_sigma(e))
        gy, gx = np.gradient(self.smoothed)
        magnitude = np.hypot(gx, gy)
        strong = magnitude >= GRADIENT_FLOOR
        safe = np.where(strong, magnitude, 1.0)
        self.ux = np.where(strong, gx / safe, 0.0)
        self.uy = np.where(strong, gy / safe, 0.0)
        self.r_min = cfg.radius_band[0] * e
        self.r_max = cfg.radius_band[1] * e
        self._ring_cache: Dict[Tuple[int, int], Tuple[float, float]] = {}

    @property
    def shape(self):
        return self.smoothed.shape

    def darkness(self, x: float, y: float) -> float:
        return 255.0 - float(sample_bilinear(self.smoothed, x, y))

    def _annulus(self, x: float, y: float, r_lo: float, r_hi: float):
        """In-image pixels at distance [r_lo, r_hi] from (x, y) with their alignment to the outward direction"""
        h, w = self.shape
        x0, x1 = max(int(math.floor(x - r_hi)), 0), min(int(math.ceil(x + r_hi)), w - 1)
        y0, y1 = max(int(math.floor(y - r_hi)), 0), min(int(math.ceil(y + r_hi)), h - 1)
        if x1 < x0 or y1 < y0:
            return np.zeros(0), np.zeros(0)
        ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
        dx = xs.ravel() - x
        dy = ys.ravel() - y
        distance = np.hypot(dx, dy)
        inside = (distance >= r_lo) & (distance <= r_hi) & (distance > 0)
        dx, dy, distance = dx[inside], dy[inside], distance[inside]
        px, py = xs.ravel()[inside], ys.ravel()[inside]
        alignment = (dx * self.ux[py, px] + dy * self.uy[py, px]) / distance
        return distance, np.maximum(alignment, 0.0)

    def score(self, x: float, y: float) -> float:
        distance, alignment = self._annulus(x, y, self.r_min, self.r_max)
        if len(distance) == 0:
            logger.debug(f"voting annulus at ({x:.1f}, {y:.1f}) lies outside the image")
            return 0.0
        return self.darkness(x, y) * float(np.mean(alignment))

    def ring_scores(self, x: float, y: float) -> Tuple[np.ndarray, np.ndarray]:
        """Single-radius ring scores for every integer radius in the band"""
        radii = np.arange(math.ceil(self.r_min), math.floor(self.r_max) + 1, dtype=np.float64)
        half = self.cfg.ring_half_width
        distance, alignment = self._annulus(x, y, max(radii[0] - half, 0.0) if len(radii) else 0.0,
                                            (radii[-1] + half) if len(radii) else 0.0)
        weight = self.darkness(x, y)
        scores = np.zeros(len(radii))
        for k, r in enumerate(radii):
            ring = np.abs(distance - r) <= half
            if np.any(ring):
                scores[k] = weight * float(np.mean(alignment[ring]))
        return radii, scores

    def best_ring(self, x: int, y: int) -> Tuple[float, float]:
        """(score, radius) of the best single radius at an integer position, cached"""
        key = (int(x), int(y))
        if key not in self._ring_cache:
            radii, scores = self.ring_scores(float(x), float(y))
            if len(radii) == 0:
                self._ring_cache[key] = (0.0, self.cfg.default_iris_radius_frac * self.e)
            else:
                k = int(np.argmax(scores))
                self._ring_cache[key] = (float(scores[k]), float(radii[k]))
        return self._ring_cache[key]


def score_at(image: ImageLike, c: Point2, e: float, cfg: VoteConfig = VoteConfig(),
             field: Optional[VotingField] = None) -> float:
    """
    Gradient-alignment score of center c over the radius band

    Mean over in-image annulus pixels of max(d_i . g_i, 0), scaled by the
    darkness 255 - I*(c).

    Args:
        image: Grayscale image (ignored when field is given)
        c: Candidate center, pixels
        e: Eye size in pixels
        cfg: Voting configuration
        field: Precomputed VotingField for this image and eye size

    Returns:
        Score (0 when the annulus is entirely outside the image)
    """
    field = field or VotingField(image, e, cfg)
    return field.score(c.x, c.y)


def score_map(field: VotingField, pixels: np.ndarray) -> np.ndarray:
    """Scores at integer (x, y) pixels, each computed exactly as score_at does"""
    return np.array([field.score(float(x), float(y)) for x, y in pixels])


def _local_maxima(pixels: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """
    Indices of masked local maxima

    A pixel qualifies when no in-mask 8-neighbor scores higher and every
    in-mask neighbor earlier in scan order scores strictly lower.
    """
    order = {(int(x), int(y)): i for i, (x, y) in enumerate(pixels)}
    maxima = []
    for i, (x, y) in enumerate(pixels):
        s = scores[i]
        for dx, dy in NEIGHBORS:
            j = order.get((int(x) + dx, int(y) + dy))
            if j is None:
                continue
            if scores[j] > s or (j < i and scores[j] == s):
                break
        else:
            maxima.append(i)
    return np.array(maxima, dtype=int)


def find_candidates(image: ImageLike, contour: EyeContour, corners: Tuple[Point2, Point2],
                    cfg: VoteConfig = VoteConfig(), field: Optional[VotingField] = None) -> List[Candidate]:
    """
    Strong local maxima of the voting score inside the eroded eye mask

    Args:
        image: Grayscale image
        contour: Eye-opening polygon
        corners: The eye's two corners, giving E
        cfg: Voting configuration
        field: Precomputed VotingField

    Returns:
        Candidates scoring at least candidate_threshold_frac of the masked
        maximum, best first; ties go to the one nearer the mask centroid, then
        scan order. Empty when the masked maximum is not positive.

    Raises:
        DegenerateEyeRegionError: if the eroded mask holds no pixel
    """
    e = eye_size(*corners)
    field = field or VotingField(image, e, cfg)
    pixels = mask_pixels(contour, cfg.erosion_frac * e, field.shape)
    if len(pixels) == 0:
        raise DegenerateEyeRegionError(f"eroded eye mask is empty (E = {e:.2f} px)")

    scores = score_map(field, pixels)
    global_max = float(scores.max())
    if global_max <= 0:
        return []

    maxima = _local_maxima(pixels, scores)
    maxima = maxima[scores[maxima] >= cfg.candidate_threshold_frac * global_max]
    centroid = pixels.mean(axis=0)
    distance = np.hypot(*(pixels[maxima] - centroid).T) if len(maxima) else np.zeros(0)
    ranked = sorted(range(len(maxima)), key=lambda k: (-scores[maxima[k]], distance[k], maxima[k]))

    radius = cfg.default_iris_radius_frac * e
    return [Candidate(Point2(float(pixels[maxima[k]][0]), float(pixels[maxima[k]][1])), radius,
                      float(scores[maxima[k]])) for k in ranked]


def hill_climb(image: ImageLike, cand: Candidate, e: float, cfg: VoteConfig = VoteConfig(),
               field: Optional[VotingField] = None) -> Candidate:
    """
    Walk to the best 8-neighbor until the current pixel is not beaten

    Each position is scored by its best single-radius ring score over the
    integer radii of the band; ties keep the current position.

    Args:
        image: Grayscale image
        cand: Starting candidate
        e: Eye size in pixels
        cfg: Voting configuration
        field: Precomputed VotingField

    Returns:
        Candidate at the final position with its best radius and ring score
    """
    field = field or VotingField(image, e, cfg)
    h, w = field.shape
    x, y = int(round(cand.position.x)), int(round(cand.position.y))
    score, radius = field.best_ring(x, y)

    for _ in range(max(1, math.ceil(0.5 * e))):
        best = None
        for dx, dy in NEIGHBORS:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < h):
                continue
            s, r = field.best_ring(nx, ny)
            if s > score and (best is None or s > best[0]):
                best = (s, r, nx, ny)
        if best is None:
            break
        score, radius, x, y = best

    return Candidate(Point2(float(x), float(y)), radius, score)


def detect_eye(image: ImageLike, contour: EyeContour, corners: Tuple[Point2, Point2],
               cfg: VoteConfig = VoteConfig(), fit_cfg: RobustFitConfig = RobustFitConfig(),
               edge_sigma: float = 1.0) -> HandcraftedEye:
    """Candidates, hill-climb, best pick and circle refinement for one eye"""
    e = eye_size(*corners)
    field = VotingField(image, e, cfg)
    candidates = find_candidates(image, contour, corners, cfg, field)
    if not candidates:
        fallback = corners[0].midpoint(corners[1])
        logger.info(f"no voting candidate; falling back to the corner midpoint ({fallback.x:.1f}, {fallback.y:.1f})")
        return HandcraftedEye(fallback, cfg.default_iris_radius_frac * e, 0.0, flagged=True)

    climbed = [hill_climb(image, c, e, cfg, field) for c in candidates]
    best = max(range(len(climbed)), key=lambda k: (climbed[k].score, -k))
    winner = climbed[best]

    gradients = GradientField(image, edge_sigma)
    radius, edges = _strongest_edges(image, winner, contour, (winner.radius, cfg.default_iris_radius_frac * e),
                                     fit_cfg, gradients)
    fit = robust_fit(edges, (winner.position.x, winner.position.y, radius), radius, fit_cfg)
    return HandcraftedEye(fit.center, fit.r, winner.score, flagged=False, refined=fit.refined,
                          candidates=len(candidates))


def edge_support(edges: EdgePointSet, init: CircleEstimate, fit_cfg: RobustFitConfig) -> float:
    """Summed alignment of the edge points found strictly inside their scan range"""
    if len(edges) == 0:
        return 0.0
    distance = np.hypot(edges.points[:, 0] - init.a, edges.points[:, 1] - init.b)
    interior = np.abs(distance - init.r) < fit_cfg.scan_fraction * init.r - fit_cfg.scan_step
    return float(edges.scores[interior].sum())


def _strongest_edges(image: ImageLike, winner: Candidate, contour: EyeContour, radii: Sequence[float],
                     fit_cfg: RobustFitConfig, gradients: GradientField) -> Tuple[float, EdgePointSet]:
    """
    Edge scan around the winning position for each radius hypothesis

    The voted ring radius is bounded by the radius band, while irises smaller
    than the band sit near default_iris_radius_frac * E. The hypothesis whose
    edges have the larger support wins; ties keep the first.
    """
    best = None
    for radius in radii:
        init = CircleEstimate(winner.position.x, winner.position.y, radius, refined=False)
        edges = extract_edge_points(image, init, contour, fit_cfg, gradients)
        support = edge_support(edges, init, fit_cfg)
        if best is None or support > best[0]:
            best = (support, radius, edges)
    logger.debug(f"edge scan seeded at r = {best[1]:.1f} px (support {best[0]:.1f})")
    return best[1], best[2]


def detect_handcrafted(image: ImageLike, corners: EyeCorners, contours: Sequence[EyeContour],
                       cfg: VoteConfig = VoteConfig(), fit_cfg: RobustFitConfig = RobustFitConfig(),
                       edge_sigma: float = 1.0) -> Tuple[HandcraftedEye, HandcraftedEye]:
    """
    Hand-crafted centers and radii of both eyes

    Args:
        image: Grayscale image
        corners: Eye corners in pixels
        contours: (right, left) eye-opening polygons
        cfg: Voting configuration
        fit_cfg: Circle refinement configuration
        edge_sigma: Smoothing of the refinement gradients

    Returns:
        (right, left) HandcraftedEye
    """
    right = detect_eye(image, contours[0], corners.right_pair(), cfg, fit_cfg, edge_sigma)
    left = detect_eye(image, contours[1], corners.left_pair(), cfg, fit_cfg, edge_sigma)
    return right, left
