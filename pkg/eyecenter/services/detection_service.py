"""
Detection Service Layer
End-to-end eye-center detection: joint cascade regression, circle refinement
and per-eye closed-eye gating
"""

import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models import DetectionResult, EyeAnnotation, EyeContour, EyeDetection, GrayImage, Point2, Stage
from eyecenter.decorators import log_errors
from eyecenter.events import EventType, event_manager
from eyecenter.utils import ordered_map
from eyecenter.vision.cascade import CascadeModel, predict
from eyecenter.vision.circlefit import RobustFitConfig, edge_sigma, refine
from eyecenter.vision.geometry import build_transform, closure_ratio
from eyecenter.vision.hog import HogConfig
from eyecenter.vision.voting import HandcraftedEye, VoteConfig, detect_eye, detect_handcrafted

logger = logging.getLogger('eyecenter.detection')

# closure assumed for faces whose landmarks carry no eyelid contours
ASSUMED_CLOSURE = 0.5
APPROXIMATE_CONTOUR_POINTS = 16


@dataclass(frozen=True)
class PipelineConfig:
    """Closed-eye gating thresholds on the per-eye closure ratio"""
    refine_threshold: float = 0.3
    regress_threshold: float = 0.15
    use_refinement: bool = True

    def __post_init__(self):
        if not 0 < self.regress_threshold < self.refine_threshold < 1:
            raise ValueError(
                f"thresholds must satisfy 0 < regress < refine < 1, "
                f"got regress={self.regress_threshold}, refine={self.refine_threshold}")


def gate(ratio: float, cfg: PipelineConfig = PipelineConfig()) -> Stage:
    """
    Stage of one eye from its closure ratio

    r > refine_threshold refines (or only regresses with refinement off),
    regress_threshold < r <= refine_threshold regresses, anything lower falls
    back to the eyelid contour.
    """
    if ratio > cfg.refine_threshold:
        return Stage.REFINED if cfg.use_refinement else Stage.REGRESSED
    if ratio > cfg.regress_threshold:
        return Stage.REGRESSED
    return Stage.CONTOUR_FALLBACK


def approximate_contour(outer: Point2, inner: Point2, closure: float = ASSUMED_CLOSURE) -> EyeContour:
    """Ellipse through both corners with height closure * width, sampled uniformly in angle"""
    middle = outer.midpoint(inner).as_array()
    axis = inner.as_array() - outer.as_array()
    half_width = float(np.hypot(*axis)) / 2.0
    u = axis / (2.0 * half_width)
    v = np.array([-u[1], u[0]])
    theta = 2.0 * np.pi * np.arange(APPROXIMATE_CONTOUR_POINTS) / APPROXIMATE_CONTOUR_POINTS
    points = (middle[None, :] + half_width * np.cos(theta)[:, None] * u[None, :]
              + closure * half_width * np.sin(theta)[:, None] * v[None, :])
    return EyeContour(points)


def eye_contours(annotation: EyeAnnotation) -> Tuple[EyeContour, EyeContour]:
    """Annotated contours, or corner-derived open-eye ellipses when the landmarks have none"""
    if annotation.contours is not None:
        return annotation.contours
    c = annotation.corners
    return approximate_contour(c.right_outer, c.right_inner), approximate_contour(c.left_inner, c.left_outer)


def eyelid_gap_center(contour: EyeContour, corners: Tuple[Point2, Point2]) -> Point2:
    """
    Mean of the central upper and lower eyelid points

    The central points are the contour points on each side of the corner line
    whose projection on it lies nearest the corner midpoint.
    """
    middle = corners[0].midpoint(corners[1]).as_array()
    axis = corners[1].as_array() - corners[0].as_array()
    u = axis / np.hypot(*axis)
    v = np.array([-u[1], u[0]])
    offsets = contour.points - middle
    along = offsets @ u
    across = offsets @ v

    upper = np.flatnonzero(across < 0)
    lower = np.flatnonzero(across > 0)
    if len(upper) == 0 or len(lower) == 0:
        return contour.centroid()
    top = upper[np.argmin(np.abs(along[upper]))]
    bottom = lower[np.argmin(np.abs(along[lower]))]
    return Point2.from_array((contour.points[top] + contour.points[bottom]) / 2.0)


def clamp_to_image(p: Point2, image: GrayImage) -> Tuple[Point2, bool]:
    x = min(max(p.x, 0.0), image.width - 1.0)
    y = min(max(p.y, 0.0), image.height - 1.0)
    return Point2(x, y), (x != p.x or y != p.y)


class DetectionService:
    """Service layer for eye-center detection"""

    def __init__(self, pipeline_cfg: PipelineConfig = PipelineConfig(),
                 fit_cfg: RobustFitConfig = RobustFitConfig(), vote_cfg: VoteConfig = VoteConfig(),
                 hog_config: Optional[HogConfig] = None):
        self.pipeline_cfg = pipeline_cfg
        self.fit_cfg = fit_cfg
        self.vote_cfg = vote_cfg
        self.hog_config = hog_config

    def detect(self, model: Optional[CascadeModel], image: GrayImage, annotation: EyeAnnotation,
               cfg: Optional[PipelineConfig] = None) -> DetectionResult:
        """
        Detect both eye centers of one face

        Each eye is gated on its own closure ratio. Regression is joint and
        runs once when at least one eye is open enough for it. Without a model
        the voting detector stands in for regression and refinement.

        Args:
            model: Trained cascade, or None for the hand-crafted detector
            image: Grayscale image
            annotation: Landmarks (corners, optional contours) of the face
            cfg: Gating thresholds (default: the service's)

        Returns:
            DetectionResult with centers clamped to the image

        Raises:
            InvalidLandmarksError: for degenerate corners or contours
        """
        cfg = cfg or self.pipeline_cfg
        start = time.perf_counter()

        corners = annotation.corners
        anchor, transform = build_transform(corners)
        contours = eye_contours(annotation)
        pairs = (corners.right_pair(), corners.left_pair())
        ratios = tuple(closure_ratio(c) for c in contours)
        stages = [gate(r, cfg) for r in ratios]

        centers: List[Optional[Point2]] = [None, None]
        radii: List[Optional[float]] = [None, None]
        flagged = [False, False]

        active = [k for k in range(2) if stages[k] != Stage.CONTOUR_FALLBACK]
        if active and model is not None:
            shape = predict(model, image, anchor, transform, hog_config=self.hog_config)
            regressed = transform.inverse_shape(shape)
            for k in active:
                centers[k] = regressed[k]
            if any(stages[k] == Stage.REFINED for k in active):
                fits = refine(image, regressed, anchor, contours, self.fit_cfg)
                for k in active:
                    if stages[k] == Stage.REFINED:
                        centers[k] = fits[k].center
                        radii[k] = fits[k].r
                        flagged[k] = not fits[k].refined
        elif active:
            sigma = edge_sigma(anchor)
            for k in active:
                eye = detect_eye(image, contours[k], pairs[k], self.vote_cfg, self.fit_cfg, sigma)
                centers[k], radii[k], flagged[k] = eye.center, eye.radius, eye.flagged
                stages[k] = Stage.HANDCRAFTED_FALLBACK

        for k in range(2):
            if stages[k] == Stage.CONTOUR_FALLBACK:
                centers[k] = eyelid_gap_center(contours[k], pairs[k])

        detections = []
        for k in range(2):
            center, clamped = clamp_to_image(centers[k], image)
            detections.append(EyeDetection(center=center, stage=stages[k], closure_ratio=ratios[k],
                                           radius=radii[k], clamped=clamped, flagged=flagged[k] or clamped))

        result = DetectionResult(annotation.image_id, detections[0], detections[1])
        seconds = time.perf_counter() - start
        event_manager.publish(EventType.DETECTION_COMPLETED, image_id=annotation.image_id, seconds=seconds,
                              stages=[s.value for s in stages])
        return result

    @log_errors
    def detect_many(self, model: Optional[CascadeModel], items: Sequence[Tuple[GrayImage, EyeAnnotation]],
                    threads: int = 1, cfg: Optional[PipelineConfig] = None) -> List[DetectionResult]:
        """Detect every (image, annotation) pair; results keep input order"""
        results = ordered_map(lambda item: self.detect(model, item[0], item[1], cfg), items, threads=threads)
        logger.info(f"Detected eye centers in {len(results)} images")
        return results

    def handcrafted(self, image: GrayImage, annotation: EyeAnnotation) -> Tuple[HandcraftedEye, HandcraftedEye]:
        """
        Voting detector on both eyes, without closed-eye gating

        Returns:
            (right, left) HandcraftedEye
        """
        anchor, _ = build_transform(annotation.corners)
        return detect_handcrafted(image, annotation.corners, eye_contours(annotation), self.vote_cfg,
                                  self.fit_cfg, edge_sigma(anchor))

    def handcrafted_result(self, image: GrayImage, annotation: EyeAnnotation) -> DetectionResult:
        """Voting detector output of one face as a DetectionResult"""
        start = time.perf_counter()
        contours = eye_contours(annotation)
        eyes = self.handcrafted(image, annotation)
        detections = []
        for eye, contour in zip(eyes, contours):
            center, clamped = clamp_to_image(eye.center, image)
            detections.append(EyeDetection(center=center, stage=Stage.HANDCRAFTED_FALLBACK,
                                           closure_ratio=closure_ratio(contour), radius=eye.radius,
                                           clamped=clamped, flagged=eye.flagged or clamped))
        event_manager.publish(EventType.DETECTION_COMPLETED, image_id=annotation.image_id,
                              seconds=time.perf_counter() - start,
                              stages=[Stage.HANDCRAFTED_FALLBACK.value] * 2)
        return DetectionResult(annotation.image_id, detections[0], detections[1])

    def handcrafted_many(self, items: Sequence[Tuple[GrayImage, EyeAnnotation]],
                         threads: int = 1) -> List[DetectionResult]:
        return ordered_map(lambda item: self.handcrafted_result(item[0], item[1]), items, threads=threads)
