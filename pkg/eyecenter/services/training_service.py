"""
Training Service Layer
Cascade training on annotated corpora and training from hand-crafted auto-annotations
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

from models import AnnotationSource, EyeAnnotation, GrayImage
from eyecenter.decorators import combine_decorators, log_errors, monitor_performance
from eyecenter.events import EventType, event_manager
from eyecenter.services.detection_service import DetectionService
from eyecenter.services.synthesis_service import flip_sample
from eyecenter.utils import DataError, EmptyCorpusError, ordered_map
from eyecenter.vision.cascade import CascadeModel, TrainConfig
from eyecenter.vision.hog import HogConfig
from eyecenter.vision.training import TrainingTrace, train_cascade

logger = logging.getLogger('eyecenter.annotation')

Item = Tuple[GrayImage, EyeAnnotation]

traced = combine_decorators(log_errors, monitor_performance(threshold=600.0, logger_name='eyecenter.training'))


@dataclass
class AutoAnnotation:
    """Outcome of an auto-annotation run"""
    items: List[Item] = field(default_factory=list)
    skipped: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def annotations(self) -> List[EyeAnnotation]:
        return [a for _, a in self.items]

    @property
    def skipped_count(self) -> int:
        return len(self.skipped)


def with_flipped_copies(items: Sequence[Item]) -> List[Item]:
    """The items followed by their horizontal mirror images"""
    items = list(items)
    return items + [flip_sample(image, annotation) for image, annotation in items]


class TrainingService:
    """Service layer for cascade training"""

    def __init__(self, train_cfg: TrainConfig, hog_config: HogConfig, detection_service: DetectionService):
        self.train_cfg = train_cfg
        self.hog_config = hog_config
        self.detection_service = detection_service

    @traced
    def train(self, corpus: Sequence[Item], cfg: Optional[TrainConfig] = None,
              flip: bool = False) -> Tuple[CascadeModel, TrainingTrace]:
        """
        Train a cascade on annotated images

        Args:
            corpus: (image, annotation) pairs with corners and centers
            cfg: Training configuration (default: the service's)
            flip: Add a horizontally mirrored copy of every item

        Returns:
            Tuple of (CascadeModel, TrainingTrace)
        """
        items = with_flipped_copies(corpus) if flip else list(corpus)
        return train_cascade(items, cfg or self.train_cfg, self.hog_config)

    def annotate_one(self, image: GrayImage, annotation: EyeAnnotation) -> EyeAnnotation:
        """
        Replace the centers of one annotation with the hand-crafted detector's output

        Raises:
            DataError: when either eye fell back to its corner midpoint or a
                center lies outside the image
        """
        right, left = self.detection_service.handcrafted(image, annotation)
        if right.flagged or left.flagged:
            side = 'right' if right.flagged else 'left'
            raise DataError(f"no voting candidate for the {side} eye")
        for eye in (right, left):
            if not image.contains(eye.center):
                raise DataError(f"detected center ({eye.center.x:.1f}, {eye.center.y:.1f}) is outside the image")
        return replace(annotation, centers=(right.center, left.center), source=AnnotationSource.AUTO,
                       occlusion=None)

    @log_errors
    def auto_annotate(self, items: Sequence[Item], with_flips: bool = False, threads: int = 1) -> AutoAnnotation:
        """
        Label images with the hand-crafted detector

        Images where either eye fell back are excluded and counted; per-image
        data errors are logged and skipped.

        Args:
            items: (image, landmarks) pairs; existing centers are ignored
            with_flips: Also emit the mirror image of every accepted annotation
            threads: Worker count

        Returns:
            AutoAnnotation with accepted items and skipped (image_id, reason) pairs
        """
        def attempt(item):
            image, annotation = item
            try:
                return self.annotate_one(image, annotation), None
            except DataError as e:
                return None, e.message

        outcomes = ordered_map(attempt, items, threads=threads)

        result = AutoAnnotation()
        for (image, source), (annotation, reason) in zip(items, outcomes):
            if annotation is None:
                result.skipped.append((source.image_id, reason))
                event_manager.publish(EventType.ANNOTATION_SKIPPED, image_id=source.image_id, reason=reason)
                continue
            result.items.append((image, annotation))
            event_manager.publish(EventType.IMAGE_ANNOTATED, image_id=annotation.image_id)

        if with_flips:
            result.items = with_flipped_copies(result.items)
        logger.info(f"Auto-annotated {len(result.items)} images, skipped {result.skipped_count}")
        return result

    @traced
    def train_from_auto(self, items: Sequence[Item], cfg: Optional[TrainConfig] = None, with_flips: bool = False,
                        threads: int = 1) -> Tuple[CascadeModel, TrainingTrace, AutoAnnotation]:
        """
        Auto-annotate a corpus, then train a cascade on the result

        Returns:
            Tuple of (CascadeModel, TrainingTrace, AutoAnnotation)

        Raises:
            EmptyCorpusError: if no image could be auto-annotated
        """
        annotated = self.auto_annotate(items, with_flips=with_flips, threads=threads)
        if not annotated.items:
            raise EmptyCorpusError(f"auto-annotation failed for all {len(items)} images",
                                   payload={'skipped': annotated.skipped_count})
        model, trace = self.train(annotated.items, cfg)
        return model, trace, annotated
