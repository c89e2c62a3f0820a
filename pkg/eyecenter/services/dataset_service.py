"""
Dataset Service Layer
Loads annotated corpora as decoded (image, annotation) pairs
"""

import logging
from dataclasses import replace
from typing import List, Optional, Tuple

from models import EyeAnnotation, GrayImage
from eyecenter.repositories import AnnotationRepository, ImageRepository
from eyecenter.utils import DataError, ordered_map

logger = logging.getLogger('eyecenter.annotation')

Item = Tuple[GrayImage, EyeAnnotation]


class DatasetService:
    """Service layer for corpus loading"""

    def __init__(self, image_repo: ImageRepository, annotation_repo: AnnotationRepository):
        self.image_repo = image_repo
        self.annotation_repo = annotation_repo

    def load_annotations(self, path, fmt: str = 'native') -> List[EyeAnnotation]:
        return self.annotation_repo.load(path, fmt)

    def _load_item(self, annotation: EyeAnnotation) -> Optional[Item]:
        if not annotation.image_path:
            logger.warning(f"Skipped {annotation.image_id}: annotation has no image path")
            return None
        try:
            image = self.image_repo.load(annotation.image_path, annotation.image_id)
        except DataError as e:
            logger.warning(f"Skipped {annotation.image_id}: {e.message}")
            return None
        size = (image.width, image.height)
        if annotation.image_size is not None and annotation.image_size != size:
            logger.warning(f"Skipped {annotation.image_id}: declared size {annotation.image_size} != image {size}")
            return None
        points = list(annotation.corners.points()) + list(annotation.centers)
        if not all(image.contains(p) for p in points):
            logger.warning(f"Skipped {annotation.image_id}: landmarks outside the {size[0]}x{size[1]} image")
            return None
        return image, replace(annotation, image_size=size)

    def load_items(self, path, fmt: str = 'native', threads: int = 1) -> List[Item]:
        """
        Load annotations and decode their images

        Images that cannot be decoded or whose landmarks fall outside them
        are logged and skipped.

        Args:
            path: Annotation file (or BioID directory)
            fmt: Annotation format name
            threads: Decoder worker count

        Returns:
            List of (GrayImage, EyeAnnotation) in file order
        """
        annotations = self.load_annotations(path, fmt)
        loaded = ordered_map(self._load_item, annotations, threads=threads)
        items = [item for item in loaded if item is not None]
        if len(items) < len(annotations):
            logger.warning(f"Loaded {len(items)} of {len(annotations)} images from {path}")
        return items
