"""
Repository Package
Exports all repository classes for easy import
"""

from .base_repository import FileRepository
from .model_repository import ModelRepository, dumps_model, loads_model
from .annotation_repository import (
    AnnotationRepository,
    BioidEyes,
    dumps_annotations,
    dumps_detections,
    loads_annotations,
    loads_detections,
    parse_bioid_eyes,
)
from .image_repository import ImageRepository, decode_image
from .corpus_repository import CorpusRepository

__all__ = [
    'FileRepository',
    'ModelRepository',
    'dumps_model',
    'loads_model',
    'AnnotationRepository',
    'BioidEyes',
    'dumps_annotations',
    'dumps_detections',
    'loads_annotations',
    'loads_detections',
    'parse_bioid_eyes',
    'ImageRepository',
    'decode_image',
    'CorpusRepository',
]
