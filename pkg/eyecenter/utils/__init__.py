"""
Utility Functions Package
"""

from .error_handlers import (
    EXIT_OK,
    EXIT_USAGE,
    EXIT_DATA,
    EXIT_INTERNAL,
    ToolkitError,
    UsageError,
    ConfigFileError,
    DataError,
    InvalidLandmarksError,
    DegenerateEyeRegionError,
    ImageDecodeError,
    AnnotationParseError,
    ModelFormatError,
    ModelVersionError,
    ModelTruncatedError,
    ModelInvariantError,
    ModelConfigMismatchError,
    CircleFitError,
    MetricError,
    EmptyCorpusError,
    handle_error,
)
from .parallel import ordered_map

__all__ = [
    'EXIT_OK',
    'EXIT_USAGE',
    'EXIT_DATA',
    'EXIT_INTERNAL',
    'ToolkitError',
    'UsageError',
    'ConfigFileError',
    'DataError',
    'InvalidLandmarksError',
    'DegenerateEyeRegionError',
    'ImageDecodeError',
    'AnnotationParseError',
    'ModelFormatError',
    'ModelVersionError',
    'ModelTruncatedError',
    'ModelInvariantError',
    'ModelConfigMismatchError',
    'CircleFitError',
    'MetricError',
    'EmptyCorpusError',
    'handle_error',
    'ordered_map',
]
