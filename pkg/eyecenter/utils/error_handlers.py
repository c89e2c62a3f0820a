"""
Error Handling Utilities
Provides one exception hierarchy and consistent exit codes across the toolkit
"""

from typing import Tuple
import logging

logger = logging.getLogger('eyecenter.errors')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class ToolkitError(Exception):
    """Base class for toolkit errors"""
    def __init__(self, message: str, exit_code: int = EXIT_DATA, payload=None):
        super().__init__(message)
        self.message = message
        self.exit_code = exit_code
        self.payload = payload

    def to_dict(self):
        """Convert error to dictionary"""
        rv = dict(self.payload or ())
        rv['success'] = False
        rv['error'] = self.message
        rv['exit_code'] = self.exit_code
        rv['category'] = type(self).__name__
        return rv


class UsageError(ToolkitError):
    """Raised for invalid command-line usage"""
    def __init__(self, message: str, payload=None):
        super().__init__(message, exit_code=EXIT_USAGE, payload=payload)


class ConfigFileError(UsageError):
    """Raised when a --config bundle cannot be read"""


class DataError(ToolkitError):
    """Raised when input data is invalid"""
    def __init__(self, message: str, payload=None):
        super().__init__(message, exit_code=EXIT_DATA, payload=payload)


class InvalidLandmarksError(DataError):
    """Raised when eye corners or contours are degenerate"""


class DegenerateEyeRegionError(DataError):
    """Raised when the eroded eye mask contains no pixels"""


class ImageDecodeError(DataError):
    """Raised when an image file is unsupported, truncated or corrupt"""


class AnnotationParseError(DataError):
    """Raised when an annotation or landmark file is malformed"""
    def __init__(self, message: str, line: int = None, record: int = None, payload=None):
        payload = dict(payload or ())
        if line is not None:
            payload['line'] = line
            message = f"{message} (line {line})"
        if record is not None:
            payload['record'] = record
            message = f"{message} (record {record})"
        super().__init__(message, payload=payload)
        self.line = line
        self.record = record


class ModelFormatError(DataError):
    """Raised when a serialized model cannot be parsed"""


class ModelVersionError(ModelFormatError):
    """Raised when a model stream has an unknown format version"""


class ModelTruncatedError(ModelFormatError):
    """Raised when a model stream ends before its terminator"""


class ModelInvariantError(ModelFormatError):
    """Raised when a loaded model violates a structural invariant"""


class ModelConfigMismatchError(DataError):
    """Raised when a model's split features do not fit its HoG configuration"""


class CircleFitError(DataError):
    """Raised when the robust circle cost becomes non-finite"""


class MetricError(DataError):
    """Raised when an error metric is undefined for the given inputs"""


class EmptyCorpusError(DataError):
    """Raised when training receives no usable samples"""


def handle_error(error: Exception, default_message: str = "An error occurred") -> Tuple[str, int]:
    """
    Map an exception to a message and process exit code

    Args:
        error: The exception that occurred
        default_message: Default error message if none provided

    Returns:
        Tuple of (message, exit_code)
    """
    if isinstance(error, ToolkitError):
        logger.error(f"{type(error).__name__}: {error.message}")
        return error.message, error.exit_code

    if isinstance(error, FileNotFoundError):
        logger.error(f"File not found: {error}")
        return f"File not found: {error.filename or error}", EXIT_DATA

    logger.error(f"Internal error: {error}", exc_info=True)
    message = str(error) if str(error) else default_message
    return message, EXIT_INTERNAL
