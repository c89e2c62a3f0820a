"""
Logging and Monitoring Decorators
Implements Decorator Pattern for call logging, timing and audit records
"""

from functools import wraps
from datetime import datetime, timezone
import logging
import time


def monitor_performance(threshold: float = 1.0, logger_name: str = 'eyecenter.performance'):
    """
    Decorator to monitor the wall time of a service call

    Logs the duration at DEBUG and warns when it exceeds threshold seconds.

    Usage:
        @monitor_performance(threshold=0.01)
        def detect(self, image, annotation):
            return result
    """
    logger = logging.getLogger(logger_name)

    def decorator(f):
        @wraps(f)
        def decorated_function(*args, **kwargs):
            start_time = time.perf_counter()
            result = f(*args, **kwargs)
            duration = time.perf_counter() - start_time

            logger.debug(f"{f.__qualname__} - Duration: {duration * 1000:.2f} ms")
            if duration > threshold:
                logger.warning(f"Slow call detected: {f.__qualname__} took {duration:.3f}s")
            return result

        return decorated_function

    return decorator


def log_errors(f):
    """
    Decorator to log errors and exceptions

    Usage:
        @log_errors
        def risky_op():
            return result
    """
    logger = logging.getLogger('eyecenter.errors')

    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except Exception as e:
            logger.error(f"Error in {f.__qualname__}: {str(e)}", exc_info=True)
            raise

    return decorated_function


def audit_log(action: str):
    """
    Decorator to log file-producing operations for the audit trail

    Args:
        action: Description of action being logged

    Usage:
        @audit_log("Model saved")
        def save(self, model, path):
            return path
    """
    logger = logging.getLogger('eyecenter.audit')

    def decorator(f):
        @wraps(f)
        def decorated_function(*args, **kwargs):
            result = f(*args, **kwargs)
            logger.info(
                f"AUDIT: {action} - "
                f"Call: {f.__qualname__} - "
                f"Result: {result if isinstance(result, (str, int)) else type(result).__name__} - "
                f"Timestamp: {datetime.now(timezone.utc).isoformat()}"
            )
            return result

        return decorated_function

    return decorator


def combine_decorators(*decorators):
    """
    Helper to combine multiple decorators

    Usage:
        traced = combine_decorators(log_errors, monitor_performance(0.5))

        @traced
        def train(self, corpus):
            return model
    """
    def decorator(f):
        for dec in reversed(decorators):
            f = dec(f)
        return f
    return decorator
