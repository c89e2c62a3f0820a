"""
Decorators Package
Exports all decorator functions for easy import
"""

from .logging import (
    monitor_performance,
    log_errors,
    audit_log,
    combine_decorators
)

__all__ = [
    'monitor_performance',
    'log_errors',
    'audit_log',
    'combine_decorators',
]
