"""
Commands Package
Exports the command group and its runner
"""

from .cli import cli, run

__all__ = ['cli', 'run']
