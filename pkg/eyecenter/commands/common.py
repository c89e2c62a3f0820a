"""
Shared command-line helpers
State passed from the command group to subcommands, output formatting and
reusable options
"""

import json
from dataclasses import dataclass
from typing import Optional, Tuple

import click

from eyecenter import EyeCenterApp
from eyecenter.repositories.annotation_repository import FORMATS
from eyecenter.utils import UsageError


@dataclass
class CliState:
    """Global flags and the configured toolkit"""
    app: EyeCenterApp
    seed: int
    threads: int
    output_format: str = 'text'

    def emit(self, text: str, data=None):
        """Print a summary as text, or its structured form with --format json"""
        if self.output_format == 'json':
            click.echo(json.dumps(data if data is not None else {'message': text}, indent=2, sort_keys=True))
        else:
            click.echo(text)


pass_state = click.make_pass_decorator(CliState)


def annotation_options(f):
    """--annotations and --annotation-format"""
    f = click.option('--annotation-format', type=click.Choice(FORMATS), default='native', show_default=True,
                     help='Landmark file format')(f)
    f = click.option('--annotations', required=True, type=click.Path(dir_okay=True),
                     help='Annotation file (or BioID directory) with corners and optional contours')(f)
    return f


def parse_range(text: Optional[str], name: str) -> Optional[Tuple[float, float]]:
    """'lo,hi' (or a single value) as a well-ordered pair"""
    if text is None:
        return None
    try:
        values = [float(v) for v in text.split(',')]
    except ValueError:
        raise UsageError(f"--{name} expects 'lo,hi', got '{text}'")
    if len(values) == 1:
        values = values * 2
    if len(values) != 2 or values[0] > values[1]:
        raise UsageError(f"--{name} expects a well-ordered 'lo,hi', got '{text}'")
    return values[0], values[1]
