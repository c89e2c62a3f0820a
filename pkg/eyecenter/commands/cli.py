"""
Command-line entry point
Global flags, --config bundles and exit-code mapping for all subcommands
"""

import json
import logging
from typing import Optional, Sequence

import click

from eyecenter import create_app
from eyecenter.commands.common import CliState
from eyecenter.commands.detection import detect, handcrafted
from eyecenter.commands.evaluation import evaluate
from eyecenter.commands.synthesis import synth
from eyecenter.commands.training import auto_annotate, auto_train, train
from eyecenter.events import EventType, event_manager
from eyecenter.utils import EXIT_INTERNAL, EXIT_OK, EXIT_USAGE, ConfigFileError, handle_error

logger = logging.getLogger('eyecenter.cli')


def _param_names(command: click.Command) -> dict:
    """Flag spellings without dashes, and parameter names themselves, mapped to parameter names"""
    names = {}
    for param in command.params:
        names[param.name] = param.name
        for opt in param.opts:
            names[opt.lstrip('-')] = param.name
    return names


def _normalize(bundle: dict, command: click.Command) -> dict:
    """Flag names become parameter names; nested objects keyed by a subcommand hold its flags"""
    names = _param_names(command)
    subcommands = getattr(command, 'commands', {})
    normalized = {}
    for key, value in bundle.items():
        if isinstance(value, dict):
            if key not in subcommands:
                raise ConfigFileError(f"unknown subcommand '{key}' in config file")
            normalized[key] = _normalize(value, subcommands[key])
        else:
            normalized[names.get(key, key.replace('-', '_'))] = value
    return normalized


def load_config_bundle(ctx: click.Context, param, value):
    """
    Read a JSON --config file into the context's default map

    Top-level keys mirror the global flags, nested objects keyed by a
    subcommand name mirror that subcommand's flags; explicit flags win.
    """
    if not value:
        return value
    try:
        with open(value, encoding='utf-8') as handle:
            bundle = json.load(handle)
    except OSError as e:
        raise ConfigFileError(f"cannot read config file {value}: {e.strerror or e}")
    except ValueError as e:
        raise ConfigFileError(f"config file {value} is not valid JSON: {e}")
    if not isinstance(bundle, dict):
        raise ConfigFileError(f"config file {value} must hold a JSON object")
    ctx.default_map = {**(ctx.default_map or {}), **_normalize(bundle, ctx.command)}
    return value


@click.group(context_settings={'help_option_names': ['-h', '--help']})
@click.option('--config', 'config_file', type=click.Path(dir_okay=False), is_eager=True, expose_value=True,
              callback=load_config_bundle, help='JSON file with flag values (flags override it)')
@click.option('--env', 'env_name', type=click.Choice(['development', 'production', 'testing']), default=None,
              help='Configuration profile (default: EYECENTER_ENV)')
@click.option('--seed', type=int, default=None, help='Seed for every random choice (default: EYECENTER_SEED)')
@click.option('--threads', type=click.IntRange(min=1), default=None,
              help='Maximum worker threads across images (default: EYECENTER_THREADS)')
@click.option('--format', 'output_format', type=click.Choice(['text', 'json']), default='text',
              show_default=True, help='Summary output format')
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              default=None, help='Log level (default: the profile\'s)')
@click.pass_context
def cli(ctx: click.Context, config_file, env_name, seed, threads, output_format, log_level):
    """Eye-center localization toolkit"""
    app = create_app(env_name, log_level)
    ctx.obj = CliState(
        app=app,
        seed=app.seed if seed is None else seed,
        threads=app.threads if threads is None else threads,
        output_format=output_format,
    )
    if config_file:
        logger.debug(f"Flag defaults loaded from {config_file}")


for command in (detect, handcrafted, train, auto_annotate, auto_train, evaluate, synth):
    cli.add_command(command)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line and map the outcome to an exit code

    0 success, 1 usage error, 2 data error, 3 internal error.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit code
    """
    try:
        # without standalone mode, --help and ctx.exit() come back as an int
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name='eyecenter', standalone_mode=False)
        return rv if isinstance(rv, int) else EXIT_OK
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except Exception as e:
        message, code = handle_error(e)
        if code == EXIT_INTERNAL:
            event_manager.publish(EventType.SYSTEM_ERROR, error=type(e).__name__, details=message)
        click.echo(f"Error: {message}", err=True)
        return code
