"""
Command Helpers Module
Options, config loading and error mapping shared by the CLI blueprints
"""
import json
import os
from contextlib import contextmanager

import click
from flask import current_app

from config import ConfigError, RunConfig, load_config
from equidistribution import EquidistributionError
from finite_group_core import GroupError
from frobenius_data import FrobeniusDataError
from st_group import SpecError, load_spec, validate_spec

INPUT_ERRORS = (ConfigError, json.JSONDecodeError, SpecError, FrobeniusDataError, GroupError,
                EquidistributionError, OSError, KeyError, ValueError)


class InputError(click.ClickException):
    """Bad input: config, spec, data or cocycle files. Exits with status 2."""
    exit_code = 2


@contextmanager
def input_errors():
    """Report library input errors as InputError"""
    try:
        yield
    except json.JSONDecodeError as e:
        raise InputError(f'{e.msg} at line {e.lineno} column {e.colno}') from e
    except KeyError as e:
        raise InputError(f'missing key {e}') from e
    except INPUT_ERRORS as e:
        raise InputError(f'{type(e).__name__}: {e}') from e


def run_options(f):
    """--config, --out and --seed, shared by every subcommand"""
    f = click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), default=None,
                     help='Root seed; overrides the config seed.')(f)
    f = click.option('--out', 'out_dir', default='out', show_default=True, type=click.Path(file_okay=False),
                     help='Directory for output files.')(f)
    f = click.option('--config', 'config_path', required=True, type=click.Path(exists=True, dir_okay=False),
                     help='Run configuration JSON file.')(f)
    return f


def load_run(config_path: str, seed) -> RunConfig:
    with input_errors():
        config = load_config(config_path, seed=seed, prime_cap=current_app.config['PRIME_CAP'])
    current_app.logger.debug(f'Loaded config {config_path}')
    return config


def load_valid_spec(config: RunConfig):
    """Load spec_path and refuse a blueprint that fails validation"""
    with input_errors():
        spec = load_spec(config.require('spec_path'))
    report = validate_spec(spec)
    if not report['success']:
        details = '; '.join(f"{f['invariant']}: {f['witness']}" for f in report['failures'])
        raise InputError(f'invalid spec {spec.name}: {details}')
    return spec


def output_path(out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def write_json(path: str, obj) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write('\n')
