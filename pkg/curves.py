"""
Curves Blueprint
Frobenius traces of an elliptic curve over Q by point counting
"""
from flask import Blueprint, current_app

from commands import InputError, input_errors, load_run, output_path, run_options
from frobenius_data import EllipticCurve, curve_table, write_coefficients, zero_density

curves_bp = Blueprint('curves', __name__, cli_group=None)


def curve_from_config(config) -> EllipticCurve:
    source = config.data_source
    if source is None or source.kind != 'curve':
        raise InputError('this command needs data_source {"kind": "curve", "coefficients": [a1, a2, a3, a4, a6]}')
    with input_errors():
        return EllipticCurve(*source.coefficients, extra_bad_primes=tuple(source.bad_primes))


def count_curve(config):
    """Curve and its coefficient table up to the configured prime bound"""
    curve = curve_from_config(config)
    with input_errors():
        table = curve_table(curve, config.prime_bound, config.excluded_primes,
                            workers=current_app.config['WORKERS'], prime_cap=current_app.config['PRIME_CAP'])
    return curve, table


@curves_bp.cli.command('ec-trace')
@run_options
def ec_trace_command(config_path, out_dir, seed):
    """Count points at every good prime up to prime_bound."""
    config = load_run(config_path, seed)
    curve, table = count_curve(config)
    write_coefficients(table, output_path(out_dir, 'ec_trace.csv'))
    with open(output_path(out_dir, 'bad_primes.txt'), 'w', encoding='utf-8', newline='\n') as f:
        f.write(''.join(f'{p}\n' for p in table.excluded))
    current_app.logger.info(f'{curve}: discriminant {curve.discriminant}, {len(table)} good primes, '
                            f'{len(table.excluded)} excluded, zero density {zero_density(table)}')
