"""
Report Blueprint
The equidistribution test: observed Frobenius traces (from a curve, a
coefficient table or the blueprint's own sampler) against the Haar predictions
"""
import click
from flask import Blueprint, current_app

from commands import InputError, input_errors, load_run, load_valid_spec, output_path, run_options
from curves import count_curve
from equidistribution import (
    compare, histogram, observations_from_spec, observations_from_table, semicircle_density, write_histogram,
)
from frobenius_data import load_coefficients, ribet_identity_check, zero_density
from haar_moments import mc_trace_sample

report_bp = Blueprint('report', __name__, cli_group=None)


def gather_observations(spec, config):
    """Observations plus extra report fields for the configured data source"""
    source = config.data_source
    if source is None:
        raise InputError('config needs a data_source')
    extras = {'data_source': source.kind}
    if source.kind == 'mc':
        with input_errors():
            root = config.require_seed('the mc data source')
        # the data stream is independent of the streams behind the theoretical values
        obs = observations_from_spec(spec, source.num_samples or config.num_samples, [root, 1])
        return obs, extras

    if source.kind == 'curve':
        curve, table = count_curve(config)
        extras['curve'] = str(curve)
    else:
        with input_errors():
            table = load_coefficients(source.path)
        ribet = ribet_identity_check(table)
        extras['ribet_identity'] = {k: ribet[k] for k in ('success', 'checked', 'skipped_zero')}
        if not ribet['success']:
            extras['ribet_identity']['failures'] = ribet['failures']
    extras['excluded_primes'] = len(table.excluded)
    extras['zero_density'] = str(zero_density(table))
    with input_errors():
        obs = observations_from_table(table, config.embedding, config.class_map)
    return obs, extras


@report_bp.cli.command('test')
@run_options
@click.pass_context
def test_command(ctx, config_path, out_dir, seed):
    """Compare observed traces with the blueprint; exit 1 if any verdict fails."""
    config = load_run(config_path, seed)
    spec = load_valid_spec(config)
    observations, extras = gather_observations(spec, config)
    with input_errors():
        report = compare(spec, observations, config.n_max, z_max=config.z_max, ks_max=config.ks_max,
                         seed=config.seed, num_samples=config.num_samples,
                         workers=current_app.config['WORKERS'])
    report.extras.update(extras)
    if config.provenance:
        report.extras['provenance'] = dict(sorted(config.provenance.items()))

    if spec.is_su2():
        predicted = semicircle_density
    elif config.seed is not None:
        predicted = mc_trace_sample(spec, config.num_samples, config.seed)[0].real
    else:
        predicted = None
    rows = histogram(observations.values.real, config.histogram_bins, predicted)
    write_histogram(rows, output_path(out_dir, 'histogram.csv'))
    report.to_json(output_path(out_dir, 'report.json'))
    with open(output_path(out_dir, 'report.txt'), 'w', encoding='utf-8', newline='\n') as f:
        f.write(report.to_text())

    if not report.passed:
        for failure in report.failures():
            current_app.logger.warning(failure)
        click.echo(f'FAIL: {len(report.failures())} failing check(s); see {out_dir}/report.txt', err=True)
        ctx.exit(1)
    click.echo(f'PASS: {spec.name} on {len(observations)} observations')
