"""
Moments Blueprint
Subcommands on a group blueprint alone: exact and Monte Carlo moment tables,
raw Haar samples and the irreducible representation labels
"""
import csv

import numpy as np
from flask import Blueprint, current_app

from commands import input_errors, load_run, load_valid_spec, output_path, run_options, write_json
from haar_moments import irrep_mean, mc_trace_sample, moment_table
from st_group import enumerate_irreps

moments_bp = Blueprint('moments', __name__, cli_group=None)


@moments_bp.cli.command('moments')
@run_options
def moments_command(config_path, out_dir, seed):
    """Write exact (and, with a seed, Monte Carlo) trace moments."""
    config = load_run(config_path, seed)
    spec = load_valid_spec(config)
    num_samples = config.num_samples if config.seed is not None else 0
    if not num_samples:
        current_app.logger.warning('No seed given: writing exact moments only')
    table = moment_table(spec, config.n_max, num_samples, config.seed,
                         streams=current_app.config['MC_STREAMS'], workers=current_app.config['WORKERS'])
    table.to_csv(output_path(out_dir, 'moments.csv'))
    table.to_json(output_path(out_dir, 'moments.json'))
    current_app.logger.info(f'{spec.name}: {len(table.rows)} moment rows written to {out_dir}')


@moments_bp.cli.command('sample')
@run_options
def sample_command(config_path, out_dir, seed):
    """Write Haar-random traces and their components."""
    config = load_run(config_path, seed)
    spec = load_valid_spec(config)
    with input_errors():
        root = config.require_seed('sample')
    traces, components = mc_trace_sample(spec, config.num_samples, root)
    with open(output_path(out_dir, 'samples.csv'), 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['index', 'component', 'trace_re', 'trace_im'])
        for k, (t, g) in enumerate(zip(traces, components)):
            writer.writerow([k, spec.gamma.names[int(g)], format(float(t.real), '.17g'),
                             format(float(np.imag(t)), '.17g')])
    current_app.logger.info(f'{spec.name}: {config.num_samples} samples written')


@moments_bp.cli.command('irreps')
@run_options
def irreps_command(config_path, out_dir, seed):
    """List Symm^e x eta labels with their Monte Carlo means."""
    config = load_run(config_path, seed)
    spec = load_valid_spec(config)
    with input_errors():
        labels = enumerate_irreps(spec, config.e_max)
    children = np.random.SeedSequence(config.seed).spawn(len(labels)) if config.seed is not None else None
    entries = []
    for k, label in enumerate(labels):
        entry = {
            'e': list(label.e),
            'eta': label.eta.index,
            'eta_degree': label.eta.degree,
            'description': label.describe(),
            'trivial': label.is_trivial(),
        }
        if children is not None:
            mean, stderr = irrep_mean(spec, label, config.num_samples, children[k])
            entry.update({'mc_mean_re': mean.real, 'mc_mean_im': mean.imag, 'mc_stderr': stderr})
        entries.append(entry)
    write_json(output_path(out_dir, 'irreps.json'), {
        'spec': spec.name,
        'e_max': config.e_max,
        'component_preimage_order': labels[0].group.order if labels else None,
        'labels': entries,
    })
    current_app.logger.info(f'{spec.name}: {len(entries)} irreducible labels')
