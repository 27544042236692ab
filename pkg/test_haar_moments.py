"""
Tests for exact and Monte Carlo trace moments
"""
import csv
import json
from fractions import Fraction

import numpy as np
import pytest

from haar_moments import (
    class_labels, component_trace_moments, group_trace_moments, irrep_mean, mc_moments, mc_trace_sample,
    moment_table, su2_trace_moment,
)
from st_group import enumerate_irreps, load_spec, sample_traces, stream_generators, su2_spec


def test_su2_moments_are_catalan_numbers():
    expected = [1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42, 0, 132, 0, 429, 0, 1430]
    assert [su2_trace_moment(n) for n in range(17)] == [Fraction(x) for x in expected]
    with pytest.raises(ValueError):
        su2_trace_moment(-1)


def test_su2_table():
    table = group_trace_moments(su2_spec(), 8)
    assert table.classes == ['e']
    assert table.labels == [('re', k) for k in range(9)]
    assert table.row('re', 8).exact_fraction() == 14
    assert table.row('re', 8, 'e').exact_fraction() == 14


def test_swap_blueprint_exact_values(spec_file):
    spec = load_spec(spec_file('rm_swap.json'))
    table = group_trace_moments(spec, 4)
    assert table.classes == ['e', 's']
    # E[(t1 + t2)^4] = 2 + 2 + 6 on the identity component, zero trace on the swap
    assert table.row('re', 4, 'e').exact_fraction() == 10
    assert table.row('re', 4, 's').exact_fraction() == 0
    assert table.row('re', 4).exact_fraction() == 5
    assert table.row('re', 2).exact_fraction() == 1
    assert table.row('re', 0, 's').exact_fraction() == 1


def test_complex_twists_add_absolute_value_rows(spec_file):
    spec = load_spec(spec_file('z4_twist.json'))
    table = group_trace_moments(spec, 4)
    assert ('abs2', 2) in table.labels
    assert ('abs2', 3) not in table.labels
    assert table.row('re', 2).exact_fraction() == 2
    assert table.row('abs2', 1).exact_fraction() == 4
    assert table.row('re', 1, 's').exact_fraction() == 0
    raw = component_trace_moments(spec, spec.gamma.index('s'), 2)
    # (2i t)^2 has mean -4
    assert raw[2].to_fraction() == -4


def test_monte_carlo_agrees_with_exact(spec_file):
    spec = load_spec(spec_file('rm_swap.json'))
    table = moment_table(spec, 6, num_samples=100000, seed=11, streams=4, workers=2)
    for row in table.rows:
        assert row.mc_stderr is not None
        exact = float(row.exact_fraction())
        if row.mc_stderr == 0:
            assert row.mc_estimate == pytest.approx(exact)
        else:
            assert abs(row.mc_estimate - exact) < 5 * row.mc_stderr


def test_monte_carlo_ignores_worker_count():
    spec = su2_spec()
    one = mc_moments(spec, 4, 5000, seed=7, streams=4, workers=1)
    many = mc_moments(spec, 4, 5000, seed=7, streams=4, workers=4)
    assert [r.mc_estimate for r in one.rows] == [r.mc_estimate for r in many.rows]
    other = mc_moments(spec, 4, 5000, seed=8, streams=4, workers=1)
    assert [r.mc_estimate for r in one.rows] != [r.mc_estimate for r in other.rows]


def test_monte_carlo_needs_samples_and_seed():
    with pytest.raises(ValueError):
        mc_moments(su2_spec(), 2, 0, seed=1)
    with pytest.raises(ValueError):
        moment_table(su2_spec(), 2, num_samples=10)


def test_table_files_are_deterministic(tmp_path, spec_file):
    spec = load_spec(spec_file('z4_twist.json'))
    for name in ('a', 'b'):
        table = moment_table(spec, 4, num_samples=2000, seed=3, streams=2)
        table.to_csv(tmp_path / f'{name}.csv')
        table.to_json(tmp_path / f'{name}.json')
    assert (tmp_path / 'a.csv').read_bytes() == (tmp_path / 'b.csv').read_bytes()
    assert (tmp_path / 'a.json').read_bytes() == (tmp_path / 'b.json').read_bytes()

    with open(tmp_path / 'a.csv', newline='') as f:
        rows = list(csv.DictReader(f))
    first = rows[0]
    assert (first['observable'], first['order'], first['exact_num'], first['exact_den']) == ('re', '0', '1', '1')
    data = json.loads((tmp_path / 'a.json').read_text())
    assert data['classes'] == class_labels(spec)
    assert len(data['rows']) == len(rows)


def test_exact_values_only_table_has_empty_mc_columns(tmp_path):
    table = moment_table(su2_spec(), 2)
    table.to_csv(tmp_path / 'm.csv')
    lines = (tmp_path / 'm.csv').read_text().splitlines()
    assert lines[1] == 're,0,e,1,1,,'


def test_trace_sample_is_reproducible(spec_file):
    spec = load_spec(spec_file('rm_swap.json'))
    t1, c1 = mc_trace_sample(spec, 1000, 4)
    t2, c2 = mc_trace_sample(spec, 1000, 4)
    assert np.array_equal(t1, t2) and np.array_equal(c1, c2)
    assert np.all(t1[c1 == spec.gamma.index('s')] == 0)


def test_irrep_means_detect_the_trivial_representation(spec_file):
    spec = load_spec(spec_file('mu4_klein.json'))
    for label in enumerate_irreps(spec, 1):
        mean, err = irrep_mean(spec, label, 20000, 9)
        if label.is_trivial():
            assert mean == pytest.approx(1)
            assert err == pytest.approx(0)
        else:
            assert abs(mean) < 5 * err + 1e-9


def test_classes_without_samples_have_no_estimate(tmp_path, spec_file):
    spec = load_spec(spec_file('z4_twist.json'))
    table = mc_moments(spec, 2, 1, seed=2, streams=1)
    empty = {r.component_class for r in table.rows if r.mc_estimate is None}
    assert len(empty) == 3
    assert all(r.mc_stderr is None for r in table.rows if r.component_class in empty)
    assert table.row('re', 0).mc_estimate == 1
    table.to_json(tmp_path / 'm.json')
    text = (tmp_path / 'm.json').read_text()
    assert 'NaN' not in text
    assert all(row['mc_estimate'] is None for row in json.loads(text)['rows'] if row['component_class'] in empty)


def test_trace_sample_stream_is_disjoint_from_moment_streams(spec_file):
    spec = load_spec(spec_file('rm_swap.json'))
    traces, _ = mc_trace_sample(spec, 1000, 4)
    for rng in stream_generators(4, 8):
        other, _ = sample_traces(spec, 1000, rng)
        assert not np.array_equal(traces, other)


EXACT_SPECS = ['su2.json', 'rm_swap.json', 'z4_twist.json', 'mu4_klein.json', 'mu4_negative.json',
               'mu4_klein_pair.json']


@pytest.mark.slow
@pytest.mark.parametrize('name', EXACT_SPECS)
def test_monte_carlo_agrees_with_exact_at_a_million_samples(spec_file, name):
    spec = load_spec(spec_file(name))
    table = moment_table(spec, 8, num_samples=1_000_000, seed=2024, streams=8, workers=4)
    for row in table.rows:
        exact = row.exact.to_complex().real
        if row.mc_stderr == 0:
            assert row.mc_estimate == pytest.approx(exact, abs=1e-12)
        else:
            assert abs(row.mc_estimate - exact) <= 4 * row.mc_stderr, row.key


@pytest.mark.slow
@pytest.mark.parametrize('name', ['z4_twist.json', 'mu4_klein.json', 'mu4_klein_pair.json'])
def test_nontrivial_irreps_average_to_zero(spec_file, name):
    spec = load_spec(spec_file(name))
    labels = [label for label in enumerate_irreps(spec, 3) if not label.is_trivial()]
    assert labels
    for k, label in enumerate(labels):
        mean, err = irrep_mean(spec, label, 1_000_000, [31, k])
        assert abs(mean) <= 4 * err, label.describe()
