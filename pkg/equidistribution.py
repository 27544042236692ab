"""
Equidistribution Module
Empirical Frobenius statistics against the Haar-measure predictions of a
Sato-Tate group blueprint, globally and per component class
"""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import isfinite, sqrt
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.stats
from dotenv import load_dotenv

from finite_group_core import class_index
from frobenius_data import ClassMap, CoefficientTable, frobenius_class_label
from haar_moments import class_labels, group_trace_moments, mc_moments, mc_trace_sample
from st_group import STGroupSpec

load_dotenv()

logger = logging.getLogger(__name__)

# Configuration
WORKERS = int(os.getenv('STCHECK_WORKERS', '1'))
DEFAULT_Z_MAX = 4.0
DEFAULT_KS_MAX = 0.03
MC_THEORY_SAMPLES = 1_000_000
HISTOGRAM_COLUMNS = ['bin_left', 'bin_right', 'count', 'density', 'predicted_density']
EQUALITY_TOLERANCE = 1e-12


class EquidistributionError(Exception):
    """Base class for equidistribution errors"""


class EmptySample(EquidistributionError):
    pass


class MissingClassLabels(EquidistributionError):
    pass


# ---------------------------------------------------------------------------
# Sample statistics
# ---------------------------------------------------------------------------

def empirical_moments(samples, n_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sample moments E[t^k], k = 0..n_max, with standard errors from the sample
    variance of t^k

    Args:
        samples: real or complex sample values
        n_max: highest order

    Returns:
        (estimates, stderrs) as arrays of length n_max + 1
    """
    x = np.asarray(samples)
    n = x.size
    if n == 0:
        raise EmptySample('cannot take moments of an empty sample')
    powers = x.reshape(-1, 1) ** np.arange(n_max + 1)
    means = powers.mean(axis=0)
    if n == 1:
        return means, np.zeros(n_max + 1)
    var = np.abs(powers - means).astype(float) ** 2
    stderr = np.sqrt(var.sum(axis=0) / (n - 1) / n)
    return means, stderr


def ks_statistic(samples, cdf: Callable) -> float:
    """Sup distance between the empirical CDF and cdf, both one-sided gaps included"""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptySample('cannot compute a KS distance for an empty sample')
    return float(scipy.stats.kstest(x, cdf).statistic)


def two_sample_ks(samples, reference) -> float:
    x = np.asarray(samples, dtype=float)
    y = np.asarray(reference, dtype=float)
    if x.size == 0 or y.size == 0:
        raise EmptySample('cannot compute a KS distance for an empty sample')
    return float(scipy.stats.ks_2samp(x, y).statistic)


def semicircle_cdf(t):
    """Distribution function of the trace of a Haar-random SU(2) element, clamped to [-2, 2]"""
    u = np.clip(np.asarray(t, dtype=float), -2.0, 2.0)
    value = u * np.sqrt(4.0 - u * u) / (4 * np.pi) + np.arcsin(u / 2) / np.pi + 0.5
    value = np.clip(value, 0.0, 1.0)
    return float(value) if value.ndim == 0 else value


def semicircle_density(t):
    u = np.asarray(t, dtype=float)
    value = np.where(np.abs(u) < 2, np.sqrt(np.clip(4.0 - u * u, 0.0, None)) / (2 * np.pi), 0.0)
    return float(value) if value.ndim == 0 else value


def histogram(samples, bins: int = 40, predicted: Union[Callable, Sequence, None] = None,
              bounds: Tuple[float, float] = (-2.0, 2.0)) -> List[dict]:
    """
    Histogram rows (bin_left, bin_right, count, density, predicted_density).

    predicted is either a density function evaluated at the bin centres or a
    reference sample histogrammed over the same bins.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptySample('cannot histogram an empty sample')
    lo, hi = min(bounds[0], float(x.min())), max(bounds[1], float(x.max()))
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    widths = np.diff(edges)
    density = counts / (x.size * widths)
    if predicted is None:
        expected = np.full(bins, np.nan)
    elif callable(predicted):
        expected = np.asarray(predicted((edges[:-1] + edges[1:]) / 2), dtype=float)
    else:
        ref = np.asarray(predicted, dtype=float)
        ref_counts, _ = np.histogram(ref, bins=edges)
        expected = ref_counts / (max(ref.size, 1) * widths)
    return [
        {'bin_left': float(edges[i]), 'bin_right': float(edges[i + 1]), 'count': int(counts[i]),
         'density': float(density[i]), 'predicted_density': float(expected[i])}
        for i in range(bins)
    ]


def write_histogram(rows: List[dict], path) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=HISTOGRAM_COLUMNS, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (format(v, '.17g') if isinstance(v, float) else v) for k, v in row.items()})


# ---------------------------------------------------------------------------
# Observations
# ---------------------------------------------------------------------------

@dataclass
class Observations:
    """Normalized traces, optionally labelled by component class"""
    values: np.ndarray
    labels: Optional[List[str]] = None
    primes: Optional[List[int]] = None
    source: str = 'data'

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.labels is not None and len(self.labels) != self.values.size:
            raise ValueError(f'{len(self.labels)} labels for {self.values.size} values')

    def __len__(self):
        return int(self.values.size)


def observations_from_table(table: CoefficientTable, embedding: Union[str, int] = 'total',
                            class_map: Optional[ClassMap] = None) -> Observations:
    """
    Normalized traces a_p / sqrt(p) of a coefficient table.

    Args:
        table: parsed coefficient data
        embedding: 'total' sums over the real embeddings of the coefficient
            field; 1 or 2 picks one. Imaginary quadratic coefficients keep
            their complex value under the first embedding.
        class_map: residue map giving the component class of each prime; the
            table's own class_label column is used when absent

    Returns:
        Observations ordered by p
    """
    if embedding not in ('total', 1, 2):
        raise ValueError(f"embedding must be 'total', 1 or 2, got {embedding!r}")
    values = []
    for r in table.records:
        images = [complex(z) / sqrt(r.p) for z in r.a_p.embeddings()]
        if table.D < 0:
            values.append(images[0] if embedding in ('total', 1) else images[1])
        elif embedding == 'total':
            values.append(sum(images).real)
        else:
            values.append(images[min(embedding, len(images)) - 1].real)
    if class_map is not None:
        labels = [frobenius_class_label(r.p, class_map) for r in table.records]
    elif table.records and all(r.class_label for r in table.records):
        labels = [r.class_label for r in table.records]
    else:
        labels = None
    arr = np.array(values, dtype=complex if table.D < 0 else float)
    return Observations(arr, labels, table.primes, source='table')


def observations_from_spec(spec: STGroupSpec, num_samples: int, seed) -> Observations:
    """Traces drawn from the blueprint's own Haar sampler, labelled by class representative"""
    traces, components = mc_trace_sample(spec, num_samples, seed)
    names = class_labels(spec)
    where = class_index(spec.gamma)
    labels = [names[where[int(g)]] for g in components]
    values = traces.real if spec.twists_real() else traces
    return Observations(values, labels, None, source='mc')


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

@dataclass
class MomentComparison:
    observable: str
    order: int
    component_class: str
    theoretical: float
    empirical: float
    stderr: float
    z: float
    rel_err: Optional[float]
    n: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            'observable': self.observable,
            'order': self.order,
            'component_class': self.component_class,
            'theoretical': _json_float(self.theoretical),
            'empirical': _json_float(self.empirical),
            'stderr': _json_float(self.stderr),
            'z': _json_float(self.z),
            'rel_err': None if self.rel_err is None else _json_float(self.rel_err),
            'n': self.n,
            'passed': self.passed,
        }


def _json_float(x: float):
    if isfinite(x):
        return x
    return 'inf' if x > 0 else '-inf'


@dataclass
class TestReport:
    spec_name: str
    moments: List[MomentComparison] = field(default_factory=list)
    ks: List[dict] = field(default_factory=list)
    sample_sizes: Dict[str, int] = field(default_factory=dict)
    thresholds: Dict[str, float] = field(default_factory=dict)
    extras: Dict[str, object] = field(default_factory=dict)

    # not a pytest test class
    __test__ = False

    @property
    def verdicts(self) -> Dict[str, bool]:
        return {
            'moments': all(m.passed for m in self.moments),
            'ks': all(k['passed'] for k in self.ks),
        }

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def failures(self) -> List[str]:
        out = [f'{m.observable} moment {m.order} on {m.component_class}: z = {m.z:.3g}'
               for m in self.moments if not m.passed]
        out += [f"KS ({k['kind']}) on {k['component_class']}: D = {k['statistic']:.4g} > {k['threshold']}"
                for k in self.ks if not k['passed']]
        return out

    def to_dict(self) -> dict:
        return {
            'spec': self.spec_name,
            'passed': self.passed,
            'verdicts': self.verdicts,
            'thresholds': self.thresholds,
            'sample_sizes': self.sample_sizes,
            'moments': [m.to_dict() for m in self.moments],
            'ks': self.ks,
            'failures': self.failures(),
            'extras': self.extras,
        }

    def to_json(self, path) -> None:
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')

    def to_text(self) -> str:
        lines = [f'Sato-Tate comparison for {self.spec_name}: {"PASS" if self.passed else "FAIL"}', '']
        lines.append('sample sizes: ' + ', '.join(f'{k}={v}' for k, v in self.sample_sizes.items()))
        lines.append('')
        lines.append(f'{"obs":<5} {"k":>3} {"class":<8} {"theory":>12} {"empirical":>12} {"stderr":>10} {"z":>8}  ok')
        for m in self.moments:
            lines.append(f'{m.observable:<5} {m.order:>3} {m.component_class:<8} {m.theoretical:>12.6f} '
                         f'{m.empirical:>12.6f} {m.stderr:>10.3g} {m.z:>8.3f}  {"yes" if m.passed else "NO"}')
        for k in self.ks:
            lines.append(f"KS {k['kind']} on {k['component_class']}: D = {k['statistic']:.6f} "
                         f"(max {k['threshold']})  {'yes' if k['passed'] else 'NO'}")
        for key in sorted(self.extras):
            lines.append(f'{key}: {self.extras[key]}')
        return '\n'.join(lines) + '\n'


def _z_score(empirical: float, theoretical: float, stderr: float) -> float:
    """Standardized gap; gaps within the equality tolerance count as exact agreement"""
    gap = empirical - theoretical
    if abs(gap) <= EQUALITY_TOLERANCE:
        return 0.0
    if stderr > EQUALITY_TOLERANCE:
        return gap / stderr
    return float('inf') if gap > 0 else float('-inf')


def _observable_data(values: np.ndarray, observable: str) -> np.ndarray:
    if observable == 're':
        re = np.array(values.real, dtype=float)
        re[np.abs(re) < EQUALITY_TOLERANCE] = 0.0
        return re
    return np.abs(values) ** 2


def _theory_rows(spec: STGroupSpec, n_max: int, seed: Optional[int], num_samples: int):
    """(observable, order, class) -> (value, stderr) from exact moments, Monte Carlo filling the gaps"""
    table = group_trace_moments(spec, n_max)
    needs_mc = any(r.exact is None for r in table.rows)
    if needs_mc:
        if seed is None:
            raise EquidistributionError('exact moments are unavailable for this blueprint; a seed is needed')
        logger.info(f'{spec.name}: using {num_samples} Monte Carlo samples for the theoretical moments')
        table = table.merge(mc_moments(spec, n_max, num_samples, seed))
    out = {}
    for r in table.rows:
        if r.exact is not None:
            out[r.key] = (r.exact.to_complex().real, 0.0)
        else:
            out[r.key] = (r.mc_estimate, r.mc_stderr)
    return out, table


def compare(spec: STGroupSpec, observations: Observations, n_max: int,
            z_max: float = DEFAULT_Z_MAX, ks_max: float = DEFAULT_KS_MAX,
            seed: Optional[int] = None, num_samples: int = MC_THEORY_SAMPLES,
            workers: Optional[int] = None) -> TestReport:
    """
    Compare observed normalized traces with the blueprint's Haar predictions.

    Args:
        spec: the group blueprint
        observations: data values and (when the component group is
            nontrivial) class labels
        n_max: highest moment order compared
        z_max: per-moment |z| threshold
        ks_max: KS distance threshold
        seed: root seed for any Monte Carlo reference quantities
        num_samples: Monte Carlo sample size for those quantities
        workers: threads for the per-class comparison

    Returns:
        TestReport with moment entries per class and for the whole sample
    """
    n = len(observations)
    if n == 0:
        raise EmptySample('no observations to compare')
    names = class_labels(spec)
    if observations.labels is None:
        if spec.gamma.order > 1:
            raise MissingClassLabels(
                f'{spec.name} has a component group of order {spec.gamma.order}; observations need class labels')
        labels = np.array([names[0]] * n)
    else:
        labels = np.array(observations.labels)
        unknown = sorted(set(labels) - set(names))
        if unknown:
            raise MissingClassLabels(f'labels {unknown} are not classes of {spec.name} (classes: {names})')

    theory, table = _theory_rows(spec, n_max, seed, num_samples)
    values = observations.values
    groups = {c: values[labels == c] for c in names}
    groups['all'] = values

    def compare_class(name: str) -> List[MomentComparison]:
        data = groups[name]
        if data.size == 0:
            logger.warning(f'{spec.name}: no observations in class {name}')
            return []
        rows = []
        for observable, top in _orders(table):
            means, errs = empirical_moments(_observable_data(data, observable), top)
            for k in range(1, top + 1):
                expected, theory_err = theory[(observable, k, name)]
                if expected is None:
                    logger.warning(f'{spec.name}: no theoretical {observable} moment {k} for class {name}')
                    continue
                empirical = float(np.real(means[k]))
                stderr = float(np.hypot(errs[k], theory_err))
                z = _z_score(empirical, expected, stderr)
                rel = abs(empirical - expected) / abs(expected) if expected else None
                rows.append(MomentComparison(observable, k, name, float(expected), empirical, stderr, z,
                                             rel, int(data.size), abs(z) <= z_max))
        return rows

    order = names + ['all']
    with ThreadPoolExecutor(max_workers=workers or WORKERS) as pool:
        per_class = list(pool.map(compare_class, order))

    report = TestReport(spec.name, thresholds={'z_max': z_max, 'ks_max': ks_max})
    for rows in per_class:
        report.moments.extend(rows)
    report.sample_sizes = {c: int(groups[c].size) for c in order}

    real_values = np.asarray(values.real, dtype=float)
    if spec.is_su2():
        d = ks_statistic(real_values, semicircle_cdf)
        report.ks.append({'kind': 'semicircle', 'component_class': 'all', 'statistic': d,
                          'threshold': ks_max, 'passed': d <= ks_max})
    elif seed is not None:
        reference, _ = mc_trace_sample(spec, max(num_samples, n), seed)
        d = two_sample_ks(real_values, reference.real)
        report.ks.append({'kind': 'two_sample', 'component_class': 'all', 'statistic': d,
                          'threshold': ks_max, 'passed': d <= ks_max})
    logger.info(f'{spec.name}: compared {n} observations, {"pass" if report.passed else "fail"}')
    return report


def _orders(table) -> List[Tuple[str, int]]:
    tops: Dict[str, int] = {}
    for observable, order in table.labels:
        tops[observable] = max(tops.get(observable, 0), order)
    return sorted(tops.items(), key=lambda kv: ('re', 'abs2').index(kv[0]))
