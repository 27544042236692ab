"""
Haar Moments Module
Exact and Monte Carlo trace moments of Sato-Tate group elements under Haar
measure, per component class and averaged over the component group
"""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
import sympy
from dotenv import load_dotenv

from finite_group_core import Cyclotomic, ZERO, class_index, conjugacy_classes
from st_group import IrrepLabel, STGroupSpec, sample_block_traces, sample_traces, stream_generators, symm_character

load_dotenv()

logger = logging.getLogger(__name__)

# Configuration
MC_STREAMS = int(os.getenv('STCHECK_MC_STREAMS', '8'))
MC_WORKERS = int(os.getenv('STCHECK_WORKERS', '1'))
CHUNK_SIZE = 1 << 16
EXACT_TERM_BUDGET = 64
TRACE_SAMPLE_KEY = 2 ** 31  # spawn key outside the range mc_moments uses

OBSERVABLES = ('re', 'abs2')
CSV_COLUMNS = ['observable', 'order', 'component_class', 'exact_num', 'exact_den', 'mc_estimate', 'mc_stderr']


@lru_cache(maxsize=None)
def su2_trace_moment(n: int) -> Fraction:
    """Integral of tr(g)^n over Haar SU(2): zero for odd n, Catalan(n/2) for even n"""
    if n < 0:
        raise ValueError('moment order must be non-negative')
    if n % 2:
        return Fraction(0)
    return Fraction(int(sympy.catalan(n // 2)))


@dataclass
class MomentRow:
    observable: str
    order: int
    component_class: str
    exact: Optional[Cyclotomic] = None
    mc_estimate: Optional[float] = None
    mc_stderr: Optional[float] = None

    @property
    def key(self) -> Tuple[str, int, str]:
        return self.observable, self.order, self.component_class

    def exact_value(self) -> Optional[complex]:
        return None if self.exact is None else self.exact.to_complex()

    def exact_fraction(self) -> Optional[Fraction]:
        if self.exact is None or not self.exact.is_rational():
            return None
        return self.exact.to_fraction()


@dataclass
class MomentTable:
    spec_name: str
    n_max: int
    classes: List[str]
    rows: List[MomentRow] = field(default_factory=list)

    @property
    def labels(self) -> List[Tuple[str, int]]:
        return sorted({(r.observable, r.order) for r in self.rows})

    @property
    def per_component(self) -> Dict[str, List[MomentRow]]:
        out: Dict[str, List[MomentRow]] = {}
        for r in self.rows:
            out.setdefault(r.component_class, []).append(r)
        return out

    def row(self, observable: str, order: int, component_class: str = 'all') -> MomentRow:
        for r in self.rows:
            if r.key == (observable, order, component_class):
                return r
        raise KeyError((observable, order, component_class))

    def merge(self, other: 'MomentTable') -> 'MomentTable':
        """Combine exact values from one table with Monte Carlo values from another"""
        by_key = {r.key: r for r in other.rows}
        rows = []
        for r in self.rows:
            o = by_key.pop(r.key, None)
            rows.append(MomentRow(
                r.observable, r.order, r.component_class,
                exact=r.exact if r.exact is not None else (o.exact if o else None),
                mc_estimate=r.mc_estimate if r.mc_estimate is not None else (o.mc_estimate if o else None),
                mc_stderr=r.mc_stderr if r.mc_stderr is not None else (o.mc_stderr if o else None),
            ))
        rows.extend(by_key.values())
        return MomentTable(self.spec_name, self.n_max, self.classes, rows)

    def to_csv(self, path) -> None:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                q = r.exact_fraction()
                writer.writerow([
                    r.observable, r.order, r.component_class,
                    '' if q is None else q.numerator,
                    '' if q is None else q.denominator,
                    '' if r.mc_estimate is None else format(r.mc_estimate, '.17g'),
                    '' if r.mc_stderr is None else format(r.mc_stderr, '.17g'),
                ])

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            q = r.exact_fraction()
            if q is not None:
                exact = str(q)
            elif r.exact is not None:
                exact = r.exact.to_json()
            else:
                exact = None
            rows.append({
                'observable': r.observable,
                'order': r.order,
                'component_class': r.component_class,
                'exact': exact,
                'mc_estimate': r.mc_estimate,
                'mc_stderr': r.mc_stderr,
            })
        return {'spec': self.spec_name, 'n_max': self.n_max, 'classes': self.classes, 'rows': rows}

    def to_json(self, path) -> None:
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')


# ---------------------------------------------------------------------------
# Exact moments
# ---------------------------------------------------------------------------

def _poly_mul(p: dict, q: dict) -> dict:
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, ZERO) + c1 * c2
    return out



def _haar_expectation(poly: dict) -> Cyclotomic:
    """E over independent Haar SU(2) traces t_i of a polynomial {exponents: coefficient}"""
    total = ZERO
    for exps, coeff in poly.items():
        weight = Fraction(1)
        for k in exps:
            weight *= su2_trace_moment(k)
            if not weight:
                break
        if weight:
            total = total + coeff * weight
    return total


def _unit(i: int, m: int, power: int = 1) -> tuple:
    return tuple(power if j == i else 0 for j in range(m))


def _observable_poly(spec: STGroupSpec, g: int, observable: str) -> dict:
    """The observable on component g as a polynomial in the block traces"""
    weights = spec.twist_traces[g]
    m = spec.m
    if observable == 'trace':
        return {_unit(i, m): w for i, w in enumerate(weights) if not w.is_zero()}
    if observable == 're':
        return {_unit(i, m): w.real_part() for i, w in enumerate(weights) if not w.is_zero()}
    if observable == 'abs2':
        poly = {}
        for i, wi in enumerate(weights):
            for j, wj in enumerate(weights):
                if wi.is_zero() or wj.is_zero():
                    continue
                e = tuple(a + b for a, b in zip(_unit(i, m), _unit(j, m)))
                poly[e] = poly.get(e, ZERO) + wi * wj.conjugate()
        return poly
    raise ValueError(f'unknown observable {observable!r}')


def exact_available(spec: STGroupSpec, n_max: int) -> bool:
    return n_max * spec.m <= EXACT_TERM_BUDGET


def component_trace_moments(spec: STGroupSpec, gamma_elem: int, n_max: int,
                            observable: str = 'trace') -> Optional[List[Cyclotomic]]:
    """
    Exact E[X^n], n = 0..n_max, on one component, where X is the trace
    (observable 'trace'), its real part ('re') or |trace|^2 ('abs2').
    Returns None when the expansion is over budget.
    """
    if not exact_available(spec, n_max):
        logger.info(f'{spec.name}: exact moments unavailable for n_max={n_max}, m={spec.m}')
        return None
    poly = _observable_poly(spec, gamma_elem, observable)
    moments = [Cyclotomic.rational(1)]
    power = {(0,) * spec.m: Cyclotomic.rational(1)}
    for _ in range(n_max):
        power = _poly_mul(power, poly)
        moments.append(_haar_expectation(power))
    return moments


def _observable_orders(spec: STGroupSpec, n_max: int) -> Dict[str, int]:
    orders = {'re': n_max}
    if not spec.twists_real():
        orders['abs2'] = n_max // 2
    return orders


def class_labels(spec: STGroupSpec) -> List[str]:
    return [spec.gamma.names[c[0]] for c in conjugacy_classes(spec.gamma)]


def group_trace_moments(spec: STGroupSpec, n_max: int) -> MomentTable:
    """Exact moments per component class and averaged uniformly over the component group"""
    classes = conjugacy_classes(spec.gamma)
    labels = class_labels(spec)
    table = MomentTable(spec.name, n_max, labels)
    for observable, top in _observable_orders(spec, n_max).items():
        per_class = [component_trace_moments(spec, c[0], top, observable) for c in classes]
        for label, values in zip(labels, per_class):
            for k in range(top + 1):
                table.rows.append(MomentRow(observable, k, label, exact=None if values is None else values[k]))
        for k in range(top + 1):
            if per_class[0] is None:
                exact = None
            else:
                exact = ZERO
                for c, values in zip(classes, per_class):
                    exact = exact + values[k] * Fraction(len(c), spec.gamma.order)
            table.rows.append(MomentRow(observable, k, 'all', exact=exact))
    return table


# ---------------------------------------------------------------------------
# Monte Carlo moments
# ---------------------------------------------------------------------------

def _stream_sizes(num_samples: int, streams: int) -> List[int]:
    base, extra = divmod(num_samples, streams)
    return [base + (1 if k < extra else 0) for k in range(streams)]


def _observable_values(traces: np.ndarray, observable: str) -> np.ndarray:
    return traces.real if observable == 're' else np.abs(traces) ** 2


def _run_stream(spec: STGroupSpec, rng: np.random.Generator, size: int, orders: Dict[str, int],
                class_of: np.ndarray, num_classes: int) -> dict:
    sums = {obs: (np.zeros((num_classes, top + 1)), np.zeros((num_classes, top + 1))) for obs, top in orders.items()}
    counts = np.zeros(num_classes, dtype=np.int64)
    done = 0
    while done < size:
        n = min(CHUNK_SIZE, size - done)
        traces, comps = sample_traces(spec, n, rng)
        cls = class_of[comps]
        counts += np.bincount(cls, minlength=num_classes)
        for obs, top in orders.items():
            x = _observable_values(traces, obs)
            powers = x[:, None] ** np.arange(top + 1)
            s1, s2 = sums[obs]
            for c in range(num_classes):
                mask = cls == c
                s1[c] += powers[mask].sum(axis=0)
                s2[c] += (powers[mask] ** 2).sum(axis=0)
        done += n
    return {'sums': sums, 'counts': counts}


def _mean_and_stderr(s1: np.ndarray, s2: np.ndarray, n: int) -> Tuple[List[Optional[float]], List[Optional[float]]]:
    """Per-order mean and stderr; None throughout for a class that drew no samples"""
    if n == 0:
        return [None] * len(s1), [None] * len(s1)
    mean = s1 / n
    if n == 1:
        return mean.tolist(), [0.0] * len(s1)
    var = np.maximum((s2 - n * mean ** 2) / (n - 1), 0.0)
    return mean.tolist(), np.sqrt(var / n).tolist()


def mc_moments(spec: STGroupSpec, n_max: int, num_samples: int, seed: int,
               streams: Optional[int] = None, workers: Optional[int] = None) -> MomentTable:
    """
    Monte Carlo moments with standard errors.

    Args:
        spec: the group blueprint
        n_max: highest order
        num_samples: total number of Haar samples, split across streams
        seed: root seed; stream k uses SeedSequence(seed).spawn(streams)[k]
        streams: number of independent streams
        workers: thread count; results do not depend on it

    Returns:
        MomentTable with mc_estimate and mc_stderr filled in
    """
    if num_samples < 1:
        raise ValueError('num_samples must be at least 1')
    streams = streams or MC_STREAMS
    workers = workers or MC_WORKERS
    classes = conjugacy_classes(spec.gamma)
    labels = class_labels(spec)
    where = class_index(spec.gamma)
    class_of = np.array([where[g] for g in range(spec.gamma.order)])
    orders = _observable_orders(spec, n_max)
    rngs = stream_generators(seed, streams)
    sizes = _stream_sizes(num_samples, streams)

    def run(k):
        return _run_stream(spec, rngs[k], sizes[k], orders, class_of, len(classes))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, range(streams)))
    logger.debug(f'{spec.name}: {num_samples} samples over {streams} streams, {workers} worker(s)')

    counts = sum(r['counts'] for r in results)
    table = MomentTable(spec.name, n_max, labels)
    for obs, top in orders.items():
        s1 = sum(r['sums'][obs][0] for r in results)
        s2 = sum(r['sums'][obs][1] for r in results)
        for c, label in enumerate(labels):
            if not counts[c]:
                logger.warning(f'{spec.name}: no Monte Carlo samples landed in class {label}')
            mean, err = _mean_and_stderr(s1[c], s2[c], int(counts[c]))
            for k in range(top + 1):
                table.rows.append(MomentRow(obs, k, label, mc_estimate=mean[k], mc_stderr=err[k]))
        mean, err = _mean_and_stderr(s1.sum(axis=0), s2.sum(axis=0), int(counts.sum()))
        for k in range(top + 1):
            table.rows.append(MomentRow(obs, k, 'all', mc_estimate=mean[k], mc_stderr=err[k]))
    return table


def moment_table(spec: STGroupSpec, n_max: int, num_samples: int = 0, seed: Optional[int] = None,
                 streams: Optional[int] = None, workers: Optional[int] = None) -> MomentTable:
    """Exact table, with Monte Carlo columns added when num_samples > 0"""
    table = group_trace_moments(spec, n_max)
    if num_samples:
        if seed is None:
            raise ValueError('Monte Carlo moments need a seed')
        table = table.merge(mc_moments(spec, n_max, num_samples, seed, streams, workers))
    return table


def mc_trace_sample(spec: STGroupSpec, num_samples: int, seed) -> Tuple[np.ndarray, np.ndarray]:
    """
    Raw (traces, components) sample from a child of the seed reserved for it,
    disjoint from the streams mc_moments spawns
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(TRACE_SAMPLE_KEY,)))
    return sample_traces(spec, num_samples, rng)


def irrep_mean(spec: STGroupSpec, label: IrrepLabel, num_samples: int, seed: int) -> Tuple[complex, float]:
    """
    Monte Carlo mean of the character of Symm^e1 x ... x Symm^em x eta over Haar
    measure: SU(2) factors from their traces, h uniform over H
    """
    if num_samples < 1:
        raise ValueError('num_samples must be at least 1')
    rng = np.random.default_rng(seed)
    total = 0j
    total_sq = 0.0
    done = 0
    while done < num_samples:
        n = min(CHUNK_SIZE, num_samples - done)
        t = sample_block_traces(rng, n, spec.m)
        h = rng.integers(label.group.order, size=n)
        values = label.eta.values[h].astype(complex)
        for i, e in enumerate(label.e):
            values = values * symm_character(e, t[:, i])
        total += values.sum()
        total_sq += float(np.sum(np.abs(values) ** 2))
        done += n
    mean = total / num_samples
    if num_samples == 1:
        return complex(mean), 0.0
    var = max((total_sq - num_samples * abs(mean) ** 2) / (num_samples - 1), 0.0)
    return complex(mean), float(np.sqrt(var / num_samples))
