"""
Sato-Tate Group Module
Blueprints of groups (SU(2) x ... x SU(2)) . Gamma with a permutation action and
per-block twists: validation, unitary realization of elements, Haar sampling
and the irreducible representation labels Symm^e1 x ... x Symm^em x eta
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import eval_chebyu

from finite_group_core import (
    Cyclotomic, FiniteGroup, IrreducibleCharacter, MatrixGroup, ONE, ZERO,
    character_table, exact_matrix, group_from_json, identity_matrix, is_unitary,
    mat_mul, matrices_equal, matrix_group, scalar_matrix, scale_matrix, sign_normalize,
    to_complex_matrix, trace_exact,
)

logger = logging.getLogger(__name__)

MATRIX_TOLERANCE = 1e-8
UNITARY_TOLERANCE = 1e-10

SPEC_KEYS = {'name', 'm', 'a', 'block_dims', 'gamma', 'action', 'twists', 'labels'}


class SpecError(Exception):
    """Base class for Sato-Tate group blueprint errors"""


class InvalidSpec(SpecError):
    pass


class DimensionMismatch(SpecError):
    pass


@dataclass(frozen=True, eq=False)
class STGroupSpec:
    m: int
    gamma: FiniteGroup
    action: Tuple[Tuple[int, ...], ...]  # action[g][i] is the block that block i is sent to
    twists: Tuple[Tuple[np.ndarray, ...], ...]  # twists[g][i], exact N_i x N_i
    a: int
    block_dims: Tuple[int, ...]
    labels: Dict[str, str] = field(default_factory=dict)
    name: str = 'spec'

    @property
    def dimension(self) -> int:
        return sum(2 * n for n in self.block_dims)

    @cached_property
    def offsets(self) -> List[int]:
        return [int(x) for x in np.cumsum([0] + [2 * n for n in self.block_dims])[:-1]]

    @cached_property
    def inverse_action(self) -> Tuple[Tuple[int, ...], ...]:
        out = []
        for perm in self.action:
            inv = [0] * self.m
            for i, j in enumerate(perm):
                inv[j] = i
            out.append(tuple(inv))
        return tuple(out)

    @cached_property
    def twists_complex(self) -> List[List[np.ndarray]]:
        return [[to_complex_matrix(t) for t in row] for row in self.twists]

    @cached_property
    def twist_traces(self) -> List[List[Cyclotomic]]:
        """tr(twists(g,i)) on blocks fixed by g, zero elsewhere"""
        return [[trace_exact(self.twists[g][i]) if self.action[g][i] == i else ZERO
                 for i in range(self.m)] for g in range(self.gamma.order)]

    @cached_property
    def trace_weights(self) -> np.ndarray:
        """Complex version of twist_traces, shape (|Gamma|, m); exactly real or imaginary weights stay so"""
        return np.array([[_weight_complex(w) for w in row] for row in self.twist_traces], dtype=complex)

    def fixed_blocks(self, g: int) -> List[int]:
        return [i for i in range(self.m) if self.action[g][i] == i]

    def has_trivial_action(self) -> bool:
        return all(perm == tuple(range(self.m)) for perm in self.action)

    def is_su2(self) -> bool:
        """The m=1, trivial component group case whose trace law is the semicircle"""
        return self.m == 1 and self.gamma.order == 1 and self.block_dims == (1,)

    def twists_real(self) -> bool:
        return all(w.conjugate() == w for row in self.twist_traces for w in row)


def _weight_complex(w: Cyclotomic) -> complex:
    z = w.to_complex()
    conj = w.conjugate()
    if conj == w:
        return complex(z.real, 0.0)
    if conj == -w:
        return complex(0.0, z.imag)
    return z


@dataclass(frozen=True, eq=False)
class STElement:
    g: Tuple[np.ndarray, ...]
    component: int

    def check(self) -> List[str]:
        out = []
        for i, gi in enumerate(self.g):
            if np.linalg.norm(gi @ gi.conj().T - np.eye(2)) >= UNITARY_TOLERANCE:
                out.append(f'g_{i + 1} is not unitary')
            if abs(np.linalg.det(gi) - 1) >= UNITARY_TOLERANCE:
                out.append(f'g_{i + 1} does not have determinant 1')
        return out


@dataclass(frozen=True, eq=False)
class IrrepLabel:
    e: Tuple[int, ...]
    eta: IrreducibleCharacter
    group: MatrixGroup

    def __post_init__(self):
        sign = eta_sign(self.group, self.eta)
        if sign != (-1) ** sum(self.e):
            raise SpecError(f'eta(-I) = {sign} I does not match exponents {self.e}')

    def is_trivial(self) -> bool:
        return not any(self.e) and self.eta.is_trivial()

    def describe(self) -> str:
        sym = ' x '.join(f'Symm^{k}' for k in self.e)
        return f'{sym} x eta{self.eta.index} (dim {self.eta.degree})'


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _permutation(images: Sequence[int], m: int, where: str) -> Tuple[int, ...]:
    perm = tuple(int(x) - 1 for x in images)
    if sorted(perm) != list(range(m)):
        raise InvalidSpec(f'{where}: {list(images)} is not a permutation of 1..{m}')
    return perm


def spec_from_json(obj: dict) -> STGroupSpec:
    """
    Build a spec from its JSON description.

    Keys: m, a, block_dims (default all 1), gamma (group description, default
    trivial), action {element: [images of 1..m]}, twists {element: {block: matrix}},
    labels (free text), name. Missing action or twist entries mean identity.
    """
    unknown = set(obj) - SPEC_KEYS
    if unknown:
        raise InvalidSpec(f'unknown spec keys: {sorted(unknown)}')
    try:
        m = int(obj['m'])
        a = int(obj.get('a', 1))
    except KeyError as e:
        raise InvalidSpec(f'missing spec key {e}') from e
    if m < 1 or a < 1:
        raise InvalidSpec('m and a must be positive')
    block_dims = tuple(int(n) for n in obj.get('block_dims', [1] * m))
    if len(block_dims) != m or min(block_dims) < 1:
        raise InvalidSpec(f'block_dims must list {m} positive integers')
    gamma = group_from_json(obj.get('gamma', {'cyclic': 1}))

    action_obj = obj.get('action', {})
    twist_obj = obj.get('twists', {})
    for key in list(action_obj) + list(twist_obj):
        if key not in gamma.names:
            raise InvalidSpec(f'unknown component group element {key!r}')

    action, twists = [], []
    for g, gname in enumerate(gamma.names):
        if gname in action_obj:
            action.append(_permutation(action_obj[gname], m, f'action of {gname}'))
        else:
            action.append(tuple(range(m)))
        blocks = twist_obj.get(gname, {})
        row = []
        for i in range(m):
            raw = blocks.get(str(i + 1))
            matrix = identity_matrix(block_dims[i]) if raw is None else exact_matrix(raw)
            if matrix.shape != (block_dims[i], block_dims[i]):
                raise DimensionMismatch(f'twist of {gname} on block {i + 1} has shape {matrix.shape}, '
                                        f'expected {block_dims[i]}x{block_dims[i]}')
            row.append(matrix)
        twists.append(tuple(row))

    labels = {str(k): str(v) for k, v in obj.get('labels', {}).items()}
    return STGroupSpec(m=m, gamma=gamma, action=tuple(action), twists=tuple(twists), a=a,
                       block_dims=block_dims, labels=labels, name=str(obj.get('name', 'spec')))


def load_spec(path) -> STGroupSpec:
    """Read a spec JSON file; JSON syntax errors propagate with their line numbers"""
    with open(path, encoding='utf-8') as f:
        obj = json.load(f)
    if not isinstance(obj, dict):
        raise InvalidSpec('spec file must contain a JSON object')
    spec = spec_from_json(obj)
    logger.debug(f'Loaded spec {spec.name}: m={spec.m}, |Gamma|={spec.gamma.order}, a={spec.a}')
    return spec


def su2_spec() -> STGroupSpec:
    return spec_from_json({'name': 'SU(2)', 'm': 1})


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _equal_up_to_sign(x: np.ndarray, y: np.ndarray) -> bool:
    return matrices_equal(x, y) or matrices_equal(x, scale_matrix(-ONE, y))


def validate_spec(spec: STGroupSpec) -> dict:
    """
    Check every structural invariant of a spec

    Returns:
        dict: success flag and a list of failures, each with invariant and witness
    """
    failures = []

    def fail(invariant, witness):
        failures.append({'invariant': invariant, 'witness': witness})

    g = spec.gamma
    names = g.names
    if spec.action[g.identity] != tuple(range(spec.m)):
        fail('action_identity', f'identity acts as {spec.action[g.identity]}')
    for s, t in g.pairs():
        composed = tuple(spec.action[s][spec.action[t][i]] for i in range(spec.m))
        if composed != spec.action[g.mul(s, t)]:
            fail('action_homomorphism', f'({names[s]}, {names[t]})')

    for s in range(g.order):
        for i in range(spec.m):
            j = spec.action[s][i]
            if spec.block_dims[i] != spec.block_dims[j]:
                fail('block_dims_orbit', f'{names[s]} sends block {i + 1} to block {j + 1} of another size')

    for i in range(spec.m):
        if not matrices_equal(spec.twists[g.identity][i], identity_matrix(spec.block_dims[i])):
            fail('twist_identity', f'block {i + 1}')

    for s in range(g.order):
        order = g.element_order(s)
        for i in range(spec.m):
            t = spec.twists[s][i]
            if not is_unitary(t):
                fail('twist_unitary', f'({names[s]}, block {i + 1})')
                continue
            power = identity_matrix(spec.block_dims[i])
            for _ in range(2 * order):
                power = mat_mul(power, t)
            if not matrices_equal(power, identity_matrix(spec.block_dims[i])):
                fail('twist_finite_order', f'({names[s]}, block {i + 1}) has T^{2 * order} != I')
            if matrices_equal(t, scalar_matrix(t[0, 0], spec.block_dims[i])):
                if t[0, 0] ** (2 * spec.a) != ONE:
                    fail('twist_scalar_in_mu_2a', f'({names[s]}, block {i + 1}) scalar {t[0, 0]!r}')

    inv = spec.inverse_action
    for s, t in g.pairs():
        st = g.mul(s, t)
        for i in range(spec.m):
            lhs = mat_mul(spec.twists[s][i], spec.twists[t][inv[s][i]])
            rhs = spec.twists[st][i]
            if lhs.shape != rhs.shape:
                continue
            if not _equal_up_to_sign(lhs, rhs):
                fail('twist_compatibility', f'({names[s]}, {names[t]}) on block {i + 1}')

    # H is built from block 1, so the other blocks must be functions of it
    for s, t in g.pairs():
        if s >= t or not _equal_up_to_sign(spec.twists[s][0], spec.twists[t][0]):
            continue
        for i in range(1, spec.m):
            if not _equal_up_to_sign(spec.twists[s][i], spec.twists[t][i]):
                fail('twist_blocks_consistent',
                     f'{names[s]} and {names[t]} agree on block 1 but not on block {i + 1}')

    if failures:
        logger.warning(f'Spec {spec.name}: {len(failures)} invariant failure(s)')
    return {'success': not failures, 'failures': failures}


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------

def su2_from_quaternion(q: np.ndarray) -> np.ndarray:
    a, b, c, d = q / np.linalg.norm(q)
    return np.array([[a + 1j * b, c + 1j * d], [-c + 1j * d, a - 1j * b]])


def diag_su2(theta: float) -> np.ndarray:
    return np.diag([np.exp(1j * theta), np.exp(-1j * theta)])


def identity_element(spec: STGroupSpec) -> STElement:
    return STElement(tuple(np.eye(2, dtype=complex) for _ in range(spec.m)), spec.gamma.identity)


def sample_element(spec: STGroupSpec, rng_seed, forced_component: Optional[int] = None) -> STElement:
    """Haar-random element: uniform unit quaternions per factor, uniform component"""
    rng = np.random.default_rng(rng_seed)
    component = int(rng.integers(spec.gamma.order)) if forced_component is None else int(forced_component)
    quats = rng.standard_normal((spec.m, 4))
    return STElement(tuple(su2_from_quaternion(q) for q in quats), component)


def stream_generators(seed: int, streams: int) -> List[np.random.Generator]:
    """Stream k draws from SeedSequence(seed).spawn(streams)[k]"""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(streams)]


def sample_block_traces(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """Traces of n x m independent Haar SU(2) matrices (twice the normalized first quaternion coordinate)"""
    q = rng.standard_normal((n, m, 4))
    return 2 * q[..., 0] / np.linalg.norm(q, axis=-1)


def sample_traces(spec: STGroupSpec, n: int, rng: np.random.Generator,
                  forced_component: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized traces of n Haar-random elements; returns (traces, components)"""
    if forced_component is None:
        components = rng.integers(spec.gamma.order, size=n)
    else:
        components = np.full(n, forced_component)
    t = sample_block_traces(rng, n, spec.m)
    traces = np.sum(spec.trace_weights[components] * t, axis=1)
    return traces, components


def embed_matrix(spec: STGroupSpec, elem: STElement) -> np.ndarray:
    """
    Block-monomial unitary realization: block row i holds g_i (x) twists(gamma, i)
    in block column action^-1(i).

    Putting g_{action^-1(i)} in row i instead is the same matrix after renaming
    the SU(2) coordinates (g_1, ..., g_m) by the permutation. That renaming is a
    bijection of SU(2)^m preserving Haar measure, so the set of matrices, traces
    and characteristic polynomial laws do not depend on the choice.
    conjugate_by uses the row-i convention.
    """
    if len(elem.g) != spec.m or any(np.shape(gi) != (2, 2) for gi in elem.g):
        raise DimensionMismatch(f'element has {len(elem.g)} factors, spec needs {spec.m} 2x2 factors')
    if not 0 <= elem.component < spec.gamma.order:
        raise DimensionMismatch(f'component {elem.component} outside the component group')
    out = np.zeros((spec.dimension, spec.dimension), dtype=complex)
    inv = spec.inverse_action[elem.component]
    for i in range(spec.m):
        j = inv[i]
        block = np.kron(elem.g[i], spec.twists_complex[elem.component][i])
        r, c = spec.offsets[i], spec.offsets[j]
        out[r:r + block.shape[0], c:c + block.shape[1]] = block
    return out


def trace(spec: STGroupSpec, elem: STElement) -> complex:
    """Sum of tr(g_i) tr(twists(gamma, i)) over blocks fixed by gamma"""
    weights = spec.trace_weights[elem.component]
    return complex(sum(weights[i] * np.trace(elem.g[i]) for i in spec.fixed_blocks(elem.component)))


def char_poly(spec: STGroupSpec, elem: STElement) -> np.ndarray:
    """
    Characteristic polynomial of the embedded matrix, highest degree first.
    Returned as a real array when every imaginary part is below the tolerance.
    """
    coeffs = np.poly(embed_matrix(spec, elem))
    if np.max(np.abs(coeffs.imag)) < MATRIX_TOLERANCE:
        return coeffs.real
    return coeffs


def conjugate_by(spec: STGroupSpec, elem: STElement, h: Sequence[np.ndarray]) -> STElement:
    """y x y^-1 for y = (h_1, ..., h_m) in the identity component"""
    inv = spec.inverse_action[elem.component]
    g = tuple(h[i] @ elem.g[i] @ h[inv[i]].conj().T for i in range(spec.m))
    return STElement(g, elem.component)


# ---------------------------------------------------------------------------
# Irreducible representations
# ---------------------------------------------------------------------------

def component_preimage(spec: STGroupSpec) -> MatrixGroup:
    """
    The finite group H generated by -I and the block-1 twists. validate_spec
    checks that the twists on the other blocks are determined by block 1.
    """
    dim = spec.block_dims[0]
    gens = [scalar_matrix(-ONE, dim)]
    for s in range(spec.gamma.order):
        gens.append(sign_normalize(spec.twists[s][0]))
    return matrix_group(gens, name=f'H({spec.name})')


def eta_sign(group: MatrixGroup, eta: IrreducibleCharacter) -> int:
    value = eta.values[group.minus_identity] / eta.degree
    return 1 if value.real > 0 else -1


def symm_character(e: int, t) -> np.ndarray:
    """Character of Symm^e at an SU(2) element of trace t"""
    return eval_chebyu(e, np.asarray(t) / 2)


def enumerate_irreps(spec: STGroupSpec, e_max: int) -> List[IrrepLabel]:
    """All Symm^e1 x ... x Symm^em x eta with e_i <= e_max and eta(-I) = (-1)^(e1+...+em)"""
    if not spec.has_trivial_action():
        raise SpecError('irreducible representation labels need a trivial permutation action')
    group = component_preimage(spec)
    chars = character_table(group)
    signs = [eta_sign(group, eta) for eta in chars]
    labels = []
    for e in product(range(e_max + 1), repeat=spec.m):
        parity = (-1) ** sum(e)
        for eta, sign in zip(chars, signs):
            if sign == parity:
                labels.append(IrrepLabel(tuple(e), eta, group))
    logger.info(f'{spec.name}: |H|={group.order}, {len(chars)} irreducibles, {len(labels)} labels up to e={e_max}')
    return labels
