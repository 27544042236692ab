"""
Finite Group Core Module
Exact cyclotomic arithmetic, finite groups given by Cayley tables, 2-cocycles
with their splittings, and twisting of projective representations into genuine ones
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import gcd, lcm
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from dotenv import load_dotenv
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist
from sympy.combinatorics import PermutationGroup
from sympy.combinatorics.named_groups import DihedralGroup, SymmetricGroup

load_dotenv()

logger = logging.getLogger(__name__)

# Configuration
EXHAUSTIVE_ORDER_CAP = int(os.getenv('STCHECK_MAX_GROUP_ORDER', '64'))
RANDOM_CHECKS = 4096


class GroupError(Exception):
    """Base class for finite group and cocycle errors"""


class NotAGroup(GroupError):
    pass


class NotACocycle(GroupError):
    pass


class MultiplierMismatch(GroupError):
    pass


class ParityViolation(GroupError):
    pass


# ---------------------------------------------------------------------------
# Cyclotomic numbers
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _phi_coeffs(n: int) -> Tuple[int, ...]:
    """Low-to-high integer coefficients of the n-th cyclotomic polynomial"""
    x = sympy.Symbol('x')
    poly = sympy.Poly(sympy.cyclotomic_poly(n, x), x)
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


def _reduce(raw: Sequence, n: int) -> Tuple[Fraction, ...]:
    """Reduce a coefficient list in powers of zeta_n modulo the cyclotomic polynomial"""
    phi = _phi_coeffs(n)
    d = len(phi) - 1
    a = [Fraction(v) for v in raw]
    for top in range(len(a) - 1, d - 1, -1):
        c = a[top]
        if c:
            shift = top - d
            for i in range(d + 1):
                a[shift + i] -= c * phi[i]
    a = a[:d]
    a.extend([Fraction(0)] * (d - len(a)))
    return tuple(a)


class Cyclotomic:
    """
    Element of the cyclotomic field Q(zeta_n), stored in the power basis.

    Roots of unity additionally remember their angle as a fraction of a full
    turn, so products and inverses of roots never touch the coefficient vector.
    """
    __slots__ = ('order', '_coeffs', '_turn')

    def __init__(self, order: int, coeffs: Optional[Sequence] = None, turn: Optional[Fraction] = None):
        if order < 1:
            raise ValueError(f'Cyclotomic order must be positive, got {order}')
        if coeffs is None and turn is None:
            raise ValueError('Cyclotomic needs coefficients or a turn')
        self.order = int(order)
        self._coeffs = None if coeffs is None else _reduce(coeffs, self.order)
        self._turn = turn

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_turn(cls, turn, order: int = 1) -> 'Cyclotomic':
        turn = Fraction(turn) % 1
        return cls(lcm(order, turn.denominator), None, turn)

    @classmethod
    def root_of_unity(cls, n: int, k: int = 1) -> 'Cyclotomic':
        """zeta_n^k"""
        return cls.from_turn(Fraction(k, n), n)

    @classmethod
    def rational(cls, q) -> 'Cyclotomic':
        q = Fraction(q)
        if q == 1:
            return cls(1, [q], Fraction(0))
        if q == -1:
            return cls(2, [q], Fraction(1, 2))
        return cls(1, [q])

    @classmethod
    def from_exponents(cls, n: int, terms: Dict[int, object]) -> 'Cyclotomic':
        """Sum of c * zeta_n^k over the given {k: c} terms"""
        raw = [Fraction(0)] * n
        for k, c in terms.items():
            raw[k % n] += Fraction(c)
        return cls(n, raw)

    @classmethod
    def from_json(cls, obj) -> 'Cyclotomic':
        """
        Parse a JSON value: an integer, a fraction string "a/b", {"root": [k, n]}
        or {"order": n, "numerators": [...], "denominators": [...]}
        """
        if isinstance(obj, bool):
            raise ValueError(f'Not a cyclotomic number: {obj!r}')
        if isinstance(obj, (int, str)):
            return cls.rational(Fraction(obj))
        if isinstance(obj, dict) and 'root' in obj:
            k, n = obj['root']
            return cls.root_of_unity(int(n), int(k))
        if isinstance(obj, dict) and 'order' in obj:
            nums = obj['numerators']
            dens = obj.get('denominators', [1] * len(nums))
            if len(nums) != len(dens):
                raise ValueError('numerators and denominators differ in length')
            value = cls(int(obj['order']), [Fraction(int(a), int(b)) for a, b in zip(nums, dens)])
            return value.recognize_root()
        raise ValueError(f'Not a cyclotomic number: {obj!r}')

    def to_json(self) -> dict:
        return {
            'order': self.order,
            'numerators': [c.numerator for c in self.coeffs],
            'denominators': [c.denominator for c in self.coeffs],
        }

    # -- representation -----------------------------------------------------

    @property
    def coeffs(self) -> Tuple[Fraction, ...]:
        if self._coeffs is None:
            k = int(self._turn * self.order)
            raw = [0] * (k + 1)
            raw[k] = 1
            self._coeffs = _reduce(raw, self.order)
        return self._coeffs

    @property
    def turn(self) -> Optional[Fraction]:
        """Angle / 2pi when the element is a known root of unity, else None"""
        return self._turn

    def lift(self, n: int) -> 'Cyclotomic':
        """Same number written in Q(zeta_n); n must be a multiple of the order"""
        if n == self.order:
            return self
        if n % self.order:
            raise ValueError(f'Cannot lift order {self.order} to {n}')
        if self._turn is not None:
            return Cyclotomic(n, None, self._turn)
        step = n // self.order
        raw = [Fraction(0)] * ((len(self.coeffs) - 1) * step + 1)
        for j, c in enumerate(self.coeffs):
            raw[j * step] = c
        return Cyclotomic(n, raw)

    def key(self, n: int) -> Tuple[Fraction, ...]:
        """Hashable canonical form inside Q(zeta_n)"""
        return self.lift(lcm(n, self.order)).coeffs

    def recognize_root(self) -> 'Cyclotomic':
        """Return an equal element carrying its turn if this is a root of unity"""
        if self._turn is not None or self.is_zero():
            return self
        z = self.to_complex()
        if abs(abs(z) - 1) > 1e-9:
            return self
        n = lcm(2, self.order)
        k = round(np.angle(z) * n / (2 * np.pi)) % n
        candidate = Cyclotomic.root_of_unity(n, k)
        return candidate if candidate == self else self

    def is_zero(self) -> bool:
        return self._turn is None and not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f'{self!r} is not rational')
        return self.coeffs[0]

    def to_complex(self) -> complex:
        if self._turn is not None:
            return complex(np.exp(2j * np.pi * float(self._turn)))
        powers = np.exp(2j * np.pi * np.arange(len(self.coeffs)) / self.order)
        return complex(np.dot(np.array([float(c) for c in self.coeffs]), powers))

    def multiplicative_order(self) -> Optional[int]:
        """Order in the unit group, or None if this is not a root of unity"""
        if self._turn is not None:
            return self._turn.denominator
        if self.is_zero():
            return None
        bound = lcm(2, self.order)
        if self ** bound != 1:
            return None
        for d in sympy.divisors(bound):
            if self ** d == 1:
                return d
        return bound

    # -- arithmetic ---------------------------------------------------------

    def conjugate(self) -> 'Cyclotomic':
        """Complex conjugation zeta -> zeta^-1"""
        if self._turn is not None:
            return Cyclotomic.from_turn(-self._turn, self.order)
        n = self.order
        raw = [Fraction(0)] * n
        for j, c in enumerate(self.coeffs):
            raw[(-j) % n] += c
        return Cyclotomic(n, raw)

    def real_part(self) -> 'Cyclotomic':
        return (self + self.conjugate()) * Fraction(1, 2)

    def inverse(self) -> 'Cyclotomic':
        if self._turn is not None:
            return Cyclotomic.from_turn(-self._turn, self.order)
        if self.is_zero():
            raise ZeroDivisionError('inverse of zero')
        if self.is_rational():
            return Cyclotomic.rational(1 / self.coeffs[0])
        x = sympy.Symbol('x')
        f = sympy.Poly(list(reversed(self.coeffs)), x, domain=sympy.QQ)
        g = sympy.Poly(list(reversed(_phi_coeffs(self.order))), x, domain=sympy.QQ)
        inv = sympy.invert(f, g)
        coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(inv.all_coeffs())]
        return Cyclotomic(self.order, coeffs)

    def __neg__(self):
        if self._turn is not None:
            return Cyclotomic.from_turn(self._turn + Fraction(1, 2), self.order)
        return Cyclotomic(self.order, [-c for c in self.coeffs])

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        n = lcm(self.order, other.order)
        a, b = self.lift(n).coeffs, other.lift(n).coeffs
        return Cyclotomic(n, [x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self._turn is not None and other._turn is not None:
            return Cyclotomic.from_turn(self._turn + other._turn, lcm(self.order, other.order))
        if self.is_zero() or other.is_zero():
            return Cyclotomic.rational(0)
        n = lcm(self.order, other.order)
        a, b = self.lift(n).coeffs, other.lift(n).coeffs
        raw = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        raw[i + j] += x * y
        return Cyclotomic(n, raw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)):
            return NotImplemented
        k = int(k)
        if self._turn is not None:
            return Cyclotomic.from_turn(self._turn * k, self.order)
        if k < 0:
            return self.inverse() ** (-k)
        result, base = Cyclotomic.rational(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self._turn is not None and other._turn is not None:
            return self._turn == other._turn
        n = lcm(self.order, other.order)
        return self.lift(n).coeffs == other.lift(n).coeffs

    __hash__ = None

    def __repr__(self):
        if self._turn is not None:
            return f'zeta({self._turn.denominator})^{self._turn.numerator}'
        if self.is_rational():
            return f'{self.coeffs[0]}'
        terms = [f'{c}*z{self.order}^{j}' for j, c in enumerate(self.coeffs) if c]
        return ' + '.join(terms)


def _coerce(value) -> Union[Cyclotomic, type(NotImplemented)]:
    if isinstance(value, Cyclotomic):
        return value
    if isinstance(value, (int, Fraction, np.integer)) and not isinstance(value, bool):
        return Cyclotomic.rational(int(value) if isinstance(value, np.integer) else value)
    return NotImplemented


ONE = Cyclotomic.rational(1)
ZERO = Cyclotomic.rational(0)


def sqrt_rational_integer(d: int) -> Cyclotomic:
    """
    Exact square root of an integer inside a cyclotomic field, built from
    quadratic Gauss sums: sqrt(q) for q = 1 mod 4, -i times it for q = 3 mod 4
    """
    if d == 0:
        return ZERO
    result = ONE
    if d < 0:
        result = Cyclotomic.root_of_unity(4, 1)
    for q, mult in sympy.factorint(abs(d)).items():
        if mult >= 2:
            result = result * (q ** (mult // 2))
        if mult % 2 == 0:
            continue
        if q == 2:
            root = Cyclotomic.from_exponents(8, {1: 1, 7: 1})
        else:
            gauss = Cyclotomic.from_exponents(q, {a: sympy.legendre_symbol(a, q) for a in range(1, q)})
            root = gauss if q % 4 == 1 else gauss * Cyclotomic.root_of_unity(4, 3)
        result = result * root
    return result


# ---------------------------------------------------------------------------
# Exact matrices (numpy object arrays of Cyclotomic entries)
# ---------------------------------------------------------------------------

def exact_matrix(rows) -> np.ndarray:
    """Build an exact matrix from nested lists of ints, Fractions, Cyclotomics or JSON values"""
    out = []
    for row in rows:
        out_row = []
        for entry in row:
            if isinstance(entry, Cyclotomic):
                out_row.append(entry)
            elif isinstance(entry, (dict, str)):
                out_row.append(Cyclotomic.from_json(entry))
            else:
                value = _coerce(entry)
                if value is NotImplemented:
                    raise ValueError(f'Not an exact matrix entry: {entry!r}')
                out_row.append(value)
        if out and len(out_row) != len(out[0]):
            raise ValueError('Exact matrix rows differ in length')
        out.append(out_row)
    matrix = np.empty((len(out), len(out[0]) if out else 0), dtype=object)
    for i, row in enumerate(out):
        for j, entry in enumerate(row):
            matrix[i, j] = entry
    return matrix


def identity_matrix(dim: int) -> np.ndarray:
    return exact_matrix([[1 if i == j else 0 for j in range(dim)] for i in range(dim)])


def scalar_matrix(value: Cyclotomic, dim: int) -> np.ndarray:
    matrix = identity_matrix(dim)
    for i in range(dim):
        matrix[i, i] = value
    return matrix


def scale_matrix(value: Cyclotomic, matrix: np.ndarray) -> np.ndarray:
    out = np.empty(matrix.shape, dtype=object)
    for idx, entry in np.ndenumerate(matrix):
        out[idx] = value * entry
    return out


def mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a.dot(b)


def matrices_equal(a: np.ndarray, b: np.ndarray) -> bool:
    if a.shape != b.shape:
        return False
    return all(x == y for x, y in zip(a.flat, b.flat))


def conj_transpose(matrix: np.ndarray) -> np.ndarray:
    rows, cols = matrix.shape
    out = np.empty((cols, rows), dtype=object)
    for i in range(rows):
        for j in range(cols):
            out[j, i] = matrix[i, j].conjugate()
    return out


def trace_exact(matrix: np.ndarray) -> Cyclotomic:
    total = ZERO
    for i in range(min(matrix.shape)):
        total = total + matrix[i, i]
    return total


def to_complex_matrix(matrix: np.ndarray) -> np.ndarray:
    return np.array([[entry.to_complex() for entry in row] for row in matrix], dtype=complex)


def is_unitary(matrix: np.ndarray) -> bool:
    return matrices_equal(mat_mul(matrix, conj_transpose(matrix)), identity_matrix(matrix.shape[0]))


def matrix_key(matrix: np.ndarray, n: int) -> tuple:
    return tuple(entry.key(n) for entry in matrix.flat)


def sign_normalize(matrix: np.ndarray) -> np.ndarray:
    """Pick the representative of {M, -M} whose first nonzero entry has argument in [0, pi)"""
    for entry in matrix.flat:
        if entry.is_zero():
            continue
        z = entry.to_complex()
        if abs(z.imag) < 1e-12:
            keep = z.real > 0
        else:
            keep = z.imag > 0
        return matrix if keep else scale_matrix(-ONE, matrix)
    return matrix


# ---------------------------------------------------------------------------
# Finite groups
# ---------------------------------------------------------------------------

class FiniteGroup:
    """
    A finite group as an index -> name lookup and a Cayley table on indices.
    """

    def __init__(self, table, names: Optional[Sequence[str]] = None, name: str = 'group', check: bool = True):
        self.table = np.asarray(table, dtype=int)
        n = len(self.table)
        if self.table.shape != (n, n) or n == 0:
            raise NotAGroup(f'Cayley table must be a non-empty square matrix, got shape {self.table.shape}')
        if self.table.min() < 0 or self.table.max() >= n:
            raise NotAGroup('Cayley table entries out of range')
        self.order = n
        self.names = [str(x) for x in names] if names is not None else [str(i) for i in range(n)]
        if len(self.names) != n:
            raise NotAGroup('Number of element names does not match the table')
        self.name = name

        identities = [e for e in range(n) if np.array_equal(self.table[e], np.arange(n))
                      and np.array_equal(self.table[:, e], np.arange(n))]
        if not identities:
            raise NotAGroup(f'{name}: no identity element')
        self.identity = identities[0]

        inv = []
        for a in range(n):
            hits = np.nonzero(self.table[a] == self.identity)[0]
            if len(hits) != 1 or self.table[hits[0], a] != self.identity:
                raise NotAGroup(f'{name}: element {self.names[a]} has no two-sided inverse')
            inv.append(int(hits[0]))
        self.inv = np.array(inv, dtype=int)

        if check:
            witness = self.associativity_witness()
            if witness is not None:
                s, t, u = (self.names[i] for i in witness)
                raise NotAGroup(f'{name}: ({s}*{t})*{u} != {s}*({t}*{u})')

    def __len__(self):
        return self.order

    def __repr__(self):
        return f'FiniteGroup({self.name}, order={self.order})'

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def index(self, name: str) -> int:
        return self.names.index(str(name))

    def triples(self):
        """All triples for small groups, a fixed random sample for large ones"""
        if self.order <= EXHAUSTIVE_ORDER_CAP:
            return product(range(self.order), repeat=3)
        logger.debug(f'{self.name}: order {self.order} above cap, sampling {RANDOM_CHECKS} triples')
        rng = np.random.default_rng(0)
        return (tuple(int(x) for x in row) for row in rng.integers(0, self.order, size=(RANDOM_CHECKS, 3)))

    def pairs(self):
        if self.order <= EXHAUSTIVE_ORDER_CAP:
            return product(range(self.order), repeat=2)
        rng = np.random.default_rng(0)
        return (tuple(int(x) for x in row) for row in rng.integers(0, self.order, size=(RANDOM_CHECKS, 2)))

    def associativity_witness(self) -> Optional[Tuple[int, int, int]]:
        t = self.table
        if self.order <= EXHAUSTIVE_ORDER_CAP:
            # (st)u for all triples at once
            left = t[t[:, :, None], np.arange(self.order)[None, None, :]]
            right = t[np.arange(self.order)[:, None, None], t[None, :, :]]
            bad = np.argwhere(left != right)
            return tuple(int(x) for x in bad[0]) if len(bad) else None
        for s, u, v in self.triples():
            if t[t[s, u], v] != t[s, t[u, v]]:
                return s, u, v
        return None

    def is_abelian(self) -> bool:
        return np.array_equal(self.table, self.table.T)

    def element_order(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.mul(x, a)
            k += 1
        return k

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_permutation_group(cls, group: PermutationGroup, name: str = 'group') -> 'FiniteGroup':
        elements = sorted(group.elements, key=lambda p: (not p.is_Identity, p.array_form))
        index = {tuple(p.array_form): i for i, p in enumerate(elements)}
        table = [[index[tuple((a * b).array_form)] for b in elements] for a in elements]
        names = [str(p.cyclic_form) for p in elements]
        return cls(table, names, name=name)

    @classmethod
    def cyclic(cls, n: int) -> 'FiniteGroup':
        table = [[(i + j) % n for j in range(n)] for i in range(n)]
        names = ['e'] + [f's^{i}' if i > 1 else 's' for i in range(1, n)]
        return cls(table, names, name=f'Z/{n}')

    @classmethod
    def abelian(cls, *orders: int) -> 'FiniteGroup':
        """Direct product Z/n1 x Z/n2 x ... with elements in lexicographic order"""
        elements = list(product(*(range(n) for n in orders)))
        index = {e: i for i, e in enumerate(elements)}
        table = [[index[tuple((x + y) % n for x, y, n in zip(a, b, orders))] for b in elements]
                 for a in elements]
        names = [','.join(str(x) for x in e) for e in elements]
        return cls(table, names, name='x'.join(f'Z/{n}' for n in orders))

    @classmethod
    def direct_product(cls, g: 'FiniteGroup', h: 'FiniteGroup') -> 'FiniteGroup':
        pairs = list(product(range(g.order), range(h.order)))
        index = {p: i for i, p in enumerate(pairs)}
        table = [[index[(g.mul(a[0], b[0]), h.mul(a[1], b[1]))] for b in pairs] for a in pairs]
        names = [f'({g.names[a]},{h.names[b]})' for a, b in pairs]
        return cls(table, names, name=f'{g.name}x{h.name}')

    @classmethod
    def named(cls, name: str) -> 'FiniteGroup':
        """Z/n, S3, S4, D4, D8, Q8, or products written like Z/2xZ/4"""
        key = name.replace(' ', '')
        if key == 'Q8':
            return quaternion_group()
        if key in ('S3', 'S4'):
            return cls.from_permutation_group(SymmetricGroup(int(key[1])), name=key)
        if key.startswith('D') and key[1:].isdigit():
            return cls.from_permutation_group(DihedralGroup(int(key[1:])), name=key)
        parts = key.split('x')
        if all(p.startswith('Z/') and p[2:].isdigit() for p in parts):
            orders = [int(p[2:]) for p in parts]
            return cls.cyclic(orders[0]) if len(orders) == 1 else cls.abelian(*orders)
        raise NotAGroup(f'Unknown group name {name!r}')


class MatrixGroup(FiniteGroup):
    """A finite group of exact unitary matrices, closed under multiplication"""

    def __init__(self, matrices: List[np.ndarray], table, field_order: int, name: str = 'H'):
        self.matrices = matrices
        self.field_order = field_order
        self._index = {matrix_key(m, field_order): i for i, m in enumerate(matrices)}
        super().__init__(table, [str(i) for i in range(len(matrices))], name=name, check=False)

    def index_of(self, matrix: np.ndarray) -> Optional[int]:
        return self._index.get(matrix_key(matrix, self.field_order))

    @property
    def minus_identity(self) -> Optional[int]:
        return self.index_of(scalar_matrix(-ONE, self.matrices[0].shape[0]))


def matrix_group(generators: Sequence[np.ndarray], limit: int = 4096, name: str = 'H') -> MatrixGroup:
    """Closure of a set of exact unitary matrices under multiplication"""
    dim = generators[0].shape[0]
    n = 2
    for g in generators:
        for entry in g.flat:
            n = lcm(n, entry.order)
    elements = [identity_matrix(dim)]
    index = {matrix_key(elements[0], n): 0}
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for g in generators:
                prod = mat_mul(elements[i], g)
                key = matrix_key(prod, n)
                if key not in index:
                    index[key] = len(elements)
                    elements.append(prod)
                    nxt.append(index[key])
                    if len(elements) > limit:
                        raise NotAGroup(f'{name}: closure exceeds {limit} elements')
        frontier = nxt
    table = [[index[matrix_key(mat_mul(a, b), n)] for b in elements] for a in elements]
    logger.debug(f'{name}: closure of {len(generators)} generators has order {len(elements)}')
    return MatrixGroup(elements, table, n, name=name)


def quaternion_group() -> MatrixGroup:
    i = Cyclotomic.root_of_unity(4, 1)
    qi = exact_matrix([[i, 0], [0, -i]])
    qj = exact_matrix([[0, 1], [-1, 0]])
    return matrix_group([qi, qj], name='Q8')


def small_groups(max_order: int = 8) -> List[FiniteGroup]:
    """One group from each isomorphism class of order <= 8, plus a few larger ones on request"""
    groups = [FiniteGroup.cyclic(n) for n in range(1, min(max_order, 8) + 1)]
    extra = {
        4: ['Z/2xZ/2'],
        6: ['S3'],
        8: ['Z/2xZ/4', 'Z/2xZ/2xZ/2', 'D4', 'Q8'],
        12: ['Z/2xZ/6', 'D6'],
        16: ['Z/16', 'Z/4xZ/4', 'Z/2xZ/8', 'D8'],
    }
    for order, names in extra.items():
        if order <= max_order:
            groups.extend(FiniteGroup.named(n) for n in names)
    return groups


def group_from_json(obj: dict) -> FiniteGroup:
    """
    Parse {"cyclic": n}, {"abelian": [n1, n2]}, {"named": "Q8"} or
    {"elements": [...], "table": [[...]]}
    """
    if 'cyclic' in obj:
        return FiniteGroup.cyclic(int(obj['cyclic']))
    if 'abelian' in obj:
        return FiniteGroup.abelian(*(int(n) for n in obj['abelian']))
    if 'named' in obj:
        return FiniteGroup.named(obj['named'])
    if 'table' in obj:
        return FiniteGroup(obj['table'], obj.get('elements'), name=obj.get('name', 'group'))
    raise NotAGroup(f'Unrecognized group description with keys {sorted(obj)}')


def conjugacy_classes(group: FiniteGroup) -> List[Tuple[int, ...]]:
    """Orbits under conjugation, identity class first, then by smallest member"""
    rest = set(range(group.order))
    classes = []
    for g in range(group.order):
        if g not in rest:
            continue
        orbit = sorted({group.mul(group.mul(h, g), int(group.inv[h])) for h in range(group.order)})
        classes.append(tuple(orbit))
        rest -= set(orbit)
    classes.sort(key=lambda c: (group.identity not in c, c[0]))
    return classes


def class_index(group: FiniteGroup) -> Dict[int, int]:
    return {g: k for k, cls in enumerate(conjugacy_classes(group)) for g in cls}


# ---------------------------------------------------------------------------
# Character tables (Burnside class-matrix method)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IrreducibleCharacter:
    index: int
    degree: int
    values: np.ndarray  # complex value at each group element

    def is_trivial(self) -> bool:
        return self.degree == 1 and np.allclose(self.values, 1)


def _grouped_diag(matrix: np.ndarray, tol: float = 1e-6):
    # eigenvectors grouped by (numerically) equal eigenvalue
    evals, vecs = np.linalg.eig(matrix)
    points = np.array([evals.real, evals.imag]).T
    _, groups = connected_components(cdist(points, points) < tol)
    return [np.linalg.qr(vecs[:, groups == i])[0] for i in range(groups.max() + 1)]


def _subspace_intersection(u1: np.ndarray, u2: np.ndarray, tol: float = 1e-6):
    u, s, vh = np.linalg.svd(u2.conj().T @ u1)
    ind = np.argwhere(np.isclose(s, 1, atol=tol)).flatten()
    if len(ind) == 0:
        return None
    return u1 @ vh.conj().T[:, ind]


def _common_eigenvectors(matrices, tol: float = 1e-6):
    spaces = [np.eye(matrices[0].shape[0])]
    for matrix in matrices:
        parts = _grouped_diag(matrix, tol)
        spaces = [_subspace_intersection(u1, u2, tol) for u1, u2 in product(spaces, parts)]
        spaces = [s for s in spaces if s is not None]
        if all(s.shape[1] == 1 for s in spaces):
            break
    return spaces


def character_table(group: FiniteGroup, tol: float = 1e-6) -> List[IrreducibleCharacter]:
    """
    Irreducible characters of a finite group.

    Args:
        group: the group
        tol: eigenvalue clustering tolerance

    Returns:
        list of IrreducibleCharacter, trivial first, then by degree
    """
    classes = conjugacy_classes(group)
    where = class_index(group)
    k = len(classes)
    sizes = np.array([len(c) for c in classes])
    reps = {c[0]: j for j, c in enumerate(classes)}
    counts = np.zeros((k, k, k))
    for x, y in product(range(group.order), repeat=2):
        z = group.mul(x, y)
        if z in reps:
            counts[where[x], where[y], reps[z]] += 1
    spaces = _common_eigenvectors([counts[r].T for r in range(k)], tol)
    chars = np.hstack(spaces).T
    if chars.shape[0] != k:
        raise GroupError(f'{group.name}: found {chars.shape[0]} characters for {k} classes')
    norms = np.sum(sizes * chars * chars.conj(), axis=1).real / group.order
    chars = chars / np.sqrt(norms)[:, None]
    chars = chars / (chars[:, 0] / np.abs(chars[:, 0]))[:, None]

    degrees = np.rint(chars[:, 0].real).astype(int)
    if int(np.sum(degrees ** 2)) != group.order:
        raise GroupError(f'{group.name}: degrees {list(degrees)} do not square-sum to {group.order}')
    order = sorted(range(k), key=lambda r: (not np.allclose(chars[r], 1), degrees[r],
                                            tuple(np.round(chars[r].real, 6)), tuple(np.round(chars[r].imag, 6))))
    per_element = np.array([where[g] for g in range(group.order)])
    return [IrreducibleCharacter(index=i, degree=int(degrees[r]), values=chars[r][per_element])
            for i, r in enumerate(order)]


# ---------------------------------------------------------------------------
# Representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Cocycle2:
    group: FiniteGroup
    values: np.ndarray  # object array, values[s, t] = c(s, t)

    def __call__(self, s: int, t: int) -> Cyclotomic:
        return self.values[s, t]

    def is_normalized(self) -> bool:
        e = self.group.identity
        return all(self.values[e, t] == 1 and self.values[t, e] == 1 for t in range(self.group.order))

    def to_json(self) -> dict:
        return {
            'group': {'elements': self.group.names, 'table': self.group.table.tolist()},
            'values': [[v.to_json() for v in row] for row in self.values],
        }


@dataclass(frozen=True, eq=False)
class Splitting:
    group: FiniteGroup
    alpha: Tuple[Cyclotomic, ...]

    def __post_init__(self):
        if len(self.alpha) != self.group.order:
            raise GroupError('splitting must have one value per group element')
        if self.alpha[self.group.identity] != 1:
            raise GroupError('splitting must send the identity to 1')

    def __call__(self, s: int) -> Cyclotomic:
        return self.alpha[s]

    def value_order(self) -> int:
        return lcm(*(a.multiplicative_order() or 0 for a in self.alpha))


@dataclass(frozen=True, eq=False)
class UnitaryRep:
    group: FiniteGroup
    images: Tuple[np.ndarray, ...]
    multiplier: Optional[Cocycle2] = None

    @property
    def dim(self) -> int:
        return self.images[0].shape[0]

    def __call__(self, s: int) -> np.ndarray:
        return self.images[s]

    def failures(self) -> List[str]:
        """Invariant violations: identity image, (projective) homomorphism, unitarity"""
        out = []
        g = self.group
        if any(m.shape != (self.dim, self.dim) for m in self.images):
            out.append('images have inconsistent shapes')
            return out
        if not matrices_equal(self.images[g.identity], identity_matrix(self.dim)):
            out.append('identity is not sent to I')
        for s in range(g.order):
            if not is_unitary(self.images[s]):
                out.append(f'image of {g.names[s]} is not unitary')
        witness = self.homomorphism_witness()
        if witness is not None:
            out.append(f'multiplication fails at ({g.names[witness[0]]}, {g.names[witness[1]]})')
        return out

    def homomorphism_witness(self) -> Optional[Tuple[int, int]]:
        g = self.group
        for s, t in g.pairs():
            lhs = mat_mul(self.images[s], self.images[t])
            rhs = self.images[g.mul(s, t)]
            if self.multiplier is not None:
                rhs = scale_matrix(self.multiplier(s, t), rhs)
            if not matrices_equal(lhs, rhs):
                return s, t
        return None


def character(rho: UnitaryRep) -> List[Cyclotomic]:
    """chi(s) = trace of the image of s"""
    return [trace_exact(m) for m in rho.images]


def one_dim_rep(group: FiniteGroup, values: Sequence[Cyclotomic]) -> UnitaryRep:
    return UnitaryRep(group, tuple(exact_matrix([[v]]) for v in values))


def regular_rep(group: FiniteGroup) -> UnitaryRep:
    return twisted_regular_rep(Cocycle2(group, _constant_values(group, ONE)))


def twisted_regular_rep(c: Cocycle2) -> UnitaryRep:
    """Left regular projective representation rho(s) e_t = c(s,t) e_{st}, multiplier c"""
    g = c.group
    images = []
    for s in range(g.order):
        m = np.empty((g.order, g.order), dtype=object)
        m.fill(ZERO)
        for t in range(g.order):
            m[g.mul(s, t), t] = c(s, t)
        images.append(m)
    trivial = all(v == 1 for v in c.values.flat)
    return UnitaryRep(g, tuple(images), None if trivial else c)


# ---------------------------------------------------------------------------
# Cocycles and splittings
# ---------------------------------------------------------------------------

def _constant_values(group: FiniteGroup, value: Cyclotomic) -> np.ndarray:
    values = np.empty((group.order, group.order), dtype=object)
    values.fill(value)
    return values


def verify_cocycle(c: Cocycle2) -> bool:
    """c(s,t) c(st,u) == c(t,u) c(s,tu) on all triples"""
    g = c.group
    for s, t, u in g.triples():
        if c(s, t) * c(g.mul(s, t), u) != c(t, u) * c(s, g.mul(t, u)):
            return False
    return True


def coboundary(alpha: Splitting) -> Cocycle2:
    """c(s,t) = alpha(s) alpha(t) / alpha(st)"""
    g = alpha.group
    values = np.empty((g.order, g.order), dtype=object)
    for s, t in product(range(g.order), repeat=2):
        values[s, t] = alpha(s) * alpha(t) / alpha(g.mul(s, t))
    return Cocycle2(g, values)


def xgcd(a: int, b: int) -> Tuple[int, int, int]:
    # x*a + y*b == g, carried through the Euclidean algorithm
    x, next_x = 1, 0
    y, next_y = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        x, next_x = next_x, x - q * next_x
        y, next_y = next_y, y - q * next_y
        g, next_g = next_g, g - q * next_g
    if g < 0:
        x, y, g = -x, -y, -g
    return x, y, g


def diagonalize(rows: List[List[int]], num_cols: int):
    """
    Given an integer matrix A, find D nonzero only on its main diagonal and
    invertible S, T with SAT = D. Returns (D, S, T); no divisibility
    conditions are imposed on the diagonal.
    """
    m, n = len(rows), num_cols
    # rows carry S along as extra columns
    D = [list(row) + [1 if k == i else 0 for k in range(m)] for i, row in enumerate(rows)]
    width = n + m
    T = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def improve_with_row_ops(i1, i2, j):
        r1, r2 = D[i1], D[i2]
        a, b = r1[j], r2[j]
        if b == 0:
            return
        if a == 0:
            D[i1], D[i2] = r2, r1
            return
        if b % a == 0:
            q = -b // a
            for jj in range(j, width):
                r2[jj] += q * r1[jj]
            return
        x, y, g = xgcd(a, b)
        mbg, ag = -b // g, a // g
        for jj in range(j, width):
            aa, bb = r1[jj], r2[jj]
            r1[jj] = x * aa + y * bb
            r2[jj] = mbg * aa + ag * bb

    def improve_with_col_ops(j1, j2, i):
        a, b = D[i][j1], D[i][j2]
        if b == 0:
            return
        if a == 0:
            for mat in (D, T):
                for row in mat:
                    row[j1], row[j2] = row[j2], row[j1]
            return
        if b % a == 0:
            q = -b // a
            for mat in (D, T):
                for row in mat:
                    row[j2] += q * row[j1]
            return
        x, y, g = xgcd(a, b)
        mbg, ag = -b // g, a // g
        for mat in (D, T):
            for row in mat:
                aa, bb = row[j1], row[j2]
                row[j1] = x * aa + y * bb
                row[j2] = mbg * aa + ag * bb

    for k in range(min(m, n)):
        while True:
            for i in range(k + 1, m):
                improve_with_row_ops(k, i, k)
            if all(D[k][j] == 0 for j in range(k + 1, n)):
                break
            for j in range(k + 1, n):
                improve_with_col_ops(k, j, k)
            if all(D[i][k] == 0 for i in range(k + 1, m)):
                break

    diag = [D[k][k] if k < n else 0 for k in range(m)]
    S = [row[n:] for row in D]
    return diag, S, T


@lru_cache(maxsize=32)
def _coboundary_system(table_bytes: bytes, order: int):
    """Diagonalized coboundary operator x -> (x_s + x_t - x_st) for one Cayley table"""
    table = np.frombuffer(table_bytes, dtype=int).reshape(order, order)
    rows = []
    for s, t in product(range(order), repeat=2):
        row = [0] * order
        row[s] += 1
        row[t] += 1
        row[int(table[s, t])] -= 1
        rows.append(row)
    return diagonalize(rows, order)


def _solve_mod(group: FiniteGroup, rhs: List[int], modulus: int):
    """Solve x_s + x_t - x_st = rhs[s,t] (mod N); returns (solution or None, number of failed rows)"""
    diag, S, T = _coboundary_system(np.ascontiguousarray(group.table, dtype=int).tobytes(), group.order)
    n = group.order
    z = [0] * n
    defect = 0
    for k, row in enumerate(S):
        r = sum(coef * b for coef, b in zip(row, rhs) if coef) % modulus
        d = diag[k] if k < n else 0
        g = gcd(d, modulus)
        if r % g:
            defect += 1
            continue
        if k < n and modulus // g > 1:
            z[k] = (r // g) * pow((d // g) % (modulus // g), -1, modulus // g) % (modulus // g)
    if defect:
        return None, defect
    x = [sum(T[i][j] * z[j] for j in range(n)) % modulus for i in range(n)]
    return x, 0


def _exponent(value: Cyclotomic, modulus: int) -> int:
    turn = value.recognize_root().turn
    if turn is None:
        raise NotACocycle(f'cocycle value {value!r} is not a root of unity')
    k = turn * modulus
    if k.denominator != 1:
        raise ValueError(f'{value!r} is not in mu_{modulus}')
    return int(k)


def commuting_witness(c: Cocycle2) -> Optional[Tuple[int, int]]:
    """A commuting pair with c(s,t) != c(t,s); such a cocycle is never a coboundary"""
    g = c.group
    for s in range(g.order):
        for t in range(s + 1, g.order):
            if g.mul(s, t) == g.mul(t, s) and c(s, t) != c(t, s):
                return s, t
    return None


def split_cocycle(c: Cocycle2, max_order: int = 64) -> Union[Splitting, dict]:
    """
    Find alpha with coboundary(alpha) == c, valued in mu_N for the smallest
    multiple N of the cocycle's value order that admits one.

    Args:
        c: a normalized 2-cocycle with root-of-unity values
        max_order: largest N tried

    Returns:
        Splitting on success, otherwise an obstruction report dict with keys
        success, tested_orders, smallest_tested_order, rank_defect, commuting_witness
    """
    if not c.is_normalized():
        raise NotACocycle('cocycle is not normalized')
    if not verify_cocycle(c):
        raise NotACocycle('cocycle identity fails')
    orders = [v.recognize_root().multiplicative_order() for v in c.values.flat]
    if any(o is None for o in orders):
        raise NotACocycle('cocycle values must be roots of unity')
    n = lcm(*orders)
    g = c.group
    tested = []
    first_defect = None
    for modulus in range(n, max_order + 1, n):
        rhs = [_exponent(c(s, t), modulus) for s, t in product(range(g.order), repeat=2)]
        x, defect = _solve_mod(g, rhs, modulus)
        tested.append(modulus)
        if x is None:
            logger.debug(f'{g.name}: no splitting in mu_{modulus} (defect {defect})')
            if first_defect is None:
                first_defect = defect
            continue
        alpha = Splitting(g, tuple(Cyclotomic.root_of_unity(modulus, k) for k in x))
        if not all(a == b for a, b in zip(coboundary(alpha).values.flat, c.values.flat)):
            raise GroupError(f'{g.name}: solver produced an invalid splitting in mu_{modulus}')
        logger.info(f'{g.name}: cocycle splits in mu_{modulus}')
        return alpha

    witness = commuting_witness(c)
    return {
        'success': False,
        'value_order': n,
        'max_order': max_order,
        'tested_orders': tested,
        'smallest_tested_order': tested[0] if tested else None,
        'rank_defect': first_defect,
        'commuting_witness': [g.names[w] for w in witness] if witness else None,
    }


def random_splitting(group: FiniteGroup, n: int, rng: np.random.Generator) -> Splitting:
    """Random mu_n-valued 1-cochain with alpha(1) = 1"""
    exps = rng.integers(0, n, size=group.order)
    exps[group.identity] = 0
    return Splitting(group, tuple(Cyclotomic.root_of_unity(n, int(k)) for k in exps))


def section_cocycle(group: FiniteGroup, section: Sequence[np.ndarray]) -> Cocycle2:
    """Scalar cocycle sigma(s) sigma(t) sigma(st)^-1 of a projective section"""
    values = np.empty((group.order, group.order), dtype=object)
    for s, t in product(range(group.order), repeat=2):
        m = mat_mul(mat_mul(section[s], section[t]), conj_transpose(section[group.mul(s, t)]))
        if not matrices_equal(m, scalar_matrix(m[0, 0], m.shape[0])):
            raise MultiplierMismatch(f'section is not projective at ({group.names[s]}, {group.names[t]})')
        values[s, t] = m[0, 0]
    return Cocycle2(group, values)


def quaternion_section(group: Optional[FiniteGroup] = None) -> Tuple[FiniteGroup, List[np.ndarray]]:
    """Z/2 x Z/2 with the section (x, y) -> I^x J^y into the quaternion group"""
    group = group or FiniteGroup.abelian(2, 2)
    i = Cyclotomic.root_of_unity(4, 1)
    qi = exact_matrix([[i, 0], [0, -i]])
    qj = exact_matrix([[0, 1], [-1, 0]])
    section = []
    for name in group.names:
        x, y = (int(v) for v in name.split(','))
        m = identity_matrix(2)
        for _ in range(x):
            m = mat_mul(m, qi)
        for _ in range(y):
            m = mat_mul(m, qj)
        section.append(m)
    return group, section


def quaternion_cocycle() -> Cocycle2:
    """The mu_2-valued cocycle of the quaternion extension of Z/2 x Z/2"""
    group, section = quaternion_section()
    return section_cocycle(group, section)


def cyclic_extension_cocycle() -> Cocycle2:
    """
    The symmetric mu_2-valued cocycle of Z/4 x Z/2 over Z/2 x Z/2: c = -1
    exactly when both arguments have nonzero first coordinate
    """
    group = FiniteGroup.abelian(2, 2)
    i = Cyclotomic.root_of_unity(4, 1)
    alpha = Splitting(group, tuple(i ** int(name.split(',')[0]) for name in group.names))
    return coboundary(alpha)


def load_cocycle(obj: dict) -> Cocycle2:
    """Cocycle from its JSON description {"group": {...}, "values": [[...]]}"""
    group = group_from_json(obj['group'])
    rows = obj['values']
    if len(rows) != group.order or any(len(r) != group.order for r in rows):
        raise NotACocycle(f'cocycle values must form a {group.order}x{group.order} table')
    return Cocycle2(group, exact_matrix(rows))


def twist_projective_rep(rho: UnitaryRep, alpha: Splitting) -> UnitaryRep:
    """
    Turn a projective representation with multiplier c = coboundary(alpha)
    into the genuine representation s -> alpha(s)^-1 rho(s).
    """
    g = rho.group
    c = rho.multiplier if rho.multiplier is not None else Cocycle2(g, _constant_values(g, ONE))
    witness = rho.homomorphism_witness()
    if witness is not None:
        s, t = (g.names[w] for w in witness)
        raise MultiplierMismatch(f'rho(s)rho(t) != c(s,t)rho(st) at ({s}, {t})')
    boundary = coboundary(alpha)
    for s, t in g.pairs():
        if boundary(s, t) != c(s, t):
            raise MultiplierMismatch(f'coboundary of alpha differs from the multiplier at ({g.names[s]}, {g.names[t]})')
    images = tuple(scale_matrix(alpha(s).inverse(), rho(s)) for s in range(g.order))
    twisted = UnitaryRep(g, images)
    problems = twisted.failures()
    if problems:
        raise MultiplierMismatch(f'twisted representation is not genuine: {problems[0]}')
    return twisted


def build_eta_e(eta: UnitaryRep, theta: UnitaryRep, epsilon: UnitaryRep, e: int,
                sqrt_choice: Sequence[Cyclotomic]) -> UnitaryRep:
    """
    The representation s -> r(s)^-e eta(r(s) theta(s)) of the component group,
    where r(s)^2 = epsilon(s) and eta is a representation of the matrix group H.

    Args:
        eta: representation of a MatrixGroup H containing every r(s) theta(s)
        theta: genuine representation of the component group
        epsilon: one-dimensional character of the component group
        e: symmetric power exponent; eta(-I) must equal (-1)^e I
        sqrt_choice: any square root of epsilon(s) for each s

    Returns:
        UnitaryRep of the component group, independent of sqrt_choice
    """
    h_group = eta.group
    if not isinstance(h_group, MatrixGroup):
        raise GroupError('eta must be a representation of a matrix group')
    minus = h_group.minus_identity
    if minus is None:
        raise ParityViolation('H does not contain -I')
    sign = ONE if e % 2 == 0 else -ONE
    if not matrices_equal(eta(minus), scalar_matrix(sign, eta.dim)):
        raise ParityViolation(f'eta(-I) != (-1)^{e} I')

    g = theta.group
    images = []
    for s in range(g.order):
        root = sqrt_choice[s]
        if root * root != epsilon(s)[0, 0]:
            raise GroupError(f'sqrt_choice at {g.names[s]} does not square to epsilon')
        h = h_group.index_of(scale_matrix(root, theta(s)))
        if h is None:
            raise GroupError(f'r(s) theta(s) at {g.names[s]} is not an element of H')
        images.append(scale_matrix(root ** (-e), eta(h)))
    rep = UnitaryRep(g, tuple(images))
    witness = rep.homomorphism_witness()
    if witness is not None:
        raise MultiplierMismatch(f'eta_e fails to multiply at ({g.names[witness[0]]}, {g.names[witness[1]]})')
    return rep
