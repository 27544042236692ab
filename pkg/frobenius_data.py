"""
Frobenius Data Module
Empirical Frobenius traces: elliptic curve point counting over prime fields,
modular form coefficient tables, Dirichlet characters, exact quadratic field
arithmetic and the exact arithmetic identity checks on coefficient data
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import gcd, prod, sqrt
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import sympy
from dotenv import load_dotenv

from finite_group_core import Cyclotomic, ONE, sqrt_rational_integer

load_dotenv()

logger = logging.getLogger(__name__)

# Configuration
PRIME_CAP = int(os.getenv('STCHECK_PRIME_CAP', '1000000'))
WORKERS = int(os.getenv('STCHECK_WORKERS', '1'))

BASE_COLUMNS = ['p', 'ax', 'ay', 'eps_num', 'eps_ord']
OPTIONAL_COLUMNS = ['class_label', 'norm']


class FrobeniusDataError(Exception):
    """Base class for Frobenius data errors"""


class BadReduction(FrobeniusDataError):
    def __init__(self, p: int):
        super().__init__(f'bad reduction at p={p}')
        self.p = p


class SingularCurve(FrobeniusDataError):
    pass


class ParseError(FrobeniusDataError):
    def __init__(self, message: str, line: int):
        super().__init__(f'line {line}: {message}')
        self.line = line


class InvariantViolation(FrobeniusDataError):
    def __init__(self, message: str, p: Optional[int] = None):
        super().__init__(message if p is None else f'p={p}: {message}')
        self.p = p


class NotAHomomorphism(FrobeniusDataError):
    pass


class BadPrime(FrobeniusDataError):
    pass


# ---------------------------------------------------------------------------
# Quadratic fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadFieldElem:
    """x + y sqrt(D) with D square-free; D = 1 stands for Q itself"""
    D: int
    x: Fraction
    y: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, 'x', Fraction(self.x))
        object.__setattr__(self, 'y', Fraction(self.y))
        _validate_discriminant(self.D)
        if self.D == 1 and self.y:
            raise ValueError('a rational element cannot carry a sqrt(D) part')

    @classmethod
    def rational(cls, q, D: int = 1) -> 'QuadFieldElem':
        return cls(D, Fraction(q), Fraction(0))

    def _common(self, other) -> Tuple['QuadFieldElem', 'QuadFieldElem', int]:
        if not isinstance(other, QuadFieldElem):
            other = QuadFieldElem.rational(other, self.D)
        if self.D == other.D:
            return self, other, self.D
        if not self.y and not other.y:
            D = other.D if self.D == 1 else self.D
            return replace(self, D=D), replace(other, D=D), D
        if self.D == 1 or not self.y:
            return replace(self, D=other.D), other, other.D
        if other.D == 1 or not other.y:
            return self, replace(other, D=self.D), self.D
        raise ValueError(f'elements of Q(sqrt {self.D}) and Q(sqrt {other.D}) cannot be combined')

    def __add__(self, other):
        a, b, D = self._common(other)
        return QuadFieldElem(D, a.x + b.x, a.y + b.y)

    __radd__ = __add__

    def __neg__(self):
        return QuadFieldElem(self.D, -self.x, -self.y)

    def __sub__(self, other):
        return self + (-other if isinstance(other, QuadFieldElem) else -Fraction(other))

    def __mul__(self, other):
        a, b, D = self._common(other)
        return QuadFieldElem(D, a.x * b.x + D * a.y * b.y if D != 1 else a.x * b.x, a.x * b.y + a.y * b.x)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, QuadFieldElem):
            other = QuadFieldElem.rational(other, self.D)
        n = other.norm()
        if n == 0:
            raise ZeroDivisionError('division by zero in a quadratic field')
        return self * other.conjugate() * QuadFieldElem.rational(1 / n, other.D)

    def conjugate(self) -> 'QuadFieldElem':
        """Galois conjugate x - y sqrt(D)"""
        return QuadFieldElem(self.D, self.x, -self.y)

    def complex_conjugate(self) -> 'QuadFieldElem':
        return self.conjugate() if self.D < 0 else self

    def norm(self) -> Fraction:
        return self.x * self.x - self.D * self.y * self.y if self.D != 1 else self.x * self.x

    def trace(self) -> Fraction:
        return 2 * self.x if self.D != 1 else self.x

    def is_zero(self) -> bool:
        return not self.x and not self.y

    def is_rational(self) -> bool:
        return not self.y

    def is_totally_positive(self) -> bool:
        """Positive under every real embedding (only defined for Q and real quadratic fields)"""
        if not self.y:
            return self.x > 0
        if self.D < 0:
            raise ValueError('total positivity needs a totally real field')
        return self.x > 0 and self.x * self.x > self.D * self.y * self.y

    def embeddings(self) -> List[complex]:
        """Images under the embeddings sqrt(D) -> +sqrt(D), -sqrt(D)"""
        if self.D == 1:
            return [float(self.x)]
        root = sqrt(self.D) if self.D > 0 else 1j * sqrt(-self.D)
        return [float(self.x) + float(self.y) * root, float(self.x) - float(self.y) * root]

    def within_weil_bound(self, p: int) -> bool:
        """|sigma(self)| <= 2 sqrt(p) under every complex embedding, decided exactly"""
        bound = 4 * p
        if self.D == 1 or not self.y:
            return self.x * self.x <= bound
        if self.D < 0:
            return self.norm() <= bound
        # (|x| + |y| sqrt D)^2 <= 4p
        rest = bound - self.x * self.x - self.D * self.y * self.y
        if rest < 0:
            return False
        return 4 * self.x * self.x * self.y * self.y * self.D <= rest * rest

    def to_cyclotomic(self) -> Cyclotomic:
        value = Cyclotomic.rational(self.x)
        if self.y:
            value = value + sqrt_rational_integer(self.D) * self.y
        return value

    def __str__(self):
        if not self.y:
            return str(self.x)
        return f'{self.x} + {self.y}*sqrt({self.D})'


def _is_squarefree(n: int) -> bool:
    return all(e == 1 for e in sympy.factorint(abs(n)).values())


def _validate_discriminant(D: int) -> None:
    if D == 0 or (D != 1 and not _is_squarefree(D)):
        raise ValueError(f'D={D} is not a square-free integer')


# ---------------------------------------------------------------------------
# Elliptic curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipticCurve:
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    extra_bad_primes: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.discriminant == 0:
            raise SingularCurve(f'curve {self.coefficients} is singular (discriminant 0)')

    @property
    def coefficients(self) -> List[int]:
        return [self.a1, self.a2, self.a3, self.a4, self.a6]

    @property
    def b2(self) -> int:
        return self.a1 ** 2 + 4 * self.a2

    @property
    def b4(self) -> int:
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self) -> int:
        return self.a3 ** 2 + 4 * self.a6

    @property
    def b8(self) -> int:
        a1, a2, a3, a4, a6 = self.coefficients
        return a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4

    @property
    def c4(self) -> int:
        return self.b2 ** 2 - 24 * self.b4

    @property
    def c6(self) -> int:
        return -self.b2 ** 3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def bad_primes(self) -> List[int]:
        primes = set(sympy.primefactors(abs(self.discriminant))) | set(self.extra_bad_primes)
        return sorted(primes)

    def __str__(self):
        return f'[{",".join(str(a) for a in self.coefficients)}]'


def quadratic_twist(E: EllipticCurve, d: int) -> EllipticCurve:
    """Twist by Q(sqrt d) in the model y^2 = x^3 - 27 c4 d^2 x - 54 c6 d^3"""
    if d == 0 or not _is_squarefree(d):
        raise ValueError(f'twist parameter {d} must be a non-zero square-free integer')
    return EllipticCurve(0, 0, 0, -27 * E.c4 * d * d, -54 * E.c6 * d ** 3)


def _qr_table(p: int) -> np.ndarray:
    """Legendre symbol of every residue mod p"""
    table = np.full(p, -1, dtype=np.int64)
    squares = (np.arange(p, dtype=np.int64) ** 2) % p
    table[squares] = 1
    table[0] = 0
    return table


def ap_point_count(E: EllipticCurve, p: int) -> int:
    """
    a_p = p + 1 - #E(F_p) by direct enumeration over x

    Args:
        E: the curve
        p: a prime of good reduction

    Returns:
        int: the trace of Frobenius at p
    """
    if E.discriminant % p == 0 or p in E.extra_bad_primes:
        raise BadReduction(p)
    if p == 2:
        a1, a2, a3, a4, a6 = (a % 2 for a in E.coefficients)
        affine = sum(1 for x in range(2) for y in range(2)
                     if (y * y + a1 * x * y + a3 * y - x ** 3 - a2 * x * x - a4 * x - a6) % 2 == 0)
        ap = 2 - affine
    else:
        # (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
        x = np.arange(p, dtype=np.int64)
        x2 = x * x % p
        x3 = x2 * x % p
        f = (4 * x3 + (E.b2 % p) * x2 + (2 * E.b4 % p) * x + E.b6 % p) % p
        ap = -int(_qr_table(p)[f].sum())
    if ap * ap > 4 * p:
        raise InvariantViolation(f'a_p={ap} breaks the Weil bound', p)
    return ap


# ---------------------------------------------------------------------------
# Dirichlet characters and class maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    values: Dict[int, Cyclotomic] = field(hash=False, compare=False)

    def __call__(self, n: int) -> Cyclotomic:
        r = n % self.modulus
        if gcd(r, self.modulus) != 1:
            raise BadPrime(f'{n} is not coprime to the modulus {self.modulus}')
        return self.values[r]

    @property
    def order(self) -> int:
        orders = [v.multiplicative_order() for v in self.values.values()]
        return int(np.lcm.reduce(orders)) if orders else 1

    def is_trivial(self) -> bool:
        return all(v == 1 for v in self.values.values())

    @classmethod
    def trivial(cls, modulus: int = 1) -> 'DirichletCharacter':
        return cls(modulus, {r: ONE for r in range(modulus) if gcd(r, modulus) == 1})

    @classmethod
    def quadratic(cls, d: int) -> 'DirichletCharacter':
        """n -> (d/n), periodic mod 4|d|"""
        modulus = 4 * abs(d)
        values = {}
        for r in range(modulus):
            if gcd(r, modulus) == 1:
                values[r] = Cyclotomic.rational(sympy.jacobi_symbol(d % r, r))
        return cls(modulus, values)


def dirichlet_eval(modulus: int, generator_images: Dict[int, Cyclotomic]) -> DirichletCharacter:
    """
    Extend images of generators of (Z/N)^x to the whole unit group, checking
    that the result is a homomorphism

    Args:
        modulus: N
        generator_images: residue -> root of unity; unlisted units generate nothing

    Returns:
        DirichletCharacter defined on every unit mod N
    """
    if modulus < 1:
        raise ValueError('modulus must be positive')
    units = [r for r in range(modulus) if gcd(r, modulus) == 1]
    gens = {g % modulus: v for g, v in generator_images.items()}
    for g in gens:
        if gcd(g, modulus) != 1:
            raise NotAHomomorphism(f'{g} is not a unit mod {modulus}')
    start = 1 % modulus
    values = {start: ONE}
    frontier = [start]
    while frontier:
        nxt = []
        for r in frontier:
            for g, img in gens.items():
                s = r * g % modulus
                v = values[r] * img
                if s in values:
                    if values[s] != v:
                        raise NotAHomomorphism(f'inconsistent values at {s} mod {modulus}')
                else:
                    values[s] = v
                    nxt.append(s)
        frontier = nxt
    if len(values) != len(units):
        raise NotAHomomorphism(f'generators reach {len(values)} of {len(units)} units mod {modulus}')
    return DirichletCharacter(modulus, dict(sorted(values.items())))


@dataclass(frozen=True)
class ClassMap:
    modulus: int
    classes: Dict[int, str] = field(hash=False, compare=False)

    @classmethod
    def trivial(cls, label: str = 'e') -> 'ClassMap':
        return cls(1, {0: label})

    @classmethod
    def from_json(cls, obj: dict) -> 'ClassMap':
        modulus = int(obj['modulus'])
        return cls(modulus, {int(k) % modulus: str(v) for k, v in obj['classes'].items()})


def frobenius_class_label(p: int, class_map: ClassMap) -> str:
    """Component class of Frobenius at p read off from p mod N"""
    if gcd(p, class_map.modulus) != 1 and class_map.modulus > 1:
        raise BadPrime(f'p={p} divides the class map modulus {class_map.modulus}')
    r = p % class_map.modulus
    if r not in class_map.classes:
        raise BadPrime(f'no class listed for {r} mod {class_map.modulus}')
    return class_map.classes[r]


# ---------------------------------------------------------------------------
# Coefficient tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimeRecord:
    p: int
    a_p: QuadFieldElem
    eps_p: Cyclotomic = field(default=ONE, compare=False)
    class_label: Optional[str] = None
    norm: Optional[int] = None

    @property
    def t_p(self) -> Tuple[float, ...]:
        """Normalized traces, one per real embedding (the real part for imaginary fields)"""
        root = sqrt(self.p)
        if self.a_p.D > 1:
            return tuple(z.real / root for z in self.a_p.embeddings())
        return (float(self.a_p.x) / root,)

    @property
    def total_trace(self) -> float:
        return float(sum(self.t_p))

    def same_as(self, other: 'PrimeRecord') -> bool:
        return (self.p == other.p and self.a_p == other.a_p and self.eps_p == other.eps_p
                and self.class_label == other.class_label and self.norm == other.norm)


@dataclass
class CoefficientTable:
    D: int = 1
    level: Optional[int] = None
    records: List[PrimeRecord] = field(default_factory=list)
    field_M: Optional[int] = None
    excluded: List[int] = field(default_factory=list)
    character: Optional[DirichletCharacter] = None

    def __post_init__(self):
        _validate_discriminant(self.D)
        self.records.sort(key=lambda r: r.p)

    def __len__(self):
        return len(self.records)

    @property
    def primes(self) -> List[int]:
        return [r.p for r in self.records]

    def by_prime(self) -> Dict[int, PrimeRecord]:
        return {r.p: r for r in self.records}

    def center_field(self) -> int:
        """D' with M = Q(sqrt D'); 1 means M = Q"""
        if self.field_M is not None:
            return self.field_M
        return self.D if self.D > 1 else 1


def normalize(record: PrimeRecord, embedding: int = 1) -> float:
    """sigma_embedding(a_p) / sqrt(p)"""
    if embedding not in (1, 2):
        raise ValueError('embedding must be 1 or 2')
    traces = record.t_p
    return traces[min(embedding, len(traces)) - 1]


def _eps_exponent(eps: Cyclotomic) -> Tuple[int, int]:
    turn = eps.recognize_root().turn
    if turn is None:
        raise InvariantViolation(f'character value {eps!r} is not a root of unity')
    return turn.numerator, turn.denominator


def load_coefficients(path) -> CoefficientTable:
    """
    Parse a coefficient CSV: '#D=', '#N=' and optional '#M=' metadata lines, a
    header 'p,ax,ay,eps_num,eps_ord' with optional 'class_label' and 'norm'
    columns, then one row per prime with a_p = ax + ay sqrt(D) and
    eps(p) = zeta_{eps_ord}^{eps_num}.
    """
    meta: Dict[str, int] = {}
    header = None
    rows: List[Tuple[int, List[str]]] = []
    with open(path, encoding='utf-8') as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip('\n').rstrip('\r')
            if not line.strip():
                continue
            if line.startswith('#'):
                if header is not None:
                    raise ParseError('metadata line after the header', lineno)
                key, sep, value = line[1:].partition('=')
                if not sep or key.strip() not in ('D', 'N', 'M'):
                    raise ParseError(f'unrecognized metadata line {line!r}', lineno)
                try:
                    meta[key.strip()] = int(value)
                except ValueError:
                    raise ParseError(f'metadata value {value!r} is not an integer', lineno) from None
                continue
            cells = [c.strip() for c in line.split(',')]
            if header is None:
                if cells[:5] != BASE_COLUMNS or any(c not in OPTIONAL_COLUMNS for c in cells[5:]):
                    raise ParseError(f'bad header {line!r}', lineno)
                header = cells
                continue
            if len(cells) != len(header):
                raise ParseError(f'expected {len(header)} fields, found {len(cells)}', lineno)
            rows.append((lineno, cells))
    if header is None:
        raise ParseError('missing header row', 1)

    D = meta.get('D', 1)
    try:
        _validate_discriminant(D)
    except ValueError as e:
        raise ParseError(str(e), 1) from None
    level = meta.get('N')
    records, excluded, seen = [], [], set()
    for lineno, cells in rows:
        data = dict(zip(header, cells))
        try:
            p = int(data['p'])
            ax, ay = Fraction(data['ax']), Fraction(data['ay'])
            eps_num, eps_ord = int(data['eps_num']), int(data['eps_ord'])
            norm = int(data['norm']) if data.get('norm') else None
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(str(e), lineno) from None
        if not sympy.isprime(p):
            raise ParseError(f'{p} is not prime', lineno)
        if eps_ord < 1:
            raise ParseError('eps_ord must be positive', lineno)
        if D == 1 and ay:
            raise ParseError('ay must be 0 without a #D line', lineno)
        if p in seen:
            raise ParseError(f'duplicate prime {p}', lineno)
        seen.add(p)
        if level is not None and level % p == 0:
            logger.warning(f'Skipping p={p}: divides the level {level}')
            excluded.append(p)
            continue
        a_p = QuadFieldElem(D, ax, ay)
        if not a_p.within_weil_bound(p):
            raise InvariantViolation(f'a_p = {a_p} breaks the Weil bound |sigma(a_p)| <= 2 sqrt(p)', p)
        records.append(PrimeRecord(p, a_p, Cyclotomic.root_of_unity(eps_ord, eps_num),
                                   data.get('class_label') or None, norm))
    logger.debug(f'Loaded {len(records)} records from {path} (D={D}, N={level})')
    return CoefficientTable(D=D, level=level, records=records, field_M=meta.get('M'), excluded=excluded)


def write_coefficients(table: CoefficientTable, path) -> None:
    """Write a table in the load_coefficients schema"""
    columns = list(BASE_COLUMNS)
    if any(r.class_label is not None for r in table.records):
        columns.append('class_label')
    if any(r.norm is not None for r in table.records):
        columns.append('norm')
    lines = [f'#D={table.D}']
    if table.level is not None:
        lines.append(f'#N={table.level}')
    if table.field_M is not None:
        lines.append(f'#M={table.field_M}')
    lines.append(','.join(columns))
    for r in table.records:
        num, den = _eps_exponent(r.eps_p)
        cells = [str(r.p), str(r.a_p.x), str(r.a_p.y), str(num), str(den)]
        if 'class_label' in columns:
            cells.append(r.class_label or '')
        if 'norm' in columns:
            cells.append('' if r.norm is None else str(r.norm))
        lines.append(','.join(cells))
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write('\n'.join(lines) + '\n')


def curve_table(E: EllipticCurve, prime_bound: int, excluded: Iterable[int] = (),
                workers: Optional[int] = None, prime_cap: Optional[int] = None) -> CoefficientTable:
    """
    Frobenius traces of E at every good prime p <= prime_bound

    Returns:
        CoefficientTable over Q with level the product of the bad primes;
        bad and excluded primes below the bound are listed in table.excluded
    """
    cap = prime_cap or PRIME_CAP
    if prime_bound > cap:
        raise ValueError(f'prime bound {prime_bound} exceeds the cap {cap}')
    skip = set(excluded)
    bad = set(E.bad_primes)
    primes = [int(p) for p in sympy.primerange(2, prime_bound + 1)]
    good = [p for p in primes if p not in bad and p not in skip]

    with ThreadPoolExecutor(max_workers=workers or WORKERS) as pool:
        traces = list(pool.map(lambda p: ap_point_count(E, p), good))
    records = [PrimeRecord(p, QuadFieldElem.rational(ap)) for p, ap in zip(good, traces)]
    dropped = sorted(p for p in primes if p in bad or p in skip)
    for p in dropped:
        logger.debug(f'Excluding p={p} for {E}')
    level = prod(E.bad_primes)
    logger.info(f'Counted points of {E} at {len(records)} good primes up to {prime_bound}')
    return CoefficientTable(D=1, level=level, records=records, excluded=dropped)


def _root_in_quadratic(z: Cyclotomic) -> QuadFieldElem:
    """Roots of unity of order 1, 2, 3, 4 or 6 as quadratic field elements"""
    turn = z.recognize_root().turn
    if turn is None:
        raise ValueError(f'{z!r} is not a root of unity')
    n, k = turn.denominator, turn.numerator
    if n in (1, 2):
        return QuadFieldElem.rational(1 if k == 0 else -1)
    if n == 4:
        return QuadFieldElem(-1, 0, 1 if k == 1 else -1)
    if n in (3, 6):
        # zeta_6 = (1 + sqrt(-3)) / 2
        values = {
            (1, 6): (Fraction(1, 2), Fraction(1, 2)), (1, 3): (Fraction(-1, 2), Fraction(1, 2)),
            (2, 3): (Fraction(-1, 2), Fraction(-1, 2)), (5, 6): (Fraction(1, 2), Fraction(-1, 2)),
        }
        x, y = values[(k, n)]
        return QuadFieldElem(-3, x, y)
    raise ValueError(f'a root of unity of order {n} does not lie in a quadratic field')


def twist_table(table: CoefficientTable, chi: DirichletCharacter) -> CoefficientTable:
    """Coefficients b_p = chi(p) a_p with character eps chi^2, dropping primes dividing the modulus"""
    records, dropped = [], list(table.excluded)
    D = table.D
    for r in table.records:
        if gcd(r.p, chi.modulus) != 1:
            dropped.append(r.p)
            continue
        b = r.a_p * _root_in_quadratic(chi(r.p))
        if b.D != 1:
            if D not in (1, b.D):
                raise ValueError('twisted coefficients leave every quadratic field')
            D = b.D
        records.append(PrimeRecord(r.p, b, r.eps_p * chi(r.p) * chi(r.p), r.class_label, r.norm))
    records = [replace(r, a_p=QuadFieldElem(D, r.a_p.x, r.a_p.y)) for r in records]
    level = None if table.level is None else table.level * chi.modulus // gcd(table.level, chi.modulus)
    return CoefficientTable(D=D, level=level, records=records, field_M=table.field_M,
                            excluded=sorted(set(dropped)))


def zero_density(table: CoefficientTable) -> Fraction:
    """Proportion of listed primes with a_p = 0"""
    if not table.records:
        return Fraction(0)
    return Fraction(sum(1 for r in table.records if r.a_p.is_zero()), len(table.records))


# ---------------------------------------------------------------------------
# Exact identity checks
# ---------------------------------------------------------------------------

def _in_field(value: QuadFieldElem, field_D: int) -> bool:
    return value.is_rational() or value.D == field_D


def ribet_identity_check(table: CoefficientTable) -> dict:
    """
    Check a_p^2 / eps(p) == a_p * conj(a_p), that the value lies in the center
    field M, and that it is totally positive, exactly at every prime

    Returns:
        dict: success, checked, skipped_zero, and per-prime failures
    """
    M = table.center_field()
    failures = []
    zeros = 0
    for r in table.records:
        a = r.a_p
        value = a * a.complex_conjugate()
        lhs = a.to_cyclotomic() * a.to_cyclotomic()
        rhs = r.eps_p * value.to_cyclotomic()
        if lhs != rhs:
            failures.append({'p': r.p, 'reason': f'a_p^2 != eps(p) a_p conj(a_p) for a_p = {a}'})
            continue
        if not _in_field(value, M):
            failures.append({'p': r.p, 'reason': f'a_p conj(a_p) = {value} is outside M = Q(sqrt {M})'})
            continue
        if a.is_zero():
            zeros += 1
            continue
        if not value.is_totally_positive():
            failures.append({'p': r.p, 'reason': f'a_p conj(a_p) = {value} is not totally positive'})
    for f in failures:
        logger.warning(f"Ribet identity fails at p={f['p']}: {f['reason']}")
    return {
        'success': not failures,
        'checked': len(table.records),
        'skipped_zero': zeros,
        'center_field': M,
        'failures': failures,
    }


def center_field_values(table: CoefficientTable) -> dict:
    """The values a_p^2 / eps(p) and the field they generate (degree at most 2)"""
    values = {}
    fields = set()
    for r in table.records:
        a = r.a_p.to_cyclotomic()
        v = a * a / r.eps_p
        if v.is_rational():
            values[r.p] = str(v.to_fraction())
            continue
        q = r.a_p * r.a_p.complex_conjugate()
        if q.to_cyclotomic() != v:
            raise InvariantViolation('a_p^2 / eps(p) is not a_p conj(a_p)', r.p)
        values[r.p] = str(q)
        fields.add(q.D)
    if len(fields) > 1:
        raise InvariantViolation(f'center values generate a field of degree > 2 (sqrt of {sorted(fields)})')
    D = fields.pop() if fields else 1
    return {'values': values, 'field': D, 'degree': 1 if D == 1 else 2}


def tensor_trace_check(a_table: CoefficientTable, b_table: CoefficientTable,
                       c_table: CoefficientTable) -> dict:
    """
    Check c_p = Tr_{K/Q}(a_p b_p) exactly at every prime, where K is the real
    quadratic field of the a and b tables; when c itself lives in K (or K = Q)
    the check is plain equality c_p = a_p b_p
    """
    a_map, b_map, c_map = a_table.by_prime(), b_table.by_prime(), c_table.by_prime()
    product_field = max(a_table.D, b_table.D) if min(a_table.D, b_table.D) > 0 else min(a_table.D, b_table.D)
    take_trace = c_table.D == 1 and product_field > 1
    failures = []
    primes = sorted(set(a_map) | set(b_map) | set(c_map))
    for p in primes:
        if p not in a_map or p not in b_map or p not in c_map:
            failures.append({'p': p, 'reason': 'prime missing from one of the tables'})
            continue
        try:
            product = a_map[p].a_p * b_map[p].a_p
        except ValueError as e:
            failures.append({'p': p, 'reason': str(e)})
            continue
        expected = QuadFieldElem.rational(2 * product.x) if take_trace else product
        got = c_map[p].a_p
        if (expected.x, expected.y) != (got.x, got.y) or (expected.y and expected.D != got.D):
            failures.append({'p': p, 'reason': f'c_p = {got} but a_p b_p gives {expected}'})
    return {'success': not failures, 'checked': len(primes), 'trace_taken': take_trace, 'failures': failures}
