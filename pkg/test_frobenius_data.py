"""
Tests for Frobenius data: point counting, coefficient tables, characters and
the exact identities checked on them
"""
from fractions import Fraction

import pytest
import sympy

from finite_group_core import Cyclotomic
from frobenius_data import (
    BadPrime, BadReduction, ClassMap, CoefficientTable, DirichletCharacter, EllipticCurve, InvariantViolation,
    NotAHomomorphism, ParseError, PrimeRecord, QuadFieldElem, SingularCurve, ap_point_count,
    center_field_values, curve_table, dirichlet_eval, frobenius_class_label, load_coefficients, normalize,
    quadratic_twist, ribet_identity_check, tensor_trace_check, twist_table, write_coefficients, zero_density,
)

CURVE_37A = EllipticCurve(0, 0, 1, -1, 0)
# a_p of 37a for p = 2, 3, 5, ..., 31
AP_37A = {2: -2, 3: -3, 5: -2, 7: -1, 11: -5, 13: -2, 17: 0, 19: 0, 23: 2, 29: 6, 31: -4}
ZETA4 = Cyclotomic.root_of_unity(4, 1)


@pytest.fixture
def twist_file(data_dir):
    return data_dir / 'tables' / 'twist_37a_mod5.csv'


def write_table(tmp_path, text):
    path = tmp_path / 'table.csv'
    path.write_text(text)
    return path


def test_curve_invariants():
    assert CURVE_37A.discriminant == 37
    assert CURVE_37A.bad_primes == [37]
    with pytest.raises(SingularCurve):
        EllipticCurve(0, 0, 0, 0, 0)


def test_point_counts_of_37a():
    assert {p: ap_point_count(CURVE_37A, p) for p in AP_37A} == AP_37A
    with pytest.raises(BadReduction):
        ap_point_count(CURVE_37A, 37)


def test_small_curve_point_count():
    # y^2 = x^3 + x + 1 has 9 points over F_5
    assert ap_point_count(EllipticCurve(0, 0, 0, 1, 1), 5) == -3


@pytest.mark.parametrize('d', [-1, 5, -3, 2])
def test_quadratic_twist_multiplies_by_the_character(d):
    twisted = quadratic_twist(CURVE_37A, d)
    chi = DirichletCharacter.quadratic(d)
    for p in sympy.primerange(5, 200):
        if p == 37 or d % p == 0:
            continue
        expected = chi(p).to_fraction() * ap_point_count(CURVE_37A, p)
        assert ap_point_count(twisted, p) == expected


def test_quadratic_twist_rejects_squares():
    with pytest.raises(ValueError):
        quadratic_twist(CURVE_37A, 4)


def test_curve_table():
    table = curve_table(CURVE_37A, 100, workers=2)
    assert table.level == 37
    assert table.excluded == [37]
    assert 37 not in table.primes
    assert {p: int(table.by_prime()[p].a_p.x) for p in AP_37A} == AP_37A
    skipping = curve_table(CURVE_37A, 100, excluded=[2, 3])
    assert skipping.excluded == [2, 3, 37]
    with pytest.raises(ValueError):
        curve_table(CURVE_37A, 1000, prime_cap=500)


def test_normalized_traces():
    record = PrimeRecord(2, QuadFieldElem.rational(-2))
    assert normalize(record) == pytest.approx(-2 ** 0.5)
    real = PrimeRecord(11, QuadFieldElem(5, 1, 1))
    assert normalize(real, 1) == pytest.approx((1 + 5 ** 0.5) / 11 ** 0.5)
    assert normalize(real, 2) == pytest.approx((1 - 5 ** 0.5) / 11 ** 0.5)
    assert real.total_trace == pytest.approx(2 / 11 ** 0.5)
    with pytest.raises(ValueError):
        normalize(record, 3)


def test_quadratic_field_arithmetic():
    a = QuadFieldElem(5, 1, 1)
    assert a * a.conjugate() == QuadFieldElem(5, -4, 0)
    assert (a / a) == QuadFieldElem.rational(1, 5)
    assert a.norm() == -4 and a.trace() == 2
    assert (a * a).is_totally_positive()
    assert not a.is_totally_positive()
    g = QuadFieldElem(-1, 0, 2)
    assert g * g.complex_conjugate() == QuadFieldElem(-1, 4, 0)
    assert g.within_weil_bound(2) and not QuadFieldElem(-1, 2, 2).within_weil_bound(1)
    with pytest.raises(ValueError):
        QuadFieldElem(4, 1, 1)
    with pytest.raises(ValueError):
        QuadFieldElem(5, 1, 1) + QuadFieldElem(-1, 0, 1)


def test_dirichlet_characters():
    chi = dirichlet_eval(5, {2: ZETA4})
    assert chi.order == 4
    assert chi(3) == Cyclotomic.root_of_unity(4, 3)
    assert chi(4) == -1
    legendre = dirichlet_eval(5, {2: Cyclotomic.rational(-1)})
    assert legendre.order == 2
    assert all(legendre(n).to_fraction() == sympy.legendre_symbol(n, 5) for n in range(1, 5))
    assert DirichletCharacter.trivial(5).is_trivial()
    with pytest.raises(BadPrime):
        chi(10)


def test_dirichlet_characters_must_be_homomorphisms():
    with pytest.raises(NotAHomomorphism):
        dirichlet_eval(5, {2: Cyclotomic.root_of_unity(8, 1)})
    with pytest.raises(NotAHomomorphism):
        dirichlet_eval(5, {4: Cyclotomic.rational(-1)})
    with pytest.raises(NotAHomomorphism):
        dirichlet_eval(6, {3: Cyclotomic.rational(1)})


def test_class_labels():
    class_map = ClassMap.from_json({'modulus': 4, 'classes': {'1': 'e', '3': 's'}})
    assert frobenius_class_label(5, class_map) == 'e'
    assert frobenius_class_label(7, class_map) == 's'
    assert frobenius_class_label(7, ClassMap.trivial()) == 'e'
    with pytest.raises(BadPrime):
        frobenius_class_label(2, class_map)
    with pytest.raises(BadPrime):
        frobenius_class_label(7, ClassMap(5, {1: 'e'}))


def test_load_coefficients(twist_file):
    table = load_coefficients(twist_file)
    assert (table.D, table.level) == (-1, 185)
    assert table.primes == [2, 3, 7, 11, 13, 17, 19, 23]
    two = table.by_prime()[2]
    assert two.a_p == QuadFieldElem(-1, 0, -2)
    assert two.eps_p == -1
    assert zero_density(table) == Fraction(1, 4)


def test_twisting_37a_reproduces_the_table(tmp_path, twist_file):
    chi = dirichlet_eval(5, {2: ZETA4})
    twisted = twist_table(curve_table(CURVE_37A, 23), chi)
    assert twisted.excluded == [5]
    expected = load_coefficients(twist_file).by_prime()
    assert all(r.same_as(expected[r.p]) for r in twisted.records)
    write_coefficients(twisted, tmp_path / 'out.csv')
    assert (tmp_path / 'out.csv').read_bytes() == twist_file.read_bytes()


def test_written_tables_load_back(tmp_path):
    records = [PrimeRecord(11, QuadFieldElem(5, 1, 1), class_label='e', norm=11),
               PrimeRecord(19, QuadFieldElem(5, 2, -1), Cyclotomic.root_of_unity(3, 1), class_label='s')]
    table = CoefficientTable(D=5, level=5, records=records, field_M=5)
    write_coefficients(table, tmp_path / 'out.csv')
    loaded = load_coefficients(tmp_path / 'out.csv')
    assert (loaded.D, loaded.level, loaded.field_M) == (5, 5, 5)
    assert all(a.same_as(b) for a, b in zip(loaded.records, records))


def test_primes_dividing_the_level_are_skipped(tmp_path):
    path = write_table(tmp_path, '#N=37\np,ax,ay,eps_num,eps_ord\n2,-2,0,0,1\n37,0,0,0,1\n')
    table = load_coefficients(path)
    assert table.primes == [2]
    assert table.excluded == [37]


@pytest.mark.parametrize('text, line', [
    ('p,ax,ay,eps_num,eps_ord\n2,1,0,0,1\n3,1,0\n', 3),
    ('#D=-1\np,ax,ay,eps_num,eps_ord\n4,0,1,0,1\n', 3),
    ('p,ax,ay,eps_num,eps_ord\n2,1,1,0,1\n', 2),
    ('p,ax,ay,eps_num,eps_ord\n2,1,0,0,1\n2,1,0,0,1\n', 3),
    ('#X=3\np,ax,ay,eps_num,eps_ord\n', 1),
    ('p,ax,bx,eps_num,eps_ord\n', 1),
    ('p,ax,ay,eps_num,eps_ord\n2,1,0,0,1\n#D=5\n', 3),
    ('p,ax,ay,eps_num,eps_ord\n3,x,0,0,1\n', 2),
])
def test_parse_errors_report_the_line(tmp_path, text, line):
    with pytest.raises(ParseError) as info:
        load_coefficients(write_table(tmp_path, text))
    assert info.value.line == line


def test_weil_bound_is_enforced(tmp_path):
    with pytest.raises(InvariantViolation) as info:
        load_coefficients(write_table(tmp_path, 'p,ax,ay,eps_num,eps_ord\n2,3,0,0,1\n'))
    assert info.value.p == 2
    with pytest.raises(InvariantViolation):
        load_coefficients(write_table(tmp_path, '#D=5\np,ax,ay,eps_num,eps_ord\n5,3,1,0,1\n'))


def test_ribet_identity_holds_on_the_twisted_table(twist_file):
    result = ribet_identity_check(load_coefficients(twist_file))
    assert result['success']
    assert result['checked'] == 8
    assert result['skipped_zero'] == 2
    assert result['center_field'] == 1


def test_ribet_identity_catches_a_wrong_character(tmp_path, twist_file):
    text = twist_file.read_text().replace('2,0,-2,1,2', '2,0,-2,0,1')
    result = ribet_identity_check(load_coefficients(write_table(tmp_path, text)))
    assert not result['success']
    assert [f['p'] for f in result['failures']] == [2]


def test_center_field_values(twist_file):
    rational = center_field_values(load_coefficients(twist_file))
    assert rational['degree'] == 1
    assert rational['values'][2] == '4'
    real = CoefficientTable(D=5, records=[PrimeRecord(11, QuadFieldElem(5, 1, 1))])
    result = center_field_values(real)
    assert (result['field'], result['degree']) == (5, 2)
    assert result['values'][11] == '6 + 2*sqrt(5)'


def test_tensor_trace_check():
    a = CoefficientTable(D=5, records=[PrimeRecord(11, QuadFieldElem(5, 1, 1))])
    b = CoefficientTable(D=5, records=[PrimeRecord(11, QuadFieldElem(5, 1, -1))])
    c = CoefficientTable(records=[PrimeRecord(11, QuadFieldElem.rational(-8))])
    result = tensor_trace_check(a, b, c)
    assert result['success'] and result['trace_taken']
    wrong = CoefficientTable(records=[PrimeRecord(11, QuadFieldElem.rational(-7))])
    assert not tensor_trace_check(a, b, wrong)['success']
    missing = CoefficientTable(records=[])
    assert tensor_trace_check(a, b, missing)['failures'] == [{'p': 11, 'reason': 'prime missing from one of the tables'}]


def test_twisting_keeps_the_center_values():
    table = curve_table(CURVE_37A, 100)
    twisted = twist_table(table, dirichlet_eval(5, {2: ZETA4}))
    before = center_field_values(table)['values']
    after = center_field_values(twisted)['values']
    assert after == {p: v for p, v in before.items() if p != 5}


def test_tensor_trace_check_reports_mixed_fields():
    a = CoefficientTable(D=5, records=[PrimeRecord(11, QuadFieldElem(5, 1, 1))])
    b = CoefficientTable(D=-1, records=[PrimeRecord(11, QuadFieldElem(-1, 1, 1))])
    c = CoefficientTable(records=[PrimeRecord(11, QuadFieldElem.rational(3))])
    result = tensor_trace_check(a, b, c)
    assert not result['success']
    assert [f['p'] for f in result['failures']] == [11]
    assert 'cannot be combined' in result['failures'][0]['reason']


def character_table_for(chi, primes):
    return CoefficientTable(records=[PrimeRecord(p, QuadFieldElem.rational(chi(p).to_fraction())) for p in primes])


@pytest.mark.parametrize('d', [5, -1])
def test_tensor_with_a_quadratic_character_is_the_twist(d):
    a = curve_table(CURVE_37A, 1000, excluded=[2, 3, abs(d)] if abs(d) > 1 else [2, 3])
    c = curve_table(quadratic_twist(CURVE_37A, d), 1000)
    assert c.primes == a.primes
    b = character_table_for(DirichletCharacter.quadratic(d), a.primes)
    result = tensor_trace_check(a, b, c)
    assert result['success'], result['failures'][:3]
    assert not result['trace_taken']
    assert result['checked'] == len(a.primes)


def test_tensor_with_the_wrong_character_fails():
    a = curve_table(CURVE_37A, 200, excluded=[2, 3, 5])
    c = curve_table(quadratic_twist(CURVE_37A, 5), 200)
    b = character_table_for(DirichletCharacter.quadratic(-1), a.primes)
    failed = [f['p'] for f in tensor_trace_check(a, b, c)['failures']]
    # chi_5(11) = 1, chi_-1(11) = -1 and a_11(37a) = -5
    assert 11 in failed


def test_tensor_with_the_trivial_character_is_the_identity():
    a = curve_table(CURVE_37A, 500)
    ones = CoefficientTable(records=[PrimeRecord(p, QuadFieldElem.rational(1)) for p in a.primes])
    result = tensor_trace_check(a, ones, a)
    assert result['success']
    assert result['checked'] == len(a.primes)


def test_frobenius_classes_of_an_order_four_character_are_equidistributed():
    class_map = ClassMap(5, {1: 'e', 2: 's', 4: 's^2', 3: 's^3'})
    primes = list(sympy.primerange(7, 50000))
    labels = [frobenius_class_label(p, class_map) for p in primes]
    for name in ('e', 's', 's^2', 's^3'):
        assert abs(labels.count(name) / len(primes) - 0.25) < 0.02
