"""
Tests for exact cyclotomic arithmetic, finite groups, cocycles and the
representation twisting pipeline
"""
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from finite_group_core import (
    Cocycle2, Cyclotomic, FiniteGroup, GroupError, MultiplierMismatch, NotACocycle, NotAGroup, ONE, ParityViolation,
    Splitting, UnitaryRep, build_eta_e, character, character_table, coboundary, commuting_witness,
    conjugacy_classes, cyclic_extension_cocycle, diagonalize, exact_matrix, load_cocycle, mat_mul,
    matrices_equal, matrix_group, one_dim_rep, quaternion_cocycle, quaternion_group, random_splitting,
    regular_rep, scalar_matrix, sign_normalize, small_groups, split_cocycle, sqrt_rational_integer,
    twist_projective_rep, twisted_regular_rep, verify_cocycle, xgcd,
)

I = Cyclotomic.root_of_unity(4, 1)


# -- cyclotomic numbers -------------------------------------------------------

def test_roots_of_unity_multiply_by_turns():
    assert I * I == -1
    assert I ** 4 == 1
    assert Cyclotomic.root_of_unity(12, 3) == I
    assert Cyclotomic.root_of_unity(12, 3).multiplicative_order() == 4


def test_sum_of_cube_roots_vanishes():
    z = Cyclotomic.root_of_unity(3, 1)
    assert (1 + z + z * z).is_zero()


@pytest.mark.parametrize('d', [-7, -3, -1, 2, 3, 5, 12, 13, -15])
def test_square_roots_of_integers(d):
    root = sqrt_rational_integer(d)
    assert root * root == d


def test_inverse_of_a_general_element():
    z = Cyclotomic.root_of_unity(5, 1)
    x = 1 + z + Fraction(1, 3) * z ** 2
    assert x * x.inverse() == ONE
    assert (x / x) == 1


def test_conjugate_and_real_part():
    z = Cyclotomic.root_of_unity(8, 1)
    assert z.conjugate() == z ** 7
    assert (z + z.conjugate()) * (z + z.conjugate()) == 2
    assert abs(z.real_part().to_complex() - np.cos(np.pi / 4)) < 1e-12


def test_json_forms():
    assert Cyclotomic.from_json(3) == 3
    assert Cyclotomic.from_json('-2/3') == Fraction(-2, 3)
    assert Cyclotomic.from_json({'root': [1, 4]}) == I
    coeff_form = Cyclotomic.from_json(I.to_json())
    assert coeff_form == I
    assert coeff_form.turn == Fraction(1, 4)
    with pytest.raises(ValueError):
        Cyclotomic.from_json(True)


def test_bad_matrix_entries_are_rejected():
    with pytest.raises(ValueError):
        exact_matrix([[1.5]])
    with pytest.raises(ValueError):
        exact_matrix([[1, 0], [0]])


def test_sign_normalize_picks_one_of_plus_minus():
    m = exact_matrix([[-1, 0], [0, -1]])
    assert matrices_equal(sign_normalize(m), scalar_matrix(ONE, 2))
    m = exact_matrix([[0, -I], [I, 0]])
    assert matrices_equal(sign_normalize(m), exact_matrix([[0, I], [-I, 0]]))


# -- groups -------------------------------------------------------------------

def test_non_group_tables_are_rejected():
    with pytest.raises(NotAGroup):
        FiniteGroup([[0, 1], [1, 1]])
    with pytest.raises(NotAGroup):
        FiniteGroup([[0, 1, 2], [1, 2, 0]])


def test_non_associative_loop_is_rejected():
    # a Latin square with identity 0 that is not a group
    table = [
        [0, 1, 2, 3, 4],
        [1, 0, 3, 4, 2],
        [2, 4, 0, 1, 3],
        [3, 2, 4, 0, 1],
        [4, 3, 1, 2, 0],
    ]
    with pytest.raises(NotAGroup):
        FiniteGroup(table)


@pytest.mark.parametrize('group', small_groups(8), ids=lambda g: g.name)
def test_small_groups_have_consistent_class_equations(group):
    classes = conjugacy_classes(group)
    assert classes[0] == (group.identity,)
    assert sum(len(c) for c in classes) == group.order
    chars = character_table(group)
    assert len(chars) == len(classes)
    assert chars[0].is_trivial()
    assert sum(c.degree ** 2 for c in chars) == group.order
    # row orthogonality
    for a, b in product(chars, repeat=2):
        inner = np.vdot(b.values, a.values) / group.order
        assert abs(inner - (1 if a.index == b.index else 0)) < 1e-8


def test_quaternion_group_closure():
    q8 = quaternion_group()
    assert q8.order == 8
    assert not q8.is_abelian()
    assert q8.minus_identity is not None
    assert sorted(c.degree for c in character_table(q8)) == [1, 1, 1, 1, 2]


def test_named_groups():
    assert FiniteGroup.named('S3').order == 6
    assert FiniteGroup.named('Z/2xZ/4').order == 8
    assert FiniteGroup.named('D4').order == 8
    with pytest.raises(NotAGroup):
        FiniteGroup.named('PSL(2,7)')


# -- integer linear algebra ----------------------------------------------------

def test_xgcd():
    x, y, g = xgcd(240, 46)
    assert g == 2 and 240 * x + 46 * y == 2


def test_diagonalize_reconstructs_the_input():
    rows = [[2, 4, 4], [-6, 6, 12], [10, -4, -16]]
    diag, S, T = diagonalize(rows, 3)
    product_matrix = np.array(S) @ np.array(rows) @ np.array(T)
    assert np.array_equal(product_matrix, np.diag(diag))
    assert round(abs(np.linalg.det(np.array(S)))) == 1
    assert round(abs(np.linalg.det(np.array(T)))) == 1


# -- cocycles -------------------------------------------------------------------

def test_trivial_cocycle_splits_with_alpha_one():
    g = FiniteGroup.cyclic(3)
    c = coboundary(Splitting(g, (ONE, ONE, ONE)))
    alpha = split_cocycle(c)
    assert isinstance(alpha, Splitting)
    assert all(a == 1 for a in alpha.alpha)


@pytest.mark.parametrize('group', small_groups(8), ids=lambda g: g.name)
def test_random_coboundaries_split(group):
    rng = np.random.default_rng(group.order)
    for _ in range(10):
        c = coboundary(random_splitting(group, 8, rng))
        assert verify_cocycle(c)
        alpha = split_cocycle(c)
        assert isinstance(alpha, Splitting)
        assert all(x == y for x, y in zip(coboundary(alpha).values.flat, c.values.flat))


@pytest.mark.slow
@pytest.mark.parametrize('group', small_groups(8), ids=lambda g: g.name)
def test_hundred_random_coboundaries_split(group):
    rng = np.random.default_rng(1000 + group.order)
    for _ in range(100):
        c = coboundary(random_splitting(group, 8, rng))
        assert isinstance(split_cocycle(c), Splitting)


def _exhaustive_splitting_exists(c, n):
    g = c.group
    others = [s for s in range(g.order) if s != g.identity]
    for exps in product(range(n), repeat=len(others)):
        values = [ONE] * g.order
        for s, k in zip(others, exps):
            values[s] = Cyclotomic.root_of_unity(n, k)
        alpha = Splitting(g, tuple(values))
        if all(x == y for x, y in zip(coboundary(alpha).values.flat, c.values.flat)):
            return True
    return False


def test_cyclic_extension_needs_fourth_roots():
    c = cyclic_extension_cocycle()
    assert verify_cocycle(c)
    assert not _exhaustive_splitting_exists(c, 2)
    assert _exhaustive_splitting_exists(c, 4)
    alpha = split_cocycle(c)
    assert isinstance(alpha, Splitting)
    assert alpha.value_order() == 4
    report = split_cocycle(c, max_order=2)
    assert report['success'] is False
    assert report['tested_orders'] == [2]


def test_quaternion_cocycle_is_an_obstruction():
    c = quaternion_cocycle()
    assert verify_cocycle(c)
    assert commuting_witness(c) is not None
    assert not _exhaustive_splitting_exists(c, 4)
    report = split_cocycle(c, max_order=8)
    assert report['success'] is False
    assert report['tested_orders'] == [2, 4, 6, 8]
    assert report['commuting_witness'] is not None


def test_broken_cocycles_raise():
    g = FiniteGroup.abelian(2, 2)
    values = cyclic_extension_cocycle().values.copy()
    values[1, 2] = -ONE
    c = Cocycle2(g, values)
    assert not verify_cocycle(c)
    with pytest.raises(NotACocycle):
        split_cocycle(c)
    unnormalized = Cocycle2(FiniteGroup.cyclic(2), exact_matrix([[-1, 1], [1, 1]]))
    with pytest.raises(NotACocycle):
        split_cocycle(unnormalized)


def test_load_cocycle_checks_shape():
    with pytest.raises(NotACocycle):
        load_cocycle({'group': {'cyclic': 2}, 'values': [[1, 1]]})
    c = load_cocycle({'group': {'cyclic': 2}, 'values': [[1, 1], [1, 1]]})
    assert c.is_normalized()


# -- twisting ---------------------------------------------------------------------

@pytest.mark.parametrize('group', [FiniteGroup.cyclic(4), FiniteGroup.abelian(2, 2), FiniteGroup.named('S3')],
                         ids=lambda g: g.name)
def test_twist_of_projective_regular_rep_is_genuine(group):
    rng = np.random.default_rng(7)
    alpha = random_splitting(group, 4, rng)
    c = coboundary(alpha)
    rho = twisted_regular_rep(c)
    assert rho.homomorphism_witness() is None
    twisted = twist_projective_rep(rho, alpha)
    assert twisted.multiplier is None
    assert twisted.failures() == []


def test_twist_with_the_wrong_splitting_fails():
    group = FiniteGroup.cyclic(4)
    alpha = Splitting(group, (ONE, I, ONE, ONE))
    rho = twisted_regular_rep(coboundary(alpha))
    with pytest.raises(MultiplierMismatch):
        twist_projective_rep(rho, Splitting(group, (ONE, ONE, I, ONE)))


def test_regular_character():
    group = FiniteGroup.cyclic(3)
    chi = character(regular_rep(group))
    assert chi[group.identity] == 3
    assert all(v == 0 for s, v in enumerate(chi) if s != group.identity)


def _eta_setup():
    """Gamma = Z/2 with theta(s) = diag(-1, 1), epsilon(s) = -1, so r(s) theta(s) = +-diag(-i, i)"""
    gamma = FiniteGroup.cyclic(2)
    theta = UnitaryRep(gamma, (scalar_matrix(ONE, 2), exact_matrix([[-1, 0], [0, 1]])))
    epsilon = one_dim_rep(gamma, [ONE, -ONE])
    h = matrix_group([scalar_matrix(-ONE, 2), exact_matrix([[-I, 0], [0, I]])], name='H')
    return gamma, theta, epsilon, h


def _h_rep(h, images_fn):
    return UnitaryRep(h, tuple(images_fn(m) for m in h.matrices))


def test_build_eta_e_is_independent_of_square_root_choice():
    gamma, theta, epsilon, h = _eta_setup()
    # eta: the identity representation of H, odd on -I
    eta = _h_rep(h, lambda m: m)
    first = build_eta_e(eta, theta, epsilon, 1, [ONE, I])
    second = build_eta_e(eta, theta, epsilon, 1, [ONE, -I])
    assert first.homomorphism_witness() is None
    assert all(matrices_equal(a, b) for a, b in zip(first.images, second.images))


def test_build_eta_e_checks_parity():
    gamma, theta, epsilon, h = _eta_setup()
    eta = _h_rep(h, lambda m: m)
    with pytest.raises(ParityViolation):
        build_eta_e(eta, theta, epsilon, 2, [ONE, I])


def test_build_eta_e_rejects_bad_square_roots():
    gamma, theta, epsilon, h = _eta_setup()
    eta = _h_rep(h, lambda m: m)
    with pytest.raises(GroupError):
        build_eta_e(eta, theta, epsilon, 1, [ONE, ONE])


def test_named_group_class_structure():
    assert len(conjugacy_classes(FiniteGroup.named('D4'))) == 5
    assert sorted(len(c) for c in conjugacy_classes(FiniteGroup.named('S3'))) == [1, 2, 3]
    assert len(conjugacy_classes(quaternion_group())) == 5


def test_quaternion_character():
    q8 = quaternion_group()
    chi = character(UnitaryRep(q8, tuple(q8.matrices)))
    assert chi[q8.identity] == 2
    assert chi[q8.minus_identity] == -2
    assert all(chi[s] == 0 for s in range(q8.order) if s not in (q8.identity, q8.minus_identity))


def conjugation_rep(group):
    """Permutation representation of the group acting on itself by conjugation"""
    images = []
    for s in range(group.order):
        rows = [[0] * group.order for _ in range(group.order)]
        for t in range(group.order):
            rows[group.mul(group.mul(s, t), int(group.inv[s]))][t] = 1
        images.append(exact_matrix(rows))
    return UnitaryRep(group, tuple(images))


@pytest.mark.parametrize('group', small_groups(8), ids=lambda g: g.name)
def test_characters_are_class_functions(group):
    rho = conjugation_rep(group)
    assert rho.homomorphism_witness() is None
    chi = character(rho)
    for cls in conjugacy_classes(group):
        assert all(chi[s] == chi[cls[0]] for s in cls)
    # fixed points of conjugation by s form its centralizer, of size |G| / |class|
    for cls in conjugacy_classes(group):
        assert chi[cls[0]] == group.order // len(cls)


def _klein_order8_setup():
    """Gamma = Z/4 x Z/2, theta(x, y) = X^y, epsilon(x, y) = (-1)^x, so H = <-I, iI, X> has order 8"""
    gamma = FiniteGroup.abelian(4, 2)
    coords = [tuple(int(v) for v in name.split(',')) for name in gamma.names]
    swap = exact_matrix([[0, 1], [1, 0]])
    theta = UnitaryRep(gamma, tuple(swap if y else scalar_matrix(ONE, 2) for _, y in coords))
    epsilon = one_dim_rep(gamma, [-ONE if x % 2 else ONE for x, _ in coords])
    h = matrix_group([scalar_matrix(-ONE, 2), scalar_matrix(I, 2), swap], name='H')
    return gamma, coords, theta, epsilon, h


def test_build_eta_e_on_an_order_eight_group():
    gamma, coords, theta, epsilon, h = _klein_order8_setup()
    assert gamma.order == 8 and h.order == 8
    eta = _h_rep(h, lambda m: m)
    rng = np.random.default_rng(0)
    signs = rng.choice([1, -1], size=gamma.order)
    roots = [I ** x * int(sign) for (x, _), sign in zip(coords, signs)]
    rep = build_eta_e(eta, theta, epsilon, 1, roots)
    for s, t in product(range(gamma.order), repeat=2):
        assert matrices_equal(mat_mul(rep(s), rep(t)), rep(gamma.mul(s, t)))
    # r^-1 eta(r theta(s)) collapses to theta(s) for the defining representation
    assert all(matrices_equal(rep(s), theta(s)) for s in range(gamma.order))


def _diagonal_setup(n):
    """Gamma = Z/n (n even), theta(s^j) = diag(zeta_n^j, 1), epsilon(s^j) = (-1)^j"""
    gamma = FiniteGroup.cyclic(n)
    zeta = Cyclotomic.root_of_unity(n, 1)
    theta = UnitaryRep(gamma, tuple(exact_matrix([[zeta ** j, 0], [0, 1]]) for j in range(n)))
    epsilon = one_dim_rep(gamma, [-ONE if j % 2 else ONE for j in range(n)])
    h = matrix_group([scalar_matrix(-ONE, 2), exact_matrix([[I * zeta, 0], [0, I]])], name='H')
    return gamma, theta, epsilon, h


def _random_roots(rng, n):
    return [I ** j * int(rng.choice([1, -1])) for j in range(n)]


@pytest.mark.parametrize('n', [2, 4, 6, 8, 12])
def test_build_eta_e_sweep(n):
    gamma, theta, epsilon, h = _diagonal_setup(n)
    assert h.order <= 48
    rng = np.random.default_rng(n)
    for e in range(5):
        # H is diagonal, so h -> h11^p h22^q is a character; its value at -I is (-1)^(p+q)
        for p, q in product(range(5), repeat=2):
            if (p + q - e) % 2:
                continue
            eta = _h_rep(h, lambda m: scalar_matrix(m[0, 0] ** p * m[1, 1] ** q, 1))
            first = build_eta_e(eta, theta, epsilon, e, _random_roots(rng, n))
            second = build_eta_e(eta, theta, epsilon, e, _random_roots(rng, n))
            assert first.homomorphism_witness() is None
            assert all(matrices_equal(a, b) for a, b in zip(first.images, second.images))


def test_matrix_group_products_stay_inside():
    h = matrix_group([exact_matrix([[0, 1], [1, 0]]), scalar_matrix(I, 2)])
    assert h.order == 8
    for a in range(h.order):
        for b in range(h.order):
            assert h.index_of(mat_mul(h.matrices[a], h.matrices[b])) == h.mul(a, b)
