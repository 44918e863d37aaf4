"""
Test suite for the Z^{1,9} lattice and modelled conjugacy.
"""

import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st
from itertools import combinations, permutations
from src.exactalg import QMatrix, ZMatrix
from src.halphen import (
    XI,
    E,
    HalphenModel,
    ModelError,
    NSIsometry,
    NSVector,
    axis_translation_vector,
    conjugacy_search,
    decompose_modelled,
    enumerate_irr_candidates,
    gram_matrix,
    horosphere_point,
    is_parabolic_isometry,
    isometry_degree,
    lift_translation,
    permutation_isometry,
    project_to_w,
    q_norm,
    quadratic_involution,
    root_classes_mod_xi,
    solve_conjugacy_translation,
    translation_isometry,
    translation_action,
    translation_part,
    verify_degree_identity,
)

IDENTITY_PERM = tuple(range(1, 10))
SWAP_12 = (2, 1, 3, 4, 5, 6, 7, 8, 9)
SWAP_13 = (3, 2, 1, 4, 5, 6, 7, 8, 9)
SWAP_23 = (1, 3, 2, 4, 5, 6, 7, 8, 9)
ROOT_12 = E(1) - E(2)
FLIP = NSIsometry.from_images([E(1), E(0)] + [E(i) for i in range(2, 10)])


def root_model() -> HalphenModel:
    """Index one with a single reducible fibre containing e1 - e2."""
    return HalphenModel(1, [XI, ROOT_12], [XI, ROOT_12]).validate()


def test_intersection_form():
    """Test the basis squares and xi."""
    assert E(0).square == 1
    assert E(5).square == -1
    assert XI.square == 0
    assert XI.dot(E(0)) == 3 and XI.dot(E(1)) == 1
    assert gram_matrix().det() == -1
    with pytest.raises(ValueError, match="no basis vector"):
        E(10)


def test_quadratic_involution():
    """Test the quadratic involution is parabolic of degree 2."""
    sigma = quadratic_involution(1, 2, 3)
    assert is_parabolic_isometry(sigma)
    assert isometry_degree(sigma) == 2
    assert sigma @ sigma == NSIsometry.identity()
    assert verify_degree_identity(sigma)
    with pytest.raises(ValueError, match="three distinct"):
        quadratic_involution(1, 1, 2)


def test_form_breaking_matrix():
    """Test a matrix swapping e0 and e1 is not parabolic."""
    assert not is_parabolic_isometry(FLIP)
    assert not verify_degree_identity(FLIP)
    with pytest.raises(ValueError, match="preserve the form"):
        translation_part(FLIP)
    with pytest.raises(ValueError, match="does not preserve"):
        FLIP.inverse()


@settings(max_examples=1000)
@given(st.lists(st.integers(min_value=-5, max_value=5), min_size=8, max_size=8))
def test_horosphere_point(values):
    """Test e0 + w - (w^2/6) xi has square 1 and meets xi in 3."""
    w = NSVector.of(0, *values, -sum(values))
    u = horosphere_point(w)
    assert u.square == 1
    assert u.dot(XI) == 3


def test_horosphere_rejects_bad_direction():
    """Test w must be orthogonal to xi and e0."""
    with pytest.raises(ValueError, match="orthogonal to xi and e0"):
        horosphere_point(E(1))


def test_q_norm():
    """Test the quotient distance and its invariance under adding xi."""
    u = horosphere_point(ROOT_12)
    assert q_norm(E(0), u) == 2
    assert q_norm(E(0) + XI, u) == 2
    with pytest.raises(ValueError, match="w.xi = 3"):
        q_norm(E(1), u)


def test_roots_of_degree_zero():
    """Test the classes with c0 = 0 are the 72 differences e_i - e_j."""
    candidates = enumerate_irr_candidates(1, 0)
    roots = [c for c in candidates if c.square == -2]
    assert len(roots) == 72
    assert candidates[-1] == XI
    assert enumerate_irr_candidates(2, 0)[-2:] == [XI, XI * 2]


def test_root_classes():
    """Test there are 240 root classes and permutations preserve them."""
    roots = root_classes_mod_xi()
    assert len(roots) == 240
    assert all(c.dot(XI) == 0 for c in roots)
    assert sum(1 for c in roots if c[0] == 1) == 84
    cycle = permutation_isometry((2, 3, 4, 5, 6, 7, 8, 9, 1))
    assert {cycle(c) for c in roots} == set(roots)


def test_root_classes_by_construction():
    """Test the enumeration against e_i - e_j, e0 - three and 2e0 - six."""
    built = {E(i) - E(j) for i, j in permutations(range(1, 10), 2)}
    built |= {E(0) - sum((E(i) for i in triple), NSVector.zero()) for triple in combinations(range(1, 10), 3)}
    built |= {E(0) * 2 - sum((E(i) for i in six), NSVector.zero()) for six in combinations(range(1, 10), 6)}
    assert len(built) == 240
    assert set(root_classes_mod_xi()) == built


def test_enumeration_arguments():
    """Test negative bounds and indices are rejected."""
    with pytest.raises(ValueError, match="non-negative"):
        enumerate_irr_candidates(1, -1)
    with pytest.raises(ValueError, match="at least 1"):
        enumerate_irr_candidates(0, 3)


def test_permutation_isometry():
    """Test permutations fix e0 and xi."""
    P = permutation_isometry(SWAP_13)
    assert P(E(1)) == E(3)
    assert is_parabolic_isometry(P)
    assert isometry_degree(P) == 1
    with pytest.raises(ValueError, match="not a permutation"):
        permutation_isometry((1, 1, 3, 4, 5, 6, 7, 8, 9))


def test_translation_isometry():
    """Test translations are additive and depend on gamma modulo xi."""
    a, b = ROOT_12, E(3) - E(4)
    T = translation_isometry(a)
    assert is_parabolic_isometry(T)
    assert translation_isometry(a) @ translation_isometry(b) == translation_isometry(a + b)
    assert translation_isometry(a + XI) == T
    assert T @ translation_isometry(-a) == NSIsometry.identity()
    assert T.inverse() == translation_isometry(-a)
    assert isometry_degree(T) == 10
    with pytest.raises(ValueError, match="integral"):
        translation_isometry(ROOT_12 * Fraction(1, 2))
    with pytest.raises(ValueError, match="orthogonal to xi"):
        translation_isometry(E(1))


def test_translation_part_of_translation():
    """Test T_gamma acts on W as the identity plus 3 q_P(gamma)."""
    gamma = E(0) - E(1) - E(2) - E(3)
    part = translation_part(translation_isometry(gamma))
    assert part.linear.entries == QMatrix.identity(8).entries
    assert part.translation == project_to_w(gamma) * 3
    assert verify_degree_identity(translation_isometry(gamma))


def test_translation_part_respects_model():
    """Test an isometry moving R(X) is refused by the model."""
    model = root_model()
    translation_part(translation_isometry(E(3) - E(4)), model)
    with pytest.raises(ModelError, match="R\\(X\\)"):
        translation_part(permutation_isometry(SWAP_13), model)
    assert not verify_degree_identity(permutation_isometry(SWAP_13), model)


def test_axis_translation_vector():
    """Test xi translates trivially and R(X) directions are projected out."""
    trivial = HalphenModel.trivial()
    assert axis_translation_vector(XI, trivial) == NSVector.zero()
    assert axis_translation_vector(ROOT_12, trivial) == ROOT_12 * 3
    assert axis_translation_vector(ROOT_12, root_model()) == NSVector.zero()


def xi_orthogonal(values):
    """Vector with coordinates c0, c1..c8 from values and c9 fixed by gamma.xi = 0."""
    c0, rest = values[0], values[1:]
    return NSVector.of(c0, *rest, -3 * c0 - sum(rest))


gammas = st.lists(st.integers(min_value=-4, max_value=4), min_size=9, max_size=9).map(xi_orthogonal)


@given(gammas, gammas, st.lists(st.integers(min_value=-3, max_value=3), min_size=10, max_size=10))
def test_translation_action_is_additive(gamma1, gamma2, coords):
    """Test acting by gamma1 then gamma2 equals acting by gamma1 + gamma2."""
    model = root_model()
    alpha = NSVector.of(*coords)
    once = translation_action(gamma1, alpha, model)
    assert translation_action(gamma2, once, model) == translation_action(gamma1 + gamma2, alpha, model)


def test_translation_action_examples():
    """Test e0 moves by 3 gamma and R(X) directions act trivially."""
    model = root_model()
    gamma = E(3) - E(4)
    expected = model.coset_representative(E(0) + gamma * 3)
    assert translation_action(gamma, E(0), model) == expected
    assert translation_action(ROOT_12, E(0), model) == model.coset_representative(E(0))
    assert translation_action(gamma, ROOT_12, model) == model.coset_representative(ROOT_12)
    with pytest.raises(ValueError, match="orthogonal to xi"):
        translation_action(E(1), E(0), model)


def test_lifted_translation_part():
    """Test T_gamma has linear part Id and translation 3a(gamma) modulo R(X)."""
    model = root_model()
    axis = E(3) - E(4)
    part = translation_part(translation_isometry(axis), model)
    assert part.linear.entries == QMatrix.identity(8).entries
    assert part.translation == axis_translation_vector(axis, model)
    mixed = axis + ROOT_12
    part = translation_part(translation_isometry(mixed), model)
    assert part.linear.entries == QMatrix.identity(8).entries
    assert part.translation - axis_translation_vector(mixed, model) == project_to_w(ROOT_12) * 3


def test_degree_identity_grows_quadratically():
    """Test deg(T^k) = 1 + 9k^2 for a translation of norm 2, with the identity at every k."""
    T = translation_isometry(ROOT_12)
    power = NSIsometry.identity()
    degrees = []
    for k in range(1, 7):
        power = power @ T
        assert verify_degree_identity(power, root_model())
        degrees.append(isometry_degree(power))
    assert degrees == [1 + 9 * k * k for k in range(1, 7)]
    second = [a - 2 * b + c for a, b, c in zip(degrees, degrees[1:], degrees[2:])]
    assert set(second) == {18}


def test_lift_translation():
    """Test lifting a W vector with thirds back to an integral class."""
    gamma = E(0) - E(1) - E(2) - E(3)
    assert lift_translation(project_to_w(gamma)) == gamma
    with pytest.raises(ValueError, match="not the projection"):
        lift_translation(ROOT_12 * Fraction(1, 2))


def test_solve_conjugacy_translation():
    """Test the bounded solve of (L - Id) s = s'."""
    identity = ZMatrix.identity(2)
    assert solve_conjugacy_translation(identity, [0, 0]) == (0, 0)
    assert solve_conjugacy_translation(identity, [1, 0]) is None
    negative = ZMatrix.from_rows([[-1, 0], [0, -1]])
    assert solve_conjugacy_translation(negative, [2, 4]) == (-1, -2)


def test_decompose_modelled():
    """Test M = T_gamma o P_pi is recovered up to xi."""
    M = translation_isometry(ROOT_12) @ permutation_isometry(SWAP_12)
    perm, gamma = decompose_modelled(M)
    assert perm == SWAP_12
    assert project_to_w(gamma) == ROOT_12
    assert translation_isometry(gamma) @ permutation_isometry(perm) == M
    assert decompose_modelled(quadratic_involution(1, 2, 3)) is None
    assert decompose_modelled(FLIP) is None


def test_axis_lattice():
    """Test the axis lattice ranks and membership."""
    trivial = HalphenModel.trivial().axis_lattice()
    assert trivial.rank == 8
    coords = trivial.coordinates(ROOT_12)
    assert coords is not None
    assert trivial.vector(coords) == ROOT_12
    assert trivial.coordinates(ROOT_12 * Fraction(1, 2)) is None
    lattice = root_model().axis_lattice()
    assert lattice.rank == 7
    assert all(b.dot(ROOT_12) == 0 for b in lattice.basis)


def test_conjugacy_of_a_map_with_itself():
    """Test g = f gives the identity conjugator."""
    f = translation_isometry(ROOT_12)
    result = conjugacy_search(f, f)
    assert result is not None
    assert result.h == NSIsometry.identity()
    assert result.degree == 1
    assert result.within_bound
    assert result.to_dict()["conjugator"] == list(IDENTITY_PERM)


def test_conjugacy_by_permutation():
    """Test translations along e1 - e2 and e3 - e2 are conjugate."""
    f = translation_isometry(ROOT_12)
    g = translation_isometry(E(3) - E(2))
    result = conjugacy_search(f, g)
    assert result is not None
    assert result.conjugator == SWAP_13
    assert result.h @ f == g @ result.h


def test_conjugacy_of_permutations():
    """Test transpositions are conjugate through a permutation."""
    f = permutation_isometry(SWAP_12)
    g = permutation_isometry(SWAP_23)
    result = conjugacy_search(f, g)
    assert result is not None
    assert result.h @ f == g @ result.h
    assert result.degree == 1


def test_no_conjugator():
    """Test different translation lengths and cycle types are not conjugate."""
    f = translation_isometry(ROOT_12)
    assert conjugacy_search(f, translation_isometry(ROOT_12 * 2)) is None
    assert conjugacy_search(permutation_isometry(SWAP_12), NSIsometry.identity()) is None


def test_conjugacy_errors():
    """Test unmodelled inputs raise ModelError."""
    f = translation_isometry(ROOT_12)
    with pytest.raises(ModelError, match="fix xi"):
        conjugacy_search(FLIP, f)
    with pytest.raises(ModelError, match="not a translation composed"):
        conjugacy_search(quadratic_involution(1, 2, 3), f)
    with pytest.raises(ModelError, match="Irr"):
        conjugacy_search(permutation_isometry(SWAP_13), f, model=root_model())


def test_model_validation():
    """Test model consistency checks."""
    assert HalphenModel.trivial(2).validate().degree_bound == 6
    with pytest.raises(ModelError, match="not orthogonal to xi"):
        HalphenModel(1, [E(1)], [XI]).validate()
    with pytest.raises(ModelError, match="xi is not in R\\(X\\)"):
        HalphenModel(1, [XI], [ROOT_12]).validate()
    with pytest.raises(ModelError, match="isotropic"):
        HalphenModel(2, [XI * 3], [XI]).validate()
    with pytest.raises(ModelError, match="do not span the lattice of the Irr classes"):
        HalphenModel(1, [XI], [XI, ROOT_12]).validate()
    with pytest.raises(ModelError, match="do not span the lattice of the Irr classes"):
        HalphenModel(1, [XI, ROOT_12], [XI, ROOT_12 * 2]).validate()
    assert HalphenModel(1, [XI, ROOT_12], [XI + ROOT_12, ROOT_12]).validate().r_hnf()


def test_model_dict():
    """Test models load from JSON and malformed input is reported."""
    model = root_model()
    assert HalphenModel.from_dict(model.to_dict()) == model
    with pytest.raises(ModelError, match="malformed"):
        HalphenModel.from_dict({"index": 1, "irr": []})
    with pytest.raises(ModelError, match="index must be at least 1"):
        HalphenModel.from_dict({"index": 0, "irr": [], "r_basis": [XI.to_list()]})


def test_coset_representative():
    """Test classes differing by R(X) share a representative."""
    model = root_model()
    assert model.coset_representative(E(1)) == model.coset_representative(E(2))
    assert model.coset_representative(E(1)) != model.coset_representative(E(3))


if __name__ == '__main__':
    pytest.main([__file__])
