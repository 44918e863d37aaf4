"""
Test suite for oscillating degree synthesis.
"""

import pytest
from itertools import permutations
from hypothesis import given, strategies as st
from src.cremona import ELLIPTIC, PlaneBirationalMap, compose, degree_sequence, invert
from src.oscillate import (
    JonquieresError,
    OscillationTarget,
    PointConfiguration,
    SamplingExhaustedError,
    build_jonquieres,
    check_jon_conditions,
    conjugate_power_degrees,
    decompose_overlaps,
    orbit_incidences,
    pick_linear_map,
    predicted_degrees,
    preserves_line_pencil,
    synthesize_oscillation,
)

PRIME = 1000003
DIAG = PlaneBirationalMap.linear([[2, 0, 0], [0, 3, 0], [0, 0, 1]])
SWAP = PlaneBirationalMap.linear([[0, 1, 0], [1, 0, 0], [0, 0, 1]])

targets = st.dictionaries(
    st.integers(min_value=1, max_value=8), st.integers(min_value=1, max_value=3), max_size=4
)


def test_target_validation():
    """Test gaps and weights must be positive."""
    with pytest.raises(ValueError, match="gap 0 must be a positive integer"):
        OscillationTarget({0: 1})
    with pytest.raises(ValueError, match="weight D\\(2\\) = 0 must be positive"):
        OscillationTarget({2: 0})


def test_target_accepts_string_keys():
    """Test JSON-style keys are converted."""
    target = OscillationTarget({"5": 1, "2": 2})
    assert target.support == {2: 2, 5: 1}
    assert target(2) == 2 and target(3) == 0
    assert target.block_count == 3
    assert target.max_gap == 5
    assert OscillationTarget.from_dict(target.to_dict()) == target


def test_decompose_overlaps_example():
    """Test D = {2: 2, 5: 1} splits into disjoint blocks."""
    decomposition = decompose_overlaps(OscillationTarget({2: 2, 5: 1}))
    assert decomposition.gaps == [2, 2, 5]
    elements = [v for a, s in decomposition.blocks for v in (a, a + s)]
    assert len(elements) == len(set(elements))
    assert [decomposition.overlap(n) for n in range(1, 7)] == [0, 2, 0, 0, 1, 0]


@given(targets)
def test_overlap_matches_target(support):
    """Test the overlap function reproduces D(n) for n >= 1."""
    target = OscillationTarget(support)
    decomposition = decompose_overlaps(target)
    assert len(decomposition.blocks) == target.block_count
    for n in range(1, 12):
        assert decomposition.overlap(n) == target(n)


def test_pick_linear_map():
    """Test the default linear map and seeded draws."""
    assert pick_linear_map(0) == DIAG
    drawn = pick_linear_map(3)
    assert drawn.degree == 1
    assert drawn == pick_linear_map(3)


def test_orbit_incidences_diagonal():
    """Test exact incidences for diag(2, 3, 1)."""
    table = orbit_incidences(DIAG, [(1, 1, 1), (2, 3, 1), (8, 27, 1)], 5)
    assert table.complete
    assert table.hits == {(0, 1): [1], (0, 2): [3], (1, 2): [2]}
    assert table.pairs_at(2) == [(1, 2)]
    assert table.delta(0, 2, 3) == 1 and table.delta(0, 2, 2) == 0


def test_orbit_incidences_fixed_point():
    """Test fixed points are rejected."""
    with pytest.raises(ValueError, match="fixed"):
        orbit_incidences(DIAG, [(1, 0, 0), (1, 1, 1)], 5)


def test_orbit_incidences_periodic():
    """Test a finite-order map is iterated and periodic points flagged."""
    points = [(1, 2, 1), (2, 1, 1)]
    table = orbit_incidences(SWAP, points, 4, require_infinite=False)
    assert not table.complete
    assert table.hits[(0, 1)] == [1, 3]
    assert table.hits[(0, 0)] == [2, 4]
    with pytest.raises(ValueError, match="periodic"):
        orbit_incidences(SWAP, points, 4)


def test_check_jon_conditions():
    """Test general position checks and their witnesses."""
    assert check_jon_conditions((1, 1, 1), [(1, 0, 0), (0, 1, 0)], 1)
    collinear = check_jon_conditions((1, 1, 1), [(1, 0, 0), (0, 1, 1)], 1)
    assert not collinear
    assert collinear.condition == "collinear"
    repeated = check_jon_conditions((1, 1, 1), [(2, 2, 2), (0, 1, 0)], 1)
    assert repeated.condition == "distinct"
    with pytest.raises(ValueError, match="expected 2 points"):
        check_jon_conditions((1, 1, 1), [(1, 0, 0)], 1)


def test_six_points_on_a_conic():
    """Test m = 3 rejects a conic through q0 and five simple points."""
    q0 = (-3, 4, 5)
    on_conic = [(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1), (3, 4, 5)]
    result = check_jon_conditions(q0, on_conic + [(2, 7, 1)], 3)
    assert not result
    assert result.condition == "degree-2 curve"


def test_build_quadratic_map():
    """Test m = 1 gives a quadratic map preserving the pencil through q0."""
    q0 = (0, 0, 1)
    points = [(1, 0, 0), (0, 1, 0)]
    g = build_jonquieres(q0, points)
    assert g.degree == 2
    assert invert(g, 2) is not None
    assert preserves_line_pencil(g, q0, points)


def test_build_cubic_jonquieres():
    """Test m = 2 gives a cubic with the line pencil preserved."""
    q0 = (1, 1, 1)
    points = [(2, 5, 1), (8, 45, 1), (3, 7, 1), (6, 63, 1)]
    g = build_jonquieres(q0, points)
    assert g.degree == 3
    assert preserves_line_pencil(g, q0, points)


def test_build_jonquieres_rejects_bad_input():
    """Test odd point counts and collinear points."""
    with pytest.raises(ValueError, match="even"):
        build_jonquieres((1, 1, 1), [(1, 0, 0)])
    with pytest.raises(JonquieresError, match="collinear"):
        build_jonquieres((1, 1, 1), [(1, 0, 0), (0, 1, 1)])


@pytest.mark.parametrize("modp", [None, PRIME])
def test_predicted_matches_composition(modp):
    """Test the incidence formula against g o A^n o g^-1 for one pair."""
    config = PointConfiguration.from_seeds(DIAG, (1, 1, 1), [(2, 5, 1)], [2], 5)
    assert config.derived_points == [(2, 5, 1), (8, 45, 1)]
    assert config.designed_hits() == {(1, 2): [2]}
    assert predicted_degrees(config, 5) == [4, 3, 4, 4, 4]
    g = build_jonquieres(config.q0, config.derived_points)
    g_inv = invert(g, 2)
    assert conjugate_power_degrees(g, DIAG, g_inv, 5, modp) == [4, 3, 4, 4, 4]


@pytest.mark.parametrize("order", list(permutations(range(3))))
def test_net_basis_permutation_keeps_degrees(order):
    """Test reordering the components of g leaves deg(g o A^n o g^-1) unchanged."""
    config = PointConfiguration.from_seeds(DIAG, (1, 1, 1), [(2, 5, 1)], [2], 5)
    g = build_jonquieres(config.q0, config.derived_points)
    P = PlaneBirationalMap.linear([[int(i == j) for j in range(3)] for i in order])
    permuted, permuted_inv = compose(P, g), compose(invert(g, 2), invert(P, 1))
    assert conjugate_power_degrees(permuted, DIAG, permuted_inv, 5, PRIME) == [4, 3, 4, 4, 4]


@pytest.mark.slow
@pytest.mark.parametrize("rows", [[[1, 1, 0], [0, 1, 0], [0, 0, 1]], [[2, 0, 1], [1, -1, 0], [0, 3, 1]]])
def test_linear_conjugate_stays_elliptic(rows):
    """Test B o h o B^-1 is elliptic with the same eventual degree as h."""
    h = synthesize_oscillation(OscillationTarget({2: 1}), seed=17).map
    B = PlaneBirationalMap.linear(rows)
    conjugate = compose(B, compose(h, invert(B, 1)))
    reports = [degree_sequence(f, 6, PRIME) for f in (h, conjugate)]
    assert all(report.classification.label == ELLIPTIC for report in reports)
    assert reports[0].degrees[-1] == reports[1].degrees[-1] == 4


def test_synthesize_single_gap():
    """Test D = {2: 1} gives d = 4 with a dip at n = 2."""
    result = synthesize_oscillation(OscillationTarget({2: 1}), seed=17)
    assert result.d == 4
    assert result.verified
    assert result.horizon == 9
    assert result.degrees == [4, 3] + [4] * 7
    assert result.map.degree == 4
    assert result.conjugate_degrees == result.degrees
    report = result.to_dict()
    assert report["verified"] is True
    assert report["horizon_limited"] is False
    assert PlaneBirationalMap.from_dict(report["map"]) == result.map


def test_synthesize_is_deterministic():
    """Test the same seed yields the same map."""
    first = synthesize_oscillation(OscillationTarget({2: 1}), seed=5)
    second = synthesize_oscillation(OscillationTarget({2: 1}), seed=5)
    assert first.map == second.map
    assert first.tries == second.tries


def test_synthesize_empty_target():
    """Test an empty D returns the linear map itself."""
    result = synthesize_oscillation(OscillationTarget({}))
    assert result.d == 1
    assert result.map == DIAG
    assert result.verified


def test_synthesize_rejects_unknown_mode():
    """Test the verification mode is validated."""
    with pytest.raises(ValueError, match="unknown verification mode"):
        synthesize_oscillation(OscillationTarget({2: 1}), verify="guess")


def test_sampling_exhausted():
    """Test a finite-order linear map never yields a configuration."""
    involution = PlaneBirationalMap.linear([[-1, 0, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(SamplingExhaustedError) as info:
        synthesize_oscillation(OscillationTarget({2: 1}), max_tries=3, linear_map=involution)
    assert sum(info.value.failures.values()) == 3


@pytest.mark.slow
def test_synthesize_two_gaps():
    """Test D = {1: 1, 3: 1} gives d = 9."""
    target = OscillationTarget({1: 1, 3: 1})
    result = synthesize_oscillation(target, seed=17)
    assert result.d == 9
    assert result.verified
    assert result.degrees == [9 - target(n) for n in range(1, 12)]


@pytest.mark.slow
def test_synthesize_weighted_gaps():
    """Test D = {2: 2, 5: 1} gives d = 16 up to n = 15."""
    target = OscillationTarget({2: 2, 5: 1})
    result = synthesize_oscillation(target, seed=17)
    assert result.d == 16
    assert result.horizon == 15
    assert result.verified


@pytest.mark.slow
def test_iterate_mode_agrees():
    """Test degree_sequence of h agrees with the prediction."""
    result = synthesize_oscillation(OscillationTarget({2: 1}), seed=17, verify="iterate")
    assert result.verified
    assert result.conjugate_degrees is None
    assert degree_sequence(result.map, 6, PRIME).degrees[1:] == result.predicted[:6]


@pytest.mark.slow
def test_iterate_mode_two_gaps():
    """Test degree_sequence of h realizes D = {1: 1, 3: 1} without the conjugate cross-check."""
    target = OscillationTarget({1: 1, 3: 1})
    result = synthesize_oscillation(target, seed=17, verify="iterate")
    assert result.verified
    assert result.map.degree == 8
    assert result.degrees == [9 - target(n) for n in range(1, 12)]


def test_mismatch_is_reported_not_retried(monkeypatch):
    """Test a prediction that disagrees with composition yields an unverified result."""
    monkeypatch.setattr(
        "src.oscillate.predicted_degrees", lambda config, n_max, table=None: [4] * n_max
    )
    result = synthesize_oscillation(OscillationTarget({2: 1}), seed=17)
    assert not result.verified
    assert sum(result.failures.values()) == result.tries - 1
    assert result.degrees == [4, 3] + [4] * 7
    assert result.to_dict()["verified"] is False


if __name__ == '__main__':
    pytest.main([__file__])
