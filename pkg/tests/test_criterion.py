from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akltgap.criterion import (
    CoverCountError,
    evaluate_criterion,
    optimize_weight,
    prefactor,
    threshold,
    verify_cover_counts,
)
from akltgap.lattice import build_torus


def rational_threshold(a: Fraction) -> Fraction:
    return (a * a - 2 * a + 3) / (10 + 4 * a)


def rational_prefactor(a: Fraction) -> Fraction:
    return (10 + 4 * a) / (3 * a * a + 2 * a + 7)


def test_reference_point_exact():
    r = evaluate_criterion(1.4, 0.145)
    assert r.threshold == pytest.approx(0.13846153846153847, abs=1e-12)
    assert r.prefactor == pytest.approx(0.9948979591836735, abs=1e-12)
    assert r.bound == pytest.approx(0.006505102040816309, abs=1e-12)
    assert r.certified


def test_unit_weight_threshold():
    assert threshold(1.0) == pytest.approx(1.0 / 7.0, abs=1e-15)


def test_bound_composition():
    r = evaluate_criterion(1.4, 0.145)
    assert r.bound == pytest.approx(r.prefactor * (0.145 - r.threshold), abs=1e-15)


def test_not_certified_below_threshold():
    r = evaluate_criterion(1.4, 0.13)
    assert not r.certified
    assert r.bound < 0


def test_weight_domain_rejected():
    with pytest.raises(ValueError):
        evaluate_criterion(0.9, 0.145)
    with pytest.raises(ValueError):
        evaluate_criterion(1.4, 0.0)


def test_optimize_weight_grid():
    grid = [1.0, 1.2, 1.4, 1.6]
    a_star, best = optimize_weight(lambda a: 0.145, grid)
    assert a_star == 1.2
    # the winning weight maximizes the bound over the grid, exactly in rationals
    bounds = {
        a: rational_prefactor(Fraction(a).limit_denominator(10))
        * (Fraction(145, 1000) - rational_threshold(Fraction(a).limit_denominator(10)))
        for a in grid
    }
    assert max(bounds, key=bounds.get) == 1.2
    assert best.bound == pytest.approx(float(bounds[1.2]), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.fractions(min_value=1, max_value=4))
def test_rational_routes_match_floats(a):
    t = threshold(float(a))
    c = prefactor(float(a))
    assert t == pytest.approx(float(rational_threshold(a)), abs=1e-12)
    assert c == pytest.approx(float(rational_prefactor(a)), abs=1e-12)
    assert t > 0
    assert c > 0


@settings(max_examples=40, deadline=None)
@given(
    st.floats(min_value=1.0, max_value=3.0, allow_nan=False),
    st.floats(min_value=1e-6, max_value=1.0, allow_nan=False),
)
def test_certification_sign(a, gamma):
    r = evaluate_criterion(a, gamma)
    assert r.certified == (gamma > r.threshold and r.bound > 0)


@pytest.mark.slow
def test_cover_counts_12x12():
    counts = verify_cover_counts(build_torus(12, 12), 1.4)
    assert counts.edge_unweighted == 10
    assert counts.edge_weighted == 4
    assert (
        counts.pair_both_unweighted,
        counts.pair_one_weighted,
        counts.pair_both_weighted,
    ) == (7, 2, 3)
    # the three polynomial identities behind the criterion, evaluated at a=1.4
    assert counts.sum_coefficient(1.4) == pytest.approx(10 + 4 * 1.4, abs=1e-12)
    assert counts.h_coefficient(1.4) == pytest.approx(10 + 4 * 1.4**2, abs=1e-12)
    assert counts.q_coefficient(1.4) == pytest.approx(
        7 + 2 * 1.4 + 3 * 1.4**2, abs=1e-12
    )
    assert counts.per_patch_adjacent_pairs == 72
    assert counts.disjoint_pair_max_count <= 12
    assert counts.disjoint_pair_max_weighted <= 3 * 1.4**2 + 2 * 1.4 + 7


@pytest.mark.slow
def test_cover_counts_12x13():
    # non-square torus, same local combinatorics
    counts = verify_cover_counts(build_torus(12, 13), 1.4)
    assert counts.edge_unweighted == 10
    assert counts.edge_weighted == 4
    assert counts.pair_total == 12


def test_cover_counts_reject_small_torus():
    with pytest.raises((CoverCountError, ValueError)):
        verify_cover_counts(build_torus(2, 2), 1.4)
