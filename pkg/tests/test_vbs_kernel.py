import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akltgap.hilbert_sector import (
    enumerate_sector,
    expected_kernel_dimension,
    make_hamiltonian,
)
from akltgap.vbs_kernel import (
    boundary_multiplicities,
    build_vbs_state,
    kernel_basis,
    kernel_residuals,
)

from oracles import full_index, make_ring6


def brute_force_star_vbs(labels: tuple[int, int, int]) -> np.ndarray:
    """Star VBS amplitudes in the full 4^4 space, from raw tensor contractions.

    Bit 1 on a virtual leg means one lowering step. The physical level index
    counts down-bits, matching the descending-m basis. Singlets orient from
    the smaller vertex id (the hub) to the larger.
    """
    sym = np.zeros((4, 2, 2, 2))
    for bits in itertools.product((0, 1), repeat=3):
        k = sum(bits)
        sym[(k, *bits)] = 1.0 / np.sqrt(
            [1, 3, 3, 1][k]
        )
    singlet = np.zeros((2, 2))
    singlet[0, 1] = 1.0 / np.sqrt(2)
    singlet[1, 0] = -1.0 / np.sqrt(2)
    triplet = np.zeros((3, 2, 2))
    triplet[0, 0, 0] = 1.0
    triplet[1, 0, 1] = triplet[1, 1, 0] = 1.0 / np.sqrt(2)
    triplet[2, 1, 1] = 1.0
    pendant = [np.einsum("idgh,gh->id", sym, triplet[1 - m]) for m in labels]
    psi = np.einsum(
        "wabc,ad,be,cf,xd,ye,zf->wxyz",
        sym,
        singlet,
        singlet,
        singlet,
        pendant[0],
        pendant[1],
        pendant[2],
    )
    return psi.reshape(-1)


def test_multiplicities_12_pendants():
    mt = boundary_multiplicities(12)
    expected = [4213, 11298, 15026, 14938, 12078, 8162, 4642, 2211, 869, 274, 66, 11, 1]
    assert [mt.multiplicity(j) for j in range(13)] == expected
    assert mt.total_states() == 3**12


def test_multiplicities_6_pendants():
    mt = boundary_multiplicities(6)
    assert [mt.multiplicity(j) for j in range(7)] == [15, 36, 40, 29, 15, 5, 1]
    assert mt.total_states() == 729


def test_multiplicities_empty_boundary():
    mt = boundary_multiplicities(0)
    assert mt.multiplicity(0) == 1
    assert mt.total_states() == 1


@settings(max_examples=13, deadline=None)
@given(st.integers(min_value=0, max_value=12))
def test_multiplicity_sum_rule(n):
    mt = boundary_multiplicities(n)
    assert sum((2 * j + 1) * mt.multiplicity(j) for j in range(n + 1)) == 3**n
    if n:
        assert mt.multiplicity(n) == 1


def test_sector_kernel_dim_identity(patch12):
    # two independent routes to the same numbers: J-multiplicity recursion
    # versus direct counting of pendant label tuples
    mt = boundary_multiplicities(6)
    for two_m in range(0, 14, 2):
        assert mt.sector_kernel_dim(two_m) == expected_kernel_dimension(
            patch12, two_m
        )
    assert [mt.sector_kernel_dim(tm) for tm in range(0, 13, 2)] == [
        141, 126, 90, 50, 21, 6, 1,
    ]


def test_star_vbs_matches_brute_force(star):
    n = star.n_sites
    for labels in itertools.product((1, 0, -1), repeat=3):
        state = build_vbs_state(star, dict(zip((1, 2, 3), labels)))
        ref = brute_force_star_vbs(labels)
        ref = ref / np.linalg.norm(ref)
        basis = enumerate_sector(star, state.two_m)
        got = np.zeros(4**n)
        idx = [full_index(int(w), n) for w in basis.states]
        got[idx] = state.vector
        assert np.abs(got - ref).max() <= 1e-12, labels


def test_star_vbs_annihilated(star):
    h = make_hamiltonian(star)
    for labels in itertools.product((1, 0, -1), repeat=3):
        state = build_vbs_state(star, dict(zip((1, 2, 3), labels)))
        basis = enumerate_sector(star, state.two_m)
        res = kernel_residuals(h, basis, state.vector[None, :])
        assert float(res.max()) <= 1e-12


def test_star_kernel_basis_counts(star):
    h = make_hamiltonian(star)
    for tm, expected in ((0, 7), (2, 6), (4, 3), (6, 1)):
        kb = kernel_basis(star, tm)
        assert len(kb) == expected
        gram = kb.vectors @ kb.vectors.T
        assert np.abs(gram - np.eye(expected)).max() <= 1e-12
        basis = enumerate_sector(star, tm)
        assert float(kernel_residuals(h, basis, kb.vectors).max()) <= 1e-10
        assert kb.gram_condition >= 1.0


def test_individual_states_span_basis(star):
    # every single VBS state lies exactly in the span of the orthonormal rows
    kb = kernel_basis(star, 2)
    for labels in itertools.product((1, 0, -1), repeat=3):
        if sum(labels) != 1:
            continue
        state = build_vbs_state(star, dict(zip((1, 2, 3), labels)))
        coeffs = kb.vectors @ state.vector
        assert np.linalg.norm(coeffs) == pytest.approx(1.0, abs=1e-10)


def test_no_pendant_patch_rejected():
    ring = make_ring6()
    with pytest.raises(ValueError):
        kernel_basis(ring, 0)


def test_label_validation(star):
    with pytest.raises((ValueError, KeyError)):
        build_vbs_state(star, {1: 1, 2: 0})  # missing pendant 3
    with pytest.raises((ValueError, KeyError)):
        build_vbs_state(star, {1: 2, 2: 0, 3: 0})  # label out of range
    with pytest.raises((ValueError, KeyError)):
        build_vbs_state(star, {0: 1, 1: 1, 2: 0, 3: 0})  # hub is not a pendant


def test_raw_norms_positive(star):
    kb = kernel_basis(star, 0)
    assert kb.raw_norms is not None
    assert np.all(np.asarray(kb.raw_norms) > 0)
