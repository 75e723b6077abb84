import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akltgap.hilbert_sector import (
    apply_hamiltonian,
    apply_total_spin_squared,
    enumerate_sector,
    expected_kernel_dimension,
    flip_words,
    make_hamiltonian,
    make_sector_operator,
    sector_dimension,
    sector_dimension_table,
    to_dense,
    to_sparse,
)
from akltgap.lattice import Patch
from akltgap.spin_algebra import projector_spin3_polynomial

from oracles import (
    canon_edges,
    full_hamiltonian,
    full_total_spin_squared,
    make_star,
    restrict_full,
)


def make_edge_patch() -> Patch:
    edges = canon_edges([(0, 1)])
    return Patch(
        vertices=(0, 1),
        edges=edges,
        edge_weights={edges[0]: 1.0},
        pendant_vertices=(0, 1),
        kind="custom",
    )


def test_sector_dimensions_sum():
    for n in (1, 2, 3, 6):
        total = sum(sector_dimension(n, tm) for tm in range(-3 * n, 3 * n + 1))
        assert total == 4**n


def test_sector_dimension_parity():
    assert sector_dimension(2, 5) == 0
    assert sector_dimension(2, 6) == 1
    assert sector_dimension(2, -6) == 1
    assert sector_dimension(3, 40) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=5))
def test_enumeration_matches_dimension(n):
    edges = canon_edges((i, i + 1) for i in range(n - 1)) if n > 1 else ()
    patch = Patch(
        vertices=tuple(range(n)),
        edges=edges,
        edge_weights={e: 1.0 for e in edges},
        pendant_vertices=(),
        kind="custom",
    )
    for tm in range(-3 * n, 3 * n + 1, 2):
        if (3 * n - tm) % 2 != 0:
            continue
        basis = enumerate_sector(patch, tm)
        assert basis.dim == sector_dimension(n, tm)
        words = np.asarray(basis.states)
        assert np.all(np.diff(words) > 0)
        # every word's digit sum reproduces the sector label
        for w in words[:: max(1, len(words) // 7)]:
            levels = [(int(w) >> (2 * i)) & 3 for i in range(n)]
            assert 3 * n - 2 * sum(levels) == tm


def test_flip_words_bijection(star):
    n = star.n_sites
    for tm in (0, 2, 4):
        up = enumerate_sector(star, tm).states
        dn = enumerate_sector(star, -tm).states
        flipped = np.sort(flip_words(np.asarray(up), n))
        assert np.array_equal(flipped, np.asarray(dn))


def test_edge_patch_dense_vs_full_oracle():
    patch = make_edge_patch()
    h = make_hamiltonian(patch)
    bond = projector_spin3_polynomial().matrix
    full = full_hamiltonian(patch, bond)
    for tm in range(-6, 7, 2):
        basis = enumerate_sector(patch, tm)
        dense = to_dense(h, basis)
        ref = restrict_full(full, basis.states, 2)
        assert np.abs(dense - ref).max() <= 1e-13


def test_star_matvec_vs_full_oracle(star):
    h = make_hamiltonian(star)
    bond = projector_spin3_polynomial().matrix
    full = full_hamiltonian(star, bond)
    rng = np.random.default_rng(3)
    for tm in (0, 2, 6):
        basis = enumerate_sector(star, tm)
        ref = restrict_full(full, basis.states, star.n_sites)
        x = rng.standard_normal(basis.dim)
        assert np.abs(apply_hamiltonian(h, basis, x) - ref @ x).max() <= 1e-12
        block = rng.standard_normal((3, basis.dim))
        got = np.vstack([apply_hamiltonian(h, basis, row) for row in block])
        assert np.abs(got - block @ ref.T).max() <= 1e-12


def test_frozen_operator_matches_matrix_free(star):
    # the frozen gather pattern must agree with the on-the-fly kernels on
    # every sector, weighted edges included
    star_w = Patch(
        vertices=star.vertices,
        edges=star.edges,
        edge_weights={e: 1.2 for e in star.edges},
        pendant_vertices=star.pendant_vertices,
        kind=star.kind,
    )
    rng = np.random.default_rng(11)
    for patch in (star, star_w):
        h = make_hamiltonian(patch)
        for tm in (0, 2, 5, 12):
            basis = enumerate_sector(patch, tm)
            if basis.dim == 0:
                continue
            frozen = make_sector_operator(h, basis, cache="always")
            x = rng.standard_normal(basis.dim)
            ref = apply_hamiltonian(h, basis, x)
            assert np.abs(frozen(x) - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max())


def test_frozen_operator_auto_threshold(star):
    h = make_hamiltonian(star)
    basis = enumerate_sector(star, 0)
    # tiny sector under "auto" stays matrix-free: same function object behavior,
    # results must agree regardless
    auto_op = make_sector_operator(h, basis)
    forced = make_sector_operator(h, basis, cache="always")
    rng = np.random.default_rng(12)
    x = rng.standard_normal(basis.dim)
    assert np.abs(auto_op(x) - forced(x)).max() <= 1e-12
    with pytest.raises(ValueError, match="cache mode"):
        make_sector_operator(h, basis, cache="sometimes")
    with pytest.raises(ValueError, match="sector dimension"):
        forced(np.zeros(basis.dim + 1))


def test_star_total_spin_vs_full_oracle(star):
    full = full_total_spin_squared(star.n_sites)
    rng = np.random.default_rng(4)
    for tm in (0, 4):
        basis = enumerate_sector(star, tm)
        ref = restrict_full(full, basis.states, star.n_sites)
        x = rng.standard_normal(basis.dim)
        assert np.abs(apply_total_spin_squared(basis, x) - ref @ x).max() <= 1e-12


def test_hermiticity_on_random_vectors(star):
    h = make_hamiltonian(star)
    basis = enumerate_sector(star, 2)
    rng = np.random.default_rng(5)
    for _ in range(5):
        x = rng.standard_normal(basis.dim)
        y = rng.standard_normal(basis.dim)
        assert x @ apply_hamiltonian(h, basis, y) == pytest.approx(
            y @ apply_hamiltonian(h, basis, x), abs=1e-10
        )


def test_flip_spectrum_symmetry(star):
    h = make_hamiltonian(star)
    for tm in (2, 4):
        e_up = np.linalg.eigvalsh(to_dense(h, enumerate_sector(star, tm)))
        e_dn = np.linalg.eigvalsh(to_dense(h, enumerate_sector(star, -tm)))
        assert np.abs(e_up - e_dn).max() <= 1e-12


def test_sparse_matches_dense(star):
    h = make_hamiltonian(star)
    basis = enumerate_sector(star, 4)
    sp = to_sparse(h, basis)
    dn = to_dense(h, basis)
    assert np.abs(sp.toarray() - dn).max() <= 1e-13


def test_dense_guard():
    # refuse to materialize beyond the stated cap
    patch = make_star()
    h = make_hamiltonian(patch)
    basis = enumerate_sector(patch, 0)
    with pytest.raises(ValueError):
        to_dense(h, basis, max_dim=3)


def test_expected_kernel_dimension_star(star):
    # three pendant spin-1 labels: counts of triples summing to two_m/2
    assert expected_kernel_dimension(star, 0) == 7
    assert expected_kernel_dimension(star, 2) == 6
    assert expected_kernel_dimension(star, 4) == 3
    assert expected_kernel_dimension(star, 6) == 1
    assert expected_kernel_dimension(star, 8) == 0
    assert expected_kernel_dimension(star, 1) == 0


def test_sector_dimension_table(patch12):
    rows = sector_dimension_table(patch12)
    assert rows[0] == (36, 1, 0)
    total = sum(d for (_, d, _) in rows)
    assert total == 4**12
    by_tm = {tm: (d, k) for (tm, d, k) in rows}
    assert by_tm[0][0] == 1703636
    assert by_tm[0][1] == 141
    assert by_tm[12][1] == 1
    assert by_tm[14][1] == 0


def test_s2_diagonal_matches_operator(star):
    basis = enumerate_sector(star, 2)
    diag = basis.s2_diagonal()
    n = basis.dim
    for k in range(0, n, max(1, n // 9)):
        e = np.zeros(n)
        e[k] = 1.0
        assert diag[k] == pytest.approx(
            float(e @ apply_total_spin_squared(basis, e)), abs=1e-12
        )


def test_lookup_and_index_roundtrip(star):
    basis = enumerate_sector(star, 0)
    words = np.asarray(basis.states)
    for k in range(0, basis.dim, max(1, basis.dim // 11)):
        assert basis.index_of(int(words[k])) == k
