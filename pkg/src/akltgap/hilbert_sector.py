"""Total-Sz sectors of the many-body space and matrix-free operator action.

A configuration assigns each site a local level in {0, 1, 2, 3} counting
lowering steps from m = +3/2, so site magnetization is m_i = 3/2 - level_i.
Configurations are packed two bits per site into one integer word (site i in
bits [2i, 2i+1]) and a sector collects all words with fixed twice-total-Sz

    two_m = 3 * n_sites - 2 * (sum of levels).

The Hamiltonian is a weighted sum of two-site bond projectors.  Because the
projector conserves the pair level sum exactly (its 16x16 matrix is block
diagonal in that quantum number, with exact zeros elsewhere), the matrix-free
apply never leaves the sector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .lattice import Patch
from .spin_algebra import BondProjector, projector_spin3_polynomial

__all__ = [
    "SectorBasis",
    "HamiltonianSpec",
    "enumerate_sector",
    "apply_hamiltonian",
    "apply_total_spin_squared",
    "expected_kernel_dimension",
    "make_sector_operator",
    "sector_dimension",
    "sector_dimension_table",
    "flip_words",
    "to_sparse",
    "to_dense",
]

_TABLE_MAX_SITES = 13  # direct lookup table of 4^n int32 entries up to here


@lru_cache(maxsize=4)
def _digit_sums(n: int) -> np.ndarray:
    """Level sums of all 4^n words, as int8 (n <= 13 keeps this <= 67M entries)."""
    size = 1 << (2 * n)
    ds = np.zeros(size, dtype=np.int8)
    block = np.arange(4, dtype=np.int8)
    for i in range(n):
        reps = 1 << (2 * i)
        ds += np.tile(np.repeat(block, reps), size // (4 * reps))
    return ds


@dataclass
class SectorBasis:
    """Ordered basis (ascending packed words) of one total-Sz sector."""

    patch: Patch
    two_m_total: int
    states: np.ndarray  # int64 words, ascending
    n_sites: int
    _table: np.ndarray | None = field(default=None, repr=False)
    _s2_diag: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return int(self.states.shape[0])

    def lookup_table(self) -> np.ndarray | None:
        """Direct word -> index table (int32, -1 elsewhere), or None if too large."""
        if self.n_sites > _TABLE_MAX_SITES:
            return None
        if self._table is None:
            table = np.full(1 << (2 * self.n_sites), -1, dtype=np.int32)
            table[self.states] = np.arange(self.dim, dtype=np.int32)
            self._table = table
        return self._table

    def index_of(self, word: int) -> int:
        i = int(np.searchsorted(self.states, word))
        if i >= self.dim or self.states[i] != word:
            raise KeyError(f"word {word} not in sector two_m={self.two_m_total}")
        return i

    def s2_diagonal(self) -> np.ndarray:
        """Diagonal of (sum_i S_i)^2 on this sector."""
        if self._s2_diag is None:
            n = self.n_sites
            m_tot = self.two_m_total / 2.0
            sum_m2 = np.zeros(self.dim, dtype=np.float64)
            for i in range(n):
                lev = (self.states >> (2 * i)) & 3
                m_i = 1.5 - lev.astype(np.float64)
                sum_m2 += m_i * m_i
            self._s2_diag = 3.75 * n + m_tot * m_tot - sum_m2
        return self._s2_diag

    def release_caches(self) -> None:
        self._table = None
        self._s2_diag = None


def enumerate_sector(patch: Patch, two_m: int) -> SectorBasis:
    """All configurations of the patch with twice-total-Sz equal to two_m."""
    n = patch.n_sites
    if n > 16:
        raise ValueError(f"sector enumeration supports at most 16 sites, got {n}")
    if abs(two_m) > 3 * n or (3 * n - two_m) % 2 != 0:
        states = np.empty(0, dtype=np.int64)
        return SectorBasis(patch=patch, two_m_total=two_m, states=states, n_sites=n)
    level_sum = (3 * n - two_m) // 2

    if n <= _TABLE_MAX_SITES:
        ds = _digit_sums(n)
        states = np.nonzero(ds == level_sum)[0].astype(np.int64)
    else:
        # meet in the middle: split sites into low and high halves
        n_lo = n // 2
        n_hi = n - n_lo
        ds_lo = _digit_sums(n_lo).astype(np.int16)
        ds_hi = _digit_sums(n_hi).astype(np.int16)
        lo_sorted = {}
        for s in range(3 * n_lo + 1):
            lo_sorted[s] = np.nonzero(ds_lo == s)[0].astype(np.int64)
        chunks = []
        for hi_word in range(1 << (2 * n_hi)):
            rem = level_sum - int(ds_hi[hi_word])
            if 0 <= rem <= 3 * n_lo and lo_sorted[rem].size:
                chunks.append((np.int64(hi_word) << (2 * n_lo)) | lo_sorted[rem])
        states = (
            np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
        )
    return SectorBasis(patch=patch, two_m_total=two_m, states=states, n_sites=n)


def _pair_transitions(projector: BondProjector):
    """Row-compressed nonzeros of the 16x16 bond matrix, pair-sum checked."""
    mat = projector.matrix
    ro = [0]
    cols: list[int] = []
    vals: list[float] = []
    for r in range(16):
        nz = np.nonzero(np.abs(mat[r]) > 1e-14)[0]
        for c in nz:
            if (r >> 2) + (r & 3) != (c >> 2) + (c & 3):
                raise AssertionError(
                    f"bond matrix entry ({r},{c}) breaks pair-sum conservation"
                )
        cols.extend(int(c) for c in nz)
        vals.extend(float(mat[r, c]) for c in nz)
        ro.append(len(cols))
    return (
        np.asarray(ro, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
    )


@dataclass
class HamiltonianSpec:
    """Weighted sum of bond projectors over the edges of a patch."""

    patch: Patch
    projector: BondProjector
    _pu: np.ndarray = field(init=False, repr=False)
    _pv: np.ndarray = field(init=False, repr=False)
    _w: np.ndarray = field(init=False, repr=False)
    _ro: np.ndarray = field(init=False, repr=False)
    _cols: np.ndarray = field(init=False, repr=False)
    _vals: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pos = {v: i for i, v in enumerate(self.patch.vertices)}
        self._pu = np.asarray([pos[u] for (u, v) in self.patch.edges], dtype=np.int64)
        self._pv = np.asarray([pos[v] for (u, v) in self.patch.edges], dtype=np.int64)
        self._w = np.asarray(
            [self.patch.edge_weights[e] for e in self.patch.edges], dtype=np.float64
        )
        self._ro, self._cols, self._vals = _pair_transitions(self.projector)

    @property
    def total_weight(self) -> float:
        return float(self._w.sum())


def make_hamiltonian(patch: Patch, projector: BondProjector | None = None) -> HamiltonianSpec:
    if projector is None:
        projector = projector_spin3_polynomial()
    return HamiltonianSpec(patch=patch, projector=projector)


def _check_dims(basis: SectorBasis, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != basis.dim:
        raise ValueError(f"vector length {v.shape[0]} != sector dimension {basis.dim}")
    return v


def apply_hamiltonian(h: HamiltonianSpec, basis: SectorBasis, v: np.ndarray) -> np.ndarray:
    """(sum_e w_e P_e) v, matrix-free.  Accepts (dim,) or (dim, k) arrays."""
    v = _check_dims(basis, v)
    out = np.empty_like(v)
    if v.size == 0:
        return out
    table = basis.lookup_table()
    if v.ndim == 1:
        if table is not None:
            _kernels.h_apply_table(
                basis.states, table, h._pu, h._pv, h._w,
                h._ro, h._cols, h._vals, v, out,
            )
        else:
            _kernels.h_apply_sorted(
                basis.states, h._pu, h._pv, h._w,
                h._ro, h._cols, h._vals, v, out,
            )
    elif v.ndim == 2:
        if table is None:
            raise NotImplementedError("block apply requires the lookup-table path")
        v = np.ascontiguousarray(v)
        _kernels.h_apply_table_block(
            basis.states, table, h._pu, h._pv, h._w,
            h._ro, h._cols, h._vals, v, out,
        )
    else:
        raise ValueError("expected a vector or a (dim, k) block")
    return out


_FREEZE_MIN_DIM = 50_000  # below this the on-the-fly kernels win on build cost


def make_sector_operator(h: HamiltonianSpec, basis: SectorBasis, cache: str = "auto"):
    """Callable v -> H v on one sector, optionally with a frozen gather pattern.

    The matrix-free kernels redo one lookup-table gather per matrix entry on
    every application.  For large sectors driven through thousands of solver
    iterations it pays to freeze the pattern once into value-indexed CSR
    arrays (int32 column plus int16 coefficient index, 6 bytes per entry);
    ``cache="auto"`` does so above a fixed dimension threshold, "always"
    forces it, "never" always stays matrix-free.  Frozen and matrix-free
    applications agree to rounding; the operator tests cover both routes.
    """
    if cache not in ("auto", "always", "never"):
        raise ValueError(f"unknown cache mode {cache!r}")
    table = basis.lookup_table()
    n_entries = h._pu.shape[0] * h._cols.shape[0]
    freeze = cache == "always" or (cache == "auto" and basis.dim >= _FREEZE_MIN_DIM)
    if table is None or basis.dim == 0 or not freeze or n_entries > 32767:

        def apply_direct(v: np.ndarray) -> np.ndarray:
            return apply_hamiltonian(h, basis, v)

        return apply_direct

    blocklen = (h._ro[1:] - h._ro[:-1]).astype(np.int64)
    counts = np.empty(basis.dim, dtype=np.int64)
    _kernels.h_count_row_nnz(basis.states, h._pu, h._pv, blocklen, counts)
    indptr = np.zeros(basis.dim + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    del counts
    nnz = int(indptr[-1])
    cols = np.empty(nnz, dtype=np.int32)
    vidx = np.empty(nnz, dtype=np.int16)
    _kernels.h_fill_csr(
        basis.states, table, h._pu, h._pv, h._ro, h._cols, indptr, cols, vidx
    )
    if nnz and int(cols.min()) < 0:
        raise AssertionError("sector closure violated: transition left the sector")
    vtab = np.ascontiguousarray((h._w[:, None] * h._vals[None, :]).ravel())
    dim = basis.dim

    def apply_frozen(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1:
            return apply_hamiltonian(h, basis, v)
        if v.shape[0] != dim:
            raise ValueError(f"vector length {v.shape[0]} != sector dimension {dim}")
        out = np.empty_like(v)
        _kernels.csr_vidx_matvec(indptr, cols, vidx, vtab, v, out)
        return out

    return apply_frozen


def apply_total_spin_squared(basis: SectorBasis, v: np.ndarray) -> np.ndarray:
    """(sum_i S_i)^2 v, matrix-free.  Accepts (dim,) or (dim, k) arrays."""
    v = _check_dims(basis, v)
    if v.size == 0:
        return np.empty_like(v)
    table = basis.lookup_table()
    out = np.empty_like(v)
    if v.ndim == 1:
        if table is not None:
            _kernels.s2_offdiag_table(basis.states, table, basis.n_sites, v, out)
        else:
            _kernels.s2_offdiag_sorted(basis.states, basis.n_sites, v, out)
        out += basis.s2_diagonal() * v
    elif v.ndim == 2:
        if table is None:
            raise NotImplementedError("block apply requires the lookup-table path")
        v = np.ascontiguousarray(v)
        _kernels.s2_offdiag_table_block(basis.states, table, basis.n_sites, v, out)
        out += basis.s2_diagonal()[:, None] * v
    else:
        raise ValueError("expected a vector or a (dim, k) block")
    return out


def expected_kernel_dimension(patch: Patch, two_m: int) -> int:
    """Count of pendant spin-1 label tuples over {-1, 0, +1} summing to two_m/2."""
    p = len(patch.pendant_vertices)
    if two_m % 2 != 0:
        return 0
    target = two_m // 2
    if abs(target) > p:
        return 0
    # counts[s + p] = number of length-k tuples with sum s
    counts = [0] * (2 * p + 1)
    counts[p] = 1
    for _ in range(p):
        nxt = [0] * (2 * p + 1)
        for s, c in enumerate(counts):
            if c:
                for d in (-1, 0, 1):
                    if 0 <= s + d <= 2 * p:
                        nxt[s + d] += c
        counts = nxt
    return counts[target + p]


def sector_dimension(n: int, two_m: int) -> int:
    """Exact sector dimension: coefficient extraction from (1+x+x^2+x^3)^n."""
    if abs(two_m) > 3 * n or (3 * n - two_m) % 2 != 0:
        return 0
    level_sum = (3 * n - two_m) // 2
    coeffs = [1]
    for _ in range(n):
        nxt = [0] * (len(coeffs) + 3)
        for s, c in enumerate(coeffs):
            for d in range(4):
                nxt[s + d] += c
        coeffs = nxt
    return coeffs[level_sum]


def sector_dimension_table(patch: Patch) -> list[tuple[int, int, int]]:
    """Rows (two_m, dimension, expected_kernel_dimension) for two_m = 3n .. -3n."""
    n = patch.n_sites
    rows = []
    for two_m in range(3 * n, -3 * n - 1, -2):
        rows.append(
            (two_m, sector_dimension(n, two_m), expected_kernel_dimension(patch, two_m))
        )
    return rows


def flip_words(words: np.ndarray, n_sites: int) -> np.ndarray:
    """Global spin flip: every level l -> 3 - l, i.e. complement all 2n bits."""
    mask = (np.int64(1) << (2 * n_sites)) - 1
    return (~words) & mask


def to_sparse(h: HamiltonianSpec, basis: SectorBasis, max_dim: int = 100_000):
    """CSR matrix of H restricted to the sector (vectorized construction)."""
    from scipy.sparse import coo_matrix

    if basis.dim > max_dim:
        raise ValueError(f"sector dimension {basis.dim} exceeds sparse cap {max_dim}")
    table = basis.lookup_table()
    if table is None:
        raise NotImplementedError("sparse build requires the lookup-table path")
    words = basis.states
    rows_all = []
    cols_all = []
    data_all = []
    idx = np.arange(basis.dim, dtype=np.int64)
    for e in range(h._pu.shape[0]):
        su = 2 * int(h._pu[e])
        sv = 2 * int(h._pv[e])
        lu = (words >> su) & 3
        lv = (words >> sv) & 3
        r = (lu << 2) | lv
        base = words & ~((np.int64(3) << su) | (np.int64(3) << sv))
        we = float(h._w[e])
        for rr in range(16):
            mask = r == rr
            if not mask.any():
                continue
            sel = idx[mask]
            b = base[mask]
            for k in range(int(h._ro[rr]), int(h._ro[rr + 1])):
                c = int(h._cols[k])
                y = b | (np.int64(c >> 2) << su) | (np.int64(c & 3) << sv)
                rows_all.append(sel)
                cols_all.append(table[y].astype(np.int64))
                data_all.append(np.full(sel.shape[0], we * float(h._vals[k])))
    if not rows_all:
        from scipy.sparse import csr_matrix

        return csr_matrix((basis.dim, basis.dim))
    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    data = np.concatenate(data_all)
    if (cols < 0).any():
        raise AssertionError("sector closure violated: transition left the sector")
    mat = coo_matrix((data, (rows, cols)), shape=(basis.dim, basis.dim))
    return mat.tocsr()


def to_dense(h: HamiltonianSpec, basis: SectorBasis, max_dim: int = 25_000) -> np.ndarray:
    """Dense matrix of H on the sector; independent LAPACK-oracle route."""
    if basis.dim > max_dim:
        raise ValueError(f"sector dimension {basis.dim} exceeds dense cap {max_dim}")
    return to_sparse(h, basis, max_dim=max_dim).toarray()
