"""Valence-bond ground states and exact kernel bases for pendant patches.

Each spin-3/2 site is represented as three symmetrized auxiliary qubits.
Every edge carries a singlet across its two endpoint qubits; at a degree-1
(pendant) site the two unpaired qubits form a free spin-1 whose Sz label is
a boundary degree of freedom.  Amplitudes in the packed-word basis are
produced by a site-elimination sweep: sites are contracted one at a time,
carrying a vector over the currently open bond indices, so the cost per
configuration is exponential only in the peak number of open bonds.

The sweep kernel evaluates all boundary-label columns of one sector in a
single pass over the basis, which is what makes building the full kernel
basis (hundreds of states on million-dimensional sectors) affordable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np

from . import _kernels
from .hilbert_sector import (
    HamiltonianSpec,
    SectorBasis,
    apply_hamiltonian,
    enumerate_sector,
    expected_kernel_dimension,
)
from .lattice import Edge, Patch

__all__ = [
    "VbsState",
    "KernelBasis",
    "MultiplicityTable",
    "build_vbs_state",
    "kernel_basis",
    "kernel_residuals",
    "boundary_multiplicities",
]

# triplet wavefunctions of the free qubit pair, index 0,1,2 <-> m = +1,0,-1
_TRIPLET = np.array(
    [
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 1.0 / sqrt(2.0)], [1.0 / sqrt(2.0), 0.0]],
        [[0.0, 0.0], [0.0, 1.0]],
    ]
)

# singlet across an edge, first axis = smaller vertex id endpoint
_SINGLET = np.array([[0.0, 1.0 / sqrt(2.0)], [-1.0 / sqrt(2.0), 0.0]])


def _symmetrizer() -> np.ndarray:
    """<b1 b2 b3 | level>: equal-weight symmetric combination per qubit count."""
    sym = np.zeros((4, 2, 2, 2))
    for b1 in range(2):
        for b2 in range(2):
            for b3 in range(2):
                k = b1 + b2 + b3
                sym[k, b1, b2, b3] = 1.0 / sqrt(comb(3, k))
    return sym


_SYM = _symmetrizer()


@dataclass(frozen=True)
class VbsState:
    patch: Patch
    boundary_labels: dict[int, int]
    two_m: int
    vector: np.ndarray = field(repr=False)
    raw_norm: float

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass
class KernelBasis:
    two_m: int
    labels: list[tuple[int, ...]]
    vectors: np.ndarray = field(repr=False)  # orthonormal rows, shape (k, dim)
    gram_condition: float = 1.0
    raw_norms: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class MultiplicityTable:
    n_pendants: int
    multiplicities: dict[int, int]

    def multiplicity(self, j: int) -> int:
        return self.multiplicities.get(j, 0)

    def total_states(self) -> int:
        return sum((2 * j + 1) * m for j, m in self.multiplicities.items())

    def sector_kernel_dim(self, two_m: int) -> int:
        """States with Sz = two_m/2: one per multiplet with J >= |m|."""
        if two_m % 2:
            return 0
        m_abs = abs(two_m) // 2
        return sum(mult for j, mult in self.multiplicities.items() if j >= m_abs)


def boundary_multiplicities(n_pendants: int) -> MultiplicityTable:
    """Exact total-spin content of n free spin-1 boundary labels."""
    if n_pendants < 0:
        raise ValueError("pendant count must be nonnegative")
    cur = {0: 1}
    for _ in range(n_pendants):
        nxt: dict[int, int] = {}
        for j, m in cur.items():
            lo = abs(j - 1)
            for jn in range(lo, j + 2):
                nxt[jn] = nxt.get(jn, 0) + m
        cur = {j: m for j, m in nxt.items() if m}
    table = MultiplicityTable(n_pendants=n_pendants, multiplicities=dict(sorted(cur.items())))
    assert table.total_states() == 3**n_pendants
    return table


def _incident(patch: Patch, u: int) -> list[Edge]:
    return [e for e in patch.edges if u in e]


def _elimination_order(patch: Patch, max_open_bonds: int) -> tuple[list[int], int]:
    """Greedy site order minimizing the open-bond frontier, ties to smaller id."""
    remaining = set(patch.vertices)
    boundary: set[Edge] = set()
    order: list[int] = []
    peak = 0
    while remaining:
        best_u = -1
        best_size = None
        for u in sorted(remaining):
            inc = _incident(patch, u)
            closing = sum(1 for e in inc if e in boundary)
            size = len(boundary) - closing + (len(inc) - closing)
            if best_size is None or size < best_size:
                best_size = size
                best_u = u
        u = best_u
        for e in _incident(patch, u):
            if e in boundary:
                boundary.discard(e)
            else:
                boundary.add(e)
        order.append(u)
        remaining.discard(u)
        peak = max(peak, len(boundary))
    if peak > max_open_bonds:
        raise ValueError(
            f"elimination frontier needs {peak} open bonds, over the "
            f"max_open_bonds={max_open_bonds} budget"
        )
    return order, peak


@dataclass(frozen=True)
class _Sweep:
    site_pos: np.ndarray
    labmul: np.ndarray
    olddim: np.ndarray
    newdim: np.ndarray
    moff: np.ndarray
    mats: np.ndarray
    maxwork: int
    n_labels: int
    pendant_order: list[int]


def _site_tensor(
    patch: Patch, u: int, legs: list[Edge], batch: bool, label_midx: int | None
) -> np.ndarray:
    """Axes [level, leg_0, .., leg_{d-1}] plus a trailing label axis if batch."""
    deg = len(legs)
    if deg == 3:
        t = _SYM
        if batch:
            t = t[..., None]
        return t
    if deg == 1:
        pend = np.einsum("kbcd,mcd->kbm", _SYM, _TRIPLET)
        if batch:
            return pend  # label axis last
        if label_midx is None:
            raise ValueError(f"pendant site {u} needs a boundary label")
        return pend[:, :, label_midx]
    raise ValueError(
        f"site {u} has degree {deg}; only degree-3 interior sites and "
        "degree-1 pendants carry a valence-bond tensor"
    )


def _compile_sweep(
    patch: Patch,
    labels: dict[int, int] | None,
    max_open_bonds: int = 12,
    max_labels: int = 3**8,
) -> _Sweep:
    """Translate a patch into flat per-site contraction steps.

    ``labels=None`` compiles the batch sweep carrying all 3^p boundary-label
    columns at once; otherwise each pendant tensor is sliced at its fixed
    label.  Label digits accumulate least-significant-last in elimination
    order (first pendant processed owns the most significant base-3 digit).
    """
    order, _ = _elimination_order(patch, max_open_bonds)
    batch = labels is None
    pos = {v: i for i, v in enumerate(sorted(patch.vertices))}

    boundary: list[Edge] = []
    site_pos: list[int] = []
    labmul: list[int] = []
    olddim: list[int] = []
    newdim: list[int] = []
    moff: list[int] = []
    blocks: list[np.ndarray] = []
    pendant_order: list[int] = []
    off = 0
    labs = 1
    maxwork = 1

    for u in order:
        legs = _incident(patch, u)
        closing = [e for e in legs if e in boundary]
        opening = [e for e in legs if e not in boundary]
        is_pendant = len(legs) == 1
        lm = 3 if (batch and is_pendant) else 1
        if is_pendant:
            pendant_order.append(u)
        midx = None
        if not batch and is_pendant:
            m = labels[u]
            midx = 1 - m
        t = _site_tensor(patch, u, legs, batch and is_pendant, midx)

        # fold a singlet onto every opening leg; orientation follows vertex ids
        for li, e in enumerate(legs):
            if e in opening:
                other = e[0] if e[1] == u else e[1]
                mat = _SINGLET if u < other else _SINGLET.T
                ax = 1 + li
                t = np.moveaxis(np.tensordot(t, mat, axes=([ax], [0])), -1, ax)

        old_list = list(boundary)
        new_list = [e for e in boundary if e not in set(closing)] + opening
        n_old, n_new = len(old_list), len(new_list)
        old_pos = {e: i for i, e in enumerate(old_list)}
        new_pos = {e: i for i, e in enumerate(new_list)}
        od, nd = 1 << n_old, 1 << n_new

        pass_pairs = [
            (old_pos[e], new_pos[e]) for e in old_list if e not in set(closing)
        ]
        leg_src = [
            ("o", old_pos[e]) if e in set(closing) else ("n", new_pos[e])
            for e in legs
        ]

        block = np.zeros((4, od, nd, lm))
        for oi in range(od):
            for ni in range(nd):
                if any((oi >> a) & 1 != (ni >> b) & 1 for a, b in pass_pairs):
                    continue
                bits = tuple(
                    (oi >> p) & 1 if s == "o" else (ni >> p) & 1
                    for s, p in leg_src
                )
                val = t[(slice(None), *bits)]
                block[:, oi, ni, :] = np.asarray(val).reshape(4, lm)

        site_pos.append(pos[u])
        labmul.append(lm)
        olddim.append(od)
        newdim.append(nd)
        moff.append(off)
        blocks.append(block.reshape(-1))
        off += block.size

        maxwork = max(maxwork, labs * od)
        labs *= lm
        maxwork = max(maxwork, labs * nd)
        if labs > max_labels:
            raise ValueError(
                f"label space grew to {labs}, over the max_labels={max_labels} budget"
            )
        boundary = new_list

    assert not boundary, "elimination left open bonds"
    return _Sweep(
        site_pos=np.asarray(site_pos, dtype=np.int64),
        labmul=np.asarray(labmul, dtype=np.int64),
        olddim=np.asarray(olddim, dtype=np.int64),
        newdim=np.asarray(newdim, dtype=np.int64),
        moff=np.asarray(moff, dtype=np.int64),
        mats=np.concatenate(blocks) if blocks else np.zeros(0),
        maxwork=int(maxwork),
        n_labels=int(labs),
        pendant_order=pendant_order,
    )


def _run_sweep(sweep: _Sweep, basis: SectorBasis, sel: np.ndarray) -> np.ndarray:
    out = np.empty((sel.shape[0], basis.dim))
    _kernels.vbs_sweep(
        basis.states,
        sweep.site_pos,
        sweep.labmul,
        sweep.olddim,
        sweep.newdim,
        sweep.moff,
        sweep.mats,
        np.asarray(sel, dtype=np.int64),
        out,
        sweep.maxwork,
    )
    return out


def build_vbs_state(
    patch: Patch,
    boundary_labels: dict[int, int],
    basis: SectorBasis | None = None,
) -> VbsState:
    """Amplitude vector of one valence-bond state with fixed pendant labels."""
    pendants = set(patch.pendant_vertices)
    if set(boundary_labels) != pendants:
        missing = pendants - set(boundary_labels)
        extra = set(boundary_labels) - pendants
        raise ValueError(
            f"boundary labels must cover exactly the pendant sites; "
            f"missing={sorted(missing)} extra={sorted(extra)}"
        )
    if any(m not in (-1, 0, 1) for m in boundary_labels.values()):
        raise ValueError("boundary labels must lie in {-1, 0, +1}")
    two_m = 2 * sum(boundary_labels.values())
    if basis is None:
        basis = enumerate_sector(patch, two_m)
    elif basis.two_m_total != two_m:
        raise ValueError(
            f"labels sum to two_m={two_m} but the basis is the "
            f"two_m={basis.two_m_total} sector"
        )
    sweep = _compile_sweep(patch, labels=dict(boundary_labels))
    out = _run_sweep(sweep, basis, np.zeros(1, dtype=np.int64))
    raw = out[0]
    nrm = float(np.linalg.norm(raw))
    if not nrm > 0.0:
        raise AssertionError("valence-bond state vanished; broken tensor sweep")
    return VbsState(
        patch=patch,
        boundary_labels=dict(boundary_labels),
        two_m=two_m,
        vector=raw / nrm,
        raw_norm=nrm,
    )


def _label_tuples(pendants: list[int], two_m: int) -> list[tuple[int, ...]]:
    if two_m % 2:
        return []
    target = two_m // 2
    return [
        t
        for t in itertools.product((1, 0, -1), repeat=len(pendants))
        if sum(t) == target
    ]


def kernel_basis(
    patch: Patch,
    two_m: int,
    basis: SectorBasis | None = None,
    drop_tol: float = 1e-8,
) -> KernelBasis:
    """Orthonormal basis of the zero-energy space in one Sz sector.

    All boundary-label states are generated in a single batched sweep, checked
    for linear independence through the Gram spectrum, then orthonormalized by
    modified Gram-Schmidt with one reorthogonalization pass.  A projected
    norm falling under ``drop_tol`` reports rank deficiency as an error.
    """
    pendants = sorted(patch.pendant_vertices)
    if not pendants:
        raise ValueError("patch has no pendant sites, so the kernel is empty")
    if basis is None:
        basis = enumerate_sector(patch, two_m)
    tuples = _label_tuples(pendants, two_m)
    expected = expected_kernel_dimension(patch, two_m)
    assert len(tuples) == expected, (len(tuples), expected)
    if not tuples:
        return KernelBasis(two_m=two_m, labels=[], vectors=np.empty((0, basis.dim)))

    sweep = _compile_sweep(patch, labels=None)
    p = len(pendants)
    weight = {u: 3 ** (p - 1 - i) for i, u in enumerate(sweep.pendant_order)}
    sel = np.asarray(
        [sum((1 - m) * weight[u] for u, m in zip(pendants, t)) for t in tuples],
        dtype=np.int64,
    )
    x = _run_sweep(sweep, basis, sel)

    raw_norms = np.linalg.norm(x, axis=1)
    if not (raw_norms > 0.0).all():
        bad = [tuples[i] for i in np.nonzero(raw_norms == 0.0)[0]]
        raise AssertionError(f"vanishing valence-bond states for labels {bad}")
    x /= raw_norms[:, None]

    gram = x @ x.T
    evals = np.linalg.eigvalsh(0.5 * (gram + gram.T))
    if evals[0] <= drop_tol**2:
        raise np.linalg.LinAlgError(
            f"boundary-label states are numerically dependent in sector "
            f"two_m={two_m}: smallest Gram eigenvalue {evals[0]:.3e}"
        )
    cond = float(evals[-1] / evals[0])

    # modified Gram-Schmidt over rows, one extra pass for orthogonality
    k = x.shape[0]
    for i in range(k):
        v = x[i]
        for _ in range(2):
            if i:
                v -= x[:i].T @ (x[:i] @ v)
        nrm = float(np.linalg.norm(v))
        if nrm < drop_tol:
            raise np.linalg.LinAlgError(
                f"rank deficiency at label {tuples[i]} in sector two_m={two_m}"
            )
        x[i] = v / nrm

    return KernelBasis(
        two_m=two_m,
        labels=tuples,
        vectors=x,
        gram_condition=cond,
        raw_norms=raw_norms,
    )


def kernel_residuals(
    h: HamiltonianSpec,
    basis: SectorBasis,
    vectors: np.ndarray,
    block: int = 8,
) -> np.ndarray:
    """Per-row ||H v|| for a stack of row vectors (the zero-energy check)."""
    k = vectors.shape[0]
    res = np.empty(k)
    for j0 in range(0, k, block):
        j1 = min(k, j0 + block)
        cols = np.ascontiguousarray(vectors[j0:j1].T)
        hv = apply_hamiltonian(h, basis, cols)
        res[j0:j1] = np.linalg.norm(hv, axis=0)
    return res
