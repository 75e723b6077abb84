"""Deflated Lanczos eigensolver and the sector-resolved gap scan.

The solver targets the smallest eigenvalues of a symmetric operator given
only its apply function, iterating in the orthogonal complement of an
exactly known kernel basis (deflation).  Robustness choices, in order of
importance:

* every new Krylov vector is re-projected against the deflation space and
  fully reorthogonalized against the current basis (classical Gram-Schmidt,
  second pass whenever the first one shrinks the vector noticeably);
* the projected matrix is kept as the measured dense projection T = V H V^T,
  which stays valid through thick restarts without arrowhead bookkeeping;
* eigenpairs are accepted ("locked") only in ascending order and only after
  an explicit residual verification with a fresh operator application, so a
  reported value is never an unverified Ritz estimate;
* a single Krylov sequence carries one direction per degenerate eigenspace,
  so after the requested pairs converge the solver runs confirmation
  sweeps: fresh random restarts deflated against everything found, repeated
  until the lowest new value clears the reporting boundary.  This recovers
  degenerate multiplets and guards against skipped eigenvalues.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .hilbert_sector import (
    SectorBasis,
    apply_total_spin_squared,
    enumerate_sector,
    expected_kernel_dimension,
    make_hamiltonian,
    make_sector_operator,
)
from .lattice import Patch
from .vbs_kernel import KernelBasis, kernel_basis, kernel_residuals

__all__ = [
    "LanczosConfig",
    "SpectrumResult",
    "GapEntry",
    "GapTable",
    "LanczosConvergenceError",
    "ClassificationError",
    "lanczos_smallest",
    "sector_gap_scan",
]


class LanczosConvergenceError(RuntimeError):
    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual


class ClassificationError(RuntimeError):
    """Total-spin label could not be assigned unambiguously."""


@dataclass(frozen=True)
class LanczosConfig:
    n_eigenpairs: int = 3
    tol: float = 1e-10            # eigenvalue stabilization between cycles
    residual_tol: float = 1e-8    # absolute residual certificate
    max_iterations: int = 20000   # operator applications per solve
    max_basis: int = 100
    restart_keep: int = 40
    seed: int = 7
    max_restarts: int = 800
    verify_multiplicity: bool = True
    filter_degree: int = 10       # Chebyshev degree per direction; needs norm_bound

    def __post_init__(self) -> None:
        if self.tol <= 0 or self.residual_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.n_eigenpairs < 1:
            raise ValueError("at least one eigenpair must be requested")
        if self.max_basis < 8:
            raise ValueError("max_basis must be at least 8")
        if not (0 < self.restart_keep < self.max_basis - 2):
            raise ValueError("restart_keep must lie strictly inside the basis size")
        if not (0 <= self.filter_degree <= 100):
            raise ValueError("filter_degree must lie in [0, 100]")


@dataclass
class SpectrumResult:
    two_m: int | None
    eigenvalues: np.ndarray
    residual_norms: np.ndarray
    deflation_size: int
    norm_estimate: float
    matvec_count: int
    kernel_overlap: float
    eigenvectors: np.ndarray | None = field(default=None, repr=False)
    s2_expectations: np.ndarray | None = None
    j_values: np.ndarray | None = None
    dim: int = 0
    wall_seconds: float = 0.0

    @property
    def n_found(self) -> int:
        return int(self.eigenvalues.shape[0])


@dataclass(frozen=True)
class GapEntry:
    j: int
    delta: float
    source_two_m: int
    residual: float


@dataclass
class GapTable:
    entries: dict[int, GapEntry]
    sector_results: list[SpectrumResult] = field(default_factory=list, repr=False)
    kernel_stats: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def gamma(self) -> float:
        if not self.entries:
            raise ValueError("gap table is empty")
        return min(e.delta for e in self.entries.values())

    @property
    def gamma_j(self) -> int:
        best = min(self.entries.values(), key=lambda e: (e.delta, e.j))
        return best.j


def _deflation_parts(deflation_basis, dim: int) -> list[np.ndarray]:
    """Normalize the deflation argument to a list of row-stack arrays.

    Accepting a list of stacks lets callers combine a large kernel basis with
    freshly locked vectors without concatenating gigabyte arrays.
    """
    if deflation_basis is None:
        return []
    if isinstance(deflation_basis, (list, tuple)):
        parts = []
        for item in deflation_basis:
            parts.extend(_deflation_parts(item, dim))
        return parts
    if isinstance(deflation_basis, KernelBasis):
        u = deflation_basis.vectors
    else:
        u = np.asarray(deflation_basis, dtype=np.float64)
    if u.ndim == 1:
        u = u[None, :]
    if u.shape[1] != dim and u.shape[0] == dim:
        u = u.T
    if u.size and u.shape[1] != dim:
        raise ValueError(f"deflation basis shape {u.shape} does not match dim {dim}")
    return [np.ascontiguousarray(u)] if u.shape[0] else []


def _check_deflation_orthonormal(parts: list[np.ndarray]) -> int:
    k0 = sum(p.shape[0] for p in parts)
    if not k0:
        return 0
    dev = 0.0
    for i, pi in enumerate(parts):
        for j, pj in enumerate(parts):
            if j < i:
                continue
            g = pi @ pj.T
            if i == j:
                g = g - np.eye(pi.shape[0])
            dev = max(dev, float(np.abs(g).max()))
    if dev > 1e-8:
        raise ValueError(
            f"deflation basis is not orthonormal: max Gram deviation {dev:.2e}"
        )
    return k0


def _chebyshev_tail(
    apply_h: Callable[[np.ndarray], np.ndarray],
    v: np.ndarray,
    hv: np.ndarray,
    degree: int,
    lo: float,
    hi: float,
) -> np.ndarray:
    """T_degree of the affinely mapped operator applied to v, given hv = H v.

    The map sends [lo, hi] to [-1, 1], so components in that band stay
    bounded while everything below lo grows like cosh(degree * acosh(x));
    the caller picks lo above its targets and hi at a true norm bound.
    Reuses the already computed first application, so the marginal cost is
    degree - 1 further applications.
    """
    half = 0.5 * (hi - lo)
    center = 0.5 * (hi + lo)
    y0 = v
    y1 = (hv - center * v) / half
    for _ in range(degree - 1):
        y2 = (2.0 / half) * (apply_h(y1) - center * y1) - y0
        y0, y1 = y1, y2
    return y1


def _empty_result(two_m, k0, dim) -> SpectrumResult:
    return SpectrumResult(
        two_m=two_m,
        eigenvalues=np.empty(0),
        residual_norms=np.empty(0),
        deflation_size=k0,
        norm_estimate=0.0,
        matvec_count=0,
        kernel_overlap=0.0,
        eigenvectors=np.empty((0, dim)),
        dim=dim,
    )


def lanczos_smallest(
    apply_h: Callable[[np.ndarray], np.ndarray],
    dim: int,
    deflation_basis=None,
    config: LanczosConfig | None = None,
    two_m: int | None = None,
    norm_bound: float | None = None,
) -> SpectrumResult:
    """Verified lowest eigenpairs of a symmetric operator, kernel deflated.

    ``apply_h`` must be the pure action of a symmetric operator on (dim,)
    vectors.  ``deflation_basis`` may be an array of orthonormal rows, a
    KernelBasis, or a list of those.  The result may carry more than
    ``n_eigenpairs`` pairs when confirmation sweeps verify extras; it carries
    fewer only when the deflated space itself is smaller than the request.
    Raises LanczosConvergenceError when the iteration budget runs out.

    ``norm_bound`` is a proven upper bound on the operator norm.  When given
    (and the configured filter degree allows), basis directions are generated
    through a Chebyshev polynomial that damps [window, norm_bound] and grows
    everything below the adaptively chosen window edge, which concentrates
    Krylov work on the low end and amortizes the orthogonalization cost over
    the filter applications.  All acceptance paths are unchanged: the
    projected matrix is still measured against the raw operator and every
    reported pair still passes the explicit residual check.  An underestimate
    of the true norm stalls convergence (top components get amplified) but
    cannot corrupt results.
    """
    cfg = config or LanczosConfig()
    t0 = time.perf_counter()
    parts = _deflation_parts(deflation_basis, dim)
    k0 = _check_deflation_orthonormal(parts)
    nev = min(cfg.n_eigenpairs, dim - k0)
    if dim == 0 or nev <= 0:
        return _empty_result(two_m, k0, dim)
    if norm_bound is not None and norm_bound <= 0:
        raise ValueError("norm_bound must be positive")
    use_filter = cfg.filter_degree >= 2 and norm_bound is not None and dim >= 64
    filter_lo: float | None = None
    rr_gap = 8 if use_filter else None

    rng = np.random.default_rng(cfg.seed)
    m_max = min(cfg.max_basis, dim)
    v_rows = np.empty((m_max + 1, dim))
    t_mat = np.zeros((m_max + 1, m_max + 1))
    return_col = np.empty(m_max + 1)
    locked_vals: list[float] = []
    locked_vecs: list[np.ndarray] = []
    locked_res: list[float] = []
    matvecs = 0
    restarts = 0
    norm_est = 0.0
    best_resid = np.inf
    prev_theta: np.ndarray | None = None
    breakdown_tol = 1e-12

    def project_out(w: np.ndarray) -> None:
        for p in parts:
            w -= p.T @ (p @ w)
        for q in locked_vecs:
            w -= (q @ w) * q

    def orthogonalize(w: np.ndarray, b: int) -> tuple[float, float]:
        # classical GS against v_rows[:b]; second pass on significant shrink.
        # one deflation projection at the end, after every subtraction and
        # before normalization: the GS passes re-inject deflated components
        # only at epsilon scale (the basis rows are themselves deflated), and
        # cleaning right before the 1/nrm step is what prevents a shrinking
        # nrm from amplifying them geometrically across steps
        nrm0 = float(np.linalg.norm(w))
        c = v_rows[:b] @ w
        w -= v_rows[:b].T @ c
        nrm1 = float(np.linalg.norm(w))
        if nrm1 < 0.7071 * nrm0:
            c2 = v_rows[:b] @ w
            w -= v_rows[:b].T @ c2
            c = c + c2
        project_out(w)
        return_col[:b] = c
        return float(np.linalg.norm(w)), nrm0

    def fresh_start(slot: int, prior: int) -> bool:
        """Unit random vector orthogonal to everything into v_rows[slot]."""
        for _ in range(5):
            v = rng.standard_normal(dim)
            project_out(v)
            if prior:
                v -= v_rows[:prior].T @ (v_rows[:prior] @ v)
                project_out(v)
            nv = float(np.linalg.norm(v))
            if nv > 1e-6 * np.sqrt(dim):
                v_rows[slot] = v / nv
                return True
        return False

    basis_size = 0
    pending = fresh_start(0, 0)
    exhausted = not pending

    while not exhausted:
        # expand the Krylov basis until full, until a filtered checkpoint, or
        # until the subspace is invariant
        broke_down = False
        steps = 0
        while pending and basis_size < m_max and (rr_gap is None or steps < rr_gap):
            b = basis_size
            steps += 1
            w = apply_h(v_rows[b])
            matvecs += 1
            if matvecs > cfg.max_iterations:
                raise LanczosConvergenceError(
                    f"no convergence within {cfg.max_iterations} operator "
                    f"applications ({len(locked_vals)}/{nev} eigenpairs verified)",
                    best_residual=None if best_resid is np.inf else best_resid,
                )
            # w needs no projection of its own here: by symmetry H maps the
            # complement of the deflated space into it only through kernel
            # rounding noise and locked-pair residuals, both of which the
            # projection at the end of orthogonalize removes before anything
            # is normalized or stored; the coefficient measurements in between
            # pair w against rows that are themselves deflated, so the
            # contamination never reaches the projected matrix
            if filter_lo is not None:
                # the projected matrix stays a measurement of the raw
                # operator: this column pairs H v_b against the stored rows.
                # What enters the basis next is the Chebyshev image of v_b,
                # which only redirects where the NEXT column gets measured
                col = v_rows[: b + 1] @ w
                t_mat[: b + 1, b] = col
                t_mat[b, : b + 1] = col
                basis_size = b + 1
                t = _chebyshev_tail(
                    apply_h, v_rows[b], w, cfg.filter_degree, filter_lo, norm_bound
                )
                matvecs += cfg.filter_degree - 1
                if matvecs > cfg.max_iterations:
                    raise LanczosConvergenceError(
                        f"no convergence within {cfg.max_iterations} operator "
                        f"applications ({len(locked_vals)}/{nev} eigenpairs "
                        f"verified)",
                        best_residual=None if best_resid is np.inf else best_resid,
                    )
                nrm, nrm0 = orthogonalize(t, basis_size)
                if nrm <= 1e-8 * max(1.0, nrm0):
                    # filter output collapsed into the span: everything it
                    # amplifies is already captured.  Fall back to the raw
                    # Krylov direction before declaring the space invariant
                    nrm, nrm0 = orthogonalize(w, basis_size)
                    t = w
            else:
                nrm, nrm0 = orthogonalize(w, b + 1)
                t_mat[: b + 1, b] = return_col[: b + 1]
                t_mat[b, : b + 1] = return_col[: b + 1]
                basis_size = b + 1
                t = w
            # relative test: a residual at rounding level of the pre-GS norm
            # means the Krylov space is invariant; normalizing it would inject
            # a junk direction that is not orthogonal to the locked space
            if nrm <= breakdown_tol * max(1.0, norm_est, nrm0):
                broke_down = True
                pending = False
            else:
                v_rows[basis_size] = t / nrm

        b = basis_size
        t_sym = 0.5 * (t_mat[:b, :b] + t_mat[:b, :b].T)
        theta, y = np.linalg.eigh(t_sym)
        norm_est = max(norm_est, float(np.abs(theta).max()) if b else 0.0)
        if use_filter and b >= max(nev + 5, 16):
            # damping window edge: sit a few Ritz values above the targets so
            # the bulk shrinks while every wanted state grows.  Ritz values
            # converge from above, so the edge only tightens over time; the
            # cap keeps the window nonempty under any norm bound
            edge = float(theta[min(nev + 4, b - 1)])
            if edge > 0.0:
                filter_lo = min(edge, 0.95 * norm_bound)

        # lock candidates in ascending order; stop at the first failure so a
        # verified pair is never reported above an unverified one
        locked_this_cycle = 0
        corrupted = False
        i = 0
        while i < b and len(locked_vals) < nev:
            th = float(theta[i])
            stable = broke_down
            if not stable and prev_theta is not None and prev_theta.size:
                nearest = float(np.abs(prev_theta - th).min())
                stable = nearest <= cfg.tol * max(1.0, abs(th))
            if not stable:
                break
            x = y[:, i] @ v_rows[:b]
            project_out(x)
            nx = float(np.linalg.norm(x))
            if nx < 0.5:
                # a Ritz vector living mostly inside the deflated space means
                # the basis picked up junk directions; rebuild from scratch
                corrupted = True
                break
            x /= nx
            hx = apply_h(x)
            matvecs += 1
            rq = float(x @ hx)
            resid = float(np.linalg.norm(hx - rq * x))
            best_resid = min(best_resid, resid)
            if resid <= cfg.residual_tol:
                locked_vals.append(rq)
                locked_vecs.append(x)
                locked_res.append(resid)
                locked_this_cycle += 1
                i += 1
            else:
                break

        if len(locked_vals) >= nev:
            break
        prev_theta = theta[locked_this_cycle:].copy()

        if locked_this_cycle == 0 and not corrupted and pending and basis_size < m_max:
            # mid-fill checkpoint with nothing locked: keep growing the same
            # basis, a restart here would throw away measured couplings.  Any
            # lock forces the restart below so the locked direction leaves
            # the basis instead of resurfacing as a spurious copy of itself
            continue

        restarts += 1
        if restarts > cfg.max_restarts:
            raise LanczosConvergenceError(
                f"restart budget exhausted with {len(locked_vals)}/{nev} pairs",
                best_residual=None if best_resid is np.inf else best_resid,
            )

        if broke_down or corrupted:
            # invariant subspace (or a contaminated basis): only a fresh
            # random direction can make progress
            basis_size = 0
            t_mat[:, :] = 0.0
            pending = fresh_start(0, 0)
            exhausted = not pending
            prev_theta = None
            continue

        # thick restart: keep the lowest unconverged Ritz vectors plus the
        # pending direction, whose couplings are re-measured next cycle
        keep = min(cfg.restart_keep, b - 1)
        sel = list(range(locked_this_cycle, min(locked_this_cycle + keep, b)))
        if not sel:
            basis_size = 0
            t_mat[:, :] = 0.0
            pending = fresh_start(0, 0)
            exhausted = not pending
            prev_theta = None
            continue
        new_block = y[:, sel].T @ v_rows[:b]
        kept = len(sel)
        v_rows[kept] = v_rows[b]
        v_rows[:kept] = new_block
        del new_block
        t_mat[:, :] = 0.0
        t_mat[:kept, :kept] = np.diag(theta[sel])
        basis_size = kept
        pending = True

    del v_rows, t_mat

    # confirmation sweeps: fresh deflated solves for one new pair at a time,
    # until the lowest remaining value clears the reporting boundary
    if cfg.verify_multiplicity and locked_vals and nev >= 1:
        stop_tol = max(1e-7, 100.0 * cfg.residual_tol)
        sweep_cap = max(16, 2 * nev + 8)
        for sweep in range(sweep_cap):
            boundary = sorted(locked_vals)[min(nev, len(locked_vals)) - 1]
            sub_cfg = replace(
                cfg,
                n_eigenpairs=1,
                verify_multiplicity=False,
                seed=cfg.seed + 7919 * (sweep + 1),
            )
            sub = lanczos_smallest(
                apply_h,
                dim,
                deflation_basis=[*parts, np.asarray(locked_vecs)],
                config=sub_cfg,
                two_m=two_m,
                norm_bound=norm_bound,
            )
            matvecs += sub.matvec_count
            if sub.n_found == 0:
                break  # complement exhausted
            val = float(sub.eigenvalues[0])
            if val > boundary + stop_tol:
                break
            locked_vals.append(val)
            locked_vecs.append(np.ascontiguousarray(sub.eigenvectors[0]))
            locked_res.append(float(sub.residual_norms[0]))
        else:
            raise LanczosConvergenceError(
                f"confirmation sweeps kept finding values at the boundary after "
                f"{sweep_cap} sweeps; multiplicity not certified"
            )

    order = np.argsort(np.asarray(locked_vals, dtype=np.float64), kind="stable")
    vals = np.asarray(locked_vals)[order]
    res = np.asarray(locked_res)[order]
    vecs = (
        np.asarray([locked_vecs[i] for i in order])
        if locked_vecs
        else np.empty((0, dim))
    )
    overlap = 0.0
    if k0 and vecs.size:
        overlap = max(float(np.abs(p @ vecs.T).max()) for p in parts)
    return SpectrumResult(
        two_m=two_m,
        eigenvalues=vals,
        residual_norms=res,
        deflation_size=k0,
        norm_estimate=norm_est,
        matvec_count=matvecs,
        kernel_overlap=overlap,
        eigenvectors=vecs,
        dim=dim,
        wall_seconds=time.perf_counter() - t0,
    )


def _nearest_j(val: float) -> int:
    return int(round(0.5 * (-1.0 + np.sqrt(max(0.0, 1.0 + 4.0 * val)))))


def _refine_cluster(
    basis: SectorBasis,
    apply_h: Callable[[np.ndarray], np.ndarray],
    block: np.ndarray,
    tol_s2: float,
    res_tol: float,
    two_m,
):
    """Split a partially captured degenerate eigenspace into sharp-J pairs.

    An eigenvector locked inside an exactly degenerate cross-J eigenspace is
    an arbitrary mixture whenever its degenerate partners were never locked,
    and no rotation of the captured block alone can repair it. H and total
    S^2 commute, so closing the block's span under both operators never
    leaves the (near-)degenerate eigenspace; diagonalizing the pair
    simultaneously inside the closed span then restores sharp labels without
    rounding any expectation value. Residuals of the resulting pieces are
    re-measured with genuine operator applications, never inferred.
    """
    dim, c = block.shape
    cap = int(min(dim, c + 20))
    q = np.zeros((dim, cap))
    q[:, :c] = block
    hs = np.zeros((cap, cap))
    s2s = np.zeros((cap, cap))
    n_cols = c
    ptr = 0
    while ptr < n_cols:
        v = np.ascontiguousarray(q[:, ptr])
        images = (apply_h(v), apply_total_spin_squared(basis, v))
        hs[:n_cols, ptr] = q[:, :n_cols].T @ images[0]
        hs[ptr, :n_cols] = hs[:n_cols, ptr]
        s2s[:n_cols, ptr] = q[:, :n_cols].T @ images[1]
        s2s[ptr, :n_cols] = s2s[:n_cols, ptr]
        for w in images:
            scale = float(np.linalg.norm(w))
            if scale == 0.0:
                continue
            r = w - q[:, :n_cols] @ (q[:, :n_cols].T @ w)
            r -= q[:, :n_cols] @ (q[:, :n_cols].T @ r)
            nrm = float(np.linalg.norm(r))
            # relative cut well above convergence noise: leakage from the
            # finite residuals must not spawn junk directions, while a
            # genuine cross-J admixture sticks out by orders of magnitude
            if nrm <= 1e-4 * scale:
                continue
            if n_cols == cap:
                raise ClassificationError(
                    f"sector two_m={two_m}: degenerate-cluster refinement did "
                    f"not close within {cap} directions"
                )
            q[:, n_cols] = r / nrm
            n_cols += 1
        ptr += 1
    qa = q[:, :n_cols]
    hs_a = 0.5 * (hs[:n_cols, :n_cols] + hs[:n_cols, :n_cols].T)
    s2s_a = 0.5 * (s2s[:n_cols, :n_cols] + s2s[:n_cols, :n_cols].T)
    w2, r2 = np.linalg.eigh(s2s_a)
    energies: list[float] = []
    rows: list[np.ndarray] = []
    resid: list[float] = []
    s2_out: list[float] = []
    i = 0
    while i < n_cols:
        j_here = _nearest_j(float(w2[i]))
        if abs(w2[i] - j_here * (j_here + 1)) > tol_s2:
            raise ClassificationError(
                f"sector two_m={two_m}: <S^2>={float(w2[i])!r} is not J(J+1) "
                f"within {tol_s2} after cluster refinement (nearest J={j_here})"
            )
        jj = i + 1
        while jj < n_cols and _nearest_j(float(w2[jj])) == j_here:
            jj += 1
        basis_j = r2[:, i:jj]
        e_sub, u_sub = np.linalg.eigh(basis_j.T @ hs_a @ basis_j)
        coeff = basis_j @ u_sub
        pieces = qa @ coeff
        s2_exp = np.einsum("it,ij,jt->t", coeff, s2s_a, coeff)
        for t in range(jj - i):
            p = np.ascontiguousarray(pieces[:, t])
            nrm = float(np.linalg.norm(p))
            p /= nrm
            hv = apply_h(p)
            e = float(p @ hv)
            r = float(np.linalg.norm(hv - e * p))
            if r > res_tol:
                raise ClassificationError(
                    f"sector two_m={two_m}: refined piece at energy {e!r} has "
                    f"residual {r:.2e} > {res_tol:.1e}; multiplicity structure "
                    "not certified"
                )
            energies.append(e)
            rows.append(p)
            resid.append(r)
            s2_out.append(float(s2_exp[t]))
        i = jj
    return energies, rows, resid, s2_out


def _classify_total_spin(
    basis: SectorBasis,
    result: SpectrumResult,
    tol_s2: float = 1e-6,
    apply_h: Callable[[np.ndarray], np.ndarray] | None = None,
    res_tol: float = 1e-8,
) -> SpectrumResult:
    """Assign J labels via <S^2>, rotating inside degenerate energy clusters.

    With an operator handle available, a cluster whose expectations fail the
    J(J+1) test is refined (span closed under H and S^2, then both
    diagonalized simultaneously) instead of rejected outright; genuinely
    ambiguous values still raise. Refinement can grow the result, so the
    returned arrays may hold more pairs than the input.
    """
    k = result.n_found
    if k == 0:
        return replace(
            result, s2_expectations=np.empty(0), j_values=np.empty(0, dtype=int)
        )
    x = result.eigenvectors
    vals = result.eigenvalues
    cluster_tol = max(1e-7, 1e-9 * max(1.0, result.norm_estimate))
    out_e: list[float] = []
    out_rows: list[np.ndarray] = []
    out_res: list[float] = []
    out_s2: list[float] = []
    i = 0
    while i < k:
        jj = i + 1
        while jj < k and vals[jj] - vals[jj - 1] <= cluster_tol:
            jj += 1
        block = np.ascontiguousarray(x[i:jj].T)  # (dim, c)
        s2_block = apply_total_spin_squared(basis, block)
        m_small = block.T @ s2_block
        m_small = 0.5 * (m_small + m_small.T)
        if jj - i == 1:
            w = np.array([m_small[0, 0]])
            rot = np.eye(1)
        else:
            w, rot = np.linalg.eigh(m_small)
        sharp = all(
            abs(val - _nearest_j(float(val)) * (_nearest_j(float(val)) + 1))
            <= tol_s2
            for val in w
        )
        if sharp:
            xb = rot.T @ x[i:jj]
            out_e.extend(float(v) for v in vals[i:jj])
            out_rows.extend(np.ascontiguousarray(xb[t]) for t in range(jj - i))
            out_res.extend(float(v) for v in result.residual_norms[i:jj])
            out_s2.extend(float(v) for v in w)
        elif apply_h is None:
            bad = next(
                float(val)
                for val in w
                if abs(val - _nearest_j(float(val)) * (_nearest_j(float(val)) + 1))
                > tol_s2
            )
            raise ClassificationError(
                f"sector two_m={result.two_m}: <S^2>={bad!r} is not J(J+1) "
                f"within {tol_s2} (nearest J={_nearest_j(bad)})"
            )
        else:
            e_r, rows_r, res_r, s2_r = _refine_cluster(
                basis, apply_h, block, tol_s2, res_tol, result.two_m
            )
            out_e.extend(e_r)
            out_rows.extend(rows_r)
            out_res.extend(res_r)
            out_s2.extend(s2_r)
        i = jj
    order = np.argsort(np.asarray(out_e), kind="stable")
    e_arr = np.asarray(out_e)[order]
    s2_arr = np.asarray(out_s2)[order]
    res_arr = np.asarray(out_res)[order]
    x_out = np.ascontiguousarray(np.asarray(out_rows)[order])
    jv = np.array([_nearest_j(float(v)) for v in s2_arr], dtype=np.int64)
    if result.two_m is not None:
        m_abs = abs(result.two_m) // 2
        if (jv < m_abs).any():
            raise ClassificationError(
                f"sector two_m={result.two_m}: found J < |m|, impossible labeling"
            )
    return replace(
        result,
        eigenvalues=e_arr,
        residual_norms=res_arr,
        eigenvectors=x_out,
        s2_expectations=s2_arr,
        j_values=jv,
    )


def sector_gap_scan(
    patch: Patch,
    sectors: Sequence[int] | None = None,
    config: LanczosConfig | None = None,
) -> GapTable:
    """Deflated lowest-eigenpair scan over total-Sz sectors, aggregated by J.

    Only highest-weight states (classified J equal to the sector's m) enter
    the gap table: a spin-J multiplet shows up in every sector with |m| <= J,
    so taking it from its top sector keeps exactly one entry per multiplet.
    Sectors with negative two_m are mirror images of the positive ones under
    the global spin flip (tested in the package test-suite at machine
    precision), so the default scan covers two_m >= 0.
    """
    cfg = config or LanczosConfig()
    n = patch.n_sites
    if n > 16:
        raise ValueError("sector scan supports patches up to 16 sites")
    if (3 * n) % 2 != 0:
        raise ValueError("sector scan requires an even number of half-integer sites")
    if sectors is None:
        sectors = list(range(0, 3 * n + 1, 2))
    else:
        sectors = list(sectors)
        if not sectors:
            raise ValueError("sector selection must not be empty")

    h = make_hamiltonian(patch)
    has_pendants = len(patch.pendant_vertices) > 0
    entries: dict[int, GapEntry] = {}
    results: list[SpectrumResult] = []
    kstats: list[dict] = []
    notes: list[str] = []

    for two_m in sectors:
        basis = enumerate_sector(patch, two_m)
        if basis.dim == 0:
            continue
        expected = expected_kernel_dimension(patch, two_m) if has_pendants else 0
        if expected > 0:
            kb = kernel_basis(patch, two_m, basis=basis)
            max_res = float(kernel_residuals(h, basis, kb.vectors).max())
            kstats.append(
                {
                    "two_m": two_m,
                    "dim": basis.dim,
                    "kernel_dim": len(kb),
                    "expected_kernel_dim": expected,
                    "max_h_residual": max_res,
                    "gram_condition": kb.gram_condition,
                }
            )
        else:
            kb = None
            kstats.append(
                {
                    "two_m": two_m,
                    "dim": basis.dim,
                    "kernel_dim": 0,
                    "expected_kernel_dim": expected,
                    "max_h_residual": 0.0,
                    "gram_condition": 1.0,
                }
            )

        apply_vec = make_sector_operator(h, basis)

        try:
            res = lanczos_smallest(
                apply_vec,
                basis.dim,
                deflation_basis=kb,
                config=cfg,
                two_m=two_m,
                # every projector summand has norm 1, so the weight total is a
                # proven operator norm bound; it feeds the low-end filter
                norm_bound=h.total_weight,
            )
        except LanczosConvergenceError as exc:
            raise LanczosConvergenceError(
                f"sector two_m={two_m}: {exc}", best_residual=exc.best_residual
            ) from exc
        res = _classify_total_spin(
            basis, res, apply_h=apply_vec, res_tol=cfg.residual_tol
        )
        m_here = two_m // 2
        for idx in range(res.n_found):
            j = int(res.j_values[idx])
            e = float(res.eigenvalues[idx])
            if e <= 0:
                raise AssertionError(
                    f"sector two_m={two_m}: nonpositive deflated eigenvalue {e}"
                )
            if j == m_here:
                cur = entries.get(j)
                if cur is None or e < cur.delta:
                    entries[j] = GapEntry(
                        j=j,
                        delta=e,
                        source_two_m=two_m,
                        residual=float(res.residual_norms[idx]),
                    )
        if two_m == 0 and res.n_found and int(res.j_values[0]) != 0:
            notes.append(
                "sector two_m=0: lowest state has J="
                f"{int(res.j_values[0])}; no J=0 excitation within the requested "
                "window, so Delta(0) exceeds every tabulated Delta(J)"
            )
        results.append(replace(res, eigenvectors=None))
        basis.release_caches()
        del basis, kb, res, apply_vec

    if not entries:
        raise RuntimeError("gap scan produced no highest-weight entries")
    return GapTable(
        entries=entries, sector_results=results, kernel_stats=kstats, notes=notes
    )
