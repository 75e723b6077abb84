"""Single-site spin operators and the spin-3 bond projector.

Every Hamiltonian in this package is a weighted sum of projectors onto total
spin 3 across an edge of spin-3/2 sites.  Two independent constructions of
that 16x16 projector are kept side by side on purpose:

* a closed-form polynomial in the Heisenberg exchange S_i . S_j,
* a spectral projector onto the eigenvalue-12 eigenspace of (S_i + S_j)^2.

They must agree to near machine precision; the comparison is one of the
package's self-checks and is exposed rather than hidden.

Basis convention: single-site states are ordered by descending magnetic
quantum number, m = +3/2, +1/2, -1/2, -3/2.  Pair states use
``index = 4 * level_i + level_j`` where ``level = 3/2 - m`` counts lowering
steps from the top state.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "SpinOperators",
    "BondProjector",
    "make_spin_operators",
    "bond_heisenberg",
    "projector_spin3_polynomial",
    "projector_spin3_spectral",
    "PROJECTOR_POLY_COEFFS",
]

# Coefficients of the degree-3 polynomial in x = S_i . S_j whose value is 1 on
# the spin-3 pair multiplet (x = 9/4) and 0 on the spin-0,1,2 multiplets
# (x = -15/4, -11/4, -3/4):  P = c0 * (x + c2 x^2 + c3 x^3 + c1).
PROJECTOR_POLY_COEFFS = {
    "prefactor": Fraction(27, 160),
    "constant": Fraction(55, 108),
    "quadratic": Fraction(116, 243),
    "cubic": Fraction(16, 243),
}


@dataclass(frozen=True)
class SpinOperators:
    """Matrices for one spin-s site in the descending-m basis."""

    two_s: int
    sz: np.ndarray
    sp: np.ndarray
    sm: np.ndarray

    @property
    def s(self) -> float:
        return self.two_s / 2.0

    @property
    def dim(self) -> int:
        return self.two_s + 1

    def casimir(self) -> np.ndarray:
        """S^2 = S- S+ + Sz(Sz + 1), equals s(s+1) * identity."""
        return self.sm @ self.sp + self.sz @ (self.sz + np.eye(self.dim))


@dataclass(frozen=True)
class BondProjector:
    """16x16 projector onto total spin 3 of a pair of spin-3/2 sites.

    ``route`` records which of the two constructions produced the matrix.
    """

    matrix: np.ndarray
    route: str

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix))


def make_spin_operators(s: float) -> SpinOperators:
    """Build Sz, S+, S- for spin ``s`` (2s must be a nonnegative integer).

    States are ordered m = s, s-1, ..., -s, so S+ has its nonzeros on the
    superdiagonal (raising m moves one slot up the ordering).
    """
    two_s = int(round(2 * s))
    if two_s < 0 or abs(2 * s - two_s) > 1e-12:
        raise ValueError(f"spin must be a half-integer >= 0, got {s!r}")
    m = s - np.arange(two_s + 1, dtype=np.float64)  # descending
    sz = np.diag(m)
    # <m+1| S+ |m> = sqrt(s(s+1) - m(m+1)); source states run m = s-1 ... -s
    c = np.sqrt(s * (s + 1.0) - m[1:] * (m[1:] + 1.0))
    sp = np.diag(c, k=1)
    sm = sp.T.copy()
    return SpinOperators(two_s=two_s, sz=sz, sp=sp, sm=sm)


def bond_heisenberg(ops: SpinOperators | None = None) -> np.ndarray:
    """Exchange matrix S_i . S_j on the pair space (site i is the slow index)."""
    if ops is None:
        ops = make_spin_operators(1.5)
    return (
        0.5 * (np.kron(ops.sp, ops.sm) + np.kron(ops.sm, ops.sp))
        + np.kron(ops.sz, ops.sz)
    )


def projector_spin3_polynomial(ops: SpinOperators | None = None) -> BondProjector:
    """Bond projector as the cubic polynomial in the exchange S_i . S_j."""
    if ops is None:
        ops = make_spin_operators(1.5)
    if ops.two_s != 3:
        raise ValueError("the spin-3 bond projector is defined for s = 3/2 sites")
    ss = bond_heisenberg(ops)
    ss2 = ss @ ss
    ss3 = ss2 @ ss
    c = PROJECTOR_POLY_COEFFS
    mat = float(c["prefactor"]) * (
        ss
        + float(c["quadratic"]) * ss2
        + float(c["cubic"]) * ss3
        + float(c["constant"]) * np.eye(ss.shape[0])
    )
    return BondProjector(matrix=mat, route="polynomial")


def projector_spin3_spectral(ops: SpinOperators | None = None) -> BondProjector:
    """Bond projector from the eigenvalue-12 eigenspace of (S_i + S_j)^2.

    Assembled as V V^T over the numerically obtained eigenvectors; the
    eigenvalue 12 = J(J+1) at J = 3 is isolated by more than 4 units, so a
    wide selection window is safe.
    """
    if ops is None:
        ops = make_spin_operators(1.5)
    if ops.two_s != 3:
        raise ValueError("the spin-3 bond projector is defined for s = 3/2 sites")
    eye = np.eye(ops.dim)
    tot_z = np.kron(ops.sz, eye) + np.kron(eye, ops.sz)
    tot_p = np.kron(ops.sp, eye) + np.kron(eye, ops.sp)
    tot_m = tot_p.T
    # (S_i + S_j)^2 in the S-S+ + Sz(Sz+1) form, manifestly symmetric here
    total_sq = tot_m @ tot_p + tot_z @ (tot_z + np.eye(16))
    evals, vecs = np.linalg.eigh(total_sq)
    sel = np.abs(evals - 12.0) < 1.0
    if int(sel.sum()) != 7:
        raise AssertionError(
            f"expected a 7-dimensional spin-3 multiplet, found {int(sel.sum())}"
        )
    v = vecs[:, sel]
    return BondProjector(matrix=v @ v.T, route="spectral")
