"""Spectral-gap certification toolkit for the hexagonal spin-3/2 AKLT antiferromagnet.

The package has two halves that together certify a positive energy gap:

* combinatorial: honeycomb torus bookkeeping, weighted patch covers and the
  finite-size criterion arithmetic (:mod:`akltgap.lattice`,
  :mod:`akltgap.criterion`);
* numerical: sector-resolved exact diagonalization of small clusters with the
  valence-bond ground manifold deflated exactly (:mod:`akltgap.spin_algebra`,
  :mod:`akltgap.hilbert_sector`, :mod:`akltgap.vbs_kernel`,
  :mod:`akltgap.eigensolver`).

``akltgap.cli`` exposes the command line driver, ``akltgap.report`` the
machine-readable output layer.
"""

from .criterion import (
    CoverCountError,
    CoverCounts,
    CriterionResult,
    evaluate_criterion,
    optimize_weight,
    prefactor,
    threshold,
    verify_cover_counts,
)
from .eigensolver import (
    GapTable,
    LanczosConfig,
    LanczosConvergenceError,
    SpectrumResult,
    lanczos_smallest,
    sector_gap_scan,
)
from .hilbert_sector import (
    HamiltonianSpec,
    SectorBasis,
    apply_hamiltonian,
    apply_total_spin_squared,
    enumerate_sector,
    expected_kernel_dimension,
    make_hamiltonian,
    make_sector_operator,
    sector_dimension,
    to_dense,
    to_sparse,
)
from .lattice import (
    Patch,
    PatchCover,
    TorusLattice,
    build_cover,
    build_patch_12,
    build_patch_F,
    build_torus,
    translate_patch,
)
from .spin_algebra import (
    BondProjector,
    SpinOperators,
    make_spin_operators,
    projector_spin3_polynomial,
    projector_spin3_spectral,
)
from .vbs_kernel import (
    KernelBasis,
    MultiplicityTable,
    VbsState,
    boundary_multiplicities,
    build_vbs_state,
    kernel_basis,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BondProjector",
    "CoverCountError",
    "CoverCounts",
    "CriterionResult",
    "GapTable",
    "HamiltonianSpec",
    "KernelBasis",
    "LanczosConfig",
    "LanczosConvergenceError",
    "MultiplicityTable",
    "Patch",
    "PatchCover",
    "SectorBasis",
    "SpectrumResult",
    "SpinOperators",
    "TorusLattice",
    "VbsState",
    "apply_hamiltonian",
    "apply_total_spin_squared",
    "boundary_multiplicities",
    "build_cover",
    "build_patch_12",
    "build_patch_F",
    "build_torus",
    "build_vbs_state",
    "enumerate_sector",
    "evaluate_criterion",
    "expected_kernel_dimension",
    "kernel_basis",
    "lanczos_smallest",
    "make_hamiltonian",
    "make_sector_operator",
    "make_spin_operators",
    "optimize_weight",
    "prefactor",
    "projector_spin3_polynomial",
    "projector_spin3_spectral",
    "sector_dimension",
    "sector_gap_scan",
    "threshold",
    "to_dense",
    "to_sparse",
    "translate_patch",
    "verify_cover_counts",
]
