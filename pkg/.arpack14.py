"""One-off: independent ARPACK value for the 12-site two_m=14 sector."""
import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from akltgap.lattice import build_patch_12
from akltgap.hilbert_sector import enumerate_sector, make_hamiltonian, apply_hamiltonian

patch = build_patch_12(1.2)
basis = enumerate_sector(patch, 14)
h = make_hamiltonian(patch)
op = LinearOperator(
    (basis.dim, basis.dim),
    matvec=lambda v: apply_hamiltonian(h, basis, np.asarray(v, dtype=np.float64)),
)
vals = eigsh(op, k=3, which="SA", tol=0, maxiter=20000, return_eigenvectors=False)
vals = np.sort(vals)
print("two_m=14 lowest three:", [repr(float(v)) for v in vals])
