"""One-off: full 12-site sector scan, cached to disk for test development."""
import json
import pickle
import time

from akltgap.lattice import build_patch_12
from akltgap.eigensolver import LanczosConfig, sector_gap_scan

patch = build_patch_12(1.2)
t0 = time.perf_counter()
gt = sector_gap_scan(
    patch,
    sectors=list(range(36, -1, -2)),
    config=LanczosConfig(n_eigenpairs=3, seed=7),
)
wall = time.perf_counter() - t0

with open("/root/pkg/.scan12_cache.pkl", "wb") as f:
    pickle.dump(gt, f)

summary = {
    "wall_seconds": wall,
    "entries": {
        str(j): {
            "delta": e.delta,
            "source_two_m": e.source_two_m,
            "residual": e.residual,
        }
        for j, e in sorted(gt.entries.items())
    },
    "kernel_stats": gt.kernel_stats,
    "sectors": [
        {
            "two_m": r.two_m,
            "dim": r.dim,
            "eigenvalues": [float(v) for v in r.eigenvalues],
            "j_values": [int(j) for j in r.j_values],
            "residuals": [float(v) for v in r.residual_norms],
            "matvecs": r.matvec_count,
            "wall_seconds": r.wall_seconds,
        }
        for r in gt.sector_results
    ],
    "notes": gt.notes,
}
with open("/root/pkg/.scan12_cache.json", "w") as f:
    json.dump(summary, f, indent=2)
print(f"scan complete in {wall:.0f}s; min gap at J="
      f"{min(gt.entries, key=lambda j: gt.entries[j].delta)}")
