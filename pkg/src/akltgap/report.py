"""Run configuration and machine-readable reports for the command line.

A report is a single JSON-shaped tree: tool version, echoed config, the
constants registry, command-specific results, wall-clock timings, and an
error list.  The exit status of the CLI is nonzero exactly when the error
list is nonempty.  All physical constants flow through one registry so every
report carries its own audit trail.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .criterion import (
    DEFAULT_GAMMA_F,
    PREFACTOR_FORMULA,
    REFERENCE_BOUND,
    REFERENCE_DELTA_J13,
    THRESHOLD_FORMULA,
    CoverCountError,
    CoverCounts,
    CriterionResult,
    evaluate_criterion,
    verify_cover_counts,
)
from .eigensolver import (
    GapTable,
    LanczosConfig,
    LanczosConvergenceError,
    SpectrumResult,
    sector_gap_scan,
)
from .hilbert_sector import make_hamiltonian, sector_dimension_table
from .lattice import (
    Patch,
    build_patch_12,
    build_patch_F,
    build_torus,
    export_records,
    patch_degrees,
)
from .spin_algebra import PROJECTOR_POLY_COEFFS
from .vbs_kernel import (
    boundary_multiplicities,
    build_vbs_state,
    kernel_residuals,
)

__all__ = ["RunConfig", "run_command", "render_report", "constants_registry",
           "config_to_ini", "INI_LAYOUT"]

_COMMANDS = (
    "lattice",
    "patch",
    "cover-check",
    "degeneracy",
    "vbs",
    "gap",
    "criterion",
    "report",
)


@dataclass(frozen=True)
class RunConfig:
    command: str = "report"
    # patch / torus geometry
    kind: str = "F12"
    a: float = 1.4
    m1: int = 12
    m2: int = 12
    # sector selection: "all" or comma-separated two_m values
    sectors: str = "all"
    # boundary labels for the vbs command, comma ints over sorted pendants
    labels: str = ""
    # boundary size for degeneracy tables
    n_pendants: int = 12
    # solver settings (mirrors LanczosConfig)
    n_eigenpairs: int = 3
    tol: float = 1e-10
    residual_tol: float = 1e-8
    max_iterations: int = 8000
    max_basis: int = 100
    restart_keep: int = 25
    max_restarts: int = 500
    seed: int = 7
    # criterion inputs
    gamma_f: float = DEFAULT_GAMMA_F
    gamma_f_source: str = "constant"
    # output paths ("" = stdout only)
    output: str = ""
    spectra_output: str = ""

    def __post_init__(self) -> None:
        if self.command not in _COMMANDS:
            raise ValueError(f"unknown command {self.command!r}; expected one of {_COMMANDS}")
        if self.kind not in ("F", "F12"):
            raise ValueError(f"unknown patch kind {self.kind!r}; expected F or F12")
        if self.gamma_f_source not in ("constant", "computed"):
            raise ValueError("gamma_f_source must be 'constant' or 'computed'")

    def sector_list(self) -> list[int] | None:
        if self.sectors.strip() == "all":
            return None
        parts = [p for p in self.sectors.replace(",", " ").split() if p]
        if not parts:
            raise ValueError("sector selection must not be empty")
        return [int(p) for p in parts]

    def solver_config(self) -> LanczosConfig:
        return LanczosConfig(
            n_eigenpairs=self.n_eigenpairs,
            tol=self.tol,
            residual_tol=self.residual_tol,
            max_iterations=self.max_iterations,
            max_basis=self.max_basis,
            restart_keep=self.restart_keep,
            seed=self.seed,
            max_restarts=self.max_restarts,
        )


# (field, section, key): the INI file mirrors RunConfig one key per field
INI_LAYOUT = (
    ("command", "run", "command"),
    ("seed", "run", "seed"),
    ("kind", "patch", "kind"),
    ("a", "patch", "a"),
    ("m1", "patch", "m1"),
    ("m2", "patch", "m2"),
    ("sectors", "sectors", "select"),
    ("labels", "vbs", "labels"),
    ("n_pendants", "tables", "n_pendants"),
    ("n_eigenpairs", "solver", "n_eigenpairs"),
    ("tol", "solver", "tol"),
    ("residual_tol", "solver", "residual_tol"),
    ("max_iterations", "solver", "max_iterations"),
    ("max_basis", "solver", "max_basis"),
    ("restart_keep", "solver", "restart_keep"),
    ("max_restarts", "solver", "max_restarts"),
    ("gamma_f", "criterion", "gamma_f"),
    ("gamma_f_source", "criterion", "gamma_f_source"),
    ("output", "output", "report"),
    ("spectra_output", "output", "spectra"),
)


def config_to_ini(cfg: RunConfig) -> str:
    """Plain-text form of a RunConfig; parsing it back yields an equal config."""
    sections: dict[str, list[str]] = {}
    for field_name, section, key in INI_LAYOUT:
        value = getattr(cfg, field_name)
        sections.setdefault(section, []).append(f"{key} = {value}")
    lines = []
    for section, entries in sections.items():
        lines.append(f"[{section}]")
        lines.extend(entries)
        lines.append("")
    return "\n".join(lines)


def constants_registry() -> dict:
    c = PROJECTOR_POLY_COEFFS
    return {
        "projector_polynomial": {
            "prefactor": str(c["prefactor"]),
            "constant": str(c["constant"]),
            "quadratic": str(c["quadratic"]),
            "cubic": str(c["cubic"]),
        },
        "threshold_formula": THRESHOLD_FORMULA,
        "prefactor_formula": PREFACTOR_FORMULA,
        "default_gamma_f": DEFAULT_GAMMA_F,
        "reference_delta_j13": REFERENCE_DELTA_J13,
        "reference_bound": REFERENCE_BOUND,
    }


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


def render_report(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True)


def _base_report(cfg: RunConfig) -> dict:
    return {
        "tool": {"name": "akltgap", "version": __version__},
        "command": cfg.command,
        "config": dataclasses.asdict(cfg),
        "config_ini": config_to_ini(cfg),
        "constants": constants_registry(),
        "timings": {},
        "errors": [],
    }


def _build_patch(cfg: RunConfig) -> Patch:
    if cfg.kind == "F":
        return build_patch_F(cfg.a)
    return build_patch_12(cfg.a)


def _counts_dict(c: CoverCounts) -> dict:
    d = dataclasses.asdict(c)
    d["edge_total"] = c.edge_total
    d["pair_total"] = c.pair_total
    return d


def _criterion_dict(r: CriterionResult) -> dict:
    return dataclasses.asdict(r)


def _spectrum_dict(res: SpectrumResult) -> dict:
    return {
        "two_m": res.two_m,
        "dim": res.dim,
        "deflation_size": res.deflation_size,
        "eigenvalues": res.eigenvalues,
        "residual_norms": res.residual_norms,
        "s2_expectations": res.s2_expectations,
        "j_values": res.j_values,
        "norm_estimate": res.norm_estimate,
        "matvec_count": res.matvec_count,
        "kernel_overlap": res.kernel_overlap,
        "wall_seconds": res.wall_seconds,
    }


def _gap_table_dict(table: GapTable) -> dict:
    return {
        "entries": {
            str(j): {
                "j": e.j,
                "delta": e.delta,
                "source_two_m": e.source_two_m,
                "residual": e.residual,
            }
            for j, e in sorted(table.entries.items())
        },
        "gamma": table.gamma,
        "gamma_j": table.gamma_j,
        "notes": list(table.notes),
        "kernel_stats": table.kernel_stats,
    }


def _spectra_csv(results: list[SpectrumResult]) -> str:
    lines = ["two_m,index,eigenvalue,j,residual"]
    for res in results:
        for i in range(res.n_found):
            j = "" if res.j_values is None else int(res.j_values[i])
            lines.append(
                f"{res.two_m},{i},{float(res.eigenvalues[i])!r},{j},"
                f"{float(res.residual_norms[i])!r}"
            )
    return "\n".join(lines) + "\n"


def _cmd_lattice(cfg: RunConfig, rep: dict) -> None:
    lat = build_torus(cfg.m1, cfg.m2)
    rep["lattice"] = {
        "m1": lat.m1,
        "m2": lat.m2,
        "n_vertices": len(lat.vertices),
        "n_edges": len(lat.edges),
        "n_plaquettes": len(lat.plaquettes),
        "records": export_records(lat),
    }


def _cmd_patch(cfg: RunConfig, rep: dict) -> None:
    patch = _build_patch(cfg)
    deg = patch_degrees(patch)
    rep["patch"] = {
        "kind": patch.kind,
        "n_sites": patch.n_sites,
        "n_edges": len(patch.edges),
        "n_pendants": len(patch.pendant_vertices),
        "n_weighted_edges": sum(1 for w in patch.edge_weights.values() if w != 1.0),
        "degree_histogram": {
            str(d): sum(1 for v in deg.values() if v == d) for d in sorted(set(deg.values()))
        },
        "records": export_records(patch),
    }


def _cmd_cover_check(cfg: RunConfig, rep: dict) -> None:
    lat = build_torus(cfg.m1, cfg.m2)
    try:
        counts = verify_cover_counts(lat, cfg.a)
    except CoverCountError as exc:
        rep["errors"].append(f"cover-check: {exc}")
        return
    rep["cover_counts"] = _counts_dict(counts)


def _cmd_criterion(cfg: RunConfig, rep: dict) -> None:
    source = "configured-constant" if cfg.gamma_f_source == "constant" else "computed"
    result = evaluate_criterion(cfg.a, cfg.gamma_f, gamma_F_source=source)
    rep["criterion"] = _criterion_dict(result)


def _cmd_degeneracy(cfg: RunConfig, rep: dict) -> None:
    n = cfg.n_pendants
    if not (0 <= n <= 64):
        raise ValueError("pendant count must lie in [0, 64]")
    table = boundary_multiplicities(n)
    rep["multiplicities"] = {
        "n_pendants": table.n_pendants,
        "by_j": {str(j): m for j, m in table.multiplicities.items()},
        "total_states": table.total_states(),
    }
    patch = _build_patch(cfg)
    if patch.n_sites <= 16:
        rows = sector_dimension_table(patch)
        rep["sector_dimensions"] = [
            {"two_m": r[0], "dim": r[1], "expected_kernel": r[2]} for r in rows
        ]
    else:
        rep["sector_dimensions"] = None
        rep["notes"] = [
            f"sector dimension table skipped: patch {patch.kind} has "
            f"{patch.n_sites} sites, over the 16-site exact-enumeration limit"
        ]


def _cmd_vbs(cfg: RunConfig, rep: dict) -> None:
    patch = _build_patch(cfg)
    pendants = sorted(patch.pendant_vertices)
    raw = [p for p in cfg.labels.replace(",", " ").split() if p]
    if len(raw) != len(pendants):
        raise ValueError(
            f"expected {len(pendants)} labels for pendants {pendants}, got {len(raw)}"
        )
    labels = {u: int(s) for u, s in zip(pendants, raw)}
    state = build_vbs_state(patch, labels)
    h = make_hamiltonian(patch)
    from .hilbert_sector import enumerate_sector

    basis = enumerate_sector(patch, state.two_m)
    resid = float(kernel_residuals(h, basis, state.vector[None, :])[0])
    rep["vbs"] = {
        "labels": {str(u): m for u, m in labels.items()},
        "two_m": state.two_m,
        "dim": state.dim,
        "raw_norm": state.raw_norm,
        "h_residual": resid,
    }


def _cmd_gap(cfg: RunConfig, rep: dict) -> None:
    patch = _build_patch(cfg)
    sectors = cfg.sector_list()
    t0 = time.perf_counter()
    try:
        table = sector_gap_scan(patch, sectors=sectors, config=cfg.solver_config())
    except LanczosConvergenceError as exc:
        rep["errors"].append(f"gap: {exc}")
        rep["gap_table"] = None
        rep["certifying"] = False
        return
    rep["timings"]["gap_scan_seconds"] = time.perf_counter() - t0
    rep["gap_table"] = _gap_table_dict(table)
    rep["sectors"] = [_spectrum_dict(r) for r in table.sector_results]
    rep["certifying"] = True
    if cfg.spectra_output:
        with open(cfg.spectra_output, "w") as fh:
            fh.write(_spectra_csv(table.sector_results))
        rep["spectra_file"] = cfg.spectra_output


def _cmd_report(cfg: RunConfig, rep: dict) -> None:
    """End-to-end composition: audited cover counts, then the certified bound."""
    lat = build_torus(cfg.m1, cfg.m2)
    t0 = time.perf_counter()
    try:
        counts = verify_cover_counts(lat, cfg.a)
    except CoverCountError as exc:
        rep["errors"].append(f"cover-check failed, certification aborted: {exc}")
        rep["certified"] = False
        return
    rep["timings"]["cover_check_seconds"] = time.perf_counter() - t0
    rep["cover_counts"] = _counts_dict(counts)

    if cfg.gamma_f_source == "constant":
        gamma = cfg.gamma_f
        source = "configured-constant"
    else:
        patch = _build_patch(cfg)
        if patch.n_sites > 16:
            raise ValueError(
                "gamma_f_source=computed needs a patch of at most 16 sites"
            )
        t1 = time.perf_counter()
        table = sector_gap_scan(
            patch, sectors=cfg.sector_list(), config=cfg.solver_config()
        )
        rep["timings"]["gap_scan_seconds"] = time.perf_counter() - t1
        rep["gap_table"] = _gap_table_dict(table)
        gamma = table.gamma
        source = f"sector-scan:{cfg.kind},a={cfg.a}"
    result = evaluate_criterion(cfg.a, gamma, gamma_F_source=source)
    rep["criterion"] = _criterion_dict(result)
    rep["certified"] = result.certified


_DISPATCH = {
    "lattice": _cmd_lattice,
    "patch": _cmd_patch,
    "cover-check": _cmd_cover_check,
    "degeneracy": _cmd_degeneracy,
    "vbs": _cmd_vbs,
    "gap": _cmd_gap,
    "criterion": _cmd_criterion,
    "report": _cmd_report,
}


def run_command(cfg: RunConfig) -> dict:
    rep = _base_report(cfg)
    t0 = time.perf_counter()
    try:
        _DISPATCH[cfg.command](cfg, rep)
    except (ValueError, np.linalg.LinAlgError, AssertionError) as exc:
        rep["errors"].append(f"{cfg.command}: {exc}")
    rep["timings"]["total_seconds"] = time.perf_counter() - t0
    return rep
