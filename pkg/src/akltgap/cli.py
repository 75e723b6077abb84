"""Command-line entry point: argument parsing, config files, thread setup.

Configuration precedence is flags over file over defaults.  The config file
is plain INI with sections mirroring the RunConfig layout; unknown sections
or keys are rejected rather than ignored. The AKLTGAP_THREADS environment
variable caps worker threads; when absent, libraries keep their own
defaults (all available parallelism).
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

from .report import INI_LAYOUT, RunConfig, render_report, run_command

__all__ = ["main", "build_parser", "load_config_file", "make_config"]

_FIELD_TYPES = {name: type(getattr(RunConfig(), name)) for name, _, _ in INI_LAYOUT}
_KNOWN_KEYS = {(section, key): name for name, section, key in INI_LAYOUT}


def load_config_file(path: str) -> dict:
    """Parse an INI config into a field dict, rejecting unknown keys."""
    cp = configparser.ConfigParser(interpolation=None)
    with open(path) as fh:
        cp.read_file(fh)
    out: dict[str, str] = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            field = _KNOWN_KEYS.get((section, key))
            if field is None:
                raise ValueError(
                    f"unknown config key [{section}] {key} in {path}"
                )
            out[field] = value
    return out


def make_config(raw: dict) -> RunConfig:
    """Coerce string values to field types and build a RunConfig."""
    coerced = {}
    for name, value in raw.items():
        want = _FIELD_TYPES[name]
        coerced[name] = want(value) if isinstance(value, str) and want is not str else value
    return RunConfig(**coerced)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-eigenpairs", type=int, dest="n_eigenpairs")
    p.add_argument("--tol", type=float, dest="tol")
    p.add_argument("--residual-tol", type=float, dest="residual_tol")
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--max-basis", type=int, dest="max_basis")
    p.add_argument("--restart-keep", type=int, dest="restart_keep")
    p.add_argument("--max-restarts", type=int, dest="max_restarts")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="INI config file; flags override it")
    common.add_argument("--output", help="write the JSON report here as well")
    common.add_argument("--spectra-output", dest="spectra_output",
                        help="write per-sector spectra as CSV")
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(
        prog="akltgap",
        description="Spectral-gap toolkit: patch covers, finite-size criterion, "
        "and sector-resolved diagonalization of small clusters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text,
                           argument_default=argparse.SUPPRESS)
        return p

    p = add("lattice", "hexagonal torus geometry records")
    p.add_argument("--m1", type=int)
    p.add_argument("--m2", type=int)

    p = add("patch", "weighted patch geometry records")
    p.add_argument("--kind", choices=("F", "F12"))
    p.add_argument("--a", type=float)

    p = add("cover-check", "audit per-edge and per-pair cover counts on a torus")
    p.add_argument("--m1", type=int)
    p.add_argument("--m2", type=int)
    p.add_argument("--a", type=float)

    p = add("degeneracy", "boundary multiplicity and sector dimension tables")
    p.add_argument("--n", type=int, dest="n_pendants")
    p.add_argument("--kind", choices=("F", "F12"))
    p.add_argument("--a", type=float)

    p = add("vbs", "build one valence-bond state and check its energy")
    p.add_argument("--kind", choices=("F", "F12"))
    p.add_argument("--a", type=float)
    p.add_argument("--labels", help="comma list over sorted pendant sites, e.g. 1,0,-1,...")

    p = add("gap", "deflated sector-resolved gap scan")
    p.add_argument("--kind", choices=("F", "F12"))
    p.add_argument("--a", type=float)
    p.add_argument("--sectors", help='"all" or comma two_m values')
    _add_solver_flags(p)

    p = add("criterion", "evaluate the finite-size bound for given inputs")
    p.add_argument("--a", type=float)
    p.add_argument("--gamma-f", type=float, dest="gamma_f")
    p.add_argument("--gamma-f-source", choices=("constant", "computed"),
                   dest="gamma_f_source")

    p = add("report", "end-to-end: cover audit plus certified bound")
    p.add_argument("--m1", type=int)
    p.add_argument("--m2", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--kind", choices=("F", "F12"))
    p.add_argument("--sectors", help='"all" or comma two_m values')
    p.add_argument("--gamma-f", type=float, dest="gamma_f")
    p.add_argument("--gamma-f-source", choices=("constant", "computed"),
                   dest="gamma_f_source")
    _add_solver_flags(p)

    return parser


def _configure_threads() -> None:
    raw = os.environ.get("AKLTGAP_THREADS")
    if not raw:
        return
    try:
        n = max(1, int(raw))
    except ValueError:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except Exception:
        pass


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_threads()
    values = dict(vars(args))
    config_path = values.pop("config", None)
    command = values.pop("command")
    try:
        raw: dict = {}
        if config_path:
            raw.update(load_config_file(config_path))
        raw.update(values)
        raw["command"] = command
        cfg = make_config(raw)
    except (ValueError, OSError, configparser.Error) as exc:
        print(render_report({"errors": [f"config: {exc}"]}))
        return 1
    rep = run_command(cfg)
    text = render_report(rep)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 1 if rep["errors"] else 0


if __name__ == "__main__":
    sys.exit(main())
