import json

import pytest

from akltgap.cli import main
from akltgap.report import RunConfig, config_to_ini
from akltgap.criterion import DEFAULT_GAMMA_F, REFERENCE_BOUND, REFERENCE_DELTA_J13


def run_cli(capsys, *args: str) -> tuple[int, dict]:
    code = main(list(args))
    out = capsys.readouterr().out
    return code, json.loads(out)


def strip_timings(obj):
    if isinstance(obj, dict):
        return {
            k: strip_timings(v)
            for k, v in obj.items()
            if k != "timings" and not k.endswith("seconds")
        }
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


def test_criterion_certified(capsys):
    code, rep = run_cli(capsys, "criterion", "--a", "1.4")
    assert code == 0
    assert rep["errors"] == []
    crit = rep["criterion"]
    assert crit["certified"] is True
    assert crit["threshold"] < 0.1385
    assert crit["prefactor"] > 0.994
    assert crit["bound"] >= REFERENCE_BOUND
    consts = rep["constants"]
    assert consts["default_gamma_f"] == DEFAULT_GAMMA_F == 0.145
    assert consts["reference_delta_j13"] == REFERENCE_DELTA_J13


def test_criterion_uncertified_is_not_an_error(capsys):
    code, rep = run_cli(capsys, "criterion", "--a", "1.4", "--gamma-f", "0.13")
    assert code == 0
    assert rep["errors"] == []
    assert rep["criterion"]["certified"] is False
    assert rep["criterion"]["bound"] < 0


def test_criterion_domain_error(capsys):
    code, rep = run_cli(capsys, "criterion", "--a", "0.9")
    assert code == 1
    assert rep["errors"]


def test_lattice_records(capsys):
    code, rep = run_cli(capsys, "lattice", "--m1", "2", "--m2", "2")
    assert code == 0
    lat = rep["lattice"]
    assert lat["n_vertices"] == 8
    assert lat["n_edges"] == 12
    assert lat["n_plaquettes"] == 4


def test_patch_records(capsys):
    code, rep = run_cli(capsys, "patch", "--kind", "F12", "--a", "1.2")
    assert code == 0
    patch = rep["patch"]
    assert patch["n_sites"] == 12
    assert patch["n_edges"] == 12
    assert patch["n_pendants"] == 6


def test_degeneracy_tables(capsys):
    code, rep = run_cli(capsys, "degeneracy", "--n", "6", "--kind", "F12")
    assert code == 0
    mult = rep["multiplicities"]
    assert [mult["by_j"][str(j)] for j in range(7)] == [15, 36, 40, 29, 15, 5, 1]
    assert mult["total_states"] == 729
    dims = {row["two_m"]: row for row in rep["sector_dimensions"]}
    assert dims[0]["dim"] == 1703636
    assert dims[0]["expected_kernel"] == 141
    assert dims[14]["expected_kernel"] == 0


def test_vbs_state(capsys):
    code, rep = run_cli(
        capsys, "vbs", "--kind", "F12", "--labels", "1,0,-1,1,0,-1"
    )
    assert code == 0
    vbs = rep["vbs"]
    assert vbs["two_m"] == 0
    assert vbs["h_residual"] <= 1e-10
    assert vbs["raw_norm"] > 0


def test_vbs_bad_labels(capsys):
    code, rep = run_cli(capsys, "vbs", "--kind", "F12", "--labels", "1,0")
    assert code == 1
    assert rep["errors"]


def test_gap_scan_small_sectors(capsys, tmp_path):
    spectra = tmp_path / "spectra.csv"
    code, rep = run_cli(
        capsys,
        "gap",
        "--kind",
        "F12",
        "--a",
        "1.2",
        "--sectors",
        "30,32,34,36",
        "--spectra-output",
        str(spectra),
    )
    assert code == 0
    table = rep["gap_table"]
    assert {e["j"] for e in table["entries"].values()} == {15, 16, 17, 18}
    for e in table["entries"].values():
        assert e["delta"] > 0
        assert e["residual"] <= 1e-8
    text = spectra.read_text().splitlines()
    assert text[0] == "two_m,index,eigenvalue,j,residual"
    for line in text[1:]:
        tm, idx, ev, j, res = line.split(",")
        int(tm), int(idx), int(j)
        assert float(ev) >= 0
        assert float(res) <= 1e-8


def test_gap_empty_sectors_rejected(capsys):
    code, rep = run_cli(capsys, "gap", "--kind", "F12", "--sectors", " ")
    assert code == 1
    assert any("sector" in err for err in rep["errors"])


def test_config_round_trip(tmp_path):
    cfg = RunConfig(
        command="criterion", a=1.6, gamma_f=0.2, seed=11, sectors="0,2"
    )
    path = tmp_path / "run.ini"
    path.write_text(config_to_ini(cfg))

    from akltgap.cli import load_config_file, make_config

    raw = load_config_file(str(path))
    raw["command"] = "criterion"
    assert make_config(raw) == cfg


def test_flag_overrides_config_file(capsys, tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[patch]\na = 1.2\n")
    code, rep = run_cli(
        capsys, "criterion", "--config", str(path), "--a", "1.4"
    )
    assert code == 0
    assert rep["config"]["a"] == 1.4


def test_config_file_without_flag_applies(capsys, tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[patch]\na = 1.6\n")
    code, rep = run_cli(capsys, "criterion", "--config", str(path))
    assert code == 0
    assert rep["config"]["a"] == 1.6


def test_unknown_config_key_rejected(capsys, tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[patch]\nflavor = up\n")
    code, rep = run_cli(capsys, "criterion", "--config", str(path))
    assert code == 1
    assert any("unknown config key" in err for err in rep["errors"])


def test_unknown_config_section_rejected(capsys, tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[esoterica]\na = 1.2\n")
    code, rep = run_cli(capsys, "criterion", "--config", str(path))
    assert code == 1
    assert rep["errors"]


def test_output_file_matches_stdout(capsys, tmp_path):
    out = tmp_path / "report.json"
    code, rep = run_cli(
        capsys, "criterion", "--a", "1.4", "--output", str(out)
    )
    assert code == 0
    assert json.loads(out.read_text()) == rep


def test_determinism_modulo_timings(capsys):
    _, rep1 = run_cli(
        capsys, "gap", "--kind", "F12", "--sectors", "34,36", "--a", "1.2"
    )
    _, rep2 = run_cli(
        capsys, "gap", "--kind", "F12", "--sectors", "34,36", "--a", "1.2"
    )
    assert strip_timings(rep1) == strip_timings(rep2)


@pytest.mark.slow
def test_report_constant_gamma(capsys):
    code, rep = run_cli(
        capsys, "report", "--m1", "12", "--m2", "12", "--a", "1.4"
    )
    assert code == 0
    assert rep["certified"] is True
    assert rep["criterion"]["bound"] >= REFERENCE_BOUND
    assert rep["cover_counts"]["edge_unweighted"] == 10
    assert rep["cover_counts"]["edge_weighted"] == 4
    assert rep["criterion"]["gamma_F_source"] == "configured-constant"
