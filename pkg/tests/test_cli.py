import json
import math

import pytest

from bifoliation.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_constant_bifoliates(capsys):
    code, out, _ = run(["check", "--surface", "horosphere", "--kappa", "-1", "--field", "constant",
                        "--assert"], capsys)
    assert code == 0
    assert "verdict: bifoliates" in out


def test_check_hopf_perturbed(capsys):
    code, out, _ = run(["check", "--surface", "sphere", "--rho", "1", "--kappa", "0",
                        "--field", "hopf-perturbed", "--eps", "0.1", "--assert"], capsys)
    assert code == 0 and "verdict: bifoliates" in out


def test_check_rotating_fails(capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, out, _ = run(["check", "--surface", "horosphere-plane", "--kappa", "-1", "--field",
                        "rotating", "--freq", "2", "--out", str(out_file)], capsys)
    assert code == 0
    assert "verdict: fails" in out
    code, _, _ = run(["check", "--surface", "horosphere-plane", "--field", "rotating", "--assert"],
                     capsys)
    assert code == 1
    rep = json.loads(out_file.read_text())
    assert rep["schema"] == "bifoliation.report/1"
    x = rep["results"]["condition_b"]["witnesses"][0]["point"][0]
    assert abs(math.sin(2 * x)) == pytest.approx(1.0, abs=1e-2)
    assert rep["results"]["agree"]


def test_field_selects_its_surface(capsys):
    code, out, _ = run(["check", "--field", "rotating", "--assert"], capsys)
    assert code == 1 and "Horosphere (kappa=-1, n=2)" in out
    code, out, _ = run(["check", "--field", "u-eps"], capsys)
    assert code == 0 and "Horosphere" in out


def test_check_fermi_round_sphere_grid_misses_core(capsys):
    # the failure set is the circle e^{it}, which has measure zero; the sample
    # grid does not contain it, so the grid verdict passes
    code, out, _ = run(["check", "--field", "fermi-bizero", "--kappa", "1", "--rho", "1",
                        "--samples", "100", "--assert"], capsys)
    assert code == 0


def test_reports_are_byte_identical(capsys, tmp_path):
    path = tmp_path / "a.json"
    argv = ["check", "--field", "hopf", "--samples", "50", "--out", str(path)]
    run(argv, capsys)
    first = path.read_bytes()
    run(argv, capsys)
    assert path.read_bytes() == first
    assert "wall_clock_seconds" not in json.loads(first)
    run(argv + ["--timing"], capsys)
    assert "wall_clock_seconds" in json.loads(path.read_text())


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nfield = rotating\nsurface = horosphere-plane\nsamples = 30\n"
                   "seed = 4\n")
    out_file = tmp_path / "c.json"
    run(["check", "--config", str(cfg), "--samples", "40", "--out", str(out_file)], capsys)
    rep = json.loads(out_file.read_text())
    assert rep["config"]["field"] == "rotating"
    assert rep["config"]["samples"] == 40
    assert rep["config"]["seed"] == 4
    assert rep["config"]["kappa"] == -1.0


def test_bad_config(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    code, _, err = run(["check", "--config", str(cfg)], capsys)
    assert code == 2 and "unknown key" in err


def test_usage_errors(capsys):
    assert run(["check", "--field", "hopf", "--surface", "horosphere"], capsys)[0] == 2
    code, _, err = run(["check", "--field", "nope"], capsys)
    assert code == 2 and "fields:" in err
    assert run(["orbit", "--steps", "0"], capsys)[0] == 2
    assert run(["orbit", "--h", "1.5"], capsys)[0] == 2
    assert run(["check", "--tol", "-1"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_orbit_axis_drift(capsys, tmp_path):
    out_file = tmp_path / "axis.json"
    code, out, _ = run(["orbit", "--h", "0.6", "--steps", "100", "--out", str(out_file)], capsys)
    assert code == 0
    rep = json.loads(out_file.read_text())
    cl = rep["results"]["classification"]
    assert cl["kind"] == "unbounded"
    assert cl["drift"] == pytest.approx(1.6, abs=1e-8)
    lines = (tmp_path / "axis.csv").read_text().splitlines()
    assert len(lines) == 102


def test_orbit_period_eight(capsys, tmp_path):
    r = math.tan(math.pi / 8)
    h = math.sqrt(1 - r * r)
    csv_file = tmp_path / "p.csv"
    code, out, _ = run(["orbit", "--h", repr(h), "--start", f"0,1,{r!r}", "--steps", "16",
                        "--csv", str(csv_file)], capsys)
    assert code == 0
    assert "periodic period 8" in out
    assert csv_file.exists()


def test_volume_commands(capsys, tmp_path):
    out_file = tmp_path / "v.json"
    code, out, _ = run(["volume", "--field", "hopf", "--surface", "sphere", "--rho", "1",
                        "--kappa", "0", "--samples", "50", "--out", str(out_file), "--assert"],
                       capsys)
    assert code == 0 and "verdict: preserves volume" in out
    rep = json.loads(out_file.read_text())
    assert rep["results"]["max_det_minus_1"]["analytic"] < 1e-8
    code, out, _ = run(["volume", "--field", "hopf-stereo", "--surface", "horosphere",
                        "--kappa", "-1", "--samples", "50", "--mc", "5"], capsys)
    assert code == 0
    assert "does not preserve volume" in out
    assert "coefficient of s^2" in out


def test_contact_commands(capsys):
    code, out, _ = run(["contact", "--field", "constant", "--surface", "horosphere"], capsys)
    assert "not contact anywhere sampled" in out
    code, out, _ = run(["contact", "--field", "hopf", "--kappa", "1", "--rho", "1", "--assert"],
                       capsys)
    assert code == 0 and "contact at every sample" in out


def test_jacobi_and_catalog(capsys):
    code, out, _ = run(["jacobi-test", "--samples", "5"], capsys)
    assert code == 0 and "verdict: pass" in out
    code, out, _ = run(["catalog"], capsys)
    assert code == 0
    for name in ("hopf-stereo", "w-eps", "rotating", "horosphere-plane"):
        assert name in out
