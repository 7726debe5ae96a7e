import numpy as np
import pytest

from lanelab import cli, io


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_no_command_prints_usage(capsys):
    code, _, err = run([], capsys)
    assert code == 2 and "usage" in err


def test_unknown_subcommand(capsys):
    code, _, err = run(["plot"], capsys)
    assert code == 2 and "usage" in err


def test_validation_failure_is_one_line(tmp_path, capsys):
    code, _, err = run(["ground-state", "--p", "0.5", "--out", str(tmp_path)], capsys)
    assert code == 2
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("status=fail command=ground-state error=ValidationError")


def test_config_file_parse_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("p=2\nwhat\n")
    code, _, err = run(["verify", "--config", str(cfg)], capsys)
    assert code == 2 and "error=ParseError" in err and "line 2" in err


def test_nonconvergence_exit_code(tmp_path, capsys):
    code, _, err = run(["ground-state", "--p", "2", "--n", "16", "--max-iter", "2",
                        "--out", str(tmp_path)], capsys)
    assert code == 1 and "error=NonConvergence" in err


def test_ground_state_outputs(tmp_path, capsys):
    code, out, _ = run(["ground-state", "--p", "2", "--n", "32", "--out", str(tmp_path)], capsys)
    assert code == 0
    for name in ("u.field", "omega.field", "constants.txt", "config.txt"):
        assert (tmp_path / name).exists()
    u = io.read_field(tmp_path / "u.field")
    w = io.read_field(tmp_path / "omega.field")
    np.testing.assert_allclose(w.values, u.values**2, rtol=1e-14)
    consts = io.read_constants(tmp_path / "constants.txt")
    assert f"c_p={io.fmt(consts['c_p'])}" in out
    assert "command=ground-state" in (tmp_path / "config.txt").read_text()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"p=3\nn=16\noutput_dir={tmp_path / 'a'}\n")
    code, _, _ = run(["ground-state", "--config", str(cfg), "--n", "24"], capsys)
    assert code == 0
    echo = (tmp_path / "a" / "config.txt").read_text()
    assert "n=24" in echo and "p=3" in echo


def test_maximize_reports_cross_route(tmp_path, capsys):
    code, out, _ = run(["maximize", "--p", "2", "--n", "32", "--out", str(tmp_path)], capsys)
    assert code == 0 and "mu_from_e1" in out
    assert io.read_field(tmp_path / "wstar.field").grid.n == 32


def test_evolve_audit(tmp_path, capsys):
    code, out, _ = run(["evolve", "--p", "2", "--n", "32", "--t-end", "0.05",
                        "--out", str(tmp_path)], capsys)
    assert code == 0 and "max_energy_drift" in out
    config, names, cols = io.read_csv(tmp_path / "trajectory.csv")
    assert config["command"] == "evolve" and names[0] == "t"
    assert cols["t"][-1] == pytest.approx(0.05, rel=1e-14)
    assert (tmp_path / "omega_final.field").exists()


def test_spectrum_on_supplied_fields(tmp_path, capsys):
    code, _, _ = run(["ground-state", "--p", "2", "--n", "32", "--out", str(tmp_path)], capsys)
    assert code == 0
    code, out, _ = run(["spectrum", "--n", "32", "--field", str(tmp_path / "omega.field"),
                        "--out", str(tmp_path)], capsys)
    assert code == 0
    text = (tmp_path / "spectrum.csv").read_text()
    assert "# command=spectrum" in text and "omega.field" in text


def test_spectrum_rejects_corrupt_field(tmp_path, capsys):
    bad = tmp_path / "bad.field"
    bad.write_bytes(b"XXXX0000")
    code, _, err = run(["spectrum", "--n", "16", "--field", str(bad), "--out", str(tmp_path)],
                       capsys)
    assert code == 2 and "error=FormatError" in err


def test_verify_passes(tmp_path, capsys):
    code, out, _ = run(["verify", "--p", "2", "--n", "64", "--out", str(tmp_path)], capsys)
    assert code == 0, out
    rows = [ln for ln in (tmp_path / "verify.csv").read_text().splitlines()
            if not ln.startswith("#")][1:]
    assert len(rows) == 12 and all(r.endswith(",1") for r in rows)


def test_stability_writes_report(tmp_path, capsys):
    code, out, _ = run(["stability", "--p", "2", "--n", "32", "--t-end", "0.2",
                        "--s", "2", "--s", "4", "--out", str(tmp_path)], capsys)
    assert code == 0, out
    config, names, _ = io.read_csv(tmp_path / "report.csv")
    assert "dist_L4" in names and config["resolved"]["norm_s"] == "2,4"
    assert config["limitation"]


@pytest.mark.parametrize("argv,name", [
    (["verify", "--p", "2", "--n", "32"], "verify.csv"),
    (["stability", "--p", "2", "--n", "32", "--t-end", "0.2", "--seed", "5"], "report.csv"),
])
def test_byte_identical_reruns(tmp_path, capsys, argv, name):
    # same resolved config, so the same output directory
    out = tmp_path / "run"
    assert cli.main(argv + ["--out", str(out)]) == 0
    first = (out / name).read_bytes()
    assert cli.main(argv + ["--out", str(out)]) == 0
    capsys.readouterr()
    assert (out / name).read_bytes() == first
