from __future__ import annotations

import json

import pytest

from ptosc import main as cli
from ptosc.services.report import RunConfig


def test_verify_algebra_json(capsys):
    assert cli.main(["verify", "algebra", "--eps", "0.1", "--order", "6"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["suite"] == "algebra"
    assert data["status"] == "pass"
    assert data["config"]["epsilons"] == [0.1]


def test_json_output_is_byte_identical(capsys):
    argv = ["verify", "operators", "--eps", "0.15", "--n-max", "3"]
    assert cli.main(argv) == cli.EXIT_OK
    first = capsys.readouterr().out
    assert cli.main(argv) == cli.EXIT_OK
    assert capsys.readouterr().out == first


def test_text_and_csv_formats(capsys):
    assert cli.main(["verify", "operators", "--eps", "0.1", "--n-max", "2", "--format", "text"]) == 0
    assert ":: operators :: PASS" in capsys.readouterr().out
    assert cli.main(["verify", "operators", "--eps", "0.1", "--n-max", "2", "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("suite,check,measured,threshold,passed\n")


def test_report_to_file(tmp_path, capsys):
    out = tmp_path / "reports" / "ortho.json"
    assert cli.main(["verify", "orthonormality", "--eps", "0.2", "--n-max", "2", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text(encoding="utf-8"))["status"] == "pass"


def test_failed_verification_exits_one(monkeypatch):
    faulty = RunConfig.build(epsilon=0.2, n_max=10, oracle_points=(201, 401, 801), inject_energy_shift=1e-6)
    monkeypatch.setattr(cli, "_run_config", lambda args: faulty)
    assert cli.main(["verify", "spectrum", "--eps", "0.2"]) == cli.EXIT_FAILED


def test_tight_tolerance_fails():
    assert cli.main(["verify", "operators", "--eps", "0.1", "--n-max", "2", "--tol", "1e-30"]) == cli.EXIT_FAILED


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "spectrum", "--eps", "0.7"],
        ["verify", "orthonormality", "--n-max", "21"],
        ["verify", "algebra", "--order", "17"],
        ["export", "contour"],
    ],
)
def test_config_errors_exit_two(argv):
    assert cli.main(argv) == cli.EXIT_CONFIG


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        cli.main(["verify", "everything"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["verify", "algebra", "--format", "xml"])
    assert info.value.code == 2


def test_export_contour(tmp_path, capsys):
    assert cli.main(["export", "contour", "--eps", "0.25", "--samples", "5", "--q-range", "50"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "q,re_z,im_z"
    assert len(lines) == 6
    assert lines[3] == "0.0,0.0,0.0" or lines[3].startswith("0.0,")

    out = tmp_path / "contour.csv"
    assert cli.main(["export", "contour", "--eps", "0.7", "--allow-large-eps", "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8").count("\n") == 1002


def test_export_error_exits_one(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    assert cli.main(["export", "contour", "--eps", "0.1", "--out", str(blocker / "c.csv")]) == cli.EXIT_FAILED
