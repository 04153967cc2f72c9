import json

import pytest

from gspimage import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_m1_command_exact_output(capsys):
    code, out, _ = run_cli(
        capsys, "m1", "--ell", "5", "--level", "1", "--g", "1", "--H", "[[1,0],[0,1]]"
    )
    assert code == 0
    assert out == "m1 = 1\n"


def test_m1_multiple_ells(capsys):
    code, out, _ = run_cli(
        capsys, "m1", "--ell", "3,5", "--g", "1", "--H", "[[1,0],[0,1]]"
    )
    assert code == 0
    assert out == "ell=3: m1 = 1\nell=5: m1 = 1\n"


def test_scenario_cm_reports_ratio(capsys):
    code, out, _ = run_cli(capsys, "scenario", "cm", "--ell", "13", "--level", "1")
    assert code == 0
    assert "ratio=12" in out


def test_verify_mumford_json(capsys):
    code, out, _ = run_cli(capsys, "verify-mumford", "--ell", "3,5", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert [r["ell"] for r in doc["reports"]] == [3, 5]
    assert all(r["stabilizer_size"] == 2 for r in doc["reports"])
    assert [r["ratio"] for r in doc["reports"]] == ["1", "2"]


def test_json_roundtrip_is_byte_identical(capsys):
    code, out, _ = run_cli(
        capsys, "sweep", "cm", "--ell", "5,13", "--g", "2", "--format", "json"
    )
    assert code == 0
    assert json.dumps(json.loads(out), indent=2) + "\n" == out


def test_sweep_summary(capsys):
    code, out, _ = run_cli(
        capsys, "sweep", "selfproduct", "--ell", "3,5", "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["summary"]["monotone"] is True
    assert doc["summary"]["min_ratio"] == "2"
    assert doc["summary"]["max_ratio"] == "4"


def test_threads_do_not_change_reports(capsys):
    args = ["verify-mumford", "--ell", "3,5", "--format", "json"]
    _, out1, _ = run_cli(capsys, *args, "--threads", "1")
    _, out2, _ = run_cli(capsys, *args, "--threads", "4")
    assert out1 == out2


def test_stabilizer_command_mumford(capsys):
    code, out, _ = run_cli(
        capsys, "stabilizer", "mumford", "--ell", "3", "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["reports"][0]["stabilizer_size"] == 2
    elems = doc["reports"][0]["stabilizer_elements"]
    assert len(elems) == 2 and all(len(e) == 64 for e in elems)


def test_usage_errors_exit_one(capsys):
    assert run_cli(capsys, "m1", "--ell", "6", "--g", "1", "--H", "[[1,0]]")[0] == 1
    assert run_cli(capsys, "m1", "--ell", "5")[0] == 1  # missing --H
    assert run_cli(capsys, "scenario", "cm")[0] == 1  # missing --ell
    assert run_cli(capsys, "degrees")[0] == 1  # no scenario at all
    with pytest.raises(cli.UsageError):
        cli.parse_config(["no-such-command"])


def test_cap_exceeded_exit_one(capsys):
    code, _, err = run_cli(capsys, "scenario", "cm", "--ell", "13", "--g", "2", "--cap", "10")
    assert code == 1
    assert "cap" in err


def test_mumford_level_must_be_one(capsys):
    code, _, _ = run_cli(capsys, "scenario", "mumford", "--ell", "3", "--level", "2")
    assert code == 1


def test_scenario_file_custom(tmp_path, capsys):
    path = tmp_path / "scenario.txt"
    path.write_text(
        "scenario = custom\n"
        "ell = 3\n"
        "level = 1\n"
        "g = 1\n"
        "generators = [[[1,1],[0,1]],[[1,0],[1,1]],[[2,0],[0,1]]]\n"
        "H = [[1,0]]\n"
    )
    code, out, _ = run_cli(
        capsys, "degrees", "--scenario-file", str(path), "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["reports"][0]["deg_KH"] == 8  # index of the line stabilizer in GL2(F3)


def test_scenario_file_named(tmp_path, capsys):
    path = tmp_path / "cm.txt"
    path.write_text("scenario = cm\nell = 5\nlevel = 1\ng = 2\n")
    code, out, _ = run_cli(capsys, "degrees", "--scenario-file", str(path))
    assert code == 0
    assert "deg_KH=64" in out


def test_output_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run_cli(
        capsys,
        "scenario",
        "cm",
        "--ell",
        "5",
        "--g",
        "2",
        "--format",
        "json",
        "--out",
        str(target),
    )
    assert code == 0
    assert out == ""
    doc = json.loads(target.read_text())
    assert doc["reports"][0]["deg_KH"] == 64


def test_missing_scenario_file(capsys):
    code, _, _ = run_cli(capsys, "degrees", "--scenario-file", "/no/such/file")
    assert code == 1


def test_expectation_failure_exits_two(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise cli.mf.ExpectationFailed("forced for the exit-code path")

    monkeypatch.setattr(cli.mf, "verify_mu_s_failure", boom)
    code, _, err = run_cli(capsys, "verify-mumford", "--ell", "3")
    assert code == 2
    assert "expectation failed" in err
