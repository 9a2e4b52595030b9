import json

import pytest

from beamreg.cli import main
from beamreg.scenarios import emit_scenario, load_builtin_scenario


def test_verify_builtin_name_exit_zero(tmp_path, capsys):
    code = main(["verify", "--scenario", "zero_data",
                 "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "verify: PASS" in out
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["passed"] is True


def test_solve_writes_trajectory_csv(tmp_path):
    code = main(["solve", "--scenario", "zero_data", "--out", str(tmp_path),
                 "--sample-points", "5", "--stride", "100"])
    assert code == 0
    csv = (tmp_path / "trajectory.csv").read_text()
    assert csv.splitlines()[0] == "t,x,u,ut,uxx"
    # csv body lives in the file, not duplicated inside the JSON report
    report = json.loads((tmp_path / "solve_report.json").read_text())
    assert "csv" not in report


def test_scenario_file_path(tmp_path):
    path = tmp_path / "sc.json"
    path.write_text(emit_scenario(load_builtin_scenario("zero_data")))
    assert main(["verify", "--scenario", str(path)]) == 0


def test_eps_exponent_overrides(tmp_path):
    code = main(["verify", "--scenario", "zero_data", "--out", str(tmp_path),
                 "--eps-min-exp", "3", "--eps-max-exp", "5"])
    assert code == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert [e["eps"] for e in report["entries"]] == [0.125, 0.0625, 0.03125]


def test_failing_check_exit_one(tmp_path):
    code = main(["verify", "--scenario", "winkler", "--ft-scale", "-1.0"])
    assert code == 1


def test_invalid_scenario_exit_two(tmp_path, capsys):
    doc = json.loads(emit_scenario(load_builtin_scenario("zero_data")))
    doc["beam"]["x0"] = 1.7
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code = main(["verify", "--scenario", str(path)])
    assert code == 2
    assert "x0" in capsys.readouterr().err


def test_strict_flag_exit_two(capsys):
    code = main(["verify", "--scenario", "point_load", "--strict"])
    assert code == 2
    assert "under-resolved" in capsys.readouterr().err


def test_unknown_builtin_scenario():
    with pytest.raises(SystemExit):
        main(["verify", "--scenario", "does_not_exist"])


def test_deterministic_artifacts(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--scenario", "zero_data", "--out", str(a)]) == 0
    assert main(["verify", "--scenario", "zero_data", "--out", str(b)]) == 0
    assert (a / "verify_report.json").read_bytes() == \
        (b / "verify_report.json").read_bytes()
