import json

import pytest

import main as cli
from handlers import EXIT_CONFIG, EXIT_INTEGRATOR, EXIT_OK, EXIT_SOLVER, EXIT_VERIFY
from main import main


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("HIPHOP_CONFIG", raising=False)


def test_constants(capsys):
    assert main(["constants"]) == 0
    out = capsys.readouterr().out
    assert "alpha_N = 4.25\n" in out
    assert "k       = 1\n" in out


def test_constants_json_with_sidecar(tmp_path, capsys):
    out = tmp_path / "constants.json"
    assert main(["constants", "--N", "1", "--r0", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["alphaN"] == pytest.approx(0.25)
    assert doc["params"] == {"N": 1, "m": 1.0, "r0": 1.0}
    meta = json.loads((tmp_path / "constants.json.meta.json").read_text())
    assert meta["command"] == "constants"
    assert "created" in meta


def test_malformed_config_exits_2(tmp_path, caplog):
    path = tmp_path / "bad.env"
    path.write_text("N = 3\nr0 = oops\n", encoding="utf-8")
    assert main(["constants", "--config", str(path)]) == 2
    assert "r0" in caplog.text


def test_invalid_flag_value_exits_2():
    assert main(["constants", "--N", "0"]) == 2


def test_simulate_csv(capsys, params):
    a = params.constants.a_star
    assert main(["simulate", "--a", repr(a), "--b", "0", "--u", "0", "--t-end", "1", "--dt", "0.5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,r,r_dot,d,d_dot,theta,z,z_dot,energy"
    assert len(lines) == 4
    first = [float(v) for v in lines[1].split(",")]
    assert first[:2] == [0.0, 2.0]


def test_simulate_is_deterministic(tmp_path, params, example_1):
    p = example_1
    args = ["simulate", "--a", repr(p.a), "--b", repr(p.b), "--u", repr(p.u), "--t-end", "2"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(first)]) == 0
    assert main(args + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_verify_published_point(capsys, example_2):
    p = example_2
    code = main([
        "verify", "--a", repr(p.a), "--b", repr(p.b), "--u", repr(p.u), "--T", repr(p.T), "--tol", "1e-2",
    ])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["residualNorm"] <= 5e-3
    assert report["passed"] is True


def test_verify_failure_exits_5(capsys, example_2):
    p = example_2
    code = main([
        "verify", "--a", repr(p.a), "--b", repr(p.b), "--u", repr(p.u), "--T", repr(p.T + 0.1), "--tol", "1e-8",
    ])
    assert code == 5


def test_period_curve_with_out_of_regime_row(capsys):
    assert main(["period-curve", "--u-grid", "1.0", "3.0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "u,c,t1,T,error"
    assert lines[1].startswith("1,-5,")
    assert lines[2] == "3,,,,out_of_regime"


def test_period_curve_all_rows_invalid():
    assert main(["period-curve", "--u-grid", "3.0"]) == 3


def test_solve_seed(capsys, params):
    assert main(["solve", "--b", "0", "--k", "1"]) == 0
    point = json.loads(capsys.readouterr().out)
    assert point["converged"] is True
    assert point["a"] == params.constants.a_star
    assert point["residual"][1] == 0.0
    assert set(point) >= {"stateGap", "symmetryDefect", "energyDrift", "iterations"}


def test_bodies_default_times(capsys, params):
    a = params.constants.a_star
    assert main(["bodies", "--a", repr(a), "--b", "0", "--u", "1", "--T", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,body,x,y,z"
    assert len(lines) == 1 + 5 * (2 * params.N + 1)
    assert lines[1].startswith("2,0,0,0,")


def test_classify_circular(capsys, params):
    a = params.constants.a_star
    assert main(["classify", "--a", repr(a), "--b", "0", "--u", "1", "--T", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["trajectoryCount"] == 1


def test_collision_exits_4():
    assert main(["simulate", "--a", "0", "--b", "0", "--u", "0", "--t-end", "50"]) == 4


def test_exit_codes_come_from_one_place():
    assert (EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INTEGRATOR, EXIT_VERIFY) == (0, 2, 3, 4, 5)
    assert cli.EXIT_SOLVER is EXIT_SOLVER
    assert not hasattr(cli, "EXIT_VERIFY")


def test_solved_point_passes_verify(capsys):
    assert main(["solve", "--b", "0", "--k", "1"]) == EXIT_OK
    point = json.loads(capsys.readouterr().out)
    args = ["--a", repr(point["a"]), "--b", repr(point["b"]), "--u", repr(point["u"]), "--T", repr(point["T"])]
    assert main(["verify", *args]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] is True
    assert report["residualNorm"] <= 1e-8


@pytest.mark.slow
def test_classify_with_refinement(capsys, polished_2):
    p = polished_2
    code = main(["classify", "--a", repr(p.a), "--b", repr(p.b), "--u", repr(p.u), "--T", repr(p.T), "--refine"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["trajectoryCount"] == 3
    assert doc["point"]["converged"] is True
