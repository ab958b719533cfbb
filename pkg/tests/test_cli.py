import json

import pytest

from loggrowth.cli import main

F_SIGMA_MINUS_Q = [{"coeffs": [[0, -5]]}, {"coeffs": [[0, 1]]}]
LOG_X = {"log_components": [{"coeffs": []}, {"coeffs": [[0, 1]]}]}


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_log_x(capsys, files):
    code, out, _ = run(capsys, "classify", "--f", files("f.json", F_SIGMA_MINUS_Q),
                       "--y", files("y.json", LOG_X))
    assert code == 0
    assert json.loads(out)["classification"] == "ExactlyLogGrowth(1)"


def test_np_two_terms(capsys, files, tmp_path):
    csv_path = tmp_path / "pts.csv"
    code, out, _ = run(capsys, "np", "--series", files("s.json", {"coeffs": [[1, 1], [-1, 5]]}),
                       "-r", "1", "--csv", str(csv_path))
    assert code == 0
    assert json.loads(out)["slopes"] == [["1/2", "1"]]
    assert csv_path.read_text().splitlines()[0] == "v_n,n"


def test_malformed_json_reports_position(capsys, files):
    code, _, err = run(capsys, "np", "--series", files("bad.json", '{"coeffs": [[0, 1]'))
    assert code == 2
    assert "bad.json:1:" in err


def test_schema_violation(capsys, files):
    code, _, err = run(capsys, "np", "--series", files("s.json", {"terms": []}))
    assert code == 2 and "coeffs" in err


def test_infeasible_ladder(capsys, files):
    y = {"log_components": [{"coeffs": [[0, 1]], "trunc": 100}]}
    code, _, err = run(capsys, "classify", "--f", files("f.json", F_SIGMA_MINUS_Q),
                       "--y", files("y.json", y))
    assert code == 3 and "M <=" in err


def test_math_error_exit(capsys):
    code, _, err = run(capsys, "kedlaya", "--slopes", "1,1", "--base", "constant", "--budget", "5")
    assert code == 4 and "SearchFailure" in err


def test_unsatisfied_constraint_exit(capsys, files):
    code, out, _ = run(capsys, "frobsolve", "--f", files("f.json", F_SIGMA_MINUS_Q), "--T", "20")
    assert code == 5 and json.loads(out)["constraint_ok"] is False


def test_ore_factors_and_star(capsys, files):
    code, out, _ = run(capsys, "ore", "factors", "--slopes", "0,1")
    assert code == 0 and json.loads(out)["closed_formula_agrees"] is True
    code, out, _ = run(capsys, "ore", "star", "--f",
                       files("g.json", [{"coeffs": [[0, 5]]}, {"coeffs": [[0, 5]]}, {"coeffs": [[0, 1]]}]))
    assert json.loads(out)["satisfied"] is False


def test_ode_compare_table(capsys):
    code, out, err = run(capsys, "ode", "compare", "--example", "nilpotent", "--T", "40", "--table")
    rep = json.loads(out)
    assert code == 0 and rep["breaks"] == [["0", 1], ["1", 1]]
    assert "equality" in err


def test_ode_module_file(capsys, files):
    module = {"G": [[{"coeffs": []}, {"coeffs": [[0, 1]]}], [{"coeffs": []}, {"coeffs": []}]],
              "F": [[{"coeffs": [[0, 1]]}, {"coeffs": []}], [{"coeffs": []}, {"coeffs": [[0, 5]]}]],
              "log": True}
    code, out, _ = run(capsys, "ode", "slopes", "--module", files("m.json", module))
    assert code == 0 and json.loads(out)["special_slopes"] == ["0", "1"]


def test_outputs_are_deterministic(capsys):
    args = ("kedlaya", "--slopes", "0,1,2", "--base", "constant", "--seed", "3")
    first = run(capsys, *args)
    second = run(capsys, *args)
    assert first == second


def test_config_file_from_environment(capsys, files, monkeypatch):
    y = {"log_components": [{"coeffs": [[0, 1]], "trunc": 3000, "floor": 0}]}
    f = files("f.json", [{"coeffs": [[0, -1]]}, {"coeffs": [[0, 1]]}])
    assert run(capsys, "classify", "--f", f, "--y", files("y.json", y))[0] == 3
    monkeypatch.setenv("LOGGROWTH_CONFIG", files("cfg.json", {"M": 4}))
    code, out, _ = run(capsys, "classify", "--f", f, "--y", files("y.json", y))
    assert code == 0 and json.loads(out)["classification"] == "Bounded"
    monkeypatch.setenv("LOGGROWTH_CONFIG", files("cfg.json", {"bogus": 1}))
    code, _, _ = run(capsys, "ore", "factors", "--slopes", "1")
    assert code == 2


def test_ladder_csv(capsys, files, tmp_path):
    out_csv = tmp_path / "ladder.csv"
    code, _, _ = run(capsys, "ladder", "--y", files("y.json", LOG_X), "--M", "4", "--csv", str(out_csv))
    rows = out_csv.read_text().splitlines()
    assert code == 0 and rows[0] == "m,r,exponent,certified" and len(rows) == 6
