import csv
import json

import pytest

import core_pipeline
from errors import SafetyViolation
from main import EXIT_CAP, EXIT_CONFIG, EXIT_EMPTY_INVARIANT, EXIT_OK, EXIT_SAFETY, main
from tests.conftest import CONFIG_DIR

SCALAR = str(CONFIG_DIR / "scalar.json")


def write_system(path, A, B, E, X, U, W):
    def box(lo, hi):
        return {"H": [[1.0], [-1.0]], "h": [hi, -lo]}

    path.write_text(json.dumps({
        "A": [[A]], "B": [[B]], "E": [[E]], "C": [[1.0]],
        "X": box(*X), "U": box(*U), "W": box(*W),
    }), encoding="utf-8")
    return str(path)


def test_invariant_command(tmp_path, capsys):
    code = main(["invariant", "--system", SCALAR, "--out", str(tmp_path)])
    assert code == EXIT_OK

    document = json.loads((tmp_path / "c_inf.json").read_text(encoding="utf-8"))
    assert document["converged"] is True
    assert document["iterations"] == 1
    assert document["interior_radius"] == pytest.approx(1.0)
    assert "converged = true" in capsys.readouterr().out


def test_empty_constraint_set_is_a_config_error(tmp_path, capsys):
    # X = {x : x <= -1, -x <= -1} has no points
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "A": [[0.5]], "B": [[1.0]], "E": [[1.0]], "C": [[1.0]],
        "X": {"H": [[1.0], [-1.0]], "h": [-1.0, -1.0]},
        "U": {"H": [[1.0], [-1.0]], "h": [1.0, 1.0]},
        "W": {"H": [[1.0], [-1.0]], "h": [0.0, 0.0]},
    }), encoding="utf-8")
    assert main(["invariant", "--system", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "Error:" in capsys.readouterr().err


def test_missing_system_file(tmp_path):
    code = main(["invariant", "--system", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_empty_invariant_exit_code(tmp_path):
    system = write_system(tmp_path / "drift.json", 1.0, 1.0, 1.0, (-1, 1), (-0.1, 0.1), (2.5, 3.0))
    assert main(["invariant", "--system", system, "--out", str(tmp_path)]) == EXIT_EMPTY_INVARIANT


def test_iteration_cap_exit_code(tmp_path, capsys):
    system = write_system(tmp_path / "unstable.json", 2.0, 0.0, 1.0, (-1, 1), (-1, 1), (0, 0))
    code = main(["invariant", "--system", system, "--max-iter", "1", "--out", str(tmp_path)])
    assert code == EXIT_CAP
    captured = capsys.readouterr()
    assert "converged = false" in captured.out
    assert (tmp_path / "c_inf.json").exists()


def test_safetime_cap_exit_code(tmp_path, capsys):
    code = main(["safetime", "--system", SCALAR, "--j-max", "4", "--out", str(tmp_path)])
    assert code == EXIT_CAP
    assert "alpha ≥ 4 (cap reached)" in capsys.readouterr().out

    document = json.loads((tmp_path / "safetime.json").read_text(encoding="utf-8"))
    assert document["alpha"] == 4
    assert document["hit_cap"] is True


def test_schedule_command(tmp_path, capsys):
    code = main(["schedule", "--system", SCALAR, "--j-max", "3", "--horizon", "12", "--out", str(tmp_path)])
    assert code == EXIT_OK
    schedule = json.loads((tmp_path / "schedule.json").read_text(encoding="utf-8"))
    assert schedule["instants"] == [0, 3, 6, 9]
    out = capsys.readouterr().out
    assert "transmissions = 4" in out
    assert "savings = 0.6667" in out


def test_simulate_command(tmp_path):
    code = main([
        "simulate", "--system", SCALAR, "--j-max", "4", "--horizon", "12",
        "--x0", "0.5", "--gnuplot-script", "--out", str(tmp_path),
    ])
    assert code == EXIT_OK

    with open(tmp_path / "trajectory.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["t", "x1", "y", "u", "w", "transmitted"]
    assert len(rows) == 1 + 13
    assert rows[-1][3:] == ["", "", ""]

    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["alpha"] == 4
    assert report["transmissions"] == 3
    assert report["savings"] == pytest.approx(0.75)
    assert report["safe_time_hit_cap"] is True
    assert (tmp_path / "plot.gp").exists()
    assert (tmp_path / "trajectory.json").exists()


def test_infeasible_schedule_file(tmp_path, capsys):
    schedule = tmp_path / "sched.json"
    schedule.write_text(json.dumps([0, 5, 10]), encoding="utf-8")
    code = main([
        "simulate", "--system", SCALAR, "--j-max", "4", "--horizon", "12",
        "--schedule", f"@{schedule}", "--out", str(tmp_path),
    ])
    assert code == EXIT_CONFIG
    assert "infeasible" in capsys.readouterr().err


def test_period_longer_than_alpha(tmp_path):
    code = main(["schedule", "--system", SCALAR, "--j-max", "2", "--period", "3", "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_config_file_with_unknown_key(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("horizon: 10\nspeed: fast\n", encoding="utf-8")
    assert main(["invariant", "--config", str(config), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_usage_errors_exit_with_config_code(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["simulate", "--horizon", "abc"])
    assert excinfo.value.code == EXIT_CONFIG
    assert "invalid int value" in capsys.readouterr().err

    with pytest.raises(SystemExit) as excinfo:
        main(["teleport"])
    assert excinfo.value.code == EXIT_CONFIG


def test_negative_seed_is_a_config_error(tmp_path):
    assert main(["invariant", "--system", SCALAR, "--seed", "-1", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_scalar_safetime_has_no_alternate_form(tmp_path, capsys):
    main(["safetime", "--system", SCALAR, "--j-max", "2", "--out", str(tmp_path)])
    assert "-form alpha" not in capsys.readouterr().out
    document = json.loads((tmp_path / "safetime.json").read_text(encoding="utf-8"))
    assert "alternate_form" not in document


def test_safety_violation_exit_code(tmp_path, monkeypatch, capsys):
    def violate(self, schedule):
        raise SafetyViolation(5, [1.5])

    monkeypatch.setattr(core_pipeline.SelfTriggeredPipeline, "simulate", violate)
    code = main(["simulate", "--system", SCALAR, "--j-max", "2", "--horizon", "8", "--out", str(tmp_path)])
    assert code == EXIT_SAFETY
    assert "t=5" in capsys.readouterr().err


def test_unknown_log_level_warns(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("INVSCHED_LOG", "chatty")
    assert main(["invariant", "--system", SCALAR, "--out", str(tmp_path)]) == EXIT_OK
    assert "INVSCHED_LOG" in capsys.readouterr().err


def test_scalar_demo_is_reproducible(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    args = ["demo", "--system", SCALAR, "--j-max", "3", "--horizon", "20", "--disturbance", "uniform"]
    assert main(args + ["--out", str(first)]) == EXIT_OK
    assert main(args + ["--out", str(second)]) == EXIT_OK

    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


# ----------------------------------------------------------------------
# artificial pancreas
#
# The printed A certifies alpha = 1, the companion form (--a32-zero) alpha = 3.

@pytest.mark.slow
def test_aps_safetime_reports_both_matrix_forms(tmp_path, capsys):
    assert main(["safetime", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "alpha = 1" in out
    assert "companion-form alpha = 3" in out

    document = json.loads((tmp_path / "safetime.json").read_text(encoding="utf-8"))
    assert document["alpha"] == 1
    assert document["matrix_form"] == "printed"
    assert document["alternate_form"] == {"form": "companion", "alpha": 3, "converged": True, "hit_cap": False}


@pytest.mark.slow
def test_companion_aps_safetime(tmp_path, capsys):
    assert main(["safetime", "--a32-zero", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "alpha = 3" in out
    assert "printed-form alpha = 1" in out


@pytest.mark.slow
def test_companion_aps_safetime_with_small_cap(tmp_path, capsys):
    assert main(["safetime", "--a32-zero", "--j-max", "2", "--out", str(tmp_path)]) == EXIT_CAP
    assert "alpha ≥ 2 (cap reached)" in capsys.readouterr().out


@pytest.mark.slow
def test_aps_invariant_iteration_cap(tmp_path):
    assert main(["invariant", "--max-iter", "1", "--out", str(tmp_path)]) == EXIT_CAP


@pytest.mark.slow
def test_companion_aps_simulation_savings(tmp_path):
    assert main(["simulate", "--a32-zero", "--horizon", "300", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["alpha"] == 3
    assert report["transmissions"] == 100
    assert report["savings"] == pytest.approx(0.6667, abs=1e-4)
    assert report["paper_claim"] == 0.6767


@pytest.mark.slow
def test_printed_aps_simulation_has_no_savings(tmp_path):
    assert main(["simulate", "--horizon", "30", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["alpha"] == 1
    assert report["transmissions"] == 30
    assert report["savings"] == 0.0


@pytest.mark.slow
def test_aps_demo_is_reproducible(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    args = ["demo", "--config", str(CONFIG_DIR / "demo.yaml"), "--horizon", "30"]
    assert main(args + ["--out", str(first)]) == EXIT_OK
    assert main(args + ["--out", str(second)]) == EXIT_OK
    for path in first.iterdir():
        assert path.read_bytes() == (second / path.name).read_bytes()
    report = json.loads((first / "report.json").read_text(encoding="utf-8"))
    assert report["alpha"] == 3
    assert report["matrix_form"] == "companion"
    assert report["alternate_form"]["form"] == "printed"
    assert report["alternate_form"]["alpha"] == 1
