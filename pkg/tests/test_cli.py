"""Tests for plan files, result files and the command-line interface."""

import json
import subprocess
import sys

import pytest

from dispfock.errors import ValidationError
from dispfock.runner import cli, report
from dispfock.runner.plan import ExperimentPlan, PlanError, default_values, parse_plan


# --------------------------------------------------------------------------
# Plans
# --------------------------------------------------------------------------

def test_parse_plan_comments_and_errors():
    values = parse_plan("# header\nmemory.eta_s = 0.2  # echo\n\nrun.seed=7\n")
    assert values == {"memory.eta_s": "0.2", "run.seed": "7"}
    with pytest.raises(PlanError, match="expected 'key = value'"):
        parse_plan("memory.eta_s 0.2")
    with pytest.raises(PlanError, match="section.name"):
        parse_plan("eta_s = 0.2")


def test_defaults_hold_experimental_values():
    plan = ExperimentPlan.build("ndc")
    mem = plan.memory()
    assert (mem.eta_abs, mem.eta_s, mem.tau_s) == (0.922, 0.183, 50.0)
    assert plan.detector().eta_det == 0.256
    assert plan.ndc_config().alpha_sq == pytest.approx(83.0)
    assert plan.splitter().t == pytest.approx(0.54)
    assert plan.resamples == 1000


def test_plan_validation(tmp_path):
    with pytest.raises(PlanError, match="unknown plan keys"):
        ExperimentPlan("ndc", {**default_values(), "memory.colour": "red"})
    with pytest.raises(PlanError, match="resamples"):
        ExperimentPlan.build("ndc", overrides={"run.resamples": 50})
    with pytest.raises(PlanError, match="shots"):
        ExperimentPlan.build("ndc", overrides={"run.shots": 0})
    with pytest.raises(PlanError, match="unknown experiment"):
        ExperimentPlan.build("tomography")
    with pytest.raises(PlanError, match="cannot parse"):
        ExperimentPlan.build("ndc", overrides={"memory.eta_s": "lots"}).memory()


def test_plan_file_layering(tmp_path):
    path = tmp_path / "run.plan"
    path.write_text("memory.eta_s = 0.1\n")
    plan = ExperimentPlan.build("ndc", path, {"run.seed": 5})
    assert plan.memory().eta_s == 0.1
    assert plan.memory().eta_abs == 0.922
    assert plan.seed == 5


# --------------------------------------------------------------------------
# Result files
# --------------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    plan = ExperimentPlan.build("sweep")
    rows = [{"x": 0.0, "y": 0.5, "sigma": 0.01, "y_exact": 0.49}]
    path = report.write_csv(tmp_path / "s.csv", "sweep", rows, plan, plan.seed)
    text = path.read_text().splitlines()
    assert text[0] == "# dispfock-csv v1 sweep"
    assert text[1] == f"# seed = {plan.seed}"
    table, back = report.read_csv(path)
    assert table == "sweep"
    assert back == [{"x": "0.0", "y": "0.5", "sigma": "0.01", "y_exact": "0.49"}]


def test_read_csv_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValidationError):
        report.read_csv(path)


# --------------------------------------------------------------------------
# CLI
# --------------------------------------------------------------------------

def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_ideal_main_experiment(capsys):
    code, out, _ = run(capsys, "ndc", "--theta-deg", "22.5", "--ideal")
    assert code == 0
    assert out.splitlines()[0] == "d=2.000000"


def test_cli_hom_default_preset(capsys):
    code, out, _ = run(capsys, "hom", "--preset", "paper")
    assert code == 0
    v_e = float(out.splitlines()[0].split("=")[1])
    assert out.startswith("V_e=0.921")
    assert abs(v_e - 0.921) <= 0.005


def test_cli_missing_plan(capsys, tmp_path):
    missing = tmp_path / "nowhere.plan"
    code, _, err = run(capsys, "ndc", "--plan", str(missing))
    assert code == 1
    assert str(missing) in err and "not found" in err


def test_cli_error_messages_are_distinct(capsys, tmp_path):
    bad = tmp_path / "bad.plan"
    bad.write_text("this is not a plan\n")
    blocker = tmp_path / "file"
    blocker.write_text("")
    messages = []
    for argv in (
        ["ndc", "--frobnicate"],
        ["ndc", "--plan", str(bad)],
        ["ndc", "--out", str(blocker / "sub")],
    ):
        code, _, err = run(capsys, *argv)
        assert code == 1
        messages.append(err)
    assert "unrecognized arguments" in messages[0]
    assert "expected 'key = value'" in messages[1]
    assert "output directory" in messages[2]
    assert len(set(messages)) == 3


def test_cli_numerical_failure_exit_code(capsys, tmp_path):
    plan = tmp_path / "dark.plan"
    plan.write_text("detector.eta_det = 0\nndc.csp_noise = 0\n")
    code, _, err = run(capsys, "ndc", "--plan", str(plan), "--theta-deg", "22.5")
    assert code == 2
    assert "numerical failure" in err


def test_cli_help_and_missing_command(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    code, _, err = run(capsys)
    assert code == 1 and "required" in err


def test_cli_outputs_are_deterministic(capsys, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["ndc", "--out", str(tmp_path / name), "--jsonl", "--resamples", "200"]) == 0
    capsys.readouterr()
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["ndc.csv", "ndc.jsonl", "ndc.png", "violation.csv"]
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    records = [json.loads(line) for line in (tmp_path / "a" / "ndc.jsonl").read_text().splitlines()]
    assert [r["label"] for r in records] == ["phi1", "phi2", "phi12"]


def test_cli_seed_changes_samples(capsys, tmp_path):
    for seed in ("1", "2"):
        cli.main(["ndc", "--seed", seed, "--resamples", "200", "--out", str(tmp_path / seed)])
    capsys.readouterr()
    rows = [report.read_csv(tmp_path / s / "ndc.csv")[1] for s in ("1", "2")]
    assert rows[0][0]["n_plus"] != rows[1][0]["n_plus"]


def test_cli_sweep_one_row_per_point_any_job_count(capsys, tmp_path):
    plan = tmp_path / "sweep.plan"
    plan.write_text("sweep.start = 0\nsweep.stop = 45\nsweep.step = 5\nrun.resamples = 200\n")
    rows = {}
    for jobs in ("1", "2"):
        out = tmp_path / f"jobs{jobs}"
        assert cli.main(["sweep", "--plan", str(plan), "--jobs", jobs, "--out", str(out)]) == 0
        rows[jobs] = report.read_csv(out / "sweep.csv")[1]
    capsys.readouterr()
    assert len(rows["1"]) == 10
    assert rows["1"] == rows["2"]
    assert (tmp_path / "jobs1" / "sweep.png").stat().st_size > 0


def test_cli_sweep_alpha(capsys, tmp_path):
    plan = tmp_path / "alpha.plan"
    plan.write_text("sweep.param = alpha_sq\nsweep.start = 10\nsweep.stop = 80\nsweep.step = 35\n"
                    "run.resamples = 200\n")
    code, out, _ = run(capsys, "sweep", "--plan", str(plan))
    assert code == 0
    assert [line.split()[0] for line in out.splitlines()] == ["alpha_sq=10.0000", "alpha_sq=45.0000", "alpha_sq=80.0000"]


def test_cli_bad_sweep_parameter(capsys, tmp_path):
    plan = tmp_path / "bad.plan"
    plan.write_text("sweep.param = phase\n")
    code, _, err = run(capsys, "sweep", "--plan", str(plan))
    assert code == 1 and "sweep.param" in err


def test_cli_size_and_fit(capsys, tmp_path):
    plan = tmp_path / "small.plan"
    plan.write_text("size.grid = 1, 10\n")
    code, out, _ = run(capsys, "size", "--plan", str(plan), "--out", str(tmp_path / "size"))
    assert code == 0
    assert "corrected experimental size" in out
    assert "stored excitations=76" in out
    _, rows = report.read_csv(tmp_path / "size" / "size.csv")
    assert len(rows) == 3 and rows[-1]["reference_N"] == "5.14"
    code, out, _ = run(capsys, "fit-noise", "--out", str(tmp_path / "fit"))
    assert code == 0 and "csp_noise=" in out
    assert (tmp_path / "fit" / "fit_knobs.csv").exists()


def test_cli_log_level(capsys, monkeypatch):
    monkeypatch.setenv("DISPFOCK_LOG", "debug")
    assert cli.main(["ndc", "--theta-deg", "0", "--ideal", "--resamples", "100"]) == 0


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dispfock", "ndc", "--theta-deg", "22.5", "--ideal"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("d=2.000000")
