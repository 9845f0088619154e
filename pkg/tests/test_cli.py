import json

import pytest

from es_verify.controllers import parse_and_dispatch

QUIET = ["--log-level", "ERROR"]


def run_cli(capsys, *argv):
    status = parse_and_dispatch(list(argv) + QUIET)
    captured = capsys.readouterr()
    return status, captured.out, captured.err


def test_list_objectives(capsys):
    status, out, _ = run_cli(capsys, "list-objectives")
    assert status == 0
    listing = json.loads(out)
    assert [entry["id"] for entry in listing][:2] == ["sphere", "rosenbrock2d"]


def test_global_flags_after_subcommand(capsys):
    status, out, _ = run_cli(capsys, "list-objectives", "--format", "csv")
    assert status == 0
    assert out.splitlines()[0].startswith("id,")


@pytest.mark.parametrize("argv", [
    [],
    ["run", "--bogus"],
    ["verify", "--check", "no_such_check", "--objective", "sphere:d=2"],
    ["run", "--objective", "ackley", "--m0", "1,0", "--sigma0", "1"],
    ["run", "--objective", "sphere:d=2", "--m0", "1,x", "--sigma0", "1"],
    ["estimate", "--what", "xi", "--objective", "sphere:d=2", "--m", "1,0"],
    ["list-objectives", "--set", "checks.no_such_key=1"],
])
def test_usage_errors_exit_2(capsys, argv):
    status, _, _ = run_cli(capsys, *argv)
    assert status == 2


def test_unknown_objective_lists_valid_ids(capsys):
    _, _, err = run_cli(capsys, "run", "--objective", "ackley", "--m0", "1,0", "--sigma0", "1")
    assert "ackley" in err
    assert "rosenbrock2d" in err


def test_help_exits_0(capsys):
    assert parse_and_dispatch(["--help"]) == 0
    assert "verify" in capsys.readouterr().out


def test_run_prints_summary(capsys):
    status, out, _ = run_cli(capsys, "run", "--objective", "sphere:d=2", "--m0", "1,0", "--sigma0", "0.3",
                             "--max-iters", "50", "--seed", "3")
    assert status == 0
    summary = json.loads(out)
    assert summary["outcome"] == "BudgetExhausted"
    assert summary["iterations"] == 50
    assert summary["seed"] == 3
    assert summary["tau"] == pytest.approx(0.2)


def test_run_writes_trace(capsys, tmp_path):
    path = tmp_path / "trace.jsonl"
    status, _, _ = run_cli(capsys, "run", "--objective", "sphere:d=2", "--m0", "1,0", "--sigma0", "0.3",
                           "--max-iters", "40", "--format", "jsonl", "--out", str(path))
    assert status == 0
    lines = path.read_text().splitlines()
    assert len(lines) == 40
    first = json.loads(lines[0])
    assert list(first) == ["t", "m_before", "sigma_before", "x", "f_parent", "f_offspring", "accepted",
                           "sigma_after"]


def test_run_tau_and_c_minus_conflict(capsys):
    status, _, _ = run_cli(capsys, "run", "--objective", "sphere:d=2", "--m0", "1,0", "--sigma0", "0.3",
                           "--tau", "0.1", "--c-minus", "-0.1")
    assert status == 2


def test_estimate_success_on_saddle(capsys):
    status, out, _ = run_cli(capsys, "estimate", "--what", "success", "--objective", "quadratic_saddle:a=1",
                             "--m", "0,0", "--sigma", "0.5", "--n", "20000")
    assert status == 0
    result = json.loads(out)
    assert result["estimate"] == pytest.approx(0.5, abs=0.02)
    assert result["n_samples"] == 20000


def test_estimate_success_curve_as_jsonl(capsys):
    status, out, _ = run_cli(capsys, "estimate", "--what", "success", "--objective", "sphere:d=2",
                             "--m", "1,0", "--sigma", "0.1,1", "--n", "2000", "--format", "jsonl")
    assert status == 0
    assert len(out.splitlines()) == 2


def test_verify_single_check_uses_first_probe(capsys):
    status, out, _ = run_cli(capsys, "verify", "--check", "expected_decrease", "--objective", "sphere:d=2",
                             "--seed", "7", "--set", "checks.samples=20000")
    assert status == 0
    report = json.loads(out)
    assert report["check_id"] == "expected_decrease"
    assert report["parameters"]["sigma"] == 0.05
    assert report["n_samples"] == 20000
    assert report["passed"]


def test_verify_case_study_needs_no_objective(capsys):
    status, out, _ = run_cli(capsys, "verify", "--check", "case_study_rate", "--kind", "linear_ridge",
                             "--a", "1", "--n", "200000")
    assert status == 0
    assert json.loads(out)["bound"]["rate"] == pytest.approx(0.25)


def test_experiment_presets_listed(capsys):
    status, out, _ = run_cli(capsys, "experiment", "--list-presets")
    assert status == 0
    names = [item["preset"] for item in json.loads(out)]
    assert "occupancy" in names


def test_experiment_from_file(capsys, tmp_path):
    definition = tmp_path / "bare.json"
    definition.write_text(json.dumps({
        "name": "bare",
        "objective": "sphere:d=2",
        "init": {"m0": [1.0, 0.0], "sigma0": 0.3},
        "replicates": 2,
        "stopping": {"max_iterations": 120},
    }))
    out_path = tmp_path / "bare.report.json"
    status, out, _ = run_cli(capsys, "experiment", "--file", str(definition), "--jobs", "1",
                             "--out", str(out_path))
    assert status == 0
    summary = json.loads(out)
    assert summary["passed"]
    assert out_path.exists()
    assert (tmp_path / "bare.report.replicates.csv").exists()
    assert (tmp_path / "bare.report.long.csv").exists()


def test_experiment_file_missing(capsys, tmp_path):
    status, _, err = run_cli(capsys, "experiment", "--file", str(tmp_path / "missing.json"))
    assert status == 2
    assert "missing.json" in err


def test_unknown_configured_log_level_exits_2(capsys):
    status = parse_and_dispatch(["list-objectives", "--set", "runtime.log_level=CHATTY"])
    assert status == 2
    assert "CHATTY" in capsys.readouterr().err


def test_experiment_reports_are_byte_identical_on_rerun(capsys, tmp_path):
    definition = tmp_path / "rerun.json"
    definition.write_text(json.dumps({
        "name": "rerun",
        "objective": "sphere:d=2",
        "init": {"m0": [1.0, 0.0], "sigma0": 0.3},
        "replicates": 3,
        "stopping": {"max_iterations": 200},
    }))
    outputs = []
    for jobs in ("1", "2"):
        out_path = tmp_path / f"jobs{jobs}" / "rerun.json"
        out_path.parent.mkdir()
        status, _, _ = run_cli(capsys, "experiment", "--file", str(definition), "--seed", "99",
                               "--jobs", jobs, "--out", str(out_path))
        assert status == 0
        outputs.append([(out_path.parent / name).read_bytes()
                        for name in ("rerun.json", "rerun.replicates.csv", "rerun.long.csv")])
    assert outputs[0] == outputs[1]
