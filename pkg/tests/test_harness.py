import json

import pytest
from pydantic import ValidationError

from core.advisor import CyclicFamily, build_pareto_schedule
from core.bounds import f_curve
from core.common_types import AdviceMode, Scenario, SimulationConfig, VerifyLevel
from core.errors import DomainError
from main import EXIT_CONFIG, EXIT_FAILED, EXIT_PASSED, main
from simulation_agent import run_scenario
from tools import check_config, compare_bounds_table, verify_theorems
from tools.summarize import margin
from tools.validators import SUITES, pareto_tightness


def test_config_rejects_out_of_range_parameters():
    with pytest.raises(ValidationError):
        SimulationConfig(scenario=Scenario.PARETO, k=1, r=3.5)
    with pytest.raises(ValidationError):
        SimulationConfig(scenario=Scenario.RFT, p=2, f=2, r=8.0)
    with pytest.raises(ValidationError):
        SimulationConfig(scenario=Scenario.NOISY, k=2, H=3)
    with pytest.raises(ValidationError):
        SimulationConfig(scenario=Scenario.NOISY, t_grid=0)


def test_check_config_reports_scenario_problems():
    assert check_config(SimulationConfig(scenario=Scenario.NOISY, k=3, H=1)) == []
    problems = check_config(SimulationConfig(scenario=Scenario.NOISY, k=3, H=2, n=5))
    assert len(problems) == 2
    assert check_config(SimulationConfig(scenario=Scenario.PARETO, k=1))
    assert check_config(SimulationConfig(scenario=Scenario.NOISY, k=3, H=1, channel_mode=AdviceMode.ADVERSARIAL))


def test_invalid_config_fails_the_run():
    run = run_scenario(SimulationConfig(scenario=Scenario.NOISY, k=3, H=1, n=5))
    assert not run.summary.passed
    assert run.errors
    assert run.records == []


def test_pareto_scenario():
    run = run_scenario(SimulationConfig(scenario=Scenario.PARETO, k=1, r=5.0, t_grid=100))
    assert run.summary.passed
    kinds = {record.kind for record in run.records}
    assert kinds == {"consistency", "robustness"}
    assert run.summary.max_achieved <= 5.0


@pytest.mark.parametrize("mode", [AdviceMode.SCRIPTED, AdviceMode.TRUTHFUL, AdviceMode.RANDOM])
def test_noisy_scenario(mode):
    run = run_scenario(SimulationConfig(scenario=Scenario.NOISY, k=3, H=1, t_grid=100, channel_mode=mode, seeds=[0, 1]))
    assert run.summary.passed
    assert run.summary.probes > 100
    assert run.summary.sampled == (mode is AdviceMode.RANDOM)


def test_robust_noisy_scenario_checks_both_bounds():
    run = run_scenario(SimulationConfig(scenario=Scenario.ROBUST_NOISY, k=2, H=1, r=5.0, t_grid=50))
    assert run.summary.passed
    assert {record.kind for record in run.records} == {"advice", "robustness"}
    assert all(record.bound == 5.0 for record in run.records if record.kind == "robustness")


def test_rft_scenario():
    run = run_scenario(SimulationConfig(scenario=Scenario.RFT, p=3, f=1, r=8.0, horizon=400))
    assert run.summary.passed
    survivors = [record for record in run.records if record.kind == "survivor"]
    assert len(survivors) == 3
    assert all(record.bound == 8.0 for record in survivors)


@pytest.mark.parametrize("mode", [AdviceMode.SCRIPTED, AdviceMode.ADVERSARIAL])
def test_game_scenario(mode):
    run = run_scenario(SimulationConfig(scenario=Scenario.GAME, k=4, H=1, channel_mode=mode, seeds=list(range(5))))
    assert run.summary.passed
    if mode is AdviceMode.ADVERSARIAL:
        assert all(record.lower for record in run.records)
        assert len(run.records) == 6
    else:
        assert len(run.records) == 16
        assert run.transcripts


def test_margin_is_signed_by_direction():
    run = run_scenario(SimulationConfig(scenario=Scenario.GAME, k=3, H=0, channel_mode=AdviceMode.ADVERSARIAL))
    assert all(margin(record) >= 0 for record in run.records)


def test_pareto_tightness_detects_a_mutated_base():
    plan = build_pareto_schedule(5.0, 1)
    assert pareto_tightness(plan, 5.0) <= 1e-6
    mutated = plan.model_copy(update={"family": CyclicFamily(base=plan.family.base * 1.01, count=2)})
    assert pareto_tightness(mutated, 5.0) > 1e-6


def test_verify_runs_selected_suites():
    report = verify_theorems(VerifyLevel.QUICK, tags=["Prop1", "Thm-lower-pareto", "Thm-noisy-lower"])
    assert report.tags() == ["Prop1", "Thm-lower-pareto", "Thm-noisy-lower"]
    assert report.passed


def test_every_suite_is_registered():
    assert list(SUITES) == [
        "Prop1", "Thm-zetas", "Cor-merge", "Thm-lower-pareto", "Thm-pareto-upper", "Thm-cyclic-upper",
        "Thm-noisy-upper", "Thm-cyclic-lower", "Thm-noisy-lower", "Thm-mult-alpha-faulty", "Thm-rft",
    ]


@pytest.mark.slow
@pytest.mark.parametrize("level", [VerifyLevel.QUICK, VerifyLevel.FULL])
def test_verify_all_suites(level):
    report = verify_theorems(level)
    assert report.tags() == list(SUITES)
    assert report.passed, [check.detail for check in report.checks if not check.passed]


def test_bounds_table():
    table = compare_bounds_table(range(1, 13), [0.1, 0.25])
    assert len(table["rows"]) == 24
    first = table["rows"][0]
    assert first["H"] == 0
    assert first["prior_work"] is None
    assert table["crosses_below_prior"][0.1] == 1
    assert set(table["monotone_informational"]) == {0.1, 0.25}
    row = next(r for r in table["rows"] if r["k"] == 8 and r["tau"] == 0.25)
    assert row["prior_work"] == pytest.approx(f_curve(0.5))

    with_r = compare_bounds_table([4], [0.25], r=5.0)
    assert "robust_noisy_upper" in with_r["rows"][0]
    with pytest.raises(DomainError):
        compare_bounds_table([4], [0.6])


def test_cli_bounds(capsys):
    assert main(["--quiet", "bounds", "--k", "3", "--H", "1", "--r", "5"]) == EXIT_PASSED
    report = json.loads(capsys.readouterr().out)
    assert report["U"] == 6
    assert report["zeta2"] == pytest.approx((5 + 5 ** 0.5) / 2)


def test_cli_schedule_writes_contract_table(tmp_path):
    csv_path = tmp_path / "contracts.csv"
    code = main(["--quiet", "schedule", "--mode", "noisy", "--k", "2", "--H", "0", "--csv", str(csv_path),
                 "--contracts", "5"])
    assert code == EXIT_PASSED
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "member,j,length,completion_time"
    assert len(lines) == 1 + 4 * 5


def test_cli_config_errors(tmp_path):
    assert main(["--quiet", "simulate", "--scenario", "pareto", "--k", "1", "--r", "3"]) == EXIT_CONFIG
    assert main(["--quiet", "simulate", "--scenario", "noisy", "--k", "3", "--H", "2"]) == EXIT_CONFIG
    assert main(["--quiet", "schedule", "--mode", "untrusted", "--k", "1"]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text('{"scenario": "nope"}', encoding="utf-8")
    assert main(["--quiet", "simulate", "--config", str(bad)]) == EXIT_CONFIG


def test_cli_simulate_with_config_file(tmp_path):
    config = tmp_path / "scenario.json"
    config.write_text(SimulationConfig(scenario=Scenario.NOISY, k=2, H=0, t_grid=20).model_dump_json(), encoding="utf-8")
    report = tmp_path / "report.json"
    assert main(["--quiet", "simulate", "--config", str(config), "--t-grid", "30", "--out", str(report)]) == EXIT_PASSED
    saved = json.loads(report.read_text(encoding="utf-8"))
    assert saved["config"]["t_grid"] == 30
    assert saved["summary"]["passed"]


def test_cli_game_transcript_round_trip(tmp_path):
    transcript = tmp_path / "game.jsonl"
    assert main(["--quiet", "game", "--k", "4", "--H", "1", "--transcript", str(transcript)]) == EXIT_PASSED
    assert main(["--quiet", "game", "--k", "4", "--H", "1", "--replay", str(transcript)]) == EXIT_PASSED

    rows = [json.loads(line) for line in transcript.read_text(encoding="utf-8").splitlines()]
    rows[-1]["output_index"] = (rows[-1]["output_index"] + 1) % 16
    tampered = tmp_path / "tampered.jsonl"
    tampered.write_text("\n".join(json.dumps(row) for row in rows), encoding="utf-8")
    assert main(["--quiet", "game", "--k", "4", "--H", "1", "--replay", str(tampered)]) == EXIT_FAILED


def test_cli_verify_reports_each_selected_suite(tmp_path):
    report_path = tmp_path / "verify.json"
    code = main(["--quiet", "verify", "--tag", "Prop1", "--tag", "Thm-noisy-lower", "-o", str(report_path)])
    assert code == EXIT_PASSED
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert [(check["tag"], check["passed"]) for check in report["checks"]] == [
        ("Prop1", True),
        ("Thm-noisy-lower", True),
    ]


@pytest.mark.parametrize("argv", [
    ["bounds", "--k", "3", "--H", "1", "--r", "3"],
    ["bounds", "--k", "2", "--H", "3", "--r", "5"],
    ["schedule", "--mode", "noisy", "--k", "3", "--H", "2"],
    ["schedule", "--mode", "untrusted", "--k", "1", "--r", "3.5"],
    ["table", "--k-max", "4", "--tau", "0.6"],
])
def test_cli_out_of_domain_arguments_are_config_errors(argv):
    assert main(["--quiet"] + argv) == EXIT_CONFIG
