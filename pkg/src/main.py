import argparse
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Optional

from pydantic import ValidationError

from core.advisor import (
    build_noisy_schedule,
    build_pareto_schedule,
    build_robust_noisy_schedule,
    contract_table,
    plan_to_json,
)
from core.bounds import bounds_report
from core.common_types import AdviceMode, PlanMode, Scenario, SimulationConfig, SimulationRun, VerifyLevel
from core.errors import ConfigError, DomainError, SequencingError, UnsupportedRegimeError
from core.querygames import read_transcript, replay_transcript, write_transcript
from core.utils import write_csv, write_json
from simulation_agent import run_scenario
from tools import check_config, compare_bounds_table, verify_theorems

logger = logging.getLogger(__name__)

EXIT_PASSED, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _emit(payload: Dict, output_file: Optional[str] = None):
    """Print a report as JSON and optionally save it."""
    print(json.dumps(payload, indent=2, default=str))
    if output_file:
        write_json(output_file, payload)


def load_config(args: argparse.Namespace, scenario: Optional[Scenario] = None) -> SimulationConfig:
    """
    Build a SimulationConfig from an optional JSON file plus explicit flags.

    Flags left unset keep the file's values; pydantic validation errors
    and pipeline compatibility problems surface as ConfigError.
    """
    payload = {}
    if getattr(args, "config", None):
        try:
            payload = SimulationConfig.model_validate_json(Path(args.config).read_text(encoding="utf-8")).model_dump()
        except (OSError, ValidationError) as e:
            raise ConfigError(f"cannot load {args.config}: {e}") from e

    overrides = {
        "scenario": scenario.value if scenario else getattr(args, "scenario", None),
        "k": args.k,
        "H": args.H,
        "r": getattr(args, "r", None),
        "p": getattr(args, "p", None),
        "f": getattr(args, "f", None),
        "n": getattr(args, "n", None),
        "channel_mode": getattr(args, "mode", None),
        "t_grid": getattr(args, "t_grid", None),
        "horizon": getattr(args, "horizon", None),
        "seeds": [args.seed] if getattr(args, "seed", None) is not None else None,
    }
    payload.update({key: value for key, value in overrides.items() if value is not None})

    try:
        config = SimulationConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(str(e)) from e

    problems = check_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    return config


@contextmanager
def _arguments_checked():
    """Out-of-domain CLI arguments surface as configuration errors."""
    try:
        yield
    except (DomainError, UnsupportedRegimeError) as e:
        raise ConfigError(str(e)) from e


def run_bounds(args: argparse.Namespace) -> int:
    with _arguments_checked():
        report = bounds_report(args.k, args.H, args.r, args.p, args.f)
    _emit(report.model_dump(), args.output)
    return EXIT_PASSED


def run_schedule(args: argparse.Namespace) -> int:
    mode = PlanMode(args.mode)
    if mode is not PlanMode.NOISY and args.r is None:
        raise ConfigError(f"--r is required for {mode.value} plans")
    with _arguments_checked():
        if mode is PlanMode.UNTRUSTED:
            plan = build_pareto_schedule(args.r, args.k, args.horizon)
        elif mode is PlanMode.NOISY:
            plan = build_noisy_schedule(args.k, args.H, args.horizon)
        else:
            plan = build_robust_noisy_schedule(args.k, args.H, args.r, args.horizon)

    _emit(plan_to_json(plan), args.output)
    if args.csv:
        write_csv(args.csv, ("member", "j", "length", "completion_time"), contract_table(plan, args.contracts))
    return EXIT_PASSED


def _report_run(run: SimulationRun, output_file: Optional[str]) -> int:
    summary = run.summary
    print("\n" + "=" * 80)
    print(f"Scenario: {run.config.scenario.value}")
    print("=" * 80)
    print(f"Probes:       {summary.probes}{' (sampled)' if summary.sampled else ''}")
    print(f"Max achieved: {summary.max_achieved:.9g}")
    print(f"Bound:        {summary.bound:.9g}")
    print(f"Slack:        {summary.slack:.3g}")
    print("✅ PASSED" if summary.passed else "❌ FAILED")
    for note in run.notes:
        print(f"  ⚠️  {note}")
    for error in run.errors:
        print(f"  ❌ {error}")

    if output_file:
        write_json(output_file, run.model_dump(mode="json"))
    return EXIT_PASSED if summary.passed else EXIT_FAILED


def run_simulate(args: argparse.Namespace) -> int:
    config = load_config(args)
    return _report_run(run_scenario(config), args.output)


def run_game(args: argparse.Namespace) -> int:
    if args.replay:
        n = args.n or 2 ** args.k
        transcript = read_transcript(args.replay)
        j, matches = replay_transcript(n, args.k, args.H, transcript)
        print(f"Replayed output index: {j} (recorded {transcript.output_index})")
        print("✅ Transcript reproduced" if matches else "❌ Transcript diverged")
        return EXIT_PASSED if matches else EXIT_FAILED

    config = load_config(args, Scenario.GAME)
    run = run_scenario(config)
    if args.transcript and run.transcripts:
        write_transcript(args.transcript, run.transcripts[0])
        logger.info(f"💾 Transcript saved to: {args.transcript}")
    return _report_run(run, args.output)


def run_verify(args: argparse.Namespace) -> int:
    report = verify_theorems(VerifyLevel(args.level), args.tags)
    print("\n" + "=" * 80)
    for check in report.checks:
        status = "✅" if check.passed else "❌"
        print(f"{status} {check.tag:<24} {check.seconds:8.2f}s  {check.detail}")
    print("=" * 80)
    if args.output:
        write_json(args.output, report.model_dump(mode="json"))
    return EXIT_PASSED if report.passed else EXIT_FAILED


def run_table(args: argparse.Namespace) -> int:
    with _arguments_checked():
        table = compare_bounds_table(range(args.k_min, args.k_max + 1), args.tau, args.r)
    rows = table["rows"]
    columns = list(rows[0].keys()) if rows else []
    print("  ".join(f"{column:>14}" for column in columns))
    for row in rows:
        print("  ".join(f"{'-' if row[c] is None else format(row[c], '.6g'):>14}" for c in columns))
    for tau, crossing in table["crosses_below_prior"].items():
        monotone = "monotone" if table["monotone_informational"][tau] else "NOT monotone"
        print(f"tau={tau}: {monotone}, below f(2 tau) from k={crossing}")

    if args.csv:
        write_csv(args.csv, columns, ([row[c] for c in columns] for row in rows))
    if args.output:
        write_json(args.output, table)
    return EXIT_PASSED


def _add_advice_arguments(group, required: bool = False):
    group.add_argument("--k", type=int, required=required, help="Advice size in bits")
    group.add_argument("--H", type=int, default=None if not required else 0, help="Maximum number of erroneous bits")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Noisy Sequencing - contract scheduling with untrusted and noisy advice",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Closed-form bounds
  python main.py bounds --k 3 --H 1 --r 5

  # Build a noisy plan and dump its contract table
  python main.py schedule --mode noisy --k 3 --H 1 --csv contracts.csv

  # Simulate a scenario
  python main.py simulate --scenario rft --p 3 --f 1 --r 8 --out report.json

  # Replay a query transcript
  python main.py game --k 4 --H 1 --replay transcript.jsonl

  # Run every property suite
  python main.py verify --level quick
        """
    )
    log_group = parser.add_argument_group('Logging')
    log_group.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    log_group.add_argument("--quiet", action="store_true", help="Log warnings and errors only")

    subparsers = parser.add_subparsers(dest="command", required=True)

    bounds = subparsers.add_parser("bounds", help="Print every closed-form bound for a configuration")
    bounds_group = bounds.add_argument_group('Configuration')
    _add_advice_arguments(bounds_group, required=True)
    bounds_group.add_argument("--r", type=float, required=True, help="Robustness requirement (r >= 4)")
    bounds_group.add_argument("--p", type=int, help="Number of processors")
    bounds_group.add_argument("--f", type=int, help="Number of faulty processors")
    bounds.add_argument("-o", "--out", dest="output", metavar="FILE", help="Save the report as JSON")
    bounds.set_defaults(handler=run_bounds)

    schedule = subparsers.add_parser("schedule", help="Build an advice plan")
    schedule_group = schedule.add_argument_group('Plan')
    schedule_group.add_argument("--mode", choices=[m.value for m in PlanMode], default=PlanMode.NOISY.value)
    _add_advice_arguments(schedule_group, required=True)
    schedule_group.add_argument("--r", type=float, help="Robustness requirement (r >= 4)")
    schedule_group.add_argument("--horizon", type=int, default=200, help="Contracts per member (default: 200)")
    output_group = schedule.add_argument_group('Output')
    output_group.add_argument("-o", "--out", dest="output", metavar="FILE", help="Save the plan as JSON")
    output_group.add_argument("--csv", metavar="FILE", help="Save the per-member contract table as CSV")
    output_group.add_argument("--contracts", type=int, help="Contracts per member in the CSV table")
    schedule.set_defaults(handler=run_schedule)

    simulate = subparsers.add_parser("simulate", help="Run one scenario through the simulation pipeline")
    simulate.add_argument("--config", metavar="FILE", help="SimulationConfig JSON file; flags override it")
    scenario_group = simulate.add_argument_group('Scenario')
    scenario_group.add_argument("--scenario", choices=[s.value for s in Scenario])
    _add_advice_arguments(scenario_group)
    scenario_group.add_argument("--r", type=float, help="Robustness requirement (r >= 4)")
    scenario_group.add_argument("--p", type=int, help="Number of processors")
    scenario_group.add_argument("--f", type=int, help="Number of faulty processors")
    scenario_group.add_argument("--mode", choices=[m.value for m in AdviceMode], help="Advice channel mode")
    probe_group = simulate.add_argument_group('Probes')
    probe_group.add_argument("--seed", type=int, help="Seed for sampled channels")
    probe_group.add_argument("--t-grid", dest="t_grid", type=int, help="Interruption probes per plan")
    probe_group.add_argument("--horizon", type=int, help="Contracts per schedule")
    simulate.add_argument("-o", "--out", dest="output", metavar="FILE", help="Save the run as JSON")
    simulate.set_defaults(handler=run_simulate)

    game = subparsers.add_parser("game", help="Play or replay MinCyclic query games")
    game.add_argument("--config", metavar="FILE", help="SimulationConfig JSON file; flags override it")
    game_group = game.add_argument_group('Game')
    game_group.add_argument("--n", type=int, help="Array size (default: 2^k)")
    _add_advice_arguments(game_group, required=True)
    game_group.add_argument("--mode", choices=[m.value for m in AdviceMode], help="Advice channel mode")
    game_group.add_argument("--seed", type=int, help="Seed for random channels")
    replay_group = game.add_argument_group('Transcripts')
    replay_group.add_argument("--replay", metavar="FILE", help="Replay a JSON-lines transcript")
    replay_group.add_argument("--transcript", metavar="FILE", help="Save the first game's transcript")
    game.add_argument("-o", "--out", dest="output", metavar="FILE", help="Save the run as JSON")
    game.set_defaults(handler=run_game)

    verify = subparsers.add_parser("verify", help="Run the property suites")
    verify.add_argument("--level", choices=[v.value for v in VerifyLevel], default=VerifyLevel.QUICK.value)
    verify.add_argument("--tag", dest="tags", action="append", help="Run only this suite (repeatable)")
    verify.add_argument("-o", "--out", dest="output", metavar="FILE", help="Save the report as JSON")
    verify.set_defaults(handler=run_verify)

    table = subparsers.add_parser("table", help="Compare noisy bounds with f(2 tau) over k")
    table.add_argument("--k-min", type=int, default=1)
    table.add_argument("--k-max", type=int, default=32)
    table.add_argument("--tau", type=float, action="extend", nargs="+", default=None,
                       help="Error fractions (default: 0.05 0.1 0.25)")
    table.add_argument("--r", type=float, help="Also tabulate the r-robust noisy upper bound")
    table.add_argument("--csv", metavar="FILE", help="Save the table as CSV")
    table.add_argument("-o", "--out", dest="output", metavar="FILE", help="Save the table as JSON")
    table.set_defaults(handler=run_table)

    return parser


def main(argv=None) -> int:
    """Main entry point for the application."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tau", None) is None and args.command == "table":
        args.tau = [0.05, 0.1, 0.25]

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"❌ Invalid configuration: {e}")
        return EXIT_CONFIG
    except SequencingError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
