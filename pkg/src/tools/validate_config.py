from logging import getLogger
from typing import Dict, List

from core.common_types import AdviceMode, Scenario, SimulationConfig, SimulationState
from core.errors import UnsupportedRegimeError
from core.querygames import interval_count

logger = getLogger(__name__)

# fault subsets are enumerated exhaustively up to this many processors
MAX_EXHAUSTIVE_PROCESSORS = 8


def check_config(config: SimulationConfig) -> List[str]:
    """Scenario-parameter problems of a config, one message per violated precondition."""
    problems = []
    scenario = config.scenario

    if scenario in (Scenario.PARETO, Scenario.ROBUST_NOISY, Scenario.RFT) and config.r is None:
        problems.append(f"scenario {scenario.value} needs a robustness r")

    if scenario in (Scenario.NOISY, Scenario.ROBUST_NOISY, Scenario.GAME):
        if 2 * config.H > config.k:
            problems.append(f"scenario {scenario.value} needs H <= k/2, got k={config.k}, H={config.H}")
        else:
            n = config.n or 2 ** config.k
            try:
                interval_count(n, config.k, config.H)
            except UnsupportedRegimeError as e:
                problems.append(str(e))

    if scenario in (Scenario.NOISY, Scenario.ROBUST_NOISY) and config.n not in (None, 2 ** config.k):
        problems.append(f"noisy scenarios select among 2^k={2 ** config.k} members, got n={config.n}")
    if scenario in (Scenario.NOISY, Scenario.ROBUST_NOISY) and config.channel_mode in (AdviceMode.ADVERSARIAL, AdviceMode.REPLAY):
        problems.append(f"scenario {scenario.value} needs a channel bound to the best member, not {config.channel_mode.value}")

    return problems


def validate_config(state: SimulationState) -> Dict:
    """
    Check scenario-parameter compatibility before anything is built.
    Returns updates to be merged into state.
    """
    problems = check_config(state.config)
    if problems:
        for problem in problems:
            logger.error(f"❌ {problem}")
        return {"errors": state.errors + problems}

    notes = []
    if state.config.scenario is Scenario.RFT and state.config.p > MAX_EXHAUSTIVE_PROCESSORS:
        notes.append(f"⚠️ p={state.config.p} > {MAX_EXHAUSTIVE_PROCESSORS}: fault subsets are sampled")
    logger.info(f"✅ Config valid for scenario {state.config.scenario.value}")
    return {"notes": state.notes + notes}


def route_after_validation(state: SimulationState) -> str:
    if state.errors:
        return "invalid"
    if state.config.scenario is Scenario.GAME:
        return "game"
    return "plan"
