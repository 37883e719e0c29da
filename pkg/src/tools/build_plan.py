import math
from logging import getLogger
from typing import Dict

from core.advisor import build_noisy_schedule, build_pareto_schedule, build_rft_schedule, build_robust_noisy_schedule
from core.bounds import (
    noisy_upper_bound,
    pareto_consistency_lower_bound,
    pareto_optimal_base,
    rft_optimal_value,
    robust_noisy_upper_bound,
)
from core.common_types import Scenario, SimulationState
from core.errors import SequencingError

logger = getLogger(__name__)

# largest natural log of a completion time the probes may reach
LINEAR_LOG_LIMIT = 470.0


def effective_horizon(base: float, count: int, horizon: int) -> int:
    """Per-member horizon keeping every completion time of X_{base,count} in the linear float range."""
    per_round = count * math.log(base)
    return max(2, min(horizon, int(LINEAR_LOG_LIMIT / per_round)))


def build_plan(state: SimulationState) -> Dict:
    """
    Build the schedule under test and its closed-form bound.
    Returns updates to be merged into state.
    """
    config = state.config
    notes = list(state.notes)
    try:
        if config.scenario is Scenario.RFT:
            value, b = rft_optimal_value(config.r, config.p, config.f)
            multi = build_rft_schedule(config.r, config.p, config.f, horizon=config.horizon)
            logger.info(f"🔧 RFT schedule on {config.p} processors, b={b:.9g}, bound {value:.9g}")
            return {"multi": multi, "bound": value, "survivor_bound": config.r, "notes": notes}

        if config.scenario is Scenario.PARETO:
            base = pareto_optimal_base(config.r, config.k)
            bound, survivor_bound = pareto_consistency_lower_bound(config.r, config.k), config.r
            build = lambda horizon: build_pareto_schedule(config.r, config.k, horizon=horizon)
        elif config.scenario is Scenario.NOISY:
            bound, base, _ = noisy_upper_bound(config.k, config.H)
            survivor_bound = None
            build = lambda horizon: build_noisy_schedule(config.k, config.H, horizon=horizon)
        else:
            bound, base = robust_noisy_upper_bound(config.k, config.H, config.r)
            survivor_bound = config.r
            build = lambda horizon: build_robust_noisy_schedule(config.k, config.H, config.r, horizon=horizon)

        horizon = effective_horizon(base, 2 ** config.k, config.horizon)
        if horizon < config.horizon:
            notes.append(f"⚠️ member horizon reduced from {config.horizon} to {horizon} to stay in the linear range")
        plan = build(horizon)
        logger.info(f"🔧 {plan.mode.value} plan with {plan.family.count} members, b={base:.9g}, bound {bound:.9g}")
        return {"plan": plan, "bound": bound, "survivor_bound": survivor_bound, "notes": notes}

    except SequencingError as e:
        return {"errors": state.errors + [f"Failed to build {config.scenario.value} schedule: {e}"]}


def route_by_scenario(state: SimulationState) -> str:
    if state.errors:
        return "summarize"
    return "faults" if state.config.scenario is Scenario.RFT else "advice"
