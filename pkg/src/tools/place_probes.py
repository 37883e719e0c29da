import itertools
from logging import getLogger
from typing import Dict, List

import numpy as np

from core.advisor import member_tables
from core.bounds import rank_slack
from core.common_types import Scenario, SimulationState
from core.utils import make_rng
from tools.validate_config import MAX_EXHAUSTIVE_PROCESSORS

logger = getLogger(__name__)


def completion_probes(state: SimulationState) -> List[Dict]:
    """Interruptions right before completions (the worst cases) plus log-spaced fillers.

    Global exponent g is the contract of length b^g, run by member g mod n. Noisy plans
    start once every member within rank U of the best has completed a contract.
    """
    config, family = state.config, state.plan.family
    n = family.count
    times, _, _ = member_tables(family)
    start = 1 if config.scenario is Scenario.PARETO else n + rank_slack(config.k, config.H)
    end = n * family.horizon - 1
    if start > end:
        return []

    exponents = np.unique(np.linspace(start, end, num=min(config.t_grid, end - start + 1)).round().astype(int))
    probes = [{"T": float(times[g % n, g // n]), "strict": True, "g": int(g)} for g in exponents]

    first, last = times[start % n, start // n], times[end % n, end // n]
    fillers = np.geomspace(first, last, num=max(1, config.t_grid // 10))
    probes += [{"T": float(T), "strict": False, "g": None} for T in fillers]
    return [dict(probe, index=i) for i, probe in enumerate(probes)]


def fault_probes(state: SimulationState) -> List[Dict]:
    """Every fault set of size at most f, then every single-survivor pattern."""
    config = state.config
    p = config.p
    survivor_sets = [tuple(sorted(set(range(p)) - {i})) for i in range(p)]
    if p <= MAX_EXHAUSTIVE_PROCESSORS:
        budget_sets = [s for size in range(config.f + 1) for s in itertools.combinations(range(p), size)]
    else:
        rng = make_rng(config.seeds[0])
        budget_sets = [()] + [
            tuple(sorted(int(i) for i in rng.choice(p, size=int(rng.integers(1, config.f + 1)), replace=False)))
            for _ in range(config.sample_count if config.f else 0)
        ]

    probes = [{"fault_set": list(s), "survivor": False} for s in budget_sets]
    # with f = p - 1 the survivor patterns are already budgeted
    probes += [{"fault_set": list(s), "survivor": True} for s in survivor_sets if len(s) > config.f]
    return [dict(probe, index=i) for i, probe in enumerate(probes)]


def place_probes(state: SimulationState) -> Dict:
    """
    Place interruption probes (or fault patterns) for the scenario.
    Returns updates to be merged into state.
    """
    if state.config.scenario is Scenario.RFT:
        probes = fault_probes(state)
        sampled = state.config.p > MAX_EXHAUSTIVE_PROCESSORS
    else:
        probes = completion_probes(state)
        sampled = state.sampled
    if not probes:
        return {"errors": state.errors + ["horizon too short: no interruption probe fits after warm-up"]}
    logger.info(f"📍 Placed {len(probes)} probes")
    return {"probes": probes, "sampled": sampled}
