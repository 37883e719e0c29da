import math
from logging import getLogger
from typing import Dict, List, Optional, Tuple

from core.advisor import AdvicePlan, best_member_at, select_with_noisy_advice
from core.bounds import binomial_tail
from core.common_types import AdviceMode, ProbeRecord, QueryTranscript, Scenario, SimulationState
from core.errors import SequencingError
from core.querygames import AdviceChannel, enumerate_lie_patterns
from core.sequences import acceleration_ratio
from core.utils import make_rng

logger = getLogger(__name__)


def lie_patterns(state: SimulationState) -> Tuple[List[Tuple[int, ...]], bool]:
    """All patterns of at most H lies when they fit in ``max_patterns``, else seeded samples."""
    config = state.config
    if binomial_tail(config.k, config.H) <= config.max_patterns:
        return list(enumerate_lie_patterns(config.k, config.H)), False
    rng = make_rng(config.seeds[0])
    samples = []
    for _ in range(config.sample_count):
        count = int(rng.integers(0, config.H + 1))
        samples.append(tuple(sorted(int(i) for i in rng.choice(config.k, size=count, replace=False))))
    return samples, True


def advice_channels(state: SimulationState) -> Tuple[List[AdviceChannel], bool]:
    """The channels every probe is played against, all carrying the plan's lie budget."""
    config = state.config
    n, k, H = 2 ** config.k, config.k, config.H
    mode = config.channel_mode
    if mode is AdviceMode.SCRIPTED:
        patterns, sampled = lie_patterns(state)
        return [
            AdviceChannel(mode=mode, lie_budget=H, n=n, length=k, lie_positions=list(p)) for p in patterns
        ], sampled
    if mode is AdviceMode.RANDOM:
        return [AdviceChannel(mode=mode, lie_budget=H, n=n, length=k, seed=seed) for seed in config.seeds], True
    return [AdviceChannel(mode=mode, lie_budget=H, n=n, length=k)], False


def _untrusted_records(state: SimulationState) -> List[ProbeRecord]:
    """Error-free advice names the best member; every member must also stay r-robust."""
    family = state.plan.family
    records = []
    for probe in state.probes:
        T = probe["T"]
        member, length = best_member_at(family, T, strict=probe["strict"])
        records.append(ProbeRecord(index=probe["index"], kind="consistency", T=T, member=member,
                                   ratio=T / length, bound=state.bound))
    offset = len(records)
    for i, schedule in enumerate(family.members()):
        records.append(ProbeRecord(index=offset + i, kind="robustness", member=i,
                                   ratio=acceleration_ratio(schedule), bound=state.survivor_bound))
    return records


def _play(plan: AdvicePlan, channels: List[AdviceChannel], probes: List[Dict], bound: float,
          kind: str, offset: int) -> Tuple[List[ProbeRecord], Optional[QueryTranscript]]:
    records, worst, worst_transcript = [], -math.inf, None
    for probe in probes:
        for channel in channels:
            result = select_with_noisy_advice(plan, channel, probe["T"], strict=probe["strict"])
            records.append(ProbeRecord(
                index=offset + len(records), kind=kind, T=probe["T"], member=result.member,
                lie_positions=[i for i, r in enumerate(result.transcript.records) if r.lie] or None,
                ratio=result.ratio, bound=bound,
            ))
            if result.ratio > worst:
                worst, worst_transcript = result.ratio, result.transcript
    return records, worst_transcript


def simulate_advice(state: SimulationState) -> Dict:
    """
    Play every probe against every advice channel and record the achieved ratios.
    Returns updates to be merged into state.
    """
    config = state.config
    try:
        if config.scenario is Scenario.PARETO:
            records = _untrusted_records(state)
            logger.info(f"✅ Evaluated {len(records)} consistency and robustness probes")
            return {"records": records}

        channels, sampled = advice_channels(state)
        records, worst = _play(state.plan, channels, state.probes, state.bound, "advice", 0)
        transcripts = [worst] if worst else []

        if config.scenario is Scenario.ROBUST_NOISY:
            # an adversary spending every answer on lies only meets the robustness guarantee
            liar = AdviceChannel(mode=AdviceMode.ADVERSARIAL, lie_budget=config.k, n=2 ** config.k, length=config.k)
            robust, worst = _play(state.plan, [liar], state.probes, state.survivor_bound, "robustness", len(records))
            records += robust
            transcripts += [worst] if worst else []

        if sampled:
            logger.warning(f"⚠️ Lie patterns sampled ({len(channels)} channels)")
        logger.info(f"✅ Evaluated {len(records)} advice probes")
        return {"records": records, "transcripts": transcripts, "sampled": state.sampled or sampled}

    except SequencingError as e:
        return {"errors": state.errors + [f"Advice simulation failed: {e}"]}
