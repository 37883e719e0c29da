from logging import getLogger
from typing import Dict, List, Tuple

from core.common_types import AdviceMode, ProbeRecord, SimulationState
from core.errors import SequencingError
from core.querygames import (
    AdviceChannel,
    play_adversary,
    play_random_solver,
    rank_guarantee,
    solve_min_cyclic,
)
from tools.simulate_advice import lie_patterns

logger = getLogger(__name__)


def _solver_channels(state: SimulationState, n: int) -> Tuple[List[AdviceChannel], bool]:
    config = state.config
    k, H, mode = config.k, config.H, config.channel_mode
    if mode is AdviceMode.SCRIPTED:
        patterns, sampled = lie_patterns(state)
        return [AdviceChannel(mode=mode, lie_budget=H, n=n, length=k, lie_positions=list(p)) for p in patterns], sampled
    if mode is AdviceMode.RANDOM:
        return [AdviceChannel(mode=mode, lie_budget=H, n=n, length=k, seed=seed) for seed in config.seeds], True
    return [AdviceChannel(mode=AdviceMode.TRUTHFUL, lie_budget=H, n=n, length=k)], False


def play_games(state: SimulationState) -> Dict:
    """
    Play the MinCyclic solver against advice channels over every target, or the
    adversary against the solver and seeded random solvers.
    Returns updates to be merged into state.
    """
    config = state.config
    n = config.n or 2 ** config.k
    k, H = config.k, config.H
    try:
        if config.channel_mode is AdviceMode.ADVERSARIAL:
            outcomes = [play_adversary(n, k, H)] + [play_random_solver(n, k, H, seed) for seed in config.seeds]
            # a lone survivor can be the output itself, which only concedes one rank
            records = [
                ProbeRecord(index=i, kind="adversary", member=o.output, ratio=o.forced_rank, lower=True,
                            bound=o.guarantee if o.survivors >= 2 else o.guarantee - 1)
                for i, o in enumerate(outcomes)
            ]
            logger.info(f"✅ Played the adversary against {len(outcomes)} solvers")
            return {"records": records, "bound": float(outcomes[0].guarantee)}

        bound = rank_guarantee(n, k, H)
        channels, sampled = _solver_channels(state, n)
        records, hardest, hardest_rank = [], None, -1
        for target in range(n):
            worst, worst_lies = 0, None
            for channel in channels:
                j, transcript = solve_min_cyclic(n, channel.bound_to(target), k, H)
                rank = (j - target) % n
                if rank >= worst:
                    worst, worst_lies = rank, [i for i, r in enumerate(transcript.records) if r.lie]
                if rank > hardest_rank:
                    hardest, hardest_rank = transcript, rank
            records.append(ProbeRecord(index=target, kind="game", member=target, lie_positions=worst_lies or None,
                                       ratio=worst, bound=bound))
        logger.info(f"✅ Played {n * len(channels)} games ({'sampled' if sampled else 'exhaustive'})")
        return {"records": records, "bound": float(bound), "sampled": sampled, "transcripts": [hardest]}

    except SequencingError as e:
        return {"errors": state.errors + [f"Game simulation failed: {e}"]}
