"""Searching with lies: the weighting solver, the adversarial responder and the advice channel.

Candidates carry a lie count ``e`` (how many answers contradicted them). With
``q`` questions left and budget ``H`` a candidate weighs ``mch(q, H - e)``; the
solver asks the comparison that keeps the heavier branch as light as possible
and the adversary answers so that the heavier branch survives.
"""
import itertools
from functools import lru_cache
from logging import getLogger
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from core.bounds import binomial_tail
from core.common_types import AdviceMode, QueryRecord, QueryTranscript
from core.errors import (
    DomainError,
    InconsistentAnswersError,
    ProtocolError,
    UnsupportedRegimeError,
)
from core.utils import make_rng, read_jsonl, write_jsonl

logger = getLogger(__name__)

Query = int | Sequence[int]


@lru_cache(maxsize=None)
def berlekamp_weight(q: int, h: int) -> int:
    """mch(q, h) with the conventions 0 for h < 0 and 2^q for h >= q."""
    if h < 0:
        return 0
    if h >= q:
        return 2 ** q
    return binomial_tail(q, h)


def weighting_feasible(m: int, k: int, H: int) -> bool:
    """2^(k-H) >= m * mch(k-H, H): k comparisons with H lies can isolate one of m candidates."""
    if H < 0 or H > k:
        raise DomainError(f"need 0 <= H <= k, got k={k}, H={H}")
    return 2 ** (k - H) >= m * binomial_tail(k - H, H)


class GameState(BaseModel):
    lie_counts: List[int]
    remaining: int = Field(ge=0)
    lie_budget: int = Field(ge=0)

    @classmethod
    def fresh(cls, size: int, queries: int, lie_budget: int) -> "GameState":
        return cls(lie_counts=[0] * size, remaining=queries, lie_budget=lie_budget)

    @property
    def size(self) -> int:
        return len(self.lie_counts)

    def viable(self) -> List[int]:
        return [i for i, e in enumerate(self.lie_counts) if e <= self.lie_budget]

    def weight(self, i: int) -> int:
        return berlekamp_weight(self.remaining, self.lie_budget - self.lie_counts[i])

    @property
    def total_weight(self) -> int:
        return sum(self.weight(i) for i in range(self.size))


def _as_mask(size: int, query: Query) -> np.ndarray:
    """Boolean membership of each candidate in the "yes" set of a query.

    An integer query is the comparison "x <= query"; a sequence is an explicit subset.
    """
    positions = np.arange(size)
    if isinstance(query, (int, np.integer)):
        return positions <= query
    return np.isin(positions, np.asarray(list(query), dtype=int))


def split_weights(state: GameState, query: Query) -> Tuple[int, int]:
    """Total weight at q-1 after a "yes" and after a "no" answer."""
    if state.remaining < 1:
        raise ProtocolError("no questions left to split on")
    mask = _as_mask(state.size, query)
    q, H = state.remaining - 1, state.lie_budget
    w_yes = w_no = 0
    for i, e in enumerate(state.lie_counts):
        truthful, lied = berlekamp_weight(q, H - e), berlekamp_weight(q, H - e - 1)
        if mask[i]:
            w_yes, w_no = w_yes + truthful, w_no + lied
        else:
            w_yes, w_no = w_yes + lied, w_no + truthful
    return w_yes, w_no


def weighting_query(state: GameState) -> int:
    """The comparison threshold minimising the worse branch weight (ties to the smallest)."""
    if state.remaining < 1:
        raise ProtocolError("no questions left")
    if not state.viable():
        raise InconsistentAnswersError("every candidate exceeded the lie budget")
    if state.size == 1:
        return 0
    q, H = state.remaining - 1, state.lie_budget
    inside = [berlekamp_weight(q, H - e) for e in state.lie_counts]
    outside = [berlekamp_weight(q, H - e - 1) for e in state.lie_counts]
    total_in, total_out = sum(inside), sum(outside)

    best_threshold, best_worst = 0, None
    prefix_in = prefix_out = 0
    for b in range(state.size - 1):
        prefix_in += inside[b]
        prefix_out += outside[b]
        w_yes = prefix_in + (total_out - prefix_out)
        w_no = prefix_out + (total_in - prefix_in)
        worst = max(w_yes, w_no)
        if best_worst is None or worst < best_worst:
            best_threshold, best_worst = b, worst
    return best_threshold


def apply_answer(state: GameState, query: Query, answer: int) -> GameState:
    mask = _as_mask(state.size, query)
    contradicted = ~mask if answer else mask
    lie_counts = [e + int(c) for e, c in zip(state.lie_counts, contradicted)]
    return GameState(lie_counts=lie_counts, remaining=state.remaining - 1, lie_budget=state.lie_budget)


def adversarial_respond(state: GameState, query: Query) -> int:
    """Answer keeping the heavier branch; "no" on a tie."""
    w_yes, w_no = split_weights(state, query)
    return int(w_yes > w_no)


class AdviceChannel(BaseModel):
    """Answers comparison or subset queries about a hidden position, with lies.

    ``truthful`` never lies, ``scripted`` lies at the given query positions,
    ``random`` draws a lie count uniformly from [0, H] and then the positions,
    ``adversarial`` answers with the weighting adversary (no fixed target) and
    ``replay`` plays back recorded answers.
    """

    mode: AdviceMode = AdviceMode.TRUTHFUL
    lie_budget: int = Field(default=0, ge=0)
    n: int = Field(ge=1)
    length: int = Field(ge=0)
    target: Optional[int] = None
    seed: int = 0
    lie_positions: List[int] = []
    answers: List[int] = []
    lies_used: int = 0
    asked: int = 0
    drawn: bool = False
    transcript: QueryTranscript = Field(default_factory=QueryTranscript)
    adversary: Optional[GameState] = None

    def bound_to(self, target: int) -> "AdviceChannel":
        """A fresh copy of this channel answering about ``target``."""
        return self.model_copy(
            update={
                "target": target,
                "lies_used": 0,
                "asked": 0,
                "transcript": QueryTranscript(),
                "adversary": None,
            },
            deep=True,
        )

    def _truth(self, query: Query) -> int:
        if self.target is None:
            raise ProtocolError(f"{self.mode.value} channel has no target")
        return int(_as_mask(self.n, query)[self.target])

    def _draw_random_lies(self):
        rng = make_rng(self.seed)
        count = int(rng.integers(0, self.lie_budget + 1))
        count = min(count, self.length)
        self.lie_positions = sorted(int(i) for i in rng.choice(self.length, size=count, replace=False))
        self.drawn = True

    def answer(self, query: Query) -> int:
        if self.asked >= self.length:
            raise ProtocolError(f"channel exhausted after {self.length} answers")
        index, lie = self.asked, None
        if self.mode is AdviceMode.ADVERSARIAL:
            if self.adversary is None:
                self.adversary = GameState.fresh(self.n, self.length, self.lie_budget)
            bit = adversarial_respond(self.adversary, query)
            self.adversary = apply_answer(self.adversary, query, bit)
        elif self.mode is AdviceMode.REPLAY:
            if index >= len(self.answers):
                raise ProtocolError(f"replay has only {len(self.answers)} recorded answers")
            bit = int(self.answers[index])
        else:
            if self.mode is AdviceMode.RANDOM and not self.drawn:
                self._draw_random_lies()
            truth = self._truth(query)
            lie = self.mode is not AdviceMode.TRUTHFUL and index in self.lie_positions
            bit = 1 - truth if lie else truth
            self.lies_used += int(lie)
        self.asked += 1
        recorded = int(query) if isinstance(query, (int, np.integer)) else [int(i) for i in query]
        self.transcript.records.append(QueryRecord(q=recorded, a=bit, lie=lie))
        return bit

    def survivors(self) -> List[int]:
        if self.adversary is None:
            return list(range(self.n))
        return self.adversary.viable()

    def commit_ranking(self, output: int) -> List[int]:
        """Ranks (0 = best) the adversary commits to after the last answer.

        A surviving candidate other than ``output`` takes rank 0 and ``output`` takes n-1;
        the rest fill the middle in index order.
        """
        others = [s for s in self.survivors() if s != output]
        if not others:
            order = [output] + [i for i in range(self.n) if i != output]
        else:
            best = others[0]
            middle = [i for i in range(self.n) if i not in (best, output)]
            order = [best] + middle + [output]
        ranks = [0] * self.n
        for rank, i in enumerate(order):
            ranks[i] = rank
        return ranks

    def forced_rank(self, output: int) -> int:
        return self.commit_ranking(output)[output]


def adversary_guarantee(n: int, k: int, H: int) -> int:
    """floor(n * mch(k, H) / 2^k), capped at the worst rank n-1."""
    return min(n - 1, n * berlekamp_weight(k, H) // 2 ** k)


def interval_count(n: int, k: int, H: int) -> int:
    """Number of intervals the MinCyclic solver searches over."""
    if 2 * H > k:
        raise UnsupportedRegimeError(f"MinCyclic requires H <= k/2, got k={k}, H={H}")
    tail = binomial_tail(k - H, H)
    m_floor = 2 ** (k - H) // tail
    if m_floor < 1:
        raise UnsupportedRegimeError(f"no interval count satisfies 2^(k-H) >= m mch(k-H,H) for k={k}, H={H}")
    slack = rank_guarantee(n, k, H)
    m = min(n, max(m_floor, -(-n // (slack + 1))))
    if m * binomial_tail(k, H) > 2 ** k:
        logger.warning(f"⚠️ {m} intervals exceed the weighting volume 2^{k} for H={H}; isolation is not guaranteed")
    return m


def rank_guarantee(n: int, k: int, H: int) -> int:
    """ceil(n * mch(k-H, H) / 2^(k-H)): the worst rank the solver may return."""
    tail = binomial_tail(k - H, H)
    return -(-n * tail // 2 ** (k - H))


def _interval_ends(n: int, m: int) -> np.ndarray:
    """Last index of each of m balanced intervals over [0, n); the first n % m are one longer."""
    sizes = np.full(m, n // m)
    sizes[: n % m] += 1
    return np.cumsum(sizes) - 1


def _closest_output(n: int, ends: np.ndarray, survivors: Sequence[int]) -> int:
    """The surviving interval end whose worst cyclic rank over all surviving positions is smallest."""
    starts = np.concatenate(([0], ends[:-1] + 1))
    positions = np.concatenate([np.arange(starts[i], ends[i] + 1) for i in survivors])
    best_j, best_rank = None, None
    for i in survivors:
        j = int(ends[i])
        worst = int(np.max((j - positions) % n))
        if best_rank is None or worst < best_rank:
            best_j, best_rank = j, worst
    return best_j


def solve_min_cyclic(
    n: int,
    channel: AdviceChannel,
    k: int,
    H: int,
    on_inconsistency: str = "raise",
) -> Tuple[int, QueryTranscript]:
    """Find an index j with small A[j] = (j - x) mod n using k comparison queries about x.

    With ``on_inconsistency="closest"`` answers exceeding the lie budget fall back to
    the candidates with the fewest contradictions instead of raising.
    """
    m = interval_count(n, k, H)
    ends = _interval_ends(n, m)
    state = GameState.fresh(m, k, H)
    last_threshold = None
    for _ in range(k):
        if len(state.viable()) <= 1 and last_threshold is not None:
            threshold = last_threshold
        elif not state.viable():
            threshold = last_threshold if last_threshold is not None else 0
        else:
            threshold = weighting_query(state)
            last_threshold = threshold
        bit = channel.answer(int(ends[threshold]))
        state = apply_answer(state, threshold, bit)

    survivors = state.viable()
    if not survivors:
        if on_inconsistency != "closest":
            raise InconsistentAnswersError(f"answers exceed the lie budget H={H}")
        fewest = min(state.lie_counts)
        survivors = [i for i, e in enumerate(state.lie_counts) if e == fewest]
        logger.debug(f"inconsistent answers, falling back to {len(survivors)} closest intervals")
    j = _closest_output(n, ends, survivors)
    transcript = channel.transcript.model_copy(deep=True)
    transcript.output_index = j
    return j, transcript


def enumerate_lie_patterns(k: int, H: int) -> Iterable[Tuple[int, ...]]:
    """Every set of at most H lying positions among k answers."""
    for count in range(min(H, k) + 1):
        yield from itertools.combinations(range(k), count)


def worst_case_rank(n: int, k: int, H: int) -> int:
    """Largest A[j] the solver returns over every target and every lie pattern."""
    worst = 0
    patterns = list(enumerate_lie_patterns(k, H))
    for target in range(n):
        for pattern in patterns:
            channel = AdviceChannel(
                mode=AdviceMode.SCRIPTED, lie_budget=H, n=n, length=k, target=target, lie_positions=list(pattern)
            )
            j, _ = solve_min_cyclic(n, channel, k, H)
            worst = max(worst, (j - target) % n)
    logger.debug(f"worst rank for n={n}, k={k}, H={H}: {worst} over {n * len(patterns)} games")
    return worst


class AdversaryOutcome(BaseModel):
    survivors: int
    output: int
    forced_rank: int
    guarantee: int


def play_adversary(n: int, k: int, H: int) -> AdversaryOutcome:
    """The weighting solver against the adversarial responder."""
    channel = AdviceChannel(mode=AdviceMode.ADVERSARIAL, lie_budget=H, n=n, length=k)
    output, _ = solve_min_cyclic(n, channel, k, H, on_inconsistency="closest")
    return AdversaryOutcome(
        survivors=len(channel.survivors()),
        output=output,
        forced_rank=channel.forced_rank(output),
        guarantee=adversary_guarantee(n, k, H),
    )


def play_random_solver(n: int, k: int, H: int, seed: int) -> AdversaryOutcome:
    """A solver asking k uniformly random subset queries and outputting a random index."""
    rng = make_rng(seed)
    channel = AdviceChannel(mode=AdviceMode.ADVERSARIAL, lie_budget=H, n=n, length=k)
    for _ in range(k):
        subset = np.flatnonzero(rng.random(n) < 0.5).tolist()
        channel.answer(subset)
    output = int(rng.integers(0, n))
    return AdversaryOutcome(
        survivors=len(channel.survivors()),
        output=output,
        forced_rank=channel.forced_rank(output),
        guarantee=adversary_guarantee(n, k, H),
    )


def _adversarial_flips(truth: List[int], H: int, queries: Sequence[Query], n: int) -> List[int]:
    """Positions where the weighting adversary overrides the truth, query by query."""
    state = GameState.fresh(n, len(truth), H)
    flips = []
    for i, (query, bit) in enumerate(zip(queries, truth)):
        wanted = adversarial_respond(state, query)
        if wanted != bit and len(flips) < H:
            flips.append(i)
            bit = wanted
        state = apply_answer(state, query, bit)
    return flips


def inject_errors(
    truth: Sequence[int],
    H: int,
    mode: AdviceMode,
    seed: int = 0,
    queries: Optional[Sequence[Query]] = None,
    n: Optional[int] = None,
) -> List[int]:
    """Flip at most H answers of an answer string.

    Adversarial mode replays ``queries`` (one per answer, over ``n`` candidates) against
    the weighting adversary and lies wherever it prefers the other branch, until the
    budget runs out. Random mode flips a uniform subset whose size is uniform on [0, H].
    """
    bits = [int(b) for b in truth]
    if H < 0 or H > len(bits):
        raise DomainError(f"lie budget H={H} outside [0, {len(bits)}]")
    if mode is AdviceMode.ADVERSARIAL:
        if queries is None or n is None or len(queries) != len(bits):
            raise DomainError("adversarial injection needs one query per answer and the candidate count n")
        flips = _adversarial_flips(bits, H, queries, n)
    elif mode is AdviceMode.RANDOM:
        rng = make_rng(seed)
        count = int(rng.integers(0, H + 1))
        flips = rng.choice(len(bits), size=count, replace=False)
    else:
        raise DomainError(f"inject_errors supports adversarial and random modes, got {mode.value}")
    for i in flips:
        bits[int(i)] ^= 1
    return bits


def write_transcript(path: str | Path, transcript: QueryTranscript) -> Path:
    rows = [
        {"q": record.q, "a": record.a, "lie": "unknown" if record.lie is None else record.lie}
        for record in transcript.records
    ]
    rows.append({"output_index": transcript.output_index})
    return write_jsonl(path, rows)


def read_transcript(path: str | Path) -> QueryTranscript:
    transcript = QueryTranscript()
    for row in read_jsonl(path):
        if "output_index" in row:
            transcript.output_index = row["output_index"]
            continue
        lie = row.get("lie")
        transcript.records.append(QueryRecord(q=row["q"], a=row["a"], lie=None if lie == "unknown" else lie))
    return transcript


def replay_transcript(n: int, k: int, H: int, transcript: QueryTranscript) -> Tuple[int, bool]:
    """Re-run the solver on recorded answers; True when it asks the same queries and outputs the same index."""
    channel = AdviceChannel(mode=AdviceMode.REPLAY, lie_budget=H, n=n, length=k, answers=transcript.answers())
    j, replayed = solve_min_cyclic(n, channel, k, H, on_inconsistency="closest")
    same_queries = [r.q for r in replayed.records] == [r.q for r in transcript.records]
    return j, same_queries and j == transcript.output_index
