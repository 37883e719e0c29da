"""Advice-driven schedule construction and selection over cyclic families."""
import math
from functools import lru_cache
from logging import getLogger
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.bounds import (
    noisy_upper_bound,
    pareto_optimal_base,
    rft_optimal_value,
    robust_noisy_upper_bound,
)
from core.common_types import PlanMode, QueryTranscript, ScheduleKind
from core.errors import DomainError, PreconditionError
from core.querygames import AdviceChannel, solve_min_cyclic
from core.sequences import (
    DEFAULT_HORIZON,
    MergedSequence,
    MultiSchedule,
    Schedule,
    completion_times,
    fault_tolerant_ratio,
    merged_sequence,
)
from core.utils import log_cumsum

logger = getLogger(__name__)


class CyclicFamily(BaseModel):
    """X_{b,l}: member i runs the lengths b^(i + j l) for j = 0, 1, ..."""

    model_config = ConfigDict(frozen=True)

    base: float = Field(gt=1.0)
    count: int = Field(ge=1)
    horizon: int = Field(default=DEFAULT_HORIZON, ge=1)

    def member(self, i: int) -> Schedule:
        if not 0 <= i < self.count:
            raise DomainError(f"member {i} outside [0, {self.count})")
        return Schedule(
            kind=ScheduleKind.CYCLIC_MEMBER,
            base=self.base ** self.count,
            scale=self.base ** i,
            horizon=self.horizon,
            label=f"X_{self.base:.6g},{self.count}[{i}]",
        )

    def members(self) -> List[Schedule]:
        return [self.member(i) for i in range(self.count)]

    def as_multi(self, fault_budget: int = 0) -> MultiSchedule:
        return MultiSchedule(processors=tuple(self.members()), fault_budget=fault_budget)

    def merged(self) -> MergedSequence:
        return merged_sequence(self.as_multi())


@lru_cache(maxsize=32)
def member_tables(family: CyclicFamily) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Completion times and lengths of every member as (count, horizon) arrays."""
    members = family.members()
    tables = [completion_times(s) for s in members]
    if any(in_logs for _, in_logs in tables):
        times = np.vstack([log_cumsum(s.log_lengths()) for s in members])
        return times, np.vstack([s.log_lengths() for s in members]), True
    return np.vstack([t for t, _ in tables]), np.vstack([s.lengths() for s in members]), False


@lru_cache(maxsize=32)
def _global_tables(family: CyclicFamily) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Completion times and lengths indexed by the global exponent g = i + j l.

    Completion times increase with g, so the flattened times are sorted.
    """
    times, lengths, in_logs = member_tables(family)
    return times.T.ravel(), lengths.T.ravel(), in_logs


def _last_exponent(family: CyclicFamily, T: float, strict: bool) -> int:
    """Global exponent of the last contract completed by T across the family, or -1."""
    if T < 0:
        raise DomainError(f"interruption time must be non-negative, got {T}")
    times, _, in_logs = _global_tables(family)
    if in_logs:
        T = math.log(T) if T > 0 else -math.inf
    return int(np.searchsorted(times, T, side="left" if strict else "right")) - 1


def _length_of(family: CyclicFamily, g: int) -> float:
    _, lengths, in_logs = _global_tables(family)
    return float(np.exp(lengths[g])) if in_logs else float(lengths[g])


def member_length_at(family: CyclicFamily, member: int, T: float, strict: bool = False) -> Optional[float]:
    """Longest contract of one member completed by T."""
    g = _last_exponent(family, T, strict)
    last = g - (g - member) % family.count
    return _length_of(family, last) if last >= 0 else None


def best_member_at(family: CyclicFamily, T: float, strict: bool = False) -> Tuple[int, float]:
    """The member holding the longest completed contract at T, and that length."""
    g = _last_exponent(family, T, strict)
    if g < 0:
        raise DomainError(f"no member of {family.count} has completed a contract by T={T}")
    return g % family.count, _length_of(family, g)


def performance_ranking(family: CyclicFamily, T: float, strict: bool = False) -> List[int]:
    """Members ordered best first; requires every member to have completed a contract."""
    lengths = [member_length_at(family, i, T, strict) for i in range(family.count)]
    if any(length is None for length in lengths):
        raise DomainError(f"some members have not completed a contract by T={T}")
    return [int(i) for i in np.argsort(-np.asarray(lengths), kind="stable")]


def is_cyclic_rotation(order: List[int]) -> bool:
    size = len(order)
    return all(order[i] == (order[0] - i) % size for i in range(size))


class AdvicePlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: CyclicFamily
    k: int = Field(ge=0)
    H: int = Field(default=0, ge=0)
    mode: PlanMode
    r: Optional[float] = None

    @model_validator(mode="after")
    def _family_matches_advice(self):
        if self.family.count != 2 ** self.k:
            raise ValueError(f"family has {self.family.count} members, advice of {self.k} bits needs {2 ** self.k}")
        if self.mode is PlanMode.ROBUST_NOISY and self.r is None:
            raise ValueError("robust noisy plans need a robustness r")
        return self


def _check_members_robust(family: CyclicFamily, r: float):
    t = family.base ** family.count
    robustness = t * t / (t - 1)
    if robustness > r * (1 + 1e-9):
        raise PreconditionError(f"members of X_{family.base:.6g},{family.count} have robustness {robustness} > r={r}")


def build_pareto_schedule(r: float, k: int, horizon: int = DEFAULT_HORIZON) -> AdvicePlan:
    b = pareto_optimal_base(r, k)
    family = CyclicFamily(base=b, count=2 ** k, horizon=horizon)
    _check_members_robust(family, r)
    logger.debug(f"pareto plan r={r}, k={k}: b={b:.9g}")
    return AdvicePlan(family=family, k=k, mode=PlanMode.UNTRUSTED, r=r)


def build_noisy_schedule(k: int, H: int, horizon: int = DEFAULT_HORIZON) -> AdvicePlan:
    _, b, _ = noisy_upper_bound(k, H)
    return AdvicePlan(family=CyclicFamily(base=b, count=2 ** k, horizon=horizon), k=k, H=H, mode=PlanMode.NOISY)


def build_robust_noisy_schedule(k: int, H: int, r: float, horizon: int = DEFAULT_HORIZON) -> AdvicePlan:
    _, b = robust_noisy_upper_bound(k, H, r)
    family = CyclicFamily(base=b, count=2 ** k, horizon=horizon)
    _check_members_robust(family, r)
    return AdvicePlan(family=family, k=k, H=H, mode=PlanMode.ROBUST_NOISY, r=r)


def build_rft_schedule(r: float, p: int, f: int, horizon: int = 400) -> MultiSchedule:
    """X_{b,p} on p processors, tolerating f faults and r-robust with a single survivor."""
    _, b = rft_optimal_value(r, p, f)
    return CyclicFamily(base=b, count=p, horizon=horizon).as_multi(fault_budget=f)


def consistency_of(plan: AdvicePlan) -> float:
    """Ratio achieved when the advice always names the best member."""
    return fault_tolerant_ratio(plan.family.as_multi(), ())


class SelectionResult(BaseModel):
    member: int
    ratio: float
    rank: int
    transcript: QueryTranscript


def select_with_noisy_advice(
    plan: AdvicePlan,
    channel: AdviceChannel,
    T: float,
    strict: bool = True,
) -> SelectionResult:
    """Pick a member at interruption T by playing MinCyclic against the advice channel.

    Member ``i`` sits at array position ``(-i) mod n`` so the array holds each member's rank.
    """
    if plan.mode is PlanMode.UNTRUSTED:
        raise DomainError("noisy selection needs a noisy or robust noisy plan")
    n = plan.family.count
    best, _ = best_member_at(plan.family, T, strict=strict)
    bound = channel.bound_to((-best) % n)
    on_inconsistency = "closest" if plan.mode is PlanMode.ROBUST_NOISY else "raise"
    j, transcript = solve_min_cyclic(n, bound, plan.k, plan.H, on_inconsistency=on_inconsistency)
    member = (-j) % n
    length = member_length_at(plan.family, member, T, strict=strict)
    ratio = T / length if length else math.inf
    return SelectionResult(member=member, ratio=ratio, rank=(best - member) % n, transcript=transcript)


def plan_to_json(plan: AdvicePlan) -> dict:
    return {
        "mode": plan.mode.value,
        "k": plan.k,
        "H": plan.H,
        "r": plan.r,
        "b": plan.family.base,
        "l": plan.family.count,
        "horizon": plan.family.horizon,
    }


def contract_table(plan: AdvicePlan, contracts: Optional[int] = None) -> List[Tuple[int, int, float, float]]:
    """(member, j, length, completion_time) rows; values past the float range show as inf."""
    times, lengths, in_logs = member_tables(plan.family)
    if in_logs:
        with np.errstate(over="ignore"):
            times, lengths = np.exp(times), np.exp(lengths)
    limit = min(contracts or plan.family.horizon, plan.family.horizon)
    return [
        (i, j, float(lengths[i, j]), float(times[i, j]))
        for i in range(plan.family.count)
        for j in range(limit)
    ]
