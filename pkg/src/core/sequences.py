"""Schedules, multi-processor schedules and the quantities evaluated on them.

Infinite schedules are closed-form rules materialized up to a horizon; every
supremum below is taken over that horizon and is therefore a lower estimate of
the true supremum.
"""
import math
from logging import getLogger
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.common_types import ScheduleKind
from core.errors import DomainError, InvalidScheduleError, PreconditionError
from core.utils import log_cumsum, log_sum, log_window_sums, needs_log_space

logger = getLogger(__name__)

DEFAULT_HORIZON = 200


class Schedule(BaseModel):
    """A contract schedule X = (x_i): a closed-form rule plus a materialization horizon."""

    model_config = ConfigDict(frozen=True)

    kind: ScheduleKind = ScheduleKind.GEOMETRIC
    base: Optional[float] = None
    scale: float = 1.0
    horizon: int = Field(default=DEFAULT_HORIZON, ge=1)
    label: str = ""
    lengths_: Optional[Tuple[float, ...]] = Field(default=None, alias="lengths")

    @model_validator(mode="after")
    def _rule_present(self):
        if self.kind is ScheduleKind.EXPLICIT:
            if not self.lengths_:
                raise ValueError("explicit schedule needs lengths")
        elif self.base is None:
            raise ValueError(f"{self.kind.value} schedule needs a base")
        return self

    @property
    def size(self) -> int:
        return len(self.lengths_) if self.kind is ScheduleKind.EXPLICIT else self.horizon

    def log_lengths(self) -> np.ndarray:
        if self.kind is ScheduleKind.EXPLICIT:
            values = np.asarray(self.lengths_, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.log(values)
        return math.log(self.scale) + np.arange(self.horizon) * math.log(self.base)

    def lengths(self) -> np.ndarray:
        """Linear lengths; raises when they would overflow (use ``log_lengths``)."""
        if self.kind is ScheduleKind.EXPLICIT:
            return np.asarray(self.lengths_, dtype=float)
        if needs_log_space(self.log_lengths()):
            raise DomainError(f"schedule {self.label or self.kind.value} exceeds the linear range")
        # exact integer powers keep completion instants exact for dyadic bases
        return self.scale * np.power(self.base, np.arange(self.horizon, dtype=float))


class MultiSchedule(BaseModel):
    """A p-processor schedule with a fault budget phi < p."""

    model_config = ConfigDict(frozen=True)

    processors: Tuple[Schedule, ...]
    fault_budget: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _budget_below_p(self):
        if not self.processors:
            raise ValueError("a multi-schedule needs at least one processor")
        if self.fault_budget >= len(self.processors):
            raise ValueError(f"fault budget {self.fault_budget} must be < p={len(self.processors)}")
        return self

    @property
    def p(self) -> int:
        return len(self.processors)


class MergedSequence(BaseModel):
    """All materialized lengths of a multi-schedule in non-decreasing order."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    log_values: np.ndarray

    def __len__(self) -> int:
        return int(self.log_values.size)

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)


def geometric_schedule(base: float, scale: float = 1.0, horizon: int = DEFAULT_HORIZON, label: str = "") -> Schedule:
    """G_b scaled by c: x_i = c * b**i."""
    if not base > 1.0:
        raise InvalidScheduleError(f"geometric base must exceed 1, got {base}")
    if not scale > 0.0:
        raise InvalidScheduleError(f"scale must be positive, got {scale}")
    return Schedule(kind=ScheduleKind.GEOMETRIC, base=base, scale=scale, horizon=horizon, label=label or f"G_{base:g}")


def explicit_schedule(lengths: Sequence[float], label: str = "") -> Schedule:
    schedule = Schedule(kind=ScheduleKind.EXPLICIT, lengths=tuple(float(x) for x in lengths), label=label)
    _checked_log_lengths(schedule)
    return schedule


def scaled(schedule: Schedule, factor: float) -> Schedule:
    """The schedule c * X."""
    if schedule.kind is ScheduleKind.EXPLICIT:
        return explicit_schedule([factor * x for x in schedule.lengths_], label=schedule.label)
    return schedule.model_copy(update={"scale": schedule.scale * factor})


def _checked_log_lengths(schedule: Schedule) -> np.ndarray:
    log_x = schedule.log_lengths()
    if not np.all(np.isfinite(log_x)):
        raise InvalidScheduleError(f"schedule {schedule.label!r} has non-positive lengths")
    if log_x.size > 1 and not np.all(np.diff(log_x) > 0):
        raise InvalidScheduleError(f"schedule {schedule.label!r} is not strictly increasing")
    return log_x


def completion_times(schedule: Schedule) -> Tuple[np.ndarray, bool]:
    """Completion instants of every contract, and whether they are log-values."""
    log_x = _checked_log_lengths(schedule)
    if needs_log_space(log_x):
        return log_cumsum(log_x), True
    return np.cumsum(schedule.lengths()), False


def acceleration_ratio(schedule: Schedule, prior: float = 1.0) -> float:
    """sup_i (x_0 + ... + x_i) / x_{i-1} over the horizon, with x_{-1} = ``prior``.

    ``prior=1`` is the standard convention; passing ``prior=c`` for the schedule
    ``c*X`` makes the ratio exactly scale-invariant.
    """
    if not prior > 0:
        raise DomainError(f"x_-1 must be positive, got {prior}")
    log_x = _checked_log_lengths(schedule)
    if needs_log_space(log_x):
        log_denominator = np.concatenate(([math.log(prior)], log_x[:-1]))
        return float(np.exp(np.max(log_cumsum(log_x) - log_denominator)))
    x = schedule.lengths()
    denominator = np.concatenate(([prior], x[:-1]))
    return float(np.max(np.cumsum(x) / denominator))


def longest_completed_by(schedule: Schedule, T: float, strict: bool = False) -> Optional[float]:
    """l(X, T): the longest contract finished by time T, or None.

    With ``strict`` a contract finishing exactly at T does not count (an
    interruption infinitesimally before its completion).
    """
    if T < 0:
        raise DomainError(f"interruption time must be non-negative, got {T}")
    times, in_logs = completion_times(schedule)
    side = "left" if strict else "right"
    if in_logs:
        if T == 0:
            return None
        idx = int(np.searchsorted(times, math.log(T), side=side)) - 1
        return float(np.exp(schedule.log_lengths()[idx])) if idx >= 0 else None
    idx = int(np.searchsorted(times, T, side=side)) - 1
    return float(schedule.lengths()[idx]) if idx >= 0 else None


def fault_tolerant_ratio(multi: MultiSchedule, fault_set: Iterable[int] = ()) -> float:
    """Worst-case T / (longest contract completed by T on live processors).

    Interruptions are probed right before every live completion instant (contracts
    finishing at that instant excluded). The first live completion contributes
    t0 / 1 (a virtual unit contract precedes every schedule); earlier interruptions are excluded.
    Probes stop at the last materialized completion of the earliest-ending live
    processor so horizon truncation never inflates the ratio.
    """
    faults = set(fault_set)
    if any(i < 0 or i >= multi.p for i in faults):
        raise DomainError(f"fault set {sorted(faults)} names processors outside [0, {multi.p})")
    live = [i for i in range(multi.p) if i not in faults]
    if not live:
        raise DomainError("at least one processor must survive")
    if len(live) == 1:
        return acceleration_ratio(multi.processors[live[0]])

    log_times, log_lengths = [], []
    for i in live:
        log_x = _checked_log_lengths(multi.processors[i])
        log_lengths.append(log_x)
        log_times.append(log_cumsum(log_x))
    cutoff = min(times[-1] for times in log_times)
    times = np.concatenate(log_times)
    lengths = np.concatenate(log_lengths)
    keep = times <= cutoff
    order = np.argsort(times[keep], kind="stable")
    times, lengths = times[keep][order], lengths[keep][order]

    # prior[g] = longest length among the first g completions; prior[0] is x_-1 = 1
    prior = np.concatenate(([0.0], np.maximum.accumulate(lengths)))
    group_start = np.searchsorted(times, times, side="left")
    log_denominator = prior[group_start]
    if not np.all(np.isfinite(log_denominator)):
        return math.inf
    return float(np.exp(np.max(times - log_denominator)))


def merged_sequence(multi: MultiSchedule) -> MergedSequence:
    log_values = np.concatenate([_checked_log_lengths(s) for s in multi.processors])
    return MergedSequence(log_values=np.sort(log_values, kind="stable"))


def merged_from_values(values: Sequence[float]) -> MergedSequence:
    return MergedSequence(log_values=np.sort(np.log(np.asarray(values, dtype=float))))


def geometric_merged(base: float, size: int) -> MergedSequence:
    """The sequence (a^i) for i < size, held in log-space."""
    return MergedSequence(log_values=np.arange(size) * math.log(base))


def alpha_estimate(seq: MergedSequence) -> float:
    """Tail-windowed proxy for alpha = limsup x_n^(1/n): max of x_n^(1/n) for n in [N/2, N)."""
    size = len(seq)
    if size < 2:
        raise DomainError("alpha estimate needs at least two values")
    n = np.arange(max(size // 2, 1), size)
    return float(np.exp(np.max(seq.log_values[n] / n)))


def gal_functional(seq: MergedSequence, q: int, p: int, phi: int) -> float:
    """F_q = sum_{i<=q+phi+1} x_i / sum_{q-p+1<=i<=q} x_i."""
    if p < 1 or phi < 0:
        raise DomainError(f"need p >= 1 and phi >= 0, got p={p}, phi={phi}")
    if q < p - 1 or q + phi + 1 >= len(seq):
        raise DomainError(f"q={q} outside the materialized range for p={p}, phi={phi}, N={len(seq)}")
    numerator = log_sum(seq.log_values[: q + phi + 2])
    denominator = log_sum(seq.log_values[q - p + 1: q + 1])
    return float(math.exp(numerator - denominator))


def gal_supremum(seq: MergedSequence, p: int, phi: int, q_max: Optional[int] = None) -> float:
    """sup over admissible q (up to ``q_max``) of the Gal functional."""
    last = len(seq) - phi - 2
    if q_max is not None:
        last = min(last, q_max)
    if last < p - 1:
        raise DomainError(f"sequence of length {len(seq)} too short for p={p}, phi={phi}")
    prefix = log_cumsum(seq.log_values)
    q = np.arange(p - 1, last + 1)
    windows = log_window_sums(prefix, p)[: q.size]
    return float(np.exp(np.max(prefix[q + phi + 1] - windows)))


class EnvelopeReport(BaseModel):
    r: float
    zeta1: float
    zeta2: float
    checked: int
    passed: bool
    violations: List[int] = []


def check_zeta_envelope(
    schedule: Schedule,
    r: float,
    anchors: Optional[Tuple[float, float]] = None,
    tolerance: float = 1e-9,
) -> EnvelopeReport:
    """Check the length envelopes every r-robust schedule obeys.

    For all i: (z1 - 1) * z1**i * x_0 <= x_{i+1} <= S_i * x_1 with
    S_i = (z2**(i+1) - z1**(i+1)) / (z2 - z1), which equals (i+1) * 2**i at r = 4.
    ``anchors`` replaces (x_0, x_1) as the envelope constants.
    """
    from core.bounds import zeta_roots

    zeta1, zeta2 = zeta_roots(r)
    ratio = acceleration_ratio(schedule)
    if ratio > r * (1 + tolerance):
        raise PreconditionError(f"schedule has acceleration ratio {ratio:.9g} > r={r}")
    log_x = _checked_log_lengths(schedule)
    if log_x.size < 2:
        return EnvelopeReport(r=r, zeta1=zeta1, zeta2=zeta2, checked=0, passed=True)
    log_z0, log_z1 = (math.log(anchors[0]), math.log(anchors[1])) if anchors else (log_x[0], log_x[1])

    i = np.arange(log_x.size - 1)
    log_lower = math.log(zeta1 - 1.0) + i * math.log(zeta1) + log_z0 if zeta1 > 1.0 else np.full(i.size, -np.inf)
    # S_i = z1 * S_{i-1} + z2**i, summed in log-space (stable when z1 and z2 merge at r = 4)
    log_s = np.empty(i.size)
    log_s[0] = 0.0
    for idx in range(1, i.size):
        log_s[idx] = np.logaddexp(math.log(zeta1) + log_s[idx - 1], idx * math.log(zeta2))
    log_upper = log_s + log_z1

    observed = log_x[1:]
    bad = (observed < log_lower - tolerance) | (observed > log_upper + tolerance)
    violations = [int(v) for v in np.flatnonzero(bad)[:20]]
    if violations:
        logger.debug(f"envelope violated at i={violations[:5]} for r={r}")
    return EnvelopeReport(
        r=r, zeta1=zeta1, zeta2=zeta2, checked=int(i.size), passed=not violations, violations=violations
    )


def schedule_to_json(schedule: Schedule) -> dict:
    if schedule.kind is ScheduleKind.EXPLICIT:
        return {"kind": "explicit", "lengths": list(schedule.lengths_), "label": schedule.label}
    return {
        "kind": schedule.kind.value,
        "base": schedule.base,
        "scale": schedule.scale,
        "horizon": schedule.horizon,
        "label": schedule.label,
    }


def schedule_from_json(payload: dict) -> Schedule:
    kind = ScheduleKind(payload["kind"])
    if kind is ScheduleKind.EXPLICIT:
        return explicit_schedule(payload["lengths"], label=payload.get("label", ""))
    schedule = Schedule(
        kind=kind,
        base=payload["base"],
        scale=payload.get("scale", 1.0),
        horizon=payload.get("horizon", DEFAULT_HORIZON),
        label=payload.get("label", ""),
    )
    _checked_log_lengths(schedule)
    return schedule
