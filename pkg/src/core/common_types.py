from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class AdviceMode(Enum):
    TRUTHFUL = "truthful"
    ADVERSARIAL = "adversarial"
    RANDOM = "random"
    SCRIPTED = "scripted"
    REPLAY = "replay"


class PlanMode(Enum):
    UNTRUSTED = "untrusted"
    NOISY = "noisy"
    ROBUST_NOISY = "robustNoisy"


class Scenario(Enum):
    PARETO = "pareto"
    NOISY = "noisy"
    ROBUST_NOISY = "robustNoisy"
    RFT = "rft"
    GAME = "game"


class VerifyLevel(Enum):
    QUICK = "quick"
    FULL = "full"


class ScheduleKind(Enum):
    GEOMETRIC = "geometric"
    CYCLIC_MEMBER = "cyclic-member"
    EXPLICIT = "explicit"


class RobustnessSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: float = Field(ge=4.0)


class AdviceConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=0)
    H: int = Field(ge=0)

    @property
    def tau(self) -> float:
        # no advice means no error fraction
        return self.H / self.k if self.k else 0.0


class BoundsReport(BaseModel):
    """Every closed form for one (k, H, r, p, f) configuration.

    Keys that do not apply (or fall in an unsupported regime) stay ``None``
    and the reason is appended to ``notes``.
    """

    model_config = ConfigDict(populate_by_name=True)

    k: int
    H: int
    r: float
    p: Optional[int] = None
    f: Optional[int] = None
    zeta1: float
    zeta2: float
    U: Optional[int] = None
    L: float
    pareto_lower: float
    noisy_upper: Optional[float] = None
    noisy_lower: float
    robust_noisy_upper: Optional[float] = None
    robust_noisy_lower: Optional[float] = None
    rft_value: Optional[float] = None
    fcs_value: Optional[float] = None
    optimal_base: Optional[float] = None
    prior_work: Optional[float] = None
    l_scale_lower: Optional[float] = None
    advantage_lower: Optional[float] = None
    notes: List[str] = []


class QueryRecord(BaseModel):
    q: int | List[int]
    a: int
    lie: Optional[bool] = None


class QueryTranscript(BaseModel):
    records: List[QueryRecord] = []
    output_index: Optional[int] = None

    @property
    def lies(self) -> int:
        return sum(1 for record in self.records if record.lie)

    def answers(self) -> List[int]:
        return [record.a for record in self.records]


class ProbeRecord(BaseModel):
    index: int
    kind: str
    T: Optional[float] = None
    member: Optional[int] = None
    fault_set: Optional[List[int]] = None
    lie_positions: Optional[List[int]] = None
    ratio: float
    bound: float
    # bound is a floor the value must reach (adversary games)
    lower: bool = False


class RunSummary(BaseModel):
    max_achieved: float
    bound: float
    slack: float
    passed: bool
    probes: int
    sampled: bool = False


class SimulationConfig(BaseModel):
    scenario: Scenario
    k: int = Field(default=0, ge=0)
    H: int = Field(default=0, ge=0)
    r: Optional[float] = None
    p: int = Field(default=1, ge=1)
    f: int = Field(default=0, ge=0)
    n: Optional[int] = Field(default=None, ge=1)
    channel_mode: AdviceMode = AdviceMode.SCRIPTED
    t_grid: int = Field(default=1000, ge=1)
    seeds: List[int] = [0]
    horizon: int = Field(default=200, ge=2)
    tolerance: float = Field(default=1e-6, gt=0)
    max_patterns: int = Field(default=100_000, ge=1)
    sample_count: int = Field(default=1000, ge=1)

    @model_validator(mode="after")
    def _parameters_in_range(self):
        if self.r is not None and self.r < 4:
            raise ValueError(f"robustness r={self.r} must be at least 4")
        if self.f >= self.p:
            raise ValueError(f"fault budget f={self.f} must be < p={self.p}")
        if self.H > self.k:
            raise ValueError(f"error bound H={self.H} exceeds advice size k={self.k}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        return self


class SimulationRun(BaseModel):
    config: SimulationConfig
    records: List[ProbeRecord] = []
    summary: Optional[RunSummary] = None
    transcripts: List[QueryTranscript] = []
    errors: List[str] = []
    notes: List[str] = []


class SimulationState(BaseModel):
    """Graph state threaded through the simulation pipeline nodes."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: SimulationConfig
    plan: Optional[Any] = None
    multi: Optional[Any] = None
    probes: List[Dict[str, Any]] = []
    records: List[ProbeRecord] = []
    bound: Optional[float] = None
    survivor_bound: Optional[float] = None
    transcripts: List[QueryTranscript] = []
    sampled: bool = False
    errors: List[str] = []
    notes: List[str] = []
    run: Optional[SimulationRun] = None


class PropertyCheck(BaseModel):
    tag: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


class VerificationReport(BaseModel):
    level: VerifyLevel
    checks: List[PropertyCheck] = []

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def tags(self) -> List[str]:
        return [check.tag for check in self.checks]
