"""Property suites behind ``verify`` and the asymptotic bounds table behind ``table``."""
import time
from logging import getLogger
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from core.advisor import AdvicePlan, build_pareto_schedule, build_rft_schedule, consistency_of
from core.bounds import (
    binomial_tail,
    entropy_bounds,
    f_curve,
    l_scale_lower_bound,
    noisy_lower_bound,
    noisy_lower_bound_at,
    noisy_upper_bound,
    pareto_consistency_lower_bound,
    prior_work_bound,
    rft_optimal_value,
    robust_noisy_lower_bound,
    robust_noisy_upper_bound,
    zeta_roots,
)
from core.common_types import PropertyCheck, Scenario, SimulationConfig, VerificationReport, VerifyLevel
from core.errors import DomainError, SequencingError
from core.querygames import play_adversary, play_random_solver, rank_guarantee, worst_case_rank
from core.sequences import (
    acceleration_ratio,
    alpha_estimate,
    check_zeta_envelope,
    gal_supremum,
    geometric_merged,
    geometric_schedule,
    merged_sequence,
)

logger = getLogger(__name__)

Outcome = Tuple[bool, str]

ENVELOPE_ROBUSTNESS = (4.0, 4.5, 5.0, 8.0)
PARETO_ROBUSTNESS = (4.0, 4.5, 5.0, 6.0)


def grid_minimum(a: float, lo: float, hi: float, points: int) -> float:
    """Dense log-spaced oracle for the minimum of t^a / (t - 1) on [lo, hi]."""
    t = np.geomspace(lo, hi, points) if hi > lo else np.array([lo])
    return float(np.min(np.exp(a * np.log(t) - np.log(t - 1.0))))


def pareto_tightness(plan: AdvicePlan, r: float) -> float:
    """Gap between the plan's empirical consistency and the Pareto lower bound."""
    return abs(consistency_of(plan) - pareto_consistency_lower_bound(r, plan.k))


def check_optimal_base(full: bool) -> Outcome:
    gap = abs(acceleration_ratio(geometric_schedule(2.0, horizon=60)) - 4.0)
    if gap > 1e-9:
        return False, f"G_2 ratio off by {gap:.3g}"
    for b in np.linspace(1.2, 6.0, 50 if full else 10):
        gap = abs(acceleration_ratio(geometric_schedule(float(b))) - b * b / (b - 1))
        if gap > 1e-6:
            return False, f"G_{b:.4g} ratio off by {gap:.3g}"
    return True, "geometric ratios match b^2/(b-1)"


def check_envelopes(full: bool) -> Outcome:
    for r in ENVELOPE_ROBUSTNESS:
        zeta1, zeta2 = zeta_roots(r)
        for b in np.linspace(zeta1, zeta2, 100 if full else 20):
            report = check_zeta_envelope(geometric_schedule(float(b)), r)
            if not report.passed:
                return False, f"G_{b:.6g} violates the r={r} envelope at {report.violations[:3]}"
    for k in range(3 if full else 2):
        plan = build_pareto_schedule(5.0, k)
        for member in plan.family.members():
            if not check_zeta_envelope(member, 5.0).passed:
                return False, f"member {member.label} of the k={k} Pareto family violates the envelope"
    return True, "geometric bases in [zeta1, zeta2] and built members stay inside the envelopes"


def check_merged_growth(full: bool) -> Outcome:
    for r in (6.0, 8.0):
        zeta1, zeta2 = zeta_roots(r)
        for p in (2, 3, 4) if full else (2, 3):
            lo, hi = zeta1 ** (1 / p) - 0.02, zeta2 ** (1 / p) + 0.02
            for f in range(p):
                alpha = alpha_estimate(merged_sequence(build_rft_schedule(r, p, f, horizon=200)))
                if not lo <= alpha <= hi:
                    return False, f"alpha={alpha:.6g} outside [{lo:.6g}, {hi:.6g}] for p={p}, f={f}, r={r}"
    return True, "merged r-robust families grow within [zeta1^(1/p), zeta2^(1/p)]"


def check_pareto_lower(full: bool) -> Outcome:
    points, tolerance = (10 ** 6, 1e-8) if full else (10 ** 4, 1e-6)
    for r in PARETO_ROBUSTNESS + (4.1,):
        zeta1, zeta2 = zeta_roots(r)
        previous = None
        for k in range(4):
            closed = pareto_consistency_lower_bound(r, k)
            oracle = grid_minimum(1 + 1 / 2 ** k, zeta1, zeta2, points)
            if not closed * (1 - 1e-12) <= oracle <= closed * (1 + tolerance):
                return False, f"r={r}, k={k}: closed form {closed:.12g} vs grid {oracle:.12g}"
            if previous is not None and closed > previous * (1 + 1e-12):
                return False, f"r={r}: consistency bound increases at k={k}"
            previous = closed
        if abs(pareto_consistency_lower_bound(r, 0) - 4.0) > 1e-12:
            return False, f"r={r}: no-advice bound differs from 4"
    return True, "clamped minima agree with the grid oracle and decrease in k"


def check_pareto_upper(full: bool) -> Outcome:
    for r in PARETO_ROBUSTNESS:
        for k in range(4 if full else 3):
            plan = build_pareto_schedule(r, k)
            gap = pareto_tightness(plan, r)
            if gap > 1e-6:
                return False, f"r={r}, k={k}: consistency misses the lower bound by {gap:.3g}"
            worst = max(acceleration_ratio(member) for member in plan.family.members())
            if worst > r + 1e-6:
                return False, f"r={r}, k={k}: a member has ratio {worst:.9g} > r"
    return True, "Pareto families meet the consistency lower bound and stay r-robust"


def check_cyclic_upper(full: bool) -> Outcome:
    for k in range(3, 9 if full else 7):
        for H in range(0, min(2, k // 2) + 1):
            n = 2 ** k
            worst, bound = worst_case_rank(n, k, H), rank_guarantee(n, k, H)
            if worst > bound:
                return False, f"n={n}, k={k}, H={H}: rank {worst} > {bound}"
    return True, "exhaustive games never exceed ceil(n mch(k-H,H) / 2^(k-H))"


def check_cyclic_lower(full: bool) -> Outcome:
    seeds = range(1000 if full else 50)
    for n in (8, 16, 32):
        for k in (3, 4, 5):
            for H in (0, 1):
                floor_bound = n * binomial_tail(k, H) // 2 ** k
                min_survivors = -(-n * binomial_tail(k, H) // 2 ** k)
                outcomes = [play_adversary(n, k, H)] + [play_random_solver(n, k, H, seed) for seed in seeds]
                for outcome in outcomes:
                    if outcome.survivors < min_survivors:
                        return False, f"n={n}, k={k}, H={H}: only {outcome.survivors} survivors"
                    floor = outcome.guarantee if outcome.survivors >= 2 else floor_bound - 1
                    if outcome.forced_rank < floor:
                        return False, f"n={n}, k={k}, H={H}: forced rank {outcome.forced_rank} < {floor}"
    return True, "the adversary keeps mch(k,H)/2^k of the candidates and forces the worst rank"


def check_noisy_lower(full: bool) -> Outcome:
    for k in range(21):
        for H in range(k // 2 + 1):
            lower, _ = noisy_lower_bound(k, H)
            upper, _, _ = noisy_upper_bound(k, H)
            if lower > upper * (1 + 1e-12):
                return False, f"k={k}, H={H}: lower {lower:.9g} > upper {upper:.9g}"
    for k in range(1, 7 if full else 5):
        for H in range(k + 1):
            _, L = noisy_lower_bound(k, H)
            per_l = min(noisy_lower_bound_at(k, H, l) for l in range(1, 2 ** k + 1))
            wide = robust_noisy_lower_bound(k, H, 1e6)
            if per_l < f_curve(L) * (1 - 1e-12) or abs(wide - per_l) > 1e-9 * per_l:
                return False, f"k={k}, H={H}: per-l minimum {per_l:.9g}, wide-r bound {wide:.9g}, f(L)={f_curve(L):.9g}"
    for k in range(7 if full else 5):
        for H in range(k // 2 + 1):
            for r in (4.0, 5.0, 100.0):
                lower = robust_noisy_lower_bound(k, H, r)
                upper, _ = robust_noisy_upper_bound(k, H, r)
                if lower > upper * (1 + 1e-12):
                    return False, f"k={k}, H={H}, r={r}: robust lower {lower:.9g} > robust upper {upper:.9g}"
    lower, upper = entropy_bounds(24, 8)
    if not lower <= binomial_tail(24, 8) <= upper:
        return False, "entropy bracket misses mch(24, 8)"
    for k in (8, 16, 32):
        l_scale_lower_bound(k, k // 4)
    return True, "lower bounds stay below the matching upper bounds"


def check_gal_functional(full: bool) -> Outcome:
    for a in (1.5, 2.0, 3.0):
        merged = geometric_merged(a, 400)
        for p in (1, 2, 4) if full else (1, 2):
            for phi in range(p):
                target = a ** (p + 1 + phi) / (a ** p - 1)
                value = gal_supremum(merged, p, phi)
                if value < target - 1e-6:
                    return False, f"a={a}, p={p}, phi={phi}: sup F_q {value:.9g} < {target:.9g}"
    for p, f, r in ((2, 1, 8.0), (3, 1, 6.0)):
        value, _ = rft_optimal_value(r, p, f)
        sup = gal_supremum(merged_sequence(build_rft_schedule(r, p, f, horizon=400)), p, f)
        if sup < value - 1e-3:
            return False, f"RFT({r},{p},{f}): sup F_q {sup:.9g} below {value:.9g}"
    return True, "the functional reaches a^(p+1+phi)/(a^p-1) on geometric sequences"


def _run(config: SimulationConfig) -> Outcome:
    # the pipeline imports this package, so load it lazily
    from simulation_agent import run_scenario

    run = run_scenario(config)
    label = f"{config.scenario.value}(k={config.k}, H={config.H}, r={config.r}, p={config.p}, f={config.f})"
    if not run.summary.passed:
        return False, f"{label}: max {run.summary.max_achieved:.9g} vs bound {run.summary.bound:.9g}; {run.errors}"
    return True, label


def check_noisy_upper(full: bool) -> Outcome:
    cases = [(k, H) for k in (4, 6, 8) for H in (0, 1, 2)] if full else [(4, 0), (4, 1), (6, 1)]
    for k, H in cases:
        passed, detail = _run(SimulationConfig(scenario=Scenario.NOISY, k=k, H=H, t_grid=1000 if full else 200))
        if not passed:
            return False, detail
    passed, detail = _run(SimulationConfig(scenario=Scenario.ROBUST_NOISY, k=3, H=1, r=4.5, t_grid=200))
    if not passed:
        return False, detail
    return True, f"{len(cases) + 1} noisy scenarios within their bounds"


def check_rft(full: bool) -> Outcome:
    grid = [(p, f, r) for p in (2, 3, 4) for f in range(p) for r in (6.0, 8.0)] if full else [(2, 1, 8.0), (3, 1, 8.0)]
    for p, f, r in grid:
        passed, detail = _run(SimulationConfig(scenario=Scenario.RFT, p=p, f=f, r=r, horizon=400))
        if not passed:
            return False, detail
    return True, f"{len(grid)} fault-tolerant configurations within value and r"


SUITES: Dict[str, Callable[[bool], Outcome]] = {
    "Prop1": check_optimal_base,
    "Thm-zetas": check_envelopes,
    "Cor-merge": check_merged_growth,
    "Thm-lower-pareto": check_pareto_lower,
    "Thm-pareto-upper": check_pareto_upper,
    "Thm-cyclic-upper": check_cyclic_upper,
    "Thm-noisy-upper": check_noisy_upper,
    "Thm-cyclic-lower": check_cyclic_lower,
    "Thm-noisy-lower": check_noisy_lower,
    "Thm-mult-alpha-faulty": check_gal_functional,
    "Thm-rft": check_rft,
}


def verify_theorems(level: VerifyLevel = VerifyLevel.QUICK, tags: Optional[Iterable[str]] = None) -> VerificationReport:
    """Run every property suite (or the named ones) and collect pass/fail per tag."""
    full = level is VerifyLevel.FULL
    report = VerificationReport(level=level)
    for tag, suite in SUITES.items():
        if tags is not None and tag not in tags:
            continue
        started = time.perf_counter()
        try:
            passed, detail = suite(full)
        except SequencingError as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        elapsed = time.perf_counter() - started
        report.checks.append(PropertyCheck(tag=tag, passed=passed, detail=detail, seconds=elapsed))
        if passed:
            logger.info(f"✅ {tag} ({elapsed:.2f}s): {detail}")
        else:
            logger.error(f"❌ {tag} ({elapsed:.2f}s): {detail}")
    return report


def compare_bounds_table(k_range: Iterable[int], tau_list: Iterable[float], r: Optional[float] = None) -> Dict:
    """Noisy bounds against the earlier f(2 tau) bound over a (k, tau) grid.

    Flags per tau whether the noisy upper bound is non-increasing in k and the first k
    where it drops below f(2 tau). The monotonicity flag is informational only:
    H = floor(tau k) jumps, so U can grow with k and the bound can rise between neighbouring rows.
    """
    ks = sorted(k_range)
    rows: List[Dict] = []
    monotone_informational, crosses_below_prior = {}, {}
    for tau in tau_list:
        if tau < 0 or tau > 0.5:
            raise DomainError(f"error fraction tau={tau} must lie in [0, 1/2]")
        uppers = []
        crossing = None
        for k in ks:
            H = int(tau * k)
            upper, _, _ = noisy_upper_bound(k, H)
            lower, _ = noisy_lower_bound(k, H)
            prior = prior_work_bound(k, H) if k and H else None
            row = {
                "k": k,
                "tau": tau,
                "H": H,
                "noisy_upper": upper,
                "noisy_lower": lower,
                "prior_work": prior,
                "l_scale_lower": l_scale_lower_bound(k, H),
            }
            if r is not None:
                row["robust_noisy_upper"], _ = robust_noisy_upper_bound(k, H, r)
            rows.append(row)
            uppers.append(upper)
            if crossing is None and tau > 0 and upper < f_curve(2 * tau):
                crossing = k
        monotone_informational[tau] = all(b <= a * (1 + 1e-12) for a, b in zip(uppers, uppers[1:]))
        crosses_below_prior[tau] = crossing
    return {"rows": rows, "monotone_informational": monotone_informational, "crosses_below_prior": crosses_below_prior}
