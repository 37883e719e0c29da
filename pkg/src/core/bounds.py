"""Closed-form bounds and optimal parameters.

Every one-dimensional minimisation here has the shape ``t**a / (t - 1)`` with
``a > 1`` on ``t > 1``. That objective is strictly unimodal with its minimum
at ``t = a / (a - 1)``, so constrained versions clamp the critical point into
the feasible interval instead of searching.
"""
import math
from logging import getLogger
from typing import Optional, Tuple

import numpy as np

from core.common_types import BoundsReport
from core.errors import DomainError, SequencingError, UnsupportedRegimeError
from core.utils import binary_entropy, log_unimodal_value

logger = getLogger(__name__)

# beyond this many members the per-l lower bound scan is not vectorised
MAX_LOWER_BOUND_BITS = 22


def zeta_roots(r: float) -> Tuple[float, float]:
    """Both roots of x^2 / (x - 1) = r, smallest first."""
    if r < 4:
        raise DomainError(f"robustness r={r} must be at least 4")
    zeta2 = (r + math.sqrt(r * r - 4 * r)) / 2
    # r / zeta2 avoids cancellation in (r - sqrt(...)) / 2 for large r
    return r / zeta2, zeta2


def binomial_tail(N: int, m: int) -> int:
    """Exact sum of C(N, j) for j = 0..m."""
    if N < 0 or m < 0 or m > N:
        raise DomainError(f"binomial tail needs 0 <= m <= N, got N={N}, m={m}")
    return sum(math.comb(N, j) for j in range(m + 1))


def entropy_bounds(N: int, m: int) -> Tuple[float, float]:
    if not 0 < m < N / 2:
        raise DomainError(f"entropy bracket needs 0 < m < N/2, got N={N}, m={m}")
    log2_upper = N * binary_entropy(m / N)
    upper = 2.0 ** log2_upper
    lower = upper / math.sqrt(8 * m * (1 - m / N))
    tail = binomial_tail(N, m)
    if not lower <= tail <= upper:
        raise SequencingError(f"entropy bracket [{lower}, {upper}] misses binomial_tail({N}, {m})={tail}")
    return lower, upper


def _clamped_minimum(a: float, lo: float = 1.0, hi: float = math.inf) -> Tuple[float, float]:
    """(argmin, min) of t**a / (t - 1) over t in [lo, hi], t > 1."""
    if a <= 1:
        raise DomainError(f"exponent a={a} must exceed 1")
    t = min(max(a / (a - 1.0), lo), hi)
    return t, math.exp(log_unimodal_value(a, t))


def f_curve(x: float) -> float:
    """f(x) = (1/x) * (1 + x)^(1 + 1/x)."""
    if x <= 0:
        raise DomainError(f"f(x) needs x > 0, got {x}")
    return math.exp((1 + 1 / x) * math.log1p(x) - math.log(x))


def pareto_consistency_lower_bound(r: float, k: int) -> float:
    if k < 0:
        raise DomainError(f"advice size k={k} must be non-negative")
    zeta1, zeta2 = zeta_roots(r)
    _, value = _clamped_minimum(1 + 1 / 2 ** k, zeta1, zeta2)
    return value


def pareto_optimal_base(r: float, k: int) -> float:
    """The base b of the family X_{b, 2^k} achieving the Pareto consistency."""
    if k < 0:
        raise DomainError(f"advice size k={k} must be non-negative")
    zeta1, zeta2 = zeta_roots(r)
    t, _ = _clamped_minimum(1 + 1 / 2 ** k, zeta1, zeta2)
    return math.exp(math.log(t) / 2 ** k)


def rank_slack(k: int, H: int) -> int:
    """U = 2^H * binomial_tail(k - H, H): the worst rank the noisy selector can land on.

    Without advice there is a single member, so nothing can be ranked above it and U = 0.
    """
    if 2 * H > k:
        raise UnsupportedRegimeError(f"noisy selection requires H <= k/2, got k={k}, H={H}")
    if k == 0:
        return 0
    return 2 ** H * binomial_tail(k - H, H)


def _noisy_exponent(k: int, U: int) -> float:
    n = 2 ** k
    return (n + 1 + U) / n


def noisy_upper_bound(k: int, H: int) -> Tuple[float, float, int]:
    """(bound, b, U) for the best member of X_{b, 2^k} reached with noisy advice."""
    U = rank_slack(k, H)
    t, bound = _clamped_minimum(_noisy_exponent(k, U))
    return bound, math.exp(math.log(t) / 2 ** k), U


def robust_noisy_upper_bound(k: int, H: int, r: float) -> Tuple[float, float]:
    U = rank_slack(k, H)
    zeta1, zeta2 = zeta_roots(r)
    t, bound = _clamped_minimum(_noisy_exponent(k, U), zeta1, zeta2)
    return bound, math.exp(math.log(t) / 2 ** k)


def _check_advice(k: int, H: int):
    if k < 0 or H < 0 or H > k:
        raise DomainError(f"advice needs 0 <= H <= k, got k={k}, H={H}")


def noisy_lower_bound(k: int, H: int) -> Tuple[float, float]:
    """(f(L), L) with L = 2^k / binomial_tail(k, H)."""
    _check_advice(k, H)
    L = 2 ** k / binomial_tail(k, H)
    return f_curve(L), L


def _lower_bound_terms(k: int, H: int, l: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exponent a_l and unconstrained critical point t_l of the per-l objective."""
    tail = binomial_tail(k, H)
    # at most l - 1 of l members can be faulty
    phi = np.minimum((l * tail) // 2 ** k, l - 1)
    a = (l + 1 + phi) / l
    t = (l + 1 + phi) / (1 + phi)
    return a, t


def noisy_lower_bound_at(k: int, H: int, l: int) -> float:
    """min over alpha of alpha^(l+1+phi_l) / (alpha^l - 1) with phi_l = min(floor(l * mch(k,H) / 2^k), l - 1)."""
    _check_advice(k, H)
    if not 1 <= l <= 2 ** k:
        raise DomainError(f"l={l} outside [1, 2^k]")
    a, _ = _lower_bound_terms(k, H, np.array([l], dtype=np.int64))
    _, value = _clamped_minimum(float(a[0]))
    return value


def robust_noisy_lower_bound(k: int, H: int, r: float) -> float:
    """Minimum over l in [1, 2^k] of the per-l bound with alpha^l constrained to [zeta1, zeta2]."""
    _check_advice(k, H)
    if k > MAX_LOWER_BOUND_BITS:
        raise UnsupportedRegimeError(f"robust lower bound scans 2^k members; k={k} > {MAX_LOWER_BOUND_BITS}")
    zeta1, zeta2 = zeta_roots(r)
    l = np.arange(1, 2 ** k + 1, dtype=np.int64)
    a, t = _lower_bound_terms(k, H, l)
    t = np.clip(t, zeta1, zeta2)
    values = a * np.log(t) - np.log(t - 1.0)
    return float(np.exp(np.min(values)))


def rft_optimal_value(r: float, p: int, f: int) -> Tuple[float, float]:
    """(value, b) of X_{b,p} tolerating f faults while staying r-robust with one survivor."""
    if p < 1 or f < 0 or f >= p:
        raise DomainError(f"fault tolerance needs 0 <= f < p, got p={p}, f={f}")
    zeta1, zeta2 = zeta_roots(r)
    t, value = _clamped_minimum((p + f + 1) / p, zeta1, zeta2)
    return value, t ** (1 / p)


def fcs_optimal_value(p: int, phi: int) -> Tuple[float, float]:
    """(value, alpha) of the unconstrained fault-tolerant optimum alpha^(p+1+phi) / (alpha^p - 1)."""
    if p < 1 or phi < 0 or phi >= p:
        raise DomainError(f"fault tolerance needs 0 <= phi < p, got p={p}, phi={phi}")
    t, value = _clamped_minimum((p + phi + 1) / p)
    return value, t ** (1 / p)


def prior_work_bound(k: int, H: int) -> float:
    """f(2H/k), the ratio of the earlier noisy-advice schedule."""
    _check_advice(k, H)
    if k == 0 or H == 0:
        raise DomainError(f"prior bound f(2H/k) is undefined for k={k}, H={H}")
    return f_curve(2 * H / k)


def _tau(k: int, H: int) -> float:
    return H / k if k else 0.0


def l_scale_lower_bound(k: int, H: int) -> float:
    """2^(k (1 - Ent(H/k))); a lower bound on L whenever H/k <= 1/2."""
    _check_advice(k, H)
    tau = _tau(k, H)
    value = 2.0 ** (k * (1 - binary_entropy(tau)))
    if tau <= 0.5:
        _, L = noisy_lower_bound(k, H)
        if L < value * (1 - 1e-12):
            raise SequencingError(f"L={L} below its entropy bound {value} for k={k}, H={H}")
    return value


def advantage_exponent_bound(k: int, H: int) -> float:
    """2^(k (1-tau) (1 - Ent(tau / (1-tau)))); a lower bound on 2^k / U."""
    _check_advice(k, H)
    if k == 0:
        return 1.0
    tau = _tau(k, H)
    ratio = tau / (1 - tau) if tau < 1 else 1.0
    value = 2.0 ** (k * (1 - tau) * (1 - binary_entropy(min(ratio, 1.0))))
    if ratio <= 0.5:
        advantage = 2 ** k / rank_slack(k, H)
        if advantage < value * (1 - 1e-12):
            raise SequencingError(f"2^k/U={advantage} below its entropy bound {value} for k={k}, H={H}")
    return value


def line_search_ratio(rho: float) -> float:
    """Competitive ratio 1 + 2 rho of the line-search strategy built from a schedule of ratio rho."""
    if rho < 1:
        raise DomainError(f"acceleration ratio {rho} must be at least 1")
    return 1 + 2 * rho


def bounds_report(k: int, H: int, r: float, p: Optional[int] = None, f: Optional[int] = None) -> BoundsReport:
    """Every closed form for one configuration; unsupported pieces are left out with a note."""
    _check_advice(k, H)
    zeta1, zeta2 = zeta_roots(r)
    noisy_lower, L = noisy_lower_bound(k, H)
    notes = []
    fields = dict(
        k=k, H=H, r=r, p=p, f=f, zeta1=zeta1, zeta2=zeta2, L=L,
        pareto_lower=pareto_consistency_lower_bound(r, k),
        noisy_lower=noisy_lower,
        l_scale_lower=l_scale_lower_bound(k, H),
        advantage_lower=advantage_exponent_bound(k, H),
    )

    try:
        fields["noisy_upper"], fields["optimal_base"], fields["U"] = noisy_upper_bound(k, H)
        fields["robust_noisy_upper"], _ = robust_noisy_upper_bound(k, H, r)
        if H > 0:
            notes.append(f"crude upper approximation 1 + 1/(2^H L) = {1 + 1 / (2 ** H * L):.6g}")
    except UnsupportedRegimeError as e:
        notes.append(f"noisy upper bounds unavailable: {e}")

    try:
        fields["robust_noisy_lower"] = robust_noisy_lower_bound(k, H, r)
    except UnsupportedRegimeError as e:
        notes.append(f"robust noisy lower bound unavailable: {e}")

    if k > 0 and H > 0:
        fields["prior_work"] = prior_work_bound(k, H)

    if p is not None:
        faults = f or 0
        try:
            fields["rft_value"], _ = rft_optimal_value(r, p, faults)
            fields["fcs_value"], _ = fcs_optimal_value(p, faults)
        except DomainError as e:
            notes.append(f"fault-tolerant values unavailable: {e}")

    if k > 64:
        notes.append("k > 64: binomial tails stay exact but floating-point bounds may lose digits")

    logger.debug(f"bounds report for k={k}, H={H}, r={r}: {len(notes)} notes")
    return BoundsReport(notes=notes, **fields)
