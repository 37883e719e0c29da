import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.advisor import CyclicFamily, build_pareto_schedule, build_rft_schedule
from core.bounds import zeta_roots
from core.errors import DomainError, InvalidScheduleError, PreconditionError
from core.sequences import (
    MultiSchedule,
    acceleration_ratio,
    alpha_estimate,
    check_zeta_envelope,
    explicit_schedule,
    fault_tolerant_ratio,
    gal_functional,
    gal_supremum,
    geometric_merged,
    geometric_schedule,
    longest_completed_by,
    merged_from_values,
    merged_sequence,
    scaled,
    schedule_from_json,
    schedule_to_json,
)


def test_doubling_schedule_ratio_approaches_four():
    assert acceleration_ratio(geometric_schedule(2.0, horizon=60)) == pytest.approx(4.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=1.2, max_value=10.0))
def test_geometric_ratio_matches_closed_form(b):
    assert acceleration_ratio(geometric_schedule(b)) == pytest.approx(b * b / (b - 1), rel=1e-6)


def test_ratio_is_scale_invariant_with_matching_prior():
    base = acceleration_ratio(geometric_schedule(3.0))
    assert acceleration_ratio(scaled(geometric_schedule(3.0), 5.0), prior=5.0) == pytest.approx(base, rel=1e-12)


def test_long_horizon_switches_to_log_space():
    schedule = geometric_schedule(2.0, horizon=2000)
    assert acceleration_ratio(schedule) == pytest.approx(4.0, rel=1e-9)
    with pytest.raises(DomainError):
        schedule.lengths()


def test_invalid_schedules_are_rejected():
    with pytest.raises(InvalidScheduleError):
        geometric_schedule(1.0)
    with pytest.raises(InvalidScheduleError):
        explicit_schedule([1.0, 1.0, 2.0])
    with pytest.raises(InvalidScheduleError):
        explicit_schedule([1.0, -1.0])


def test_longest_completed_by():
    schedule = geometric_schedule(2.0, horizon=10)
    # completions at 1, 3, 7, 15
    assert longest_completed_by(schedule, 0.5) is None
    assert longest_completed_by(schedule, 3.0) == 2.0
    assert longest_completed_by(schedule, 3.0, strict=True) == 1.0
    assert longest_completed_by(schedule, 14.0) == 4.0
    with pytest.raises(DomainError):
        longest_completed_by(schedule, -1.0)


def test_single_live_processor_delegates_to_acceleration_ratio():
    family = CyclicFamily(base=2.0, count=3, horizon=60)
    multi = family.as_multi(fault_budget=2)
    for survivor in range(3):
        faults = [i for i in range(3) if i != survivor]
        assert fault_tolerant_ratio(multi, faults) == acceleration_ratio(family.member(survivor))


def test_fault_tolerant_ratio_validates_faults():
    multi = CyclicFamily(base=2.0, count=2, horizon=30).as_multi(fault_budget=1)
    with pytest.raises(DomainError):
        fault_tolerant_ratio(multi, [2])
    with pytest.raises(DomainError):
        fault_tolerant_ratio(multi, [0, 1])


def test_more_processors_never_hurt():
    multi = CyclicFamily(base=1.5, count=4, horizon=80).as_multi(fault_budget=1)
    full = fault_tolerant_ratio(multi)
    assert all(fault_tolerant_ratio(multi, [i]) >= full - 1e-9 for i in range(4))


def test_fault_budget_must_stay_below_p():
    schedule = geometric_schedule(2.0)
    with pytest.raises(ValueError):
        MultiSchedule(processors=(schedule, schedule), fault_budget=2)


def test_merged_cyclic_family_is_geometric():
    merged = merged_sequence(CyclicFamily(base=2.0, count=4, horizon=50).as_multi())
    np.testing.assert_allclose(merged.values[:12], 2.0 ** np.arange(12))
    assert len(merged) == 200


def test_alpha_estimate_of_geometric_sequence():
    assert alpha_estimate(geometric_merged(3.0, 400)) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        alpha_estimate(merged_from_values([1.0]))


def test_gal_functional_on_doubling_sequence():
    seq = geometric_merged(2.0, 100)
    # (2^(q+2) - 1) / 2^q
    assert gal_functional(seq, 5, 1, 0) == pytest.approx(4 - 2 ** -5)
    assert gal_supremum(seq, 1, 0) == pytest.approx(4.0, abs=1e-9)
    with pytest.raises(DomainError):
        gal_functional(seq, 99, 1, 0)


@pytest.mark.parametrize("a, p, phi", [(2.0, 1, 0), (1.5, 2, 1), (3.0, 4, 2)])
def test_gal_supremum_reaches_geometric_value(a, p, phi):
    target = a ** (p + 1 + phi) / (a ** p - 1)
    assert gal_supremum(geometric_merged(a, 400), p, phi) >= target - 1e-6


def test_envelope_holds_for_doubling_at_four():
    report = check_zeta_envelope(geometric_schedule(2.0, horizon=40), 4.0)
    assert report.passed
    assert report.zeta1 == report.zeta2 == 2.0


def test_envelope_fails_with_halved_anchor():
    report = check_zeta_envelope(geometric_schedule(2.0, horizon=40), 4.0, anchors=(1.0, 1.0))
    assert not report.passed
    assert 0 in report.violations


def test_envelope_requires_robust_schedule():
    with pytest.raises(PreconditionError):
        check_zeta_envelope(geometric_schedule(3.0), 4.0)


def test_schedule_json_round_trip():
    schedule = geometric_schedule(1.7, scale=2.5, horizon=33, label="sample")
    restored = schedule_from_json(schedule_to_json(schedule))
    assert restored == schedule
    explicit = explicit_schedule([1.0, 2.0, 5.0])
    assert schedule_from_json(schedule_to_json(explicit)).lengths_ == (1.0, 2.0, 5.0)
    assert math.isclose(acceleration_ratio(restored, prior=2.5), 1.7 ** 2 / 0.7, rel_tol=1e-6)


def test_fault_tolerant_ratio_grows_with_the_fault_set():
    multi = CyclicFamily(base=1.5, count=4, horizon=80).as_multi(fault_budget=3)
    ratios = {
        faults: fault_tolerant_ratio(multi, faults)
        for size in range(4)
        for faults in itertools.combinations(range(4), size)
    }
    for small, value in ratios.items():
        for large, other in ratios.items():
            if set(small) < set(large):
                assert value <= other * (1 + 1e-9), (small, large)


@pytest.mark.parametrize("phi", [0, 1, 2])
def test_gal_supremum_stays_below_the_worst_fault_pattern(phi):
    multi = CyclicFamily(base=1.5, count=3, horizon=80).as_multi(fault_budget=2)
    worst = max(fault_tolerant_ratio(multi, faults) for faults in itertools.combinations(range(3), phi))
    assert gal_supremum(merged_sequence(multi), 3, phi) <= worst * (1 + 1e-9)


@pytest.mark.parametrize("r", [4.5, 5.0, 8.0])
def test_alpha_estimate_of_robust_families_sits_between_the_roots(r):
    zeta1, zeta2 = zeta_roots(r)
    families = [build_pareto_schedule(r, k).family.as_multi() for k in range(3)]
    families.append(build_rft_schedule(r, 3, 1))
    for multi in families:
        alpha = alpha_estimate(merged_sequence(multi))
        assert zeta1 ** (1 / multi.p) - 0.02 <= alpha <= zeta2 ** (1 / multi.p) + 0.02
