import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.advisor import (
    AdvicePlan,
    CyclicFamily,
    best_member_at,
    build_noisy_schedule,
    build_pareto_schedule,
    build_rft_schedule,
    build_robust_noisy_schedule,
    consistency_of,
    contract_table,
    member_length_at,
    member_tables,
    performance_ranking,
    is_cyclic_rotation,
    plan_to_json,
    select_with_noisy_advice,
)
from core.bounds import (
    noisy_upper_bound,
    pareto_consistency_lower_bound,
    rank_slack,
    rft_optimal_value,
    robust_noisy_upper_bound,
)
from core.common_types import AdviceMode, PlanMode
from core.errors import DomainError, PreconditionError
from core.querygames import AdviceChannel, enumerate_lie_patterns
from core.sequences import acceleration_ratio, fault_tolerant_ratio


@pytest.fixture
def doubling_family():
    return CyclicFamily(base=2.0, count=4, horizon=20)


def test_members_hold_one_residue_class(doubling_family):
    np.testing.assert_allclose(doubling_family.member(1).lengths()[:3], [2.0, 32.0, 512.0])
    with pytest.raises(DomainError):
        doubling_family.member(4)


def test_merged_family_covers_every_power(doubling_family):
    np.testing.assert_allclose(doubling_family.merged().values[:16], 2.0 ** np.arange(16))


def test_best_member_at(doubling_family):
    # completions of b^0..b^3 at 1, 2, 4, 8; b^4 at 1 + 16
    assert best_member_at(doubling_family, 10.0) == (3, 8.0)
    assert best_member_at(doubling_family, 8.0, strict=True) == (2, 4.0)
    assert best_member_at(doubling_family, 20.0) == (0, 16.0)
    assert member_length_at(doubling_family, 1, 1.5) is None
    with pytest.raises(DomainError):
        best_member_at(doubling_family, 0.5)


def test_performance_ranking_rotates(doubling_family):
    assert performance_ranking(doubling_family, 10.0) == [3, 2, 1, 0]
    assert performance_ranking(doubling_family, 20.0) == [0, 3, 2, 1]
    assert is_cyclic_rotation([0, 3, 2, 1])
    assert not is_cyclic_rotation([0, 1, 2, 3])
    with pytest.raises(DomainError):
        performance_ranking(doubling_family, 3.0)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 4, 8]), st.floats(min_value=1.1, max_value=3.0), st.floats(min_value=0.0, max_value=1.0))
def test_ranking_is_always_a_cyclic_rotation(count, base, position):
    family = CyclicFamily(base=base, count=count, horizon=30)
    times, _, _ = member_tables(family)
    # anywhere after every member finished its first contract
    T = float(times[count - 1, 0] + position * (times[count - 1, -1] - times[count - 1, 0]))
    order = performance_ranking(family, T)
    assert is_cyclic_rotation(order)
    assert order[0] == best_member_at(family, T)[0]


def test_plan_needs_two_to_the_k_members():
    with pytest.raises(ValueError):
        AdvicePlan(family=CyclicFamily(base=1.5, count=3), k=2, mode=PlanMode.NOISY)
    with pytest.raises(ValueError):
        AdvicePlan(family=CyclicFamily(base=1.5, count=4), k=2, mode=PlanMode.ROBUST_NOISY)


@pytest.mark.parametrize("r, k", [(r, k) for r in (4.5, 5.0, 8.0) for k in range(3)])
def test_pareto_plan_meets_the_lower_bound(r, k):
    plan = build_pareto_schedule(r, k)
    assert consistency_of(plan) == pytest.approx(pareto_consistency_lower_bound(r, k), rel=1e-6)
    assert all(acceleration_ratio(member) <= r * (1 + 1e-9) for member in plan.family.members())


def test_mutated_pareto_base_loses_tightness():
    plan = build_pareto_schedule(5.0, 1)
    mutated = plan.model_copy(update={"family": CyclicFamily(base=plan.family.base * 1.01, count=2)})
    assert abs(consistency_of(mutated) - pareto_consistency_lower_bound(5.0, 1)) > 1e-6


def test_robust_noisy_members_are_r_robust():
    plan = build_robust_noisy_schedule(3, 1, 4.5)
    _, b = robust_noisy_upper_bound(3, 1, 4.5)
    assert plan.family.base == pytest.approx(b)
    assert all(acceleration_ratio(member) <= 4.5 * (1 + 1e-9) for member in plan.family.members())


def test_noisy_selection_stays_within_the_bound():
    k, H = 3, 1
    plan = build_noisy_schedule(k, H, horizon=60)
    bound, _, U = noisy_upper_bound(k, H)
    times, _, _ = member_tables(plan.family)
    n = plan.family.count
    patterns = list(enumerate_lie_patterns(k, H))
    for g in range(n + U, n * 40, 7):
        T = float(times[g % n, g // n])
        for pattern in patterns:
            channel = AdviceChannel(mode=AdviceMode.SCRIPTED, lie_budget=H, n=n, length=k, lie_positions=list(pattern))
            result = select_with_noisy_advice(plan, channel, T)
            assert result.rank <= U
            assert result.ratio <= bound * (1 + 1e-9)


def test_untrusted_plans_cannot_select_with_noise():
    plan = build_pareto_schedule(5.0, 1)
    channel = AdviceChannel(mode=AdviceMode.TRUTHFUL, n=2, length=1)
    with pytest.raises(DomainError):
        select_with_noisy_advice(plan, channel, 100.0)


def test_robust_plan_survives_an_all_out_liar():
    plan = build_robust_noisy_schedule(2, 1, 5.0, horizon=60)
    times, _, _ = member_tables(plan.family)
    liar = AdviceChannel(mode=AdviceMode.ADVERSARIAL, lie_budget=2, n=4, length=2)
    for g in range(4 + rank_slack(2, 1), 200, 5):
        T = float(times[g % 4, g // 4])
        assert select_with_noisy_advice(plan, liar, T).ratio <= 5.0 * (1 + 1e-9)


def test_rft_schedule_respects_both_guarantees():
    r, p, f = 8.0, 3, 1
    multi = build_rft_schedule(r, p, f)
    value, _ = rft_optimal_value(r, p, f)
    assert multi.p == p and multi.fault_budget == f
    for size in range(f + 1):
        for faults in itertools.combinations(range(p), size):
            assert fault_tolerant_ratio(multi, faults) <= value * (1 + 1e-6)
    for survivor in range(p):
        assert fault_tolerant_ratio(multi, [i for i in range(p) if i != survivor]) <= r * (1 + 1e-9)


def test_members_outside_the_envelope_are_rejected(monkeypatch):
    import core.advisor as advisor

    monkeypatch.setattr(advisor, "pareto_optimal_base", lambda r, k: 5.0)
    with pytest.raises(PreconditionError):
        advisor.build_pareto_schedule(5.0, 0)


def test_plan_json_and_contract_table():
    plan = build_noisy_schedule(2, 0, horizon=10)
    payload = plan_to_json(plan)
    assert payload == {"mode": "noisy", "k": 2, "H": 0, "r": None, "b": plan.family.base, "l": 4, "horizon": 10}

    rows = contract_table(plan, contracts=3)
    assert len(rows) == 12
    assert rows[0] == (0, 0, 1.0, 1.0)
    member, j, length, completion = rows[4]
    assert (member, j) == (1, 1)
    assert length == pytest.approx(plan.family.base ** 5)
