import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tas5g.delay import EmpiricalDistribution, UncertaintyInterval
from tas5g.errors import ConfigError, DomainError, InfeasiblePlanError
from tas5g.model import FlowClass, FlowSpec, Link, dc_flow
from tas5g.planner import (
    OffsetPlan,
    Scenario,
    check_c1_c2,
    check_c3_c4,
    classify,
    feasibility,
    make_plan,
    min_offset,
    network_cycle_offset,
    recommend,
)
from tas5g.profiles import profile_samples

MS = 1_000_000
FIG4 = UncertaintyInterval(7_500_000, 15_000_000)
LINK = Link("MS", "NW-TT", 1e9)


def test_min_offset():
    assert min_offset(UncertaintyInterval(4_500_000, 15 * MS)) == 15 * MS
    assert min_offset(UncertaintyInterval(9, 9)) == 9
    assert min_offset(UncertaintyInterval(4_500_000, 22 * MS)) == 22 * MS


def test_network_cycle_offset():
    assert network_cycle_offset(20 * MS, 30 * MS) == 20 * MS
    assert network_cycle_offset(20 * MS, 12_500_000) == 7_500_000
    assert network_cycle_offset(20 * MS, 10 * MS) == 0
    with pytest.raises(DomainError):
        network_cycle_offset(1, 0)
    with pytest.raises(DomainError):
        network_cycle_offset(-1, 10)


def test_conditions_examples():
    W, T = 5 * MS, 20 * MS
    assert check_c1_c2(15 * MS, W, T, FIG4) == (True, True)
    assert check_c1_c2(5 * MS, W, T, FIG4) == (False, True)
    assert check_c1_c2(9, 3, 10, UncertaintyInterval(9, 9)) == (True, True)
    assert check_c3_c4(2_500_000, W, T, FIG4) == (True, True)
    assert check_c3_c4(5 * MS, W, T, FIG4) == (True, False)
    assert check_c3_c4(0, 3, 10, UncertaintyInterval(9, 9)) == (True, True)


def test_feasibility():
    assert feasibility(30 * MS, 46_500, 10_500_000)
    assert not feasibility(10 * MS, 5 * MS, 7_500_000)
    assert feasibility(10, 5, 5)  # boundary is inclusive
    with pytest.raises(DomainError):
        feasibility(5, 5, 0)


def test_classify_errors_and_ties():
    with pytest.raises(DomainError):
        classify(20 * MS, 5 * MS, 20 * MS, FIG4)
    with pytest.raises(DomainError):
        classify(0, 20 * MS, 20 * MS, FIG4)
    # C1 holds with equality: hi == offset
    assert classify(15 * MS, 5 * MS, 20 * MS, FIG4) is Scenario.S1
    # C4 holds with equality: offset + W == lo
    assert classify(2_500_000, 5 * MS, 20 * MS, FIG4) is Scenario.S2


intervals = st.tuples(st.integers(0, 10**6), st.integers(0, 10**6)).map(lambda t: UncertaintyInterval(t[0], t[0] + t[1]))


@settings(max_examples=300, deadline=None)
@given(iv=intervals, T=st.integers(10, 10**6), w=st.floats(0, 0.99))
def test_classifier_agrees_with_conditions_on_grid(iv, T, w):
    W = int(w * T)
    if W >= T:
        return
    for k in range(10):
        d = k * T // 10
        s = classify(d, W, T, iv)
        c1, c2 = check_c1_c2(d, W, T, iv)
        c3, c4 = check_c3_c4(d, W, T, iv)
        if not feasibility(T, W, iv.hi - iv.lo):
            assert s is Scenario.S4
            continue
        assert (s is Scenario.S1) == (c1 and c2)
        assert (s is Scenario.S2) == (c3 and c4 and not (c1 and c2))


@settings(max_examples=300, deadline=None)
@given(iv=intervals, T=st.integers(10, 10**6), w=st.floats(0, 0.99), d=st.floats(0, 0.999), c=st.floats(0, 1))
def test_classifier_translation_invariance(iv, T, w, d, c):
    W = int(w * T)
    dp = int(d * T)
    shift = int(c * (T - 1 - dp))  # keeps dp + shift inside the cycle
    moved = UncertaintyInterval(iv.lo + shift, iv.hi + shift)
    assert classify(dp, W, T, iv) is classify(dp + shift, W, T, moved)


def test_translation_across_cycle_boundary_relabels():
    # shifting past T_nc moves the target to the next cycle's window: the
    # same schedule reads S1 before the wrap and S2 after it
    iv = UncertaintyInterval(0, 0)
    assert classify(0, 0, 10, iv) is Scenario.S1
    assert classify(0, 0, 10, UncertaintyInterval(10, 10)) is Scenario.S2


@settings(max_examples=300, deadline=None)
@given(T=st.integers(2, 10**6), W=st.integers(0, 10**6), jit=st.integers(0, 10**6), dT=st.integers(0, 10**5), dW=st.integers(0, 10**5))
def test_feasibility_monotone(T, W, jit, dT, dW):
    if not T > W:
        return
    if feasibility(T, W, jit):
        assert feasibility(T + dT, W, jit)
        assert feasibility(T, max(0, W - dW), jit)


def test_recommend_exp1():
    dist = EmpiricalDistribution(profile_samples("exp1"))
    flow = dc_flow(200, 30 * MS, 29, overhead_bytes=0)
    plan = recommend(dist, flow, LINK, 0.999, margin=5 * MS)
    assert plan.offset_ns == 20 * MS
    assert plan.scenario is Scenario.S1
    assert plan.network_cycle_ns == 30 * MS and plan.window_ns == 29 * 1_600
    # default margin is half the jitter
    assert recommend(dist, flow, LINK).offset_ns == 15 * MS + 10_500_000 // 2


def test_recommend_zero_jitter():
    dist = EmpiricalDistribution([3 * MS])
    flow = dc_flow(200, 30 * MS, 4, overhead_bytes=0)
    plan = recommend(dist, flow, LINK, margin=1 * MS)
    assert plan.offset_ns == 4 * MS
    assert plan.network_cycle_ns == 30 * MS
    assert plan.scenario is Scenario.S1


def test_recommend_exp4_worst():
    dist = EmpiricalDistribution(profile_samples("exp4"))
    flow = dc_flow(100, 30 * MS, 312 * 7, overhead_bytes=0)
    plan = recommend(dist, flow, LINK, margin=3 * MS)
    assert plan.offset_ns == 25 * MS
    assert plan.network_cycle_ns - plan.window_ns >= 17_500_000
    assert plan.scenario is Scenario.S1
    # oracle: scan a grid of cycles; the feasible ones are exactly T - W >= 17.5 ms
    for T in range(18 * MS, 40 * MS, MS // 2):
        if T <= plan.window_ns:
            continue
        p = make_plan(25 * MS, plan.window_ns, T, plan.interval)
        assert p.feasible == (T - plan.window_ns >= 17_500_000)
    forced = recommend(dist, flow, LINK, margin=3 * MS, cycle_ns=10 * MS)
    assert forced.scenario is Scenario.S4 and not forced.feasible


@settings(max_examples=100, deadline=None)
@given(lo=st.integers(0, 50 * MS), jit=st.integers(0, 40 * MS), Tapp=st.integers(1 * MS, 40 * MS), n=st.integers(1, 50),
       margin=st.integers(0, 10 * MS))
def test_recommend_always_deterministic(lo, jit, Tapp, n, margin):
    dist = EmpiricalDistribution([lo, lo + jit])
    flow = dc_flow(200, Tapp, n, overhead_bytes=0)
    plan = recommend(dist, flow, LINK, p=0.5, margin=margin)
    assert plan.scenario is Scenario.S1
    assert plan.network_cycle_ns % Tapp == 0


def test_recommend_infeasible_reports_condition():
    dist = EmpiricalDistribution(profile_samples("exp4"))
    flow = dc_flow(100, 30 * MS, 312 * 7, overhead_bytes=0)
    with pytest.raises(InfeasiblePlanError) as e:
        recommend(dist, flow, LINK, max_cycle_ns=10 * MS)
    assert e.value.condition == "feasibility"
    small = EmpiricalDistribution([40 * MS, 41 * MS])
    with pytest.raises(InfeasiblePlanError) as e:
        recommend(small, dc_flow(200, 30 * MS, 1), LINK, max_cycle_ns=35 * MS)
    assert e.value.condition == "C1"
    with pytest.raises(InfeasiblePlanError) as e:
        recommend(small, dc_flow(200, 30 * MS, 1), LINK, cycle_ns=1_000)
    assert e.value.condition == "window_bounds"
    with pytest.raises(ConfigError):
        recommend(small, FlowSpec(FlowClass.BE, 200, 30 * MS), LINK)


def test_plan_json_round_trip():
    plan = make_plan(25 * MS, 5 * MS, 20 * MS, FIG4)
    doc = json.loads(plan.to_json())
    assert doc["scenario"] == "S3_partial_arrival"
    assert doc["conditions"] == {"C1": False, "C2": True, "C3": True, "C4": False}
    assert doc["feasible"] is True and doc["cycle_offset_ns"] == 5 * MS
    assert doc["reason"]
    assert OffsetPlan.from_dict(doc) == plan
    with pytest.raises(ConfigError):
        OffsetPlan.from_dict(dict(doc, cycle_offset_ns=1))
    s4 = make_plan(7_500_000, 5 * MS, 10 * MS, FIG4)
    with pytest.raises(ConfigError):
        OffsetPlan.from_dict(dict(s4.to_dict(), scenario="S1_early_arrival"))


def test_scenario_helpers():
    assert Scenario.S1.deterministic and Scenario.S2.deterministic
    assert not Scenario.S3.deterministic and not Scenario.S4.deterministic
    assert [s.short for s in Scenario] == ["S1", "S2", "S3", "S4"]
    assert np.all([s.value.startswith(s.short) for s in Scenario])
