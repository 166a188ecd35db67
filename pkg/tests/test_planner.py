"""Ladder plans: parsing, validation, defaults, and the cost model."""
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrsieve.planner import (
    LadderPlan,
    default_plan,
    estimate_cost,
    parse_plan,
    validate_plan,
)


def test_parse_and_str_round_trip():
    for text in ("1>3>9", "1>2>4", "1>2>10 & 1>5>10"):
        plan = parse_plan(text, 8 if "9" in text else 3, 11)
        assert str(plan) == text


def test_plan_structure():
    plan = parse_plan("1>2>10 & 1>5>10", 9, 11)
    assert plan.nodes == (1, 2, 5, 10)
    assert plan.terminal == 10
    assert plan.merge_nodes == (10,)
    assert plan.parents(10) == (2, 5)
    assert plan.parents(2) == (1,)
    assert plan.parents(1) == ()


def test_parse_rejects_garbage():
    for text in ("", "1>", "a>b", "1>3>x"):
        with pytest.raises(ValueError):
            parse_plan(text, 8, 11)


def test_validate_plan_violations():
    # root must be 1 and every edge must multiply by an integer > 1
    assert not validate_plan(parse_plan("3>9", 8, 11)).ok
    assert not validate_plan(parse_plan("1>4>6", 8, 11)).ok
    assert not validate_plan(parse_plan("1>3>3", 8, 11)).ok
    # two branches must share the terminal
    assert not validate_plan(LadderPlan(8, ((1, 3, 9), (1, 2, 4)), 11)).ok


def test_validate_plan_certificate_terminal():
    short = parse_plan("1>3", 8, 11)
    assert validate_plan(short).ok                  # fine for experiments
    assert validate_plan(short).warnings            # but flagged
    assert not validate_plan(short, for_certificate=True).ok
    full = parse_plan("1>3>9", 8, 11)
    assert validate_plan(full, for_certificate=True).ok


DEFAULTS = {2: "1>3", 3: "1>2>4", 4: "1>5", 5: "1>2>6", 6: "1>7",
            8: "1>3>9", 9: "1>2>10 & 1>5>10", 12: "1>13", 14: "1>3>15"}


def test_default_plans_frozen():
    for k, text in DEFAULTS.items():
        assert str(default_plan(k)) == text, k


@given(k=st.integers(2, 40))
def test_default_plan_always_certifiable(k):
    plan = default_plan(k, 101)
    assert validate_plan(plan, for_certificate=True).ok
    assert plan.terminal == k + 1


def test_estimate_cost_chain_by_hand():
    # k=3, p=5, plan 1>2>4 with survivals 1/2 then 1/4:
    # (p-1)^k * [1*1^3 + (1/2)*2^3 + (1/8)*4^3] = 64 * 13 = 832
    plan = parse_plan("1>2>4", 3, 5)
    est = estimate_cost(plan, {1: Fraction(1, 2), 2: Fraction(1, 4)})
    assert est.total == 832
    assert not est.heuristic
    per = dict(est.per_node)
    assert per[4] == 64 * Fraction(1, 8) * 4**3
    assert sum(per.values()) == est.total


def test_estimate_cost_merge_takes_cheapest_branch():
    plan = parse_plan("1>2>4 & 1>4", 3, 5)
    est = estimate_cost(plan, {1: Fraction(1, 2), 2: Fraction(1, 10)})
    # at the merge, cum(4) = min(cum(2)*s2, cum(1)*s1) = min(1/20, 1/2)
    assert dict(est.per_node)[4] == 64 * Fraction(1, 20) * 4**3
    assert est.heuristic


def test_estimate_cost_accepts_sequence_form():
    plan = parse_plan("1>2>4", 3, 5)
    a = estimate_cost(plan, [Fraction(1, 2), Fraction(1, 4)])
    b = estimate_cost(plan, {1: Fraction(1, 2), 2: Fraction(1, 4)})
    assert a.total == b.total
