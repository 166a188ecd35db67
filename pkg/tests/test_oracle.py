"""Definition-level oracles: naive enumeration and the exact loneliness sweep."""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrsieve.modmath import Level
from lrsieve.oracle import (
    confirm_improper_evidence,
    is_improper_tuple,
    lrc_decide,
    max_loneliness,
    naive_improper,
)

# tuple counts from naive_improper itself, frozen as regression anchors
NAIVE_COUNTS = {
    (2, 1, 5): 4,
    (2, 1, 7): 12,
    (3, 1, 5): 12,
    (3, 1, 7): 8,
    (2, 2, 5): 0,
    (3, 2, 5): 16,
}


def test_naive_counts_frozen():
    for (k, ell, p), want in NAIVE_COUNTS.items():
        assert len(naive_improper(k, ell, p)) == want, (k, ell, p)


def test_naive_smallest_case_listed_exactly():
    assert naive_improper(2, 1, 5) == [(1, 2), (1, 3), (2, 4), (3, 4)]


def test_naive_refuses_huge_enumerations():
    with pytest.raises(ValueError):
        naive_improper(8, 1, 47)


def test_improper_tuple_frozen_cases():
    lvl = Level(3, 4, 5)
    assert is_improper_tuple((1, 3, 4), lvl)
    assert not is_improper_tuple((1, 2, 3), lvl)    # t = 5 works
    assert not is_improper_tuple((4, 8, 12), lvl)   # drop any, gcd 4 with 20
    with pytest.raises(ValueError):
        is_improper_tuple((1, 2), lvl)              # wrong arity


def test_confirm_improper_evidence_counts_patterns():
    lvl = Level(3, 4, 5)
    rep = confirm_improper_evidence((1, 3, 4), lvl)
    assert rep.confirmed and rep.witness_tuple == (1, 3, 4)
    assert rep.patterns_checked == 1                # full support: one pattern
    rep = confirm_improper_evidence((1, 4), lvl)
    assert not rep.confirmed and rep.witness_tuple is None
    assert rep.patterns_checked == 2                # (1,1,4) and (1,4,4)


# ---------------------------------------------------------------------------
# exact loneliness decisions
# ---------------------------------------------------------------------------

def test_decide_consecutive_speeds_are_tight():
    # speeds 1..k: loneliest time is 1/(k+1), and no better
    for k in range(2, 8):
        thr = Fraction(1, k + 1)
        res = lrc_decide(range(1, k + 1), thr)
        assert res.holds and res.witness == thr
        assert not lrc_decide(range(1, k + 1), thr + Fraction(1, 1000)).holds


def test_decide_picks_smallest_witness():
    res = lrc_decide((1, 2, 3), Fraction(1, 4))
    assert res.witness == Fraction(1, 4)
    res = lrc_decide((2,), Fraction(1, 2))
    assert res.witness == Fraction(1, 4)


def test_decide_input_validation():
    with pytest.raises(ValueError):
        lrc_decide((0, 1), Fraction(1, 3))
    with pytest.raises(ValueError):
        lrc_decide((1, 2), Fraction(2, 3))
    with pytest.raises(ValueError):
        lrc_decide((1, 2), 0)


def test_max_loneliness_frozen():
    for k in range(2, 8):
        assert max_loneliness(range(1, k + 1)) == \
            (Fraction(1, k + 1), Fraction(1, k + 1))
    assert max_loneliness([3]) == (Fraction(1, 2), Fraction(1, 6))


_SPEEDS = st.lists(st.integers(1, 25), min_size=1, max_size=4)


@given(speeds=_SPEEDS)
@settings(max_examples=150)
def test_decide_witness_is_valid(speeds):
    thr = Fraction(1, len(speeds) + 1)
    res = lrc_decide(speeds, thr)
    if res.holds:
        t = res.witness
        for v in speeds:
            x = t * v
            frac = x - (x.numerator // x.denominator)
            assert min(frac, 1 - frac) >= thr


@given(speeds=_SPEEDS, c=st.integers(1, 5))
@settings(max_examples=100)
def test_decide_is_scale_invariant(speeds, c):
    # scaling every speed by c rescales time, so the verdict cannot change
    thr = Fraction(1, len(speeds) + 1)
    assert lrc_decide(speeds, thr).holds == \
        lrc_decide([c * v for v in speeds], thr).holds


@given(speeds=st.lists(st.integers(1, 12), min_size=1, max_size=3))
@settings(max_examples=80)
def test_decide_agrees_with_exact_maximum(speeds):
    best, _ = max_loneliness(speeds)
    assert lrc_decide(speeds, best).holds
    above = best + Fraction(1, 997)
    if above <= Fraction(1, 2):
        assert not lrc_decide(speeds, above).holds
