"""Residue universes, admissible times, gcd witnesses, and the product bound."""
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrsieve.modmath import (
    Level,
    admissible_times,
    bound_C,
    build_universe,
    gcd_witness,
    is_prime,
    load_primes,
    product_exceeds_bound,
)

SMALL_PRIMES = (5, 7, 11, 13, 17, 19, 23)

# exact integer values of the counterexample bound, frozen from the closed
# form [binom(k+1,2)^(k-1) / k]^k evaluated with Fraction arithmetic
C8_EXACT = int(
    "84765698874878218361067180729674171436543015292348049288994557831877"
    "912686493696")
C9_EXACT = int(
    "27740763309872529542152666276493527528926584245152010944512360400527"
    "5542994102266902700648643076419830322265625")


# ---------------------------------------------------------------------------
# primality
# ---------------------------------------------------------------------------

def _trial_division(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def test_is_prime_agrees_with_trial_division():
    for n in range(2000):
        assert is_prime(n) == _trial_division(n), n


def test_is_prime_rejects_carmichael_numbers():
    for n in (561, 1105, 1729, 41041, 825265, 321197185):
        assert not is_prime(n)


def test_is_prime_large():
    assert is_prime(2**61 - 1)          # Mersenne prime
    assert not is_prime(2**67 - 1)      # 193707721 * 761838257287
    assert is_prime(10**18 + 9)


def test_is_prime_refuses_beyond_deterministic_range():
    # small-factor cases stay exact at any size; only a Miller-Rabin round
    # past the deterministic range must refuse
    assert not is_prime(10**25)
    with pytest.raises(ValueError):
        is_prime(2**89 - 1)


# ---------------------------------------------------------------------------
# levels and universes
# ---------------------------------------------------------------------------

def test_level_basics():
    lvl = Level(3, 4, 5)
    assert lvl.N == 20
    for bad in [(1, 1, 5), (3, 0, 5), (3, 1, 1)]:
        with pytest.raises(ValueError):
            Level(*bad)


def test_universe_members_frozen():
    assert build_universe(Level(2, 1, 5)).members == (1, 2, 3, 4)
    assert build_universe(Level(3, 2, 5)).members == (1, 2, 3, 4, 6, 7, 8, 9)
    uni = build_universe(Level(3, 2, 5))
    assert 6 in uni and 5 not in uni and 10 not in uni


@given(k=st.integers(2, 6), ell=st.integers(1, 8),
       p=st.sampled_from(SMALL_PRIMES))
def test_universe_size_is_ell_times_p_minus_1(k, ell, p):
    uni = build_universe(Level(k, ell, p))
    assert len(uni.members) == ell * (p - 1)
    assert all(v % p != 0 and 0 < v < ell * p for v in uni.members)


# ---------------------------------------------------------------------------
# admissible times
# ---------------------------------------------------------------------------

def test_admissible_frozen_at_3_4_5():
    adm = admissible_times(Level(3, 4, 5))  # N = 20, threshold 1/4
    assert (adm.lo, adm.hi) == (5, 15)
    assert adm.count() == 11
    assert adm.contains(5) and adm.contains(15)
    assert not adm.contains(4) and not adm.contains(16) and not adm.contains(0)


@given(k=st.integers(2, 7), ell=st.integers(1, 6),
       p=st.sampled_from(SMALL_PRIMES))
def test_admissible_matches_its_definition(k, ell, p):
    lvl = Level(k, ell, p)
    adm = admissible_times(lvl)
    N = lvl.N
    for r in range(N):
        want = (k + 1) * min(r, N - r) >= N
        assert adm.contains(r) == want, (lvl, r)
        assert adm.contains(r) == adm.contains((N - r) % N)  # symmetry


# ---------------------------------------------------------------------------
# gcd witnesses
# ---------------------------------------------------------------------------

def test_gcd_witness_full_size_removes_one_value():
    lvl = Level(3, 4, 5)  # N = 20
    assert gcd_witness((4, 8, 12), lvl) == (4, 0)
    # only dropping the 5 leaves a common factor with 20
    assert gcd_witness((2, 4, 5), lvl) == (2, 2)
    assert gcd_witness((1, 2, 3), lvl) is None


def test_gcd_witness_smaller_sets_use_all_values():
    lvl = Level(3, 4, 5)
    assert gcd_witness((2, 4), lvl) == (2, None)
    # the full-size rule would accept (4, 5) by dropping the 5; the
    # conservative rule for subsets must not
    assert gcd_witness((4, 5), lvl) is None


@given(k=st.integers(2, 5), ell=st.integers(1, 6),
       p=st.sampled_from(SMALL_PRIMES), data=st.data())
def test_gcd_witness_divides_ell(k, ell, p, data):
    lvl = Level(k, ell, p)
    uni = build_universe(lvl).members
    size = data.draw(st.integers(1, k))
    vals = tuple(sorted(data.draw(
        st.sets(st.sampled_from(uni), min_size=size, max_size=size))))
    wit = gcd_witness(vals, lvl)
    if wit is not None:
        d, removed = wit
        assert d > 1 and ell % d == 0
        kept = [v for i, v in enumerate(vals)
                if removed is None or i != removed]
        assert all(v % d == 0 for v in kept)


# ---------------------------------------------------------------------------
# the counterexample bound
# ---------------------------------------------------------------------------

def test_bound_exact_values():
    assert bound_C(3).exact == 1728 and bound_C(3).integral
    assert bound_C(8).value == C8_EXACT and bound_C(8).integral
    assert bound_C(9).value == C9_EXACT and bound_C(9).integral
    b2 = bound_C(2)
    assert not b2.integral and b2.exact == Fraction(9, 4) and b2.value == 2


def test_bound_digit_counts():
    assert bound_C(8).digits == 80
    assert bound_C(9).digits == 111


def test_bound_comparison_is_exact_not_floored():
    b6 = bound_C(6)  # exact value .../64, not an integer
    assert not b6.integral
    assert not b6.exceeded_by(b6.value)      # floor sits below the bound
    assert b6.exceeded_by(b6.value + 1)
    assert not bound_C(3).exceeded_by(1728)  # ties do not exceed
    assert bound_C(3).exceeded_by(1729)


@given(k=st.integers(2, 12))
def test_bound_matches_closed_form(k):
    b = bound_C(k)
    inner = Fraction(comb(k + 1, 2) ** (k - 1), k)
    assert b.exact == inner ** k
    assert b.integral == (b.exact.denominator == 1)
    assert b.digits == len(str(b.value))


def test_product_check_small():
    ok = product_exceeds_bound((7, 11, 13, 17), 3)
    assert ok.ok and ok.exceeds and not ok.violations
    assert ok.product == 17017
    short = product_exceeds_bound((7, 11, 13), 3)
    assert not short.exceeds and not short.violations and not short.ok
    bad = product_exceeds_bound((7, 9, 11, 11), 3)
    assert any("not prime" in v for v in bad.violations)
    assert any("more than once" in v for v in bad.violations)


# ---------------------------------------------------------------------------
# packaged prime lists
# ---------------------------------------------------------------------------

def test_packaged_prime_lists():
    s8, s9 = load_primes("S8"), load_primes("S9")
    assert len(s8) == 39 and (s8[0], s8[-1]) == (47, 241)
    assert len(s9) == 47 and (s9[0], s9[-1]) == (137, 401)
    assert all(is_prime(p) for p in s8 + s9)
    assert list(s8) == sorted(set(s8)) and list(s9) == sorted(set(s9))


def test_load_primes_from_file(tmp_path):
    path = tmp_path / "primes.txt"
    path.write_text("# header\n\n 5\n7  # trailing comment\n\n11\n")
    assert load_primes(path) == (5, 7, 11)
