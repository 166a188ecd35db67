"""Small-scale ground truth, implemented directly from definitions.

Everything here is deliberately naive: plain loops over all times and all
tuples, exact rational arithmetic for the circle-distance decision.  The fast
engine is validated against this module on small parameters.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb, gcd

from .modmath import Level

# refuse naive enumerations beyond this many tuples
NAIVE_ENUM_LIMIT = 10**8


def is_improper_tuple(values, level: Level) -> bool:
    """Definition-level properness test for a k-tuple (repeats allowed).

    The tuple is proper iff some time t in 0..N-1 makes every residue t*v
    admissible, or some single entry can be deleted leaving values sharing a
    factor with N.  Improper = neither.
    """
    vals = tuple(values)
    if len(vals) != level.k:
        raise ValueError(f"expected a {level.k}-tuple, got {len(vals)} values")
    N = level.N
    kp1 = level.k + 1
    for t in range(N):
        if all(kp1 * min(t * v % N, N - t * v % N) >= N for v in vals):
            return False
    for removed in range(len(vals)):
        d = N
        for i, v in enumerate(vals):
            if i != removed:
                d = gcd(d, v)
        if d > 1:
            return False
    return True


def naive_improper(k: int, ell: int, p: int) -> list[tuple[int, ...]]:
    """All improper k-tuples (sorted multisets) over the universe at (k, ell, p).

    Pure definition: enumerate every multiset, test every time.  Guarded to
    refuse enumerations beyond NAIVE_ENUM_LIMIT tuples.
    """
    level = Level(k, ell, p)
    universe = [v for v in range(1, level.N) if v % p != 0]
    n = len(universe)
    total = comb(n + k - 1, k)
    if total > NAIVE_ENUM_LIMIT:
        raise ValueError(
            f"naive enumeration of {total} tuples exceeds limit {NAIVE_ENUM_LIMIT}")
    out = []
    for tup in combinations_with_replacement(universe, k):
        if is_improper_tuple(tup, level):
            out.append(tup)
    return out


@dataclass(frozen=True)
class DecideResult:
    """Outcome of the exact loneliness decision for one speed tuple."""

    speeds: tuple[int, ...]
    threshold: Fraction
    holds: bool
    witness: Fraction | None  # smallest witness time in [0, 1), exact


def lrc_decide(speeds, threshold) -> DecideResult:
    """Decide whether some time t has every ||t*v|| >= threshold, exactly.

    The bad set for speed v is the union of open intervals
    ((j - thr)/v, (j + thr)/v); a witness is any point of [0, 1] outside all
    of them.  The sweep below runs over exact rational endpoints, so witnesses
    on interval boundaries (where the distance equals the threshold) are kept.
    Returns the smallest witness.
    """
    spd = tuple(int(v) for v in speeds)
    if any(v <= 0 for v in spd):
        raise ValueError("speeds must be positive integers")
    thr = Fraction(threshold)
    if not 0 < thr <= Fraction(1, 2):
        raise ValueError("threshold must lie in (0, 1/2]")
    intervals = []
    for v in spd:
        for j in range(v + 1):
            lo = Fraction(j - thr, v)
            hi = Fraction(j + thr, v)
            if hi <= 0 or lo >= 1:
                continue
            intervals.append((lo, hi))
    intervals.sort()
    reach = Fraction(0)  # current candidate witness; all prior intervals end <= reach
    for lo, hi in intervals:
        if lo >= reach:
            # nothing covers the point `reach`: intervals are open, every
            # processed one ends at or before it, and later ones start after
            return DecideResult(spd, thr, True, reach)
        if hi > reach:
            reach = hi
    if reach < 1:
        return DecideResult(spd, thr, True, reach)
    return DecideResult(spd, thr, False, None)


@dataclass(frozen=True)
class EvidenceReport:
    """Tuple-level confirmation of an improper speed set."""

    values: tuple[int, ...]
    confirmed: bool
    patterns_checked: int
    witness_tuple: tuple[int, ...] | None


def confirm_improper_evidence(values, level: Level) -> EvidenceReport:
    """Check whether some k-tuple supported on exactly these values is improper.

    Enumerates every multiplicity pattern (each value used at least once,
    total k) and applies the definition-level tuple test.  A full-size set has
    a single pattern, so the check is a direct re-verification.
    """
    vals = tuple(sorted(values))
    m = len(vals)
    if not 1 <= m <= level.k:
        raise ValueError(f"support size {m} out of range 1..{level.k}")
    patterns = 0
    for extra in combinations_with_replacement(range(m), level.k - m):
        mult = [1] * m
        for i in extra:
            mult[i] += 1
        tup = []
        for v, e in zip(vals, mult):
            tup.extend([v] * e)
        patterns += 1
        if is_improper_tuple(tuple(tup), level):
            return EvidenceReport(vals, True, patterns, tuple(tup))
    return EvidenceReport(vals, False, patterns, None)


def _circle_distance(x: Fraction) -> Fraction:
    frac = x - (x.numerator // x.denominator)
    return min(frac, 1 - frac)


def max_loneliness(speeds) -> tuple[Fraction, Fraction]:
    """Exact maximum of t -> min_i ||t * v_i|| over [0, 1], with its smallest
    argmax.

    The objective is piecewise linear with slopes +-v_i, so its maximum is
    attained where a rising branch of one distance meets a falling branch of
    another (possibly the same speed): t*v_i - a = b - t*v_j, i.e. t = (a+b) /
    (v_i + v_j).  Scanning those finitely many rationals is an exact
    optimisation, which pins down the largest threshold lrc_decide can accept.
    """
    spd = tuple(int(v) for v in speeds)
    if not spd or any(v <= 0 for v in spd):
        raise ValueError("speeds must be positive integers")
    candidates = set()
    for i, vi in enumerate(spd):
        for vj in spd[i:]:
            den = vi + vj
            for m in range(den + 1):
                candidates.add(Fraction(m, den))
    best, best_t = Fraction(0), Fraction(0)
    for t in sorted(candidates):
        val = min(_circle_distance(t * v) for v in spd)
        if val > best:
            best, best_t = val, t
    return best, best_t
