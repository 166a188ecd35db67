"""Modular arithmetic layer: residue universes, admissible times, gcd witnesses,
and the exact counterexample product bound.

Conventions used throughout the package:

- A *level* is a triple (k, ell, p).  N = ell * p is the modulus.
- The residue universe at a level is {0, ..., N-1} minus the multiples of p;
  it has exactly ell * (p - 1) members.
- A residue r is *admissible* iff (k+1) * min(r, N - r) >= N, i.e. the point
  r/N of the circle lies at distance >= 1/(k+1) from 0.  Equivalently
  r in [a, N - a] with a = ceil(N / (k+1)).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd


# deterministic Miller-Rabin witnesses, valid for all n < 3.3e24
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_MR_LIMIT = 3317044064679887385961981


def is_prime(n: int) -> bool:
    """Deterministic strong-pseudoprime test (exact for n < 3.3e24)."""
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n == q:
            return True
        if n % q == 0:
            return False
    if n >= _MR_LIMIT:
        raise ValueError(f"primality test limited to n < {_MR_LIMIT}")
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class Level:
    """A sieve level: speed count k, multiplier ell, prime p.  Modulus N = ell*p."""

    k: int
    ell: int
    p: int

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.ell < 1:
            raise ValueError(f"ell must be >= 1, got {self.ell}")
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")

    @property
    def N(self) -> int:
        return self.ell * self.p


@dataclass(frozen=True)
class ResidueUniverse:
    """The candidate speed residues at a level: 0..N-1 minus multiples of p."""

    level: Level
    members: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, v: int) -> bool:
        return 0 < v < self.level.N and v % self.level.p != 0


def build_universe(level: Level) -> ResidueUniverse:
    """Universe of residues coprime-to-p positions at the level (size ell*(p-1))."""
    p = level.p
    members = tuple(v for v in range(1, level.N) if v % p != 0)
    return ResidueUniverse(level, members)


@dataclass(frozen=True)
class AdmissibleTimes:
    """Admissible residues at a level, as a bit vector over 0..N-1.

    Bit r is set iff (k+1) * min(r, N - r) >= N.  The set is the interval
    [lo, hi] with lo = ceil(N/(k+1)) and hi = N - lo; it is symmetric under
    r -> N - r, and r = 0 is never admissible.
    """

    level: Level
    bits: int
    lo: int
    hi: int

    def contains(self, r: int) -> bool:
        return bool((self.bits >> (r % self.level.N)) & 1)

    def count(self) -> int:
        return self.bits.bit_count()


def admissible_times(level: Level) -> AdmissibleTimes:
    N = level.N
    lo = -(-N // (level.k + 1))  # ceil
    hi = N - lo
    if hi < lo:
        return AdmissibleTimes(level, 0, lo, hi)
    bits = ((1 << (hi - lo + 1)) - 1) << lo
    return AdmissibleTimes(level, bits, lo, hi)


def gcd_witness(values, level: Level):
    """Shared-factor witness for a speed set at a level, or None.

    For a full-size set (|values| = k) the witness is a pair (d, removed):
    deleting the value at index `removed` leaves a set whose gcd with N is
    d > 1.  The smallest qualifying `removed` is chosen.  For smaller sets the
    rule is conservative: all values must share a factor d > 1 with N
    (removed is None).  Values in the universe are coprime to p, so any
    witness divides ell.
    """
    vals = tuple(values)
    N = level.N
    if len(vals) == level.k:
        for removed in range(len(vals)):
            d = N
            for i, v in enumerate(vals):
                if i != removed:
                    d = gcd(d, v)
            if d > 1:
                return d, removed
        return None
    d = N
    for v in vals:
        d = gcd(d, v)
    if d > 1:
        return d, None
    return None


@dataclass(frozen=True)
class Bound:
    """Exact counterexample product bound for a given k.

    exact = (binom(k+1, 2)^(k-1) / k)^k as a rational; `integral` records
    whether the inner quotient binom(k+1,2)^(k-1)/k is an integer (true for
    k = 8 and k = 9; not true for every k).  `value` is the floor, which is
    what gets displayed; comparisons use the exact rational.
    """

    k: int
    exact: Fraction
    integral: bool

    @property
    def value(self) -> int:
        return int(self.exact)  # floor for non-negative rationals

    @property
    def digits(self) -> int:
        return len(str(self.value))

    def exceeded_by(self, n: int) -> bool:
        """n > bound, compared exactly."""
        return n * self.exact.denominator > self.exact.numerator

    def __int__(self) -> int:
        return self.value


def bound_C(k: int) -> Bound:
    """The product bound: any counterexample with k speeds has speed product
    exceeding this.  Computed exactly in integer/rational arithmetic."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    inner = Fraction(comb(k + 1, 2) ** (k - 1), k)
    return Bound(k, inner ** k, inner.denominator == 1)


@dataclass(frozen=True)
class ProductCheck:
    """Outcome of checking a prime list against the bound for k."""

    k: int
    primes: tuple[int, ...]
    product: int
    bound: Bound
    exceeds: bool
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.exceeds and not self.violations


def product_exceeds_bound(primes, k: int) -> ProductCheck:
    """Verify the primes are distinct primes whose product exceeds bound_C(k).

    Structural problems (a composite entry, a repeat) land in violations; the
    bound comparison itself is the `exceeds` field.  All arithmetic is exact;
    no logarithms or floating point.
    """
    ps = tuple(primes)
    violations = []
    seen = set()
    product = 1
    for p in ps:
        if not is_prime(p):
            violations.append(f"{p} is not prime")
        if p in seen:
            violations.append(f"{p} appears more than once")
        seen.add(p)
        product *= p
    bound = bound_C(k)
    exceeds = bound.exceeded_by(product)
    return ProductCheck(k, ps, product, bound, exceeds, tuple(violations))


def load_primes(source) -> tuple[int, ...]:
    """Read a prime list: one decimal per line, '#' comments, blanks ignored.

    `source` is a filesystem path, or the name of a packaged list ("S8",
    "S9") shipped under lrsieve/data/.
    """
    from importlib import resources
    from pathlib import Path

    text = None
    if isinstance(source, str) and "/" not in source and "." not in source:
        res = resources.files("lrsieve").joinpath(f"data/{source}.txt")
        if res.is_file():
            text = res.read_text()
    if text is None:
        text = Path(source).read_text()
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(int(line))
    return tuple(out)
