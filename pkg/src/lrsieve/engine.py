"""Sieve engine: classify speed sets, enumerate improper collections, run ladders.

Key facts the implementation leans on (stated here once; the code refers back):

- A set is *proper* at a level if some time residue t makes every t*v
  admissible, or a shared-factor (gcd) witness exists; otherwise *improper*.
- Working with value *sets* (supports of size 1..k) instead of k-tuples saves
  a factor of k!.  For sets smaller than k the gcd rule is conservative (all
  values must share a factor), which can only enlarge the improper collection,
  so emptiness conclusions stay sound; nonemptiness is confirmed at tuple
  level by the oracle before being reported.
- Admissibility is symmetric under r -> N - r, so witness bitmasks can be
  folded to t <= N/2.
- If a set at level m reduces (mod ell*p, ell | m) to a set that is improper
  at ell, then any time witness t of the larger set with (m/ell) | t would
  descend to a witness of the reduction.  Hence lifted candidates only need
  times t with t not divisible by c = m/ell, and those times factor through
  CRT as (t mod m, t mod p) when gcd(m, p) = 1.  That factorization makes a
  candidate's witness mask a product over its values of small per-value masks,
  which is what the meet-in-the-middle classifier below exploits.
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb, gcd, prod

import numpy as np

from .modmath import Level, admissible_times, build_universe, is_prime
from .modmath import gcd_witness as _gcd_witness
from .planner import LadderPlan, validate_plan

GENERIC_ENUM_LIMIT = 2 * 10**7


# --------------------------------------------------------------------------
# speed sets and properness statuses
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpeedSet:
    """A set of speed residues at a level: strictly increasing, size 1..k,
    each value in the residue universe (nonzero mod p)."""

    level: Level
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        lv = self.level
        vals = self.values
        if not 1 <= len(vals) <= lv.k:
            raise ValueError(f"set size {len(vals)} out of range 1..{lv.k}")
        prev = 0
        for v in vals:
            if v <= prev:
                raise ValueError(f"values not strictly increasing: {vals}")
            if not (0 < v < lv.N) or v % lv.p == 0:
                raise ValueError(f"value {v} outside universe at N={lv.N}, p={lv.p}")
            prev = v

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TimeWitness:
    t: int
    kind: str = "time"


@dataclass(frozen=True)
class GcdWitness:
    d: int
    removed: int | None
    kind: str = "gcd"


@dataclass(frozen=True)
class Improper:
    kind: str = "improper"


ProperStatus = TimeWitness | GcdWitness | Improper


# --------------------------------------------------------------------------
# witness tables and single-set classification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessTable:
    """Per-value witness bitmasks: bit t of rows[v] is set iff the residue
    t*v mod N is admissible (t over the full range 0..N-1)."""

    level: Level
    rows: dict[int, int]

    def row(self, v: int) -> int:
        return self.rows[v]

    def and_rows(self, values) -> int:
        m = -1
        for v in values:
            m &= self.rows[v]
        return m


def build_witness_table(level: Level) -> WitnessTable:
    N = level.N
    adm = admissible_times(level)
    universe = build_universe(level)
    rows = {}
    for v in universe.members:
        mask = 0
        for t in range(1, N):
            if adm.contains(t * v % N):
                mask |= 1 << t
        rows[v] = mask
    return WitnessTable(level, rows)


def classify_proper(values, level: Level, table: WitnessTable | None = None) -> ProperStatus:
    """Properness status of one set.  The gcd rule is checked first; otherwise
    the smallest time witness is reported; otherwise Improper."""
    vals = tuple(values)
    gw = _gcd_witness(vals, level)
    if gw is not None:
        return GcdWitness(gw[0], gw[1])
    if table is not None and table.level == level:
        m = table.and_rows(vals)
    else:
        N, kp1 = level.N, level.k + 1
        m = 0
        for t in range(1, N):
            if all(kp1 * min(t * v % N, N - t * v % N) >= N for v in vals):
                m |= 1 << t
                break  # smallest witness is all we need on this path
    if m:
        return TimeWitness((m & -m).bit_length() - 1)
    return Improper()


# --------------------------------------------------------------------------
# improper collections
# --------------------------------------------------------------------------

@dataclass
class NodeStats:
    examined: int
    improper: int
    wall_ms: int

    @property
    def survival(self) -> Fraction:
        return Fraction(self.improper, self.examined) if self.examined else Fraction(0)


def _dtype_for(N: int):
    return np.uint16 if N < 2**16 else np.uint32


class ImproperCollection:
    """Deduplicated improper sets at one level, grouped by size.

    by_size maps size -> array [n, size] of value rows, each row strictly
    increasing, rows in lexicographic order.  Global canonical order across
    sizes is prefix-lexicographic on the value tuples.  stats.improper always
    equals the number of stored sets.
    """

    def __init__(self, level: Level, by_size: dict[int, np.ndarray], stats: NodeStats):
        self.level = level
        self.by_size = {s: a for s, a in sorted(by_size.items()) if len(a)}
        self.stats = stats
        self._keys: dict[int, np.ndarray] = {}
        n = sum(len(a) for a in self.by_size.values())
        if n != stats.improper:
            raise ValueError(f"stats.improper={stats.improper} but {n} sets stored")

    def count(self) -> int:
        return self.stats.improper

    def __len__(self) -> int:
        return self.count()

    def sizes(self) -> dict[int, int]:
        return {s: len(a) for s, a in self.by_size.items()}

    def iter_rows(self):
        """All rows as tuples, in canonical (prefix-lexicographic) order."""
        streams = [map(tuple, a.tolist()) for a in self.by_size.values()]
        return heapq.merge(*streams)

    def iter_sets(self):
        for row in self.iter_rows():
            yield SpeedSet(self.level, row)

    def min_set(self) -> SpeedSet | None:
        """Canonically smallest member, or None if empty."""
        best = None
        for a in self.by_size.values():
            cand = tuple(int(x) for x in a[0])
            if best is None or cand < best:
                best = cand
        return SpeedSet(self.level, best) if best is not None else None

    def _sorted_keys(self, size: int) -> np.ndarray:
        """Void-dtype view of the size bucket for fast row membership."""
        if size not in self._keys:
            a = np.ascontiguousarray(self.by_size.get(size,
                                     np.zeros((0, size), dtype=np.uint16)))
            self._keys[size] = a.view([("", a.dtype)] * size).ravel()
        return self._keys[size]

    def contains_rows(self, rows: np.ndarray) -> np.ndarray:
        """Vectorized membership: rows [n, size] -> bool [n]."""
        size = rows.shape[1]
        keys = self._sorted_keys(size)
        if len(keys) == 0:
            return np.zeros(len(rows), dtype=bool)
        bucket = self.by_size[size]
        q = np.ascontiguousarray(rows.astype(bucket.dtype))
        qk = q.view([("", bucket.dtype)] * size).ravel()
        idx = np.searchsorted(keys, qk)
        idx = np.minimum(idx, len(keys) - 1)
        return keys[idx] == qk

    def contains(self, values) -> bool:
        vals = tuple(values)
        a = self.by_size.get(len(vals))
        if a is None:
            return False
        row = np.array([vals], dtype=a.dtype)
        return bool(self.contains_rows(row)[0])

    def to_rowset(self) -> set[tuple[int, ...]]:
        out: set[tuple[int, ...]] = set()
        for a in self.by_size.values():
            out.update(map(tuple, a.tolist()))
        return out


def _canon_by_size(parts: dict[int, list[np.ndarray]], dtype) -> dict[int, np.ndarray]:
    out = {}
    for s, lst in parts.items():
        if not lst:
            continue
        a = np.concatenate(lst).astype(dtype)
        out[s] = a[np.lexsort(a.T[::-1])]
    return out


# --------------------------------------------------------------------------
# base enumeration (level ell = 1 fast path, generic DFS otherwise)
# --------------------------------------------------------------------------

def _folded_rows(level: Level) -> tuple[list[int], dict[int, int]]:
    """Folded witness masks: bit (t-1) for t in 1..N//2 (admissibility is
    symmetric under t -> N - t, and t = 0 never witnesses)."""
    N = level.N
    adm = admissible_times(level)
    universe = build_universe(level)
    rows = {}
    for v in universe.members:
        m = 0
        for t in range(1, N // 2 + 1):
            if adm.contains(t * v % N):
                m |= 1 << (t - 1)
        rows[v] = m
    return list(universe.members), rows


def _expand_stem(parts: dict[int, list[np.ndarray]], stems: np.ndarray,
                 nmax: int, k: int) -> None:
    """A stem is a minimal time-dead prefix: every extension by larger values
    (up to nmax, total size <= k) is also time-dead.  Emit the whole family."""
    d = stems.shape[1]
    parts[d].append(stems)
    if d == k:
        return
    last = stems[:, -1].astype(np.int64)
    cnt = nmax - last
    tot = int(cnt.sum())
    if tot:
        rep = np.repeat(np.arange(len(stems)), cnt)
        offs = np.concatenate([np.arange(1, c + 1) for c in cnt])
        ext = np.concatenate(
            [stems[rep], (last[rep] + offs)[:, None].astype(stems.dtype)], axis=1)
        parts[d + 1].append(ext)
    if d + 2 <= k:
        for row, l in zip(stems, last):
            tail = range(int(l) + 1, nmax + 1)
            for extra in range(2, k - d + 1):
                for cmb in combinations(tail, extra):
                    parts[d + extra].append(np.concatenate(
                        [row, np.array(cmb, dtype=stems.dtype)])[None, :])


def _base_fast(level: Level) -> dict[int, np.ndarray]:
    """Improper sets at ell = 1 with p prime: gcd witnesses cannot occur, so
    improper = time-dead, which is upward closed; a breadth-first frontier
    sweep finds the minimal dead prefixes (stems) and expands them."""
    k, p = level.k, level.p
    _, rowd = _folded_rows(level)
    rows = np.zeros(p, dtype=np.uint64)
    for v, m in rowd.items():
        rows[v] = m
    parts: dict[int, list[np.ndarray]] = {s: [] for s in range(1, k + 1)}
    dtype = _dtype_for(level.N)
    for v0 in range(1, p):
        m0 = rows[v0]
        if m0 == 0:
            _expand_stem(parts, np.array([[v0]], dtype=dtype), p - 1, k)
            continue
        vals = np.array([[v0]], dtype=dtype)
        masks = np.array([m0], dtype=np.uint64)
        depth = 1
        while depth < k and len(vals):
            last = vals[:, -1]
            nxt_v, nxt_m = [], []
            for j in range(int(last[0]) + 1, p):
                idx = int(np.searchsorted(last, j))
                if idx == 0:
                    continue
                cm = masks[:idx] & rows[j]
                dead = cm == 0
                if dead.any():
                    dv = vals[:idx][dead]
                    stem = np.concatenate(
                        [dv, np.full((len(dv), 1), j, dtype=dtype)], axis=1)
                    _expand_stem(parts, stem, p - 1, k)
                keep = ~dead
                if keep.any():
                    kv = vals[:idx][keep]
                    nxt_v.append(np.concatenate(
                        [kv, np.full((len(kv), 1), j, dtype=dtype)], axis=1))
                    nxt_m.append(cm[keep])
            if not nxt_v:
                break
            vals = np.concatenate(nxt_v)
            masks = np.concatenate(nxt_m)
            depth += 1
    return _canon_by_size(parts, dtype)


def _prime_divisors(n: int) -> list[int]:
    out = []
    q = 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def _gcd_filter_rows(rows: np.ndarray, N: int, k: int) -> np.ndarray:
    """Keep rows with no shared-factor witness.  A witness exists iff some
    prime q | N divides all values (size < k) or all but at most one (size k)."""
    keep = np.ones(len(rows), dtype=bool)
    mm = rows.shape[1]
    for q in _prime_divisors(N):
        nz = (rows % q != 0).sum(axis=1)
        keep &= ~(nz <= 1) if mm == k else ~(nz == 0)
    return keep


def _base_generic(level: Level) -> dict[int, np.ndarray]:
    """Direct DFS enumeration at any level: emit time-dead subtrees, then
    drop gcd-witnessed rows.  Intended for small parameter scales."""
    k = level.k
    univ, rowd = _folded_rows(level)
    n = len(univ)
    total = sum(comb(n, j) for j in range(1, k + 1))
    if total > GENERIC_ENUM_LIMIT:
        raise ValueError(
            f"direct enumeration of {total} sets at level (k={k}, ell={level.ell}, "
            f"p={level.p}) exceeds limit {GENERIC_ENUM_LIMIT}")
    dtype = _dtype_for(level.N)
    parts: dict[int, list[np.ndarray]] = {s: [] for s in range(1, k + 1)}
    full = (1 << (level.N // 2)) - 1

    def emit(prefix: list[int], start: int) -> None:
        d = len(prefix)
        row = np.array(prefix, dtype=dtype)
        parts[d].append(row[None, :])
        tail = univ[start:]
        for extra in range(1, k - d + 1):
            for cmb in combinations(tail, extra):
                parts[d + extra].append(
                    np.concatenate([row, np.array(cmb, dtype=dtype)])[None, :])

    def rec(prefix: list[int], mask: int, start: int) -> None:
        if mask == 0:
            emit(prefix, start)
            return
        if len(prefix) == k:
            return
        for i in range(start, n):
            v = univ[i]
            rec(prefix + [v], mask & rowd[v], i + 1)

    rec([], full, 0)
    by_size = _canon_by_size(parts, dtype)
    out = {}
    for s, a in by_size.items():
        kept = a[_gcd_filter_rows(a, level.N, k)]
        if len(kept):
            out[s] = kept
    return out


def compute_improper_base(level: Level, *, force_generic: bool = False) -> ImproperCollection:
    """Enumerate the improper collection at a level directly (no ladder).

    examined counts the full candidate space: all value sets of sizes 1..k
    over the universe.
    """
    t0 = time.monotonic()
    n = level.ell * (level.p - 1)
    examined = sum(comb(n, j) for j in range(1, level.k + 1))
    if level.ell == 1 and is_prime(level.p) and not force_generic:
        by_size = _base_fast(level)
    else:
        by_size = _base_generic(level)
    improper = sum(len(a) for a in by_size.values())
    wall = int((time.monotonic() - t0) * 1000)
    return ImproperCollection(level, by_size, NodeStats(examined, improper, wall))


# --------------------------------------------------------------------------
# shadows (lift streams) and generic classification
# --------------------------------------------------------------------------

def _lift_patterns(ms: int, c: int, k: int):
    """Expansion patterns for lifting a size-ms set with c lifts per value:
    tuples e (len ms, 1 <= e_i <= c, sum <= k) plus the per-position lift-index
    combinations.  Distinct patterns produce disjoint candidate families."""
    pats: list[tuple[int, ...]] = []

    def rec(i: int, left: int, cur: list[int]) -> None:
        if i == ms:
            pats.append(tuple(cur))
            return
        lo_needed = ms - i - 1
        for e in range(1, min(c, left - lo_needed) + 1):
            cur.append(e)
            rec(i + 1, left - e, cur)
            cur.pop()

    rec(0, k, [])
    return [(e, [list(combinations(range(c), ei)) for ei in e]) for e in pats]


def lift_cell_count(ms: int, c: int, k: int) -> int:
    """Number of lifted candidate sets produced by one size-ms source."""
    return sum(prod(comb(c, ei) for ei in e) for e, _ in _lift_patterns(ms, c, k))


def shadow(collection: ImproperCollection, target_level: Level):
    """Stream every candidate set at target_level whose reduction mod ell*p is
    a member of the collection (sizes source..k), in canonical source order.

    Distinct sources yield disjoint families (a candidate determines its
    reduction), so no cross-source deduplication is needed.
    """
    src = collection.level
    if (target_level.k, target_level.p) != (src.k, src.p) or \
            target_level.ell % src.ell != 0 or target_level.ell == src.ell:
        raise ValueError(f"cannot lift level {src} to {target_level}")
    c = target_level.ell // src.ell
    lp = src.N
    k = src.k
    for row in collection.iter_rows():
        ms = len(row)
        for e, opts in _lift_patterns(ms, c, k):
            idx = [0] * ms
            while True:
                vals = []
                for i, v in enumerate(row):
                    for a in opts[i][idx[i]]:
                        vals.append(v + a * lp)
                yield SpeedSet(target_level, tuple(sorted(vals)))
                j = ms - 1
                while j >= 0:
                    idx[j] += 1
                    if idx[j] < len(opts[j]):
                        break
                    idx[j] = 0
                    j -= 1
                if j < 0:
                    break


def compute_improper_within(target_level: Level, candidates,
                            table: WitnessTable | None = None) -> ImproperCollection:
    """Classify a candidate stream at a level; collect the improper ones.

    examined counts candidates consumed.  Generic (per-set) path; the ladder
    uses the vectorized classifier instead.
    """
    t0 = time.monotonic()
    if table is None:
        table = build_witness_table(target_level)
    parts: dict[int, list[np.ndarray]] = {}
    dtype = _dtype_for(target_level.N)
    examined = 0
    for cand in candidates:
        vals = cand.values if isinstance(cand, SpeedSet) else tuple(cand)
        examined += 1
        if isinstance(classify_proper(vals, target_level, table), Improper):
            parts.setdefault(len(vals), []).append(
                np.array([vals], dtype=dtype))
    by_size = _canon_by_size(parts, dtype)
    improper = sum(len(a) for a in by_size.values())
    wall = int((time.monotonic() - t0) * 1000)
    return ImproperCollection(target_level, by_size,
                              NodeStats(examined, improper, wall))


def intersect_candidates(stream_a, stream_b):
    """Stream the sets present in both candidate streams (deduplicated),
    preserving the order of stream_a."""
    seen: set[tuple[int, ...]] = set()
    b_rows: set[tuple[int, ...]] = set()
    level = None
    for cand in stream_b:
        if isinstance(cand, SpeedSet):
            if level is None:
                level = cand.level
            elif cand.level != level:
                raise ValueError("stream_b mixes levels")
            b_rows.add(cand.values)
        else:
            b_rows.add(tuple(cand))
    for cand in stream_a:
        vals = cand.values if isinstance(cand, SpeedSet) else tuple(cand)
        if isinstance(cand, SpeedSet) and level is not None and cand.level != level:
            raise ValueError("streams are at different levels")
        if vals in b_rows and vals not in seen:
            seen.add(vals)
            yield cand


# --------------------------------------------------------------------------
# fast edge classifier: CRT-factored witness masks + meet in the middle
# --------------------------------------------------------------------------

class _EdgeTables:
    """Precomputed tables for classifying all lifts from level ell to
    m = c * ell at prime modulus part p, requiring gcd(m, p) = 1.

    Witness times t (with c not dividing t; see module docstring) factor as
    (tau, sigma) = (t mod m, t mod p).  Folding (tau, sigma) ~ (-tau, -sigma)
    leaves, per canonical tau, either a full sigma range or (when tau = m/2)
    the half range.  Bits of the per-value masks enumerate those (tau, sigma)
    boxes; a candidate is time-dead iff the AND of its values' masks is zero.
    """

    def __init__(self, k: int, ell: int, m: int, p: int):
        if m % ell != 0 or m <= ell:
            raise ValueError(f"bad edge {ell}->{m}")
        if gcd(m, p) != 1:
            raise ValueError(f"edge {ell}->{m} needs gcd(m, p) = 1")
        self.k, self.ell, self.m, self.p = k, ell, m, p
        self.c = m // ell
        N = m * p
        a = -(-N // (k + 1))
        pinv = pow(p, -1, m)
        minv = pow(m, -1, p)
        adm2d = np.zeros((m, p), dtype=bool)
        for x in range(m):
            r0 = x * p * pinv % N
            for w in range(p):
                r = (r0 + w * m * minv) % N
                adm2d[x, w] = a <= r <= N - a
        taus = []
        for tau in range(1, m):
            if tau % self.c == 0:
                continue
            if tau < m - tau:
                taus.append((tau, p))
            elif tau == m - tau:
                taus.append((tau, p // 2 + 1))
        self.taus = taus
        self.nbits = sum(sc for _, sc in taus)
        self.W = (self.nbits + 63) // 64
        step = (ell * p) % m
        self.OK = np.zeros((len(taus), m, p), dtype=np.uint16)
        for ti, (tau, _) in enumerate(taus):
            for um in range(m):
                for aa in range(self.c):
                    x = tau * ((um + aa * step) % m) % m
                    self.OK[ti, um, :] |= np.uint16(1 << aa) * adm2d[x, :]
        self.ndivs = _prime_divisors(N)
        self.patterns = {ms: _lift_patterns(ms, self.c, k) for ms in range(1, k + 1)}

    def bit_layout(self):
        b = 0
        for ti, (_, scount) in enumerate(self.taus):
            for s in range(scount):
                yield ti, s, b >> 6, np.uint64(b & 63)
                b += 1


def _singles_masks(et: _EdgeTables, V: np.ndarray) -> np.ndarray:
    """Per-value witness masks for one source block V [B, ms]:
    wm[b, i, a, w] = mask words over (tau, sigma) boxes for lift index a."""
    B, ms = V.shape
    Vm = (V % et.m).astype(np.int64)
    Vp = (V % et.p).astype(np.int64)
    wm = np.zeros((B, ms, et.c, et.W), dtype=np.uint64)
    one = np.uint64(1)
    for ti, s, wi, bit in et.bit_layout():
        om = et.OK[ti][Vm, (s * Vp) % et.p]
        for aa in range(et.c):
            wm[:, :, aa, wi] |= ((om >> aa) & 1).astype(np.uint64) << bit
    return wm


def _combine_options(pms: list[np.ndarray]) -> np.ndarray:
    """AND-combine per-position option masks into all products [B, prod, W]."""
    acc = pms[0]
    for pm in pms[1:]:
        B, na, W = acc.shape
        nb = pm.shape[1]
        acc = (acc[:, :, None, :] & pm[:, None, :, :]).reshape(B, na * nb, W)
    return acc


def _classify_edge_block(et: _EdgeTables, V: np.ndarray, parts, filters=None):
    """Classify every lift of the source block V [B, ms].  Time-dead cells are
    materialized, gcd-screened, optionally filtered by membership of their
    reductions in other collections (merge nodes), and appended to parts.

    Returns (cells examined, improper found)."""
    B, ms = V.shape
    k = et.k
    wm = _singles_masks(et, V)
    lp = et.ell * et.p
    examined = improper = 0
    for e, opts in et.patterns[ms]:
        pos_masks = []
        for i, combos in enumerate(opts):
            if len(combos) == et.c and len(combos[0]) == 1:
                pm = wm[:, i, :, :]
            else:
                pm = np.zeros((B, len(combos), et.W), dtype=np.uint64)
                for ci, cmb in enumerate(combos):
                    acc = wm[:, i, cmb[0], :].copy()
                    for aa in cmb[1:]:
                        acc &= wm[:, i, aa, :]
                    pm[:, ci, :] = acc
            pos_masks.append(pm)
        nopt = [pm.shape[1] for pm in pos_masks]
        best, sp = None, 1
        for s in range(1, ms):
            score = prod(nopt[:s]) + prod(nopt[s:])
            if best is None or score < best:
                best, sp = score, s
        if ms == 1:
            L = pos_masks[0]
            nl, nr = L.shape[1], 1
            examined += B * nl
            dead0 = L[:, :, 0] == 0
            bs, ls = np.nonzero(dead0)
            rs = np.zeros(len(bs), dtype=np.int64)
            for w in range(1, et.W):
                alive = L[bs, ls, w] != 0
                bs, ls, rs = bs[~alive], ls[~alive], rs[~alive]
        else:
            L = _combine_options(pos_masks[:sp])
            R = _combine_options(pos_masks[sp:])
            nl, nr = L.shape[1], R.shape[1]
            examined += B * nl * nr
            dead0 = (L[:, :, None, 0] & R[:, None, :, 0]) == 0
            if not dead0.any():
                continue
            bs, ls, rs = np.nonzero(dead0)
            for w in range(1, et.W):
                if len(bs) == 0:
                    break
                alive = (L[bs, ls, w] & R[bs, rs, w]) != 0
                bs, ls, rs = bs[~alive], ls[~alive], rs[~alive]
        if len(bs) == 0:
            continue
        rows = _build_rows(et, V, e, opts, sp, bs, ls, rs, lp)
        rows = rows[_gcd_filter_rows(rows, et.m * et.p, k)]
        if filters is not None and len(rows):
            for flt in filters:
                if not len(rows):
                    break
                rows = rows[flt(rows)]
        improper += len(rows)
        if len(rows):
            parts[rows.shape[1]].append(rows.astype(_dtype_for(et.m * et.p)))
    return examined, improper


def _build_rows(et: _EdgeTables, V, e, opts, sp, bs, ls, rs, lp):
    """Materialize candidate value rows for the dead (block, left, right)
    combination indices."""
    ms = V.shape[1]
    nopt = [len(o) for o in opts]
    pos_idx = np.zeros((len(bs), ms), dtype=np.int64)
    li = ls.copy()
    for i in range(sp - 1, -1, -1):
        pos_idx[:, i] = li % nopt[i]
        li //= nopt[i]
    ri = rs.copy()
    for i in range(ms - 1, sp - 1, -1):
        pos_idx[:, i] = ri % nopt[i]
        ri //= nopt[i]
    mm = sum(e)
    rows = np.zeros((len(bs), mm), dtype=np.int64)
    col = 0
    for i in range(ms):
        combos = np.array(opts[i], dtype=np.int64)
        lifts = combos[pos_idx[:, i]]
        rows[:, col:col + e[i]] = V[bs, i][:, None].astype(np.int64) + lifts * lp
        col += e[i]
    rows.sort(axis=1)
    return rows


# block sizing: keep the pair-test boolean under ~32M entries
_PAIR_BUDGET = 32 * 10**6


def _run_edge(et: _EdgeTables, sources: ImproperCollection, filters=None,
              workers: int = 1, progress=None):
    """Classify all lifts of `sources` along the edge.  Returns
    (parts, examined, improper).  Work is split into fixed source chunks, so
    the merged output is identical for any worker count."""
    parts: dict[int, list[np.ndarray]] = {s: [] for s in range(1, et.k + 1)}
    examined = improper = 0
    jobs = []
    for ms, arr in sorted(sources.by_size.items()):
        worst = max((prod(len(c) for c in opts)
                     for _, opts in et.patterns[ms]), default=1)
        block = max(1, min(8192, _PAIR_BUDGET // max(worst, 1)))
        for i in range(0, len(arr), block):
            jobs.append((ms, i, min(i + block, len(arr))))
    if workers > 1 and len(jobs) > 1:
        results = _run_jobs_parallel(et, sources, filters, jobs, workers)
    else:
        results = (_edge_job(et, sources.by_size[ms][i:j], filters)
                   for ms, i, j in jobs)
    done = 0
    for ji, (ex, im, sub) in enumerate(results):
        examined += ex
        improper += im
        for s, lst in sub.items():
            parts[s].extend(lst)
        done += jobs[ji][2] - jobs[ji][1]
        if progress and (ji % 256 == 255 or ji == len(jobs) - 1):
            progress(f"lift {et.ell}->{et.m}: {done}/{len(sources)} sources")
    return parts, examined, improper


def _edge_job(et: _EdgeTables, V: np.ndarray, filters=None):
    parts: dict[int, list[np.ndarray]] = {s: [] for s in range(1, et.k + 1)}
    ex, im = _classify_edge_block(et, V, parts, filters)
    return ex, im, parts


# ---- multiprocessing support (fork; workers inherit tables copy-on-write) ----

_WORKER_CTX: dict = {}


def _worker_run(job):
    ms, i, j = job
    et = _WORKER_CTX["et"]
    V = _WORKER_CTX["by_size"][ms][i:j]
    return _edge_job(et, V, _WORKER_CTX["filters"])


def _run_jobs_parallel(et, sources, filters, jobs, workers):
    import multiprocessing as mp

    # Globals are set before the fork so workers inherit the tables and filter
    # closures copy-on-write; job tuples are the only pickled inputs.
    ctx = mp.get_context("fork")
    _WORKER_CTX["et"] = et
    _WORKER_CTX["by_size"] = sources.by_size
    _WORKER_CTX["filters"] = filters
    try:
        with ctx.Pool(workers) as pool:
            yield from pool.imap(_worker_run, jobs)
    finally:
        _WORKER_CTX.clear()


def _reduction_filter(other: ImproperCollection):
    """Row filter: keep candidate rows whose reduction mod other.level.N is a
    member of `other`.  Handles rows whose values collide after reduction."""
    No = other.level.N
    for s in other.by_size:
        other._sorted_keys(s)  # prebuild before any fork so workers share

    def flt(rows: np.ndarray) -> np.ndarray:
        red = np.sort(rows.astype(np.int64) % No, axis=1)
        dup = (np.diff(red, axis=1) == 0).any(axis=1)
        keep = np.zeros(len(rows), dtype=bool)
        clean = ~dup
        if clean.any():
            keep[clean] = other.contains_rows(red[clean])
        for i in np.nonzero(dup)[0]:
            support = tuple(sorted(set(int(x) for x in red[i])))
            keep[i] = other.contains(support)
        return keep

    return flt


# --------------------------------------------------------------------------
# ladder runner
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeReport:
    ell: int
    parents: tuple[int, ...]
    examined: int
    improper: int
    survival: Fraction
    wall_ms: int


@dataclass
class LadderResult:
    plan: LadderPlan
    reports: tuple[NodeReport, ...]
    final: ImproperCollection

    @property
    def empty(self) -> bool:
        return self.final.count() == 0


def run_ladder(plan: LadderPlan, *, workers: int = 1, force_generic: bool = False,
               cap: int | None = None, progress=None) -> LadderResult:
    """Execute a ladder plan: enumerate the base at level 1, then classify the
    lift candidates level by level; merge nodes intersect branch shadows.

    Equivalent per-candidate semantics to shadow() + compute_improper_within()
    (tested against them); merge nodes classify the cheapest branch's lifts
    and filter by membership of the reductions in the other branches, which
    yields the same set as intersecting first.
    """
    if plan.p is None:
        raise ValueError("plan has no prime; use plan.with_prime(p)")
    check = validate_plan(plan)
    if not check.ok:
        raise ValueError("invalid plan: " + "; ".join(check.violations))
    k, p = plan.k, plan.p
    colls: dict[int, ImproperCollection] = {}
    reports: list[NodeReport] = []
    for node in plan.nodes:
        t0 = time.monotonic()
        level = Level(k, node, p)
        if node == 1:
            coll = compute_improper_base(level, force_generic=force_generic)
            examined = coll.stats.examined
        else:
            parents = plan.parents(node)
            gen = min(parents, key=lambda a: sum(
                n * lift_cell_count(s, node // a, k)
                for s, n in colls[a].sizes().items()))
            others = [colls[a] for a in parents if a != gen]
            fast_ok = gcd(node, p) == 1 and not force_generic
            if fast_ok:
                et = _EdgeTables(k, gen, node, p)
                filters = [_reduction_filter(o) for o in others] or None
                parts, examined, improper = _run_edge(
                    et, colls[gen], filters, workers=workers, progress=progress)
                by_size = _canon_by_size(parts, _dtype_for(level.N))
                coll = ImproperCollection(
                    level, by_size, NodeStats(examined, improper, 0))
            else:
                coll, examined = _generic_edge(level, colls[gen], others)
        wall = int((time.monotonic() - t0) * 1000)
        coll.stats.wall_ms = wall
        if cap is not None and coll.count() > cap:
            raise RuntimeError(
                f"improper collection at level {node} has {coll.count()} sets, "
                f"over the cap {cap}")
        colls[node] = coll
        reports.append(NodeReport(node, plan.parents(node), coll.stats.examined,
                                  coll.stats.improper, coll.stats.survival, wall))
        if progress:
            progress(f"level {node}: improper={coll.count()} "
                     f"examined={coll.stats.examined}")
    return LadderResult(plan, tuple(reports), colls[plan.terminal])


def _generic_edge(level: Level, gen: ImproperCollection, others):
    """Reference edge executor: stream the shadow, classify each candidate,
    filter by the other branches' membership.  Slow; small scales only."""
    table = build_witness_table(level)
    cells = sum(n * lift_cell_count(s, level.ell // gen.level.ell, level.k)
                for s, n in gen.sizes().items())
    if cells > GENERIC_ENUM_LIMIT:
        raise ValueError(
            f"generic edge to level {level.ell} would classify {cells} candidates, "
            f"over limit {GENERIC_ENUM_LIMIT}")
    other_sets = [o.to_rowset() for o in others]
    other_N = [o.level.N for o in others]
    parts: dict[int, list[np.ndarray]] = {}
    dtype = _dtype_for(level.N)
    examined = 0
    for cand in shadow(gen, level):
        examined += 1
        ok = True
        for rs, No in zip(other_sets, other_N):
            support = tuple(sorted(set(v % No for v in cand.values)))
            if support not in rs:
                ok = False
                break
        if not ok:
            continue
        if isinstance(classify_proper(cand.values, level, table), Improper):
            parts.setdefault(len(cand.values), []).append(
                np.array([cand.values], dtype=dtype))
    by_size = _canon_by_size(parts, dtype)
    improper = sum(len(a) for a in by_size.values())
    coll = ImproperCollection(level, by_size, NodeStats(examined, improper, 0))
    return coll, examined
