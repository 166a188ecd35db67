"""Sieve ladder plans: which levels to visit, in what order, and what they cost.

A plan is a small DAG of levels rooted at 1.  Each branch is a divisibility
chain; branches that end at the same level merge there (the candidates at a
merge node are the intersection of the branch shadows).  The textual grammar
is `1>3>9` for a chain and `1>2>10 & 1>5>10` for two branches merging at 10.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import prod


@dataclass(frozen=True)
class LadderPlan:
    """A ladder of levels for one (k, p) run.  p may be bound later."""

    k: int
    branches: tuple[tuple[int, ...], ...]
    p: int | None = None

    @property
    def nodes(self) -> tuple[int, ...]:
        ns = sorted({ell for br in self.branches for ell in br})
        return tuple(ns)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        es = {(br[i], br[i + 1]) for br in self.branches for i in range(len(br) - 1)}
        return tuple(sorted(es))

    @property
    def terminal(self) -> int:
        return max(ell for br in self.branches for ell in br)

    @property
    def merge_nodes(self) -> tuple[int, ...]:
        indeg: dict[int, set[int]] = {}
        for a, b in self.edges:
            indeg.setdefault(b, set()).add(a)
        return tuple(sorted(n for n, srcs in indeg.items() if len(srcs) > 1))

    def parents(self, node: int) -> tuple[int, ...]:
        return tuple(sorted(a for a, b in self.edges if b == node))

    def with_prime(self, p: int) -> "LadderPlan":
        return replace(self, p=p)

    def __str__(self) -> str:
        return " & ".join(">".join(str(ell) for ell in br) for br in self.branches)


def parse_plan(text: str, k: int, p: int | None = None) -> LadderPlan:
    """Parse the plan grammar: branches separated by '&', levels by '>'."""
    branches = []
    for part in text.split("&"):
        levels = []
        for tok in part.split(">"):
            tok = tok.strip()
            if not tok.isdigit():
                raise ValueError(f"bad level token {tok!r} in plan {text!r}")
            levels.append(int(tok))
        if not levels:
            raise ValueError(f"empty branch in plan {text!r}")
        branches.append(tuple(levels))
    return LadderPlan(k, tuple(branches), p)


def default_plan(k: int, p: int | None = None) -> LadderPlan:
    """The standard plan for each k.

    k = 8 and k = 9 use the hand-tuned ladders; other k get a divisibility
    chain through k+1 built by multiplying in the prime factors of k+1 in
    nondecreasing order (e.g. k = 5 -> 1>2>6).
    """
    if k == 8:
        return LadderPlan(8, ((1, 3, 9),), p)
    if k == 9:
        return LadderPlan(9, ((1, 2, 10), (1, 5, 10)), p)
    t = k + 1
    factors = []
    n, q = t, 2
    while q * q <= n:
        while n % q == 0:
            factors.append(q)
            n //= q
        q += 1
    if n > 1:
        factors.append(n)
    chain = [1]
    for q in factors:
        chain.append(chain[-1] * q)
    return LadderPlan(k, (tuple(chain),), p)


@dataclass(frozen=True)
class PlanCheck:
    violations: tuple[str, ...]
    warnings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_plan(plan: LadderPlan, *, for_certificate: bool = False) -> PlanCheck:
    """Structural checks.  A plan usable for a dividing-prime certificate must
    terminate at k+1; other terminals are allowed for experiments but warned
    about (k+1 is where the free witnesses t = p, 2p, ... kick in)."""
    violations: list[str] = []
    warnings: list[str] = []
    if plan.k < 2:
        violations.append(f"k must be >= 2, got {plan.k}")
    for br in plan.branches:
        if not br:
            violations.append("empty branch")
            continue
        if br[0] != 1:
            violations.append(f"branch {br} does not start at level 1")
        for a, b in zip(br, br[1:]):
            if b <= a:
                violations.append(f"edge {a}>{b} does not increase")
            elif b % a != 0:
                violations.append(f"edge {a}>{b} is not a divisibility step")
    if not violations:
        terms = {br[-1] for br in plan.branches}
        if len(terms) != 1:
            violations.append(f"branches end at different levels {sorted(terms)}")
        else:
            t = terms.pop()
            if t % (plan.k + 1) != 0:
                msg = (f"terminal level {t} is not a multiple of k+1 = {plan.k + 1}")
                if for_certificate:
                    violations.append(msg)
                else:
                    warnings.append(msg)
            if for_certificate and t != plan.k + 1:
                violations.append(
                    f"certificate plans must end exactly at k+1 = {plan.k + 1}, got {t}")
    if plan.p is not None and plan.p < 2:
        violations.append(f"p must be >= 2, got {plan.p}")
    return PlanCheck(tuple(violations), tuple(warnings))


@dataclass(frozen=True)
class CostEstimate:
    """Exact tuple-count cost model for a plan.

    total = (p-1)^k * sum over nodes of cum(node) * node^k, where cum(root)=1
    and cum(child) = cum(parent) * survival(parent).  At a merge node the
    smallest incoming branch value is used, which makes the estimate a lower
    bound (flagged by `heuristic`).
    """

    plan: LadderPlan
    total: Fraction
    per_node: tuple[tuple[int, Fraction], ...]
    heuristic: bool

    @property
    def total_int(self) -> int:
        return int(self.total)


def estimate_cost(plan: LadderPlan, survivals) -> CostEstimate:
    """Cost of running the plan given per-node survival ratios.

    `survivals` maps node -> Fraction, or is a sequence covering the
    non-terminal nodes in increasing level order.  Survival at a node is the
    fraction of examined candidates that are improper there.
    """
    if plan.p is None:
        raise ValueError("plan has no prime bound; use plan.with_prime(p)")
    nodes = plan.nodes
    if nodes[0] != 1:
        raise ValueError("plan must be rooted at level 1")
    nonterminal = [n for n in nodes if n != plan.terminal]
    if isinstance(survivals, dict):
        smap = {n: Fraction(survivals[n]) for n in survivals}
    else:
        vals = list(survivals)
        if len(vals) != len(nonterminal):
            raise ValueError(
                f"expected {len(nonterminal)} survival entries for nodes "
                f"{nonterminal}, got {len(vals)}")
        smap = {n: Fraction(v) for n, v in zip(nonterminal, vals)}
    for n in nonterminal:
        if n not in smap:
            raise ValueError(f"missing survival for node {n}")
        if not 0 <= smap[n] <= 1:
            raise ValueError(f"survival at node {n} out of [0, 1]")
    k = plan.k
    base = Fraction(plan.p - 1) ** k
    cum: dict[int, Fraction] = {1: Fraction(1)}
    heuristic = False
    per_node = []
    total = Fraction(0)
    for n in nodes:
        if n != 1:
            parents = plan.parents(n)
            incoming = [cum[a] * smap[a] for a in parents]
            if len(incoming) > 1:
                heuristic = True
            cum[n] = min(incoming)
        term = base * cum[n] * Fraction(n) ** k
        per_node.append((n, term))
        total += term
    return CostEstimate(plan, total, tuple(per_node), heuristic)
