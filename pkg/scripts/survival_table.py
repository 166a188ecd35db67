#!/usr/bin/env python3
"""Survival ratios along the ladder for a range of primes.

Prints, per prime, the improper count and survival ratio at every node, plus
a cost estimate for the default plan fed back with the measured survivals --
handy for judging where a different ladder would pay off.
"""
import argparse
import sys
import time

from lrsieve.engine import run_ladder
from lrsieve.modmath import is_prime
from lrsieve.planner import default_plan, estimate_cost, parse_plan


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, required=True)
    ap.add_argument("--from", dest="lo", type=int, required=True)
    ap.add_argument("--to", dest="hi", type=int, required=True)
    ap.add_argument("--plan", default=None)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    primes = [p for p in range(args.lo, args.hi + 1) if is_prime(p)]
    for p in primes:
        plan = (parse_plan(args.plan, args.k, p) if args.plan
                else default_plan(args.k, p))
        t0 = time.monotonic()
        res = run_ladder(plan, workers=args.workers)
        wall = time.monotonic() - t0
        cells = "  ".join(
            f"{r.ell}:{r.improper}({float(r.survival):.2g})"
            for r in res.reports)
        print(f"p={p:<5} {str(plan):<18} {wall:7.1f}s  {cells}")
        survivals = {r.ell: r.survival for r in res.reports
                     if r.ell != plan.terminal}
        est = estimate_cost(plan, survivals)
        print(f"{'':24s} cost model total = {float(est.total):.3g} tuples"
              f"{' (merge lower bound)' if est.heuristic else ''}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
