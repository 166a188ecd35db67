"""Command-line front end.

Subcommands::

    check     run the full ladder for one (k, p) and print the verdict
    scan      run many primes, print a summary table, optionally write receipts
    certify   assemble per-prime receipts into a certificate for k
    verify    audit a receipt or certificate file
    bound     print the counterexample bound C_k, optionally test a prime list
    oracle    definition-level tools: enumerate, decide, confirm

Exit codes: 0 for a clean/affirmative outcome (empty ladder, proven
certificate, verification passed, loneliness holds), 1 for the negative
outcome (survivors, not proven, problems found, loneliness fails), 2 for
usage or runtime errors.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .certify import (
    ChainError,
    PrimeResult,
    build_certificate,
    certificate_filename,
    check_prime,
    read_receipt,
    receipt_filename,
    verify_receipt,
    write_receipt,
)
from .modmath import Level, bound_C, is_prime, load_primes, product_exceeds_bound
from .oracle import confirm_improper_evidence, lrc_decide, naive_improper
from .planner import default_plan


@dataclass
class RunConfig:
    """Everything one ladder run needs, bundled for reuse across primes."""

    k: int
    plan: str | None = None
    workers: int = 1
    cap: int | None = None
    force_generic: bool = False
    out: Path | None = None
    quiet: bool = False

    def progress(self):
        if self.quiet:
            return None
        return lambda msg: print(f"  .. {msg}", file=sys.stderr)


def _parse_primes(spec: str) -> tuple[int, ...]:
    """A prime list: packaged name (S8), a file path, or comma-separated ints."""
    if "," in spec or spec.isdigit():
        return tuple(int(x) for x in spec.split(",") if x.strip())
    return load_primes(spec)


def _print_nodes(result: PrimeResult) -> None:
    print(f"  {'level':>6} {'parents':>9} {'examined':>16} {'improper':>12} "
          f"{'survival':>12} {'wall':>9}")
    for n in result.nodes:
        par = ",".join(map(str, n.parents)) if n.parents else "-"
        surv = f"{float(n.survival):.3g}" if n.examined else "-"
        print(f"  {n.ell:>6} {par:>9} {n.examined:>16} {n.improper:>12} "
              f"{surv:>12} {n.wall_ms:>7}ms")


def _report_check(result: PrimeResult, out: Path | None) -> int:
    _print_nodes(result)
    for w in result.warnings:
        print(f"  note: {w}")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        path = out / receipt_filename(result.k, result.p)
        digest = write_receipt(result, path)
        print(f"  receipt: {path} ({digest[:16]}...)")
    if result.status == "empty":
        print(f"empty: every improper candidate dies by level {result.k + 1}; "
              f"p = {result.p} divides the speed product of any tight "
              f"counterexample with {result.k} speeds")
        return 0
    if result.status == "nonempty":
        last = result.nodes[-1]
        print(f"nonempty: {last.improper} improper sets survive at level "
              f"{result.k + 1}")
        if result.evidence is not None:
            ev = result.evidence
            print(f"  evidence: values {list(ev.values)}, confirmed improper "
                  f"via tuple {list(ev.witness_tuple)} "
                  f"({ev.patterns_checked} pattern(s) checked)")
        return 1
    print(f"aborted: {result.reason}")
    return 2


def cmd_check(args) -> int:
    cfg = RunConfig(args.k, plan=args.plan, workers=args.workers, cap=args.cap,
                    force_generic=args.force_generic, out=args.out,
                    quiet=args.quiet)
    result = check_prime(cfg.k, args.p, plan=cfg.plan, workers=cfg.workers,
                         cap=cfg.cap, force_generic=cfg.force_generic,
                         progress=cfg.progress())
    print(f"k={cfg.k} p={args.p} plan={result.plan}")
    return _report_check(result, cfg.out)


def cmd_scan(args) -> int:
    cfg = RunConfig(args.k, plan=args.plan, workers=args.workers, cap=args.cap,
                    force_generic=args.force_generic, out=args.out,
                    quiet=args.quiet)
    if args.primes:
        primes = _parse_primes(args.primes)
    else:
        if args.lo is None or args.hi is None:
            print("scan: need --primes or both --from/--to", file=sys.stderr)
            return 2
        primes = tuple(p for p in range(args.lo, args.hi + 1) if is_prime(p))
    if not primes:
        print("scan: no primes to run", file=sys.stderr)
        return 2
    bad = [p for p in primes if not is_prime(p)]
    if bad:
        print(f"scan: not prime: {bad}", file=sys.stderr)
        return 2
    print(f"k={cfg.k}, {len(primes)} primes: {primes[0]}..{primes[-1]}")
    print(f"{'p':>6} {'status':>9} {'survivors':>12} {'wall':>10}  final survival by level")
    statuses = {}
    for p in primes:
        t0 = time.monotonic()
        result = check_prime(cfg.k, p, plan=cfg.plan, workers=cfg.workers,
                             cap=cfg.cap, force_generic=cfg.force_generic,
                             progress=cfg.progress())
        wall = time.monotonic() - t0
        statuses[p] = result.status
        if result.nodes:
            survivors = result.nodes[-1].improper
            trail = "  ".join(f"{n.ell}:{n.improper}" for n in result.nodes)
        else:
            survivors, trail = "-", result.reason or ""
        print(f"{p:>6} {result.status:>9} {survivors:>12} {wall:>9.1f}s  {trail}")
        if cfg.out is not None:
            cfg.out.mkdir(parents=True, exist_ok=True)
            write_receipt(result, cfg.out / receipt_filename(cfg.k, p))
    empty = sum(1 for s in statuses.values() if s == "empty")
    print(f"summary: {empty}/{len(primes)} empty"
          + ("" if empty == len(primes) else
             "; survivors/aborts at " + ", ".join(
                 str(p) for p, s in statuses.items() if s != "empty")))
    return 0 if empty == len(primes) else 1


def cmd_certify(args) -> int:
    primes = _parse_primes(args.primes)
    receipts_dir = args.receipts
    results: list[PrimeResult] = []
    cfg = RunConfig(args.k, plan=args.plan, workers=args.workers,
                    quiet=args.quiet)
    for p in primes:
        path = receipts_dir / receipt_filename(args.k, p)
        if path.exists():
            rep = verify_receipt(path)
            if not rep.ok:
                print(f"{path.name}: failed verification:", file=sys.stderr)
                for q in rep.problems:
                    print(f"  - {q}", file=sys.stderr)
                return 2
            results.append(PrimeResult.from_doc(rep.doc))
        elif args.run_missing:
            print(f"  running k={args.k} p={p} ...", file=sys.stderr)
            result = check_prime(args.k, p, plan=cfg.plan, workers=cfg.workers,
                                 progress=cfg.progress())
            receipts_dir.mkdir(parents=True, exist_ok=True)
            write_receipt(result, path)
            results.append(result)
        else:
            print(f"certify: missing receipt {path} (use --run-missing to "
                  f"compute it)", file=sys.stderr)
            return 2
    prior = None
    if args.assume is not None:
        rep = verify_receipt(args.assume)
        if not rep.ok:
            print(f"assumed certificate {args.assume} failed verification:",
                  file=sys.stderr)
            for q in rep.problems:
                print(f"  - {q}", file=sys.stderr)
            return 2
        prior = rep.doc
    try:
        cert = build_certificate(args.k, results, prior=prior)
    except ChainError as err:
        print(f"broken assumption chain: {err}", file=sys.stderr)
        return 2
    out = args.out or (receipts_dir / certificate_filename(args.k))
    if out.is_dir():
        out = out / certificate_filename(args.k)
    digest = write_receipt(cert, out)
    print(f"k={cert.k}: {len(cert.primes)} primes "
          f"{cert.primes[0]}..{cert.primes[-1]}, product has "
          f"{len(str(cert.product))} digits, bound C_{cert.k} has "
          f"{cert.bound.digits} digits")
    chain = ("settled cases" if cert.assumes_source == "settled"
             else f"certificate {cert.assumes_hash[:16]}...")
    print(f"assumes the conjecture for k={cert.assumes_k} via {chain}")
    print(f"certificate: {out} ({digest[:16]}...)")
    if cert.proven:
        print(f"PROVEN: no tight counterexample with {cert.k} speeds exists")
        return 0
    print(f"NOT PROVEN: the prime product does not exceed C_{cert.k}")
    return 1


def cmd_verify(args) -> int:
    rep = verify_receipt(args.path, rerun=args.rerun, workers=args.workers,
                         receipts_dir=args.receipts)
    label = f"{args.path} ({rep.kind})"
    if rep.ok:
        print(f"{label}: ok")
        return 0
    print(f"{label}: {len(rep.problems)} problem(s)")
    for q in rep.problems:
        print(f"  - {q}")
    return 1


def cmd_bound(args) -> int:
    bound = bound_C(args.k)
    if bound.integral:
        print(f"C_{args.k} = {bound.value} ({bound.digits} digits)")
    else:
        print(f"C_{args.k} = {bound.exact.numerator}/{bound.exact.denominator}"
              f" (floor {bound.value}, {bound.digits} digits)")
    if args.primes is None:
        return 0
    primes = _parse_primes(args.primes)
    pc = product_exceeds_bound(primes, args.k)
    for v in pc.violations:
        print(f"  problem: {v}")
    print(f"product of {len(primes)} primes has {len(str(pc.product))} digits; "
          f"exceeds C_{args.k}: {pc.exceeds}")
    if pc.violations:
        return 2
    return 0 if pc.exceeds else 1


def cmd_oracle(args) -> int:
    if args.tool == "enumerate":
        found = naive_improper(args.k, args.ell, args.p)
        print(f"I({args.k},{args.ell},{args.p}) tuples: {len(found)}")
        if len(found) <= args.limit:
            for tup in found:
                print(" ", " ".join(map(str, tup)))
        return 0
    if args.tool == "decide":
        thr = Fraction(args.threshold) if args.threshold else Fraction(1, len(args.speeds) + 1)
        res = lrc_decide(args.speeds, thr)
        if res.holds:
            print(f"holds: t = {res.witness} keeps every speed at distance "
                  f">= {thr}")
            return 0
        print(f"fails: no time keeps all of {list(res.speeds)} at distance "
              f">= {thr}")
        return 1
    if args.tool == "confirm":
        level = Level(args.k, args.ell, args.p)
        rep = confirm_improper_evidence(args.values, level)
        if rep.confirmed:
            print(f"improper: tuple {list(rep.witness_tuple)} "
                  f"({rep.patterns_checked} pattern(s) checked)")
            return 0
        print(f"no improper tuple on {list(rep.values)} "
              f"({rep.patterns_checked} pattern(s) checked)")
        return 1
    raise AssertionError(args.tool)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lrsieve",
        description="Sieve verification for the lonely runner conjecture.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(sp, prime=True):
        sp.add_argument("--k", type=int, required=True, help="number of runners")
        if prime:
            sp.add_argument("--plan", help='ladder plan, e.g. "1>3>9" or '
                                           '"1>2>10 & 1>5>10" (default: built in)')
            sp.add_argument("--workers", type=int, default=1,
                            help="worker processes (default 1)")
            sp.add_argument("--cap", type=int, default=None,
                            help="abort after this many classified candidates")
            sp.add_argument("--force-generic", action="store_true",
                            help="use the definition-level path (small cases only)")
            sp.add_argument("--quiet", action="store_true",
                            help="suppress progress lines")

    sp = sub.add_parser("check", help="full ladder for one (k, p)")
    common(sp)
    sp.add_argument("--p", type=int, required=True, help="prime modulus")
    sp.add_argument("--out", type=Path, default=None,
                    help="directory to write the receipt into")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("scan", help="full ladder for many primes")
    common(sp)
    sp.add_argument("--primes", help='packaged list name (S8, S9), a file, or '
                                     'comma-separated primes')
    sp.add_argument("--from", dest="lo", type=int, help="first prime candidate")
    sp.add_argument("--to", dest="hi", type=int, help="last prime candidate")
    sp.add_argument("--out", type=Path, default=None,
                    help="directory to write receipts into")
    sp.set_defaults(fn=cmd_scan)

    sp = sub.add_parser("certify", help="assemble receipts into a certificate")
    common(sp)
    sp.add_argument("--primes", required=True,
                    help="packaged list name, file, or comma-separated primes")
    sp.add_argument("--receipts", type=Path, required=True,
                    help="directory holding per-prime receipts")
    sp.add_argument("--assume", type=Path, default=None,
                    help="proven certificate for k-1 (needed for k >= 9)")
    sp.add_argument("--out", type=Path, default=None,
                    help="certificate path (default: receipts dir)")
    sp.add_argument("--run-missing", action="store_true",
                    help="run the ladder for primes without receipts")
    sp.set_defaults(fn=cmd_certify)

    sp = sub.add_parser("verify", help="audit a receipt or certificate")
    sp.add_argument("path", type=Path)
    sp.add_argument("--rerun", action="store_true",
                    help="re-execute ladders and compare all counts")
    sp.add_argument("--receipts", type=Path, default=None,
                    help="audit the per-prime receipts behind a certificate")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("bound", help="print C_k; optionally test a prime list")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--primes", default=None,
                    help="packaged list name, file, or comma-separated primes")
    sp.set_defaults(fn=cmd_bound)

    sp = sub.add_parser("oracle", help="definition-level tools")
    osub = sp.add_subparsers(dest="tool", required=True)
    st = osub.add_parser("enumerate", help="list improper tuples naively")
    st.add_argument("--k", type=int, required=True)
    st.add_argument("--ell", type=int, required=True)
    st.add_argument("--p", type=int, required=True)
    st.add_argument("--limit", type=int, default=50,
                    help="print tuples only if there are at most this many")
    st = osub.add_parser("decide", help="exact loneliness decision")
    st.add_argument("--speeds", type=int, nargs="+", required=True)
    st.add_argument("--threshold", default=None,
                    help="distance threshold as a fraction (default 1/(n+1))")
    st = osub.add_parser("confirm", help="re-confirm an improper support")
    st.add_argument("--k", type=int, required=True)
    st.add_argument("--ell", type=int, required=True)
    st.add_argument("--p", type=int, required=True)
    st.add_argument("--values", type=int, nargs="+", required=True)
    sp.set_defaults(fn=cmd_oracle)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
