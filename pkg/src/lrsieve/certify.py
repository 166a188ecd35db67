"""Per-prime verdicts, divisibility certificates, and tamper-evident receipts.

A full ladder run for (k, p) ends in one of three states:

* ``empty``    -- no improper set survives at level k + 1, so p divides the
  speed product of every tight counterexample with k speeds (given the
  conjecture for k - 1 runners);
* ``nonempty`` -- survivors exist.  The receipt embeds one of them together
  with a definition-level tuple confirmation, so the verdict can be audited
  without rerunning the sieve;
* ``aborted``  -- the run hit its work cap before finishing.

A certificate for k collects empty verdicts at distinct primes whose product
exceeds the counterexample bound C_k; a speed product divisible by all of
them would be too large, so no counterexample exists.  The assumption chain
is explicit: each certificate rests on the conjecture for k - 1 runners,
either because k - 1 <= BASE_KNOWN_MAX (settled unconditionally) or through
a prior proven certificate for k - 1.

Receipts and certificates are canonical JSON (sorted keys, no whitespace)
with an embedded SHA-256 digest.  The digest is computed with the hash field
blanked and every wall-time field zeroed, so runs with different worker
counts or machine speeds produce the same digest and differ on disk only in
timing fields.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .engine import Improper, ImproperCollection, NodeReport, classify_proper, run_ladder
from .modmath import Bound, Level, bound_C, is_prime, product_exceeds_bound
from .oracle import confirm_improper_evidence, is_improper_tuple
from .planner import LadderPlan, default_plan, parse_plan, validate_plan

SCHEMA_RECEIPT = "lrsieve/prime-receipt/v1"
SCHEMA_CERTIFICATE = "lrsieve/certificate/v1"

# Largest k for which the conjecture is settled unconditionally; assumption
# chains must ground out at or below this.
BASE_KNOWN_MAX = 7

# How many survivors to try for tuple-level confirmation before giving up.
# The first full-size survivor always confirms, so this only matters for the
# (never yet observed) case of a collection whose every support rides on the
# conservative shared-factor rule.
EVIDENCE_ATTEMPTS = 4096


class ChainError(ValueError):
    """A certificate's assumption chain does not ground out at a settled case."""


@dataclass(frozen=True)
class Evidence:
    """A surviving support, re-confirmed improper at the tuple level."""

    values: tuple[int, ...]
    witness_tuple: tuple[int, ...]
    patterns_checked: int


@dataclass(frozen=True)
class PrimeResult:
    """Outcome of the full ladder for one (k, p), as recorded in receipts."""

    k: int
    p: int
    plan: str
    status: str  # "empty" | "nonempty" | "aborted"
    nodes: tuple[NodeReport, ...]
    evidence: Evidence | None = None
    reason: str | None = None
    warnings: tuple[str, ...] = ()

    @property
    def empty(self) -> bool:
        return self.status == "empty"

    def to_doc(self) -> dict:
        ev = None
        if self.evidence is not None:
            ev = {
                "values": list(self.evidence.values),
                "witness_tuple": list(self.evidence.witness_tuple),
                "patterns_checked": self.evidence.patterns_checked,
            }
        return {
            "schema": SCHEMA_RECEIPT,
            "version": __version__,
            "hash": "",
            "k": self.k,
            "p": self.p,
            "plan": self.plan,
            "status": self.status,
            "nodes": [_node_doc(n) for n in self.nodes],
            "evidence": ev,
            "reason": self.reason,
            "warnings": list(self.warnings),
        }

    @staticmethod
    def from_doc(doc: dict) -> "PrimeResult":
        if doc.get("schema") != SCHEMA_RECEIPT:
            raise ValueError(f"not a prime receipt: schema {doc.get('schema')!r}")
        nodes = tuple(
            NodeReport(int(n["ell"]), tuple(int(x) for x in n["parents"]),
                       int(n["examined"]), int(n["improper"]),
                       Fraction(n["survival"]), int(n["wall_ms"]))
            for n in doc["nodes"])
        ev = doc.get("evidence")
        evidence = None
        if ev:
            evidence = Evidence(tuple(int(x) for x in ev["values"]),
                                tuple(int(x) for x in ev["witness_tuple"]),
                                int(ev["patterns_checked"]))
        return PrimeResult(int(doc["k"]), int(doc["p"]), doc["plan"],
                           doc["status"], nodes, evidence=evidence,
                           reason=doc.get("reason"),
                           warnings=tuple(doc.get("warnings", ())))


def _node_doc(rep: NodeReport) -> dict:
    return {
        "ell": rep.ell,
        "parents": list(rep.parents),
        "examined": rep.examined,
        "improper": rep.improper,
        "survival": f"{rep.survival.numerator}/{rep.survival.denominator}",
        "wall_ms": rep.wall_ms,
    }


def check_prime(k: int, p: int, plan=None, *, workers: int = 1,
                cap: int | None = None, force_generic: bool = False,
                progress=None) -> PrimeResult:
    """Run the full ladder for (k, p) and package the verdict.

    ``empty`` is the per-prime fact a certificate consumes.  A nonempty run
    picks a survivor and re-confirms it from the definition before reporting;
    a work-cap overrun is recorded as ``aborted`` rather than raised, so scans
    over many primes can proceed.
    """
    if not is_prime(p):
        raise ValueError(f"p = {p} is not prime")
    if plan is None:
        lp = default_plan(k, p)
    elif isinstance(plan, LadderPlan):
        lp = plan if plan.p == p else plan.with_prime(p)
    else:
        lp = parse_plan(str(plan), k, p)
    check = validate_plan(lp, for_certificate=True)
    if not check.ok:
        raise ValueError("plan unusable for a divisibility verdict: "
                         + "; ".join(check.violations))
    warnings = list(check.warnings)
    if p <= k + 1:
        warnings.append(
            f"p = {p} <= k + 1: any speed set avoiding multiples of {p} has the "
            f"lonely time t = 1/{p}, so the empty verdict is classical")
    try:
        result = run_ladder(lp, workers=workers, force_generic=force_generic,
                            cap=cap, progress=progress)
    except RuntimeError as err:
        if cap is None:
            raise
        return PrimeResult(k, p, str(lp), "aborted", (), reason=str(err),
                           warnings=tuple(warnings))
    reports = tuple(result.reports)
    if result.empty:
        return PrimeResult(k, p, str(lp), "empty", reports,
                           warnings=tuple(warnings))
    evidence, note = _select_evidence(result.final, Level(k, lp.terminal, p))
    if note is not None:
        warnings.append(note)
    return PrimeResult(k, p, str(lp), "nonempty", reports, evidence=evidence,
                       warnings=tuple(warnings))


def _select_evidence(collection: ImproperCollection, level: Level):
    """Pick a survivor and re-confirm it from the definition.

    Full-size supports are preferred: the support is its own (only)
    multiplicity pattern, so confirmation is a direct recheck.  Smaller
    supports are tried in decreasing size; their shared-factor rule is
    conservative, so a given support may carry no improper tuple at all --
    such survivors are skipped in favour of one that confirms.
    """
    attempts = 0
    for size in sorted(collection.sizes(), reverse=True):
        for row in collection.by_size[size]:
            if attempts >= EVIDENCE_ATTEMPTS:
                return None, (f"no tuple-level confirmation among the first "
                              f"{attempts} survivors")
            attempts += 1
            rep = confirm_improper_evidence((int(x) for x in row), level)
            if rep.confirmed:
                ev = Evidence(rep.values, rep.witness_tuple, rep.patterns_checked)
                return ev, None
    return None, (f"no tuple-level confirmation among all {attempts} survivors")


# --------------------------------------------------------------------------
# receipts
# --------------------------------------------------------------------------

def canonical_bytes(doc: dict) -> bytes:
    """Canonical JSON encoding: sorted keys, no whitespace, ASCII."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=True).encode("ascii")


def _zero_walltimes(obj) -> None:
    if isinstance(obj, dict):
        for key, val in obj.items():
            if key == "wall_ms":
                obj[key] = 0
            else:
                _zero_walltimes(val)
    elif isinstance(obj, list):
        for item in obj:
            _zero_walltimes(item)


def receipt_hash(doc: dict) -> str:
    """SHA-256 of the canonical encoding with hash blanked and timing zeroed."""
    scrub = json.loads(json.dumps(doc))
    scrub["hash"] = ""
    _zero_walltimes(scrub)
    return hashlib.sha256(canonical_bytes(scrub)).hexdigest()


def write_receipt(obj, path) -> str:
    """Serialize a PrimeResult, Certificate, or prepared doc with its digest
    embedded; returns the digest.  File bytes are the canonical encoding."""
    doc = obj.to_doc() if hasattr(obj, "to_doc") else json.loads(json.dumps(obj))
    doc["hash"] = receipt_hash(doc)
    Path(path).write_bytes(canonical_bytes(doc))
    return doc["hash"]


def read_receipt(path) -> dict:
    return json.loads(Path(path).read_bytes())


def receipt_filename(k: int, p: int) -> str:
    return f"receipt-k{k}-p{p}.json"


def certificate_filename(k: int) -> str:
    return f"certificate-k{k}.json"


# --------------------------------------------------------------------------
# certificates
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ReceiptRef:
    """Pointer from a certificate to one per-prime receipt."""

    p: int
    hash: str
    plan: str


@dataclass(frozen=True)
class Certificate:
    """Empty verdicts at distinct primes whose product beats the bound C_k."""

    k: int
    primes: tuple[int, ...]
    receipts: tuple[ReceiptRef, ...]
    product: int
    bound: Bound
    exceeds: bool
    assumes_k: int
    assumes_source: str  # "settled" | "certificate"
    assumes_hash: str | None
    proven: bool

    def to_doc(self) -> dict:
        return {
            "schema": SCHEMA_CERTIFICATE,
            "version": __version__,
            "hash": "",
            "k": self.k,
            "primes": list(self.primes),
            "receipts": [{"p": r.p, "hash": r.hash, "plan": r.plan}
                         for r in self.receipts],
            "product": str(self.product),
            "bound": {
                "numerator": str(self.bound.exact.numerator),
                "denominator": str(self.bound.exact.denominator),
                "digits": self.bound.digits,
                "integral": self.bound.integral,
            },
            "exceeds": self.exceeds,
            "assumes": {"k": self.assumes_k, "source": self.assumes_source,
                        "hash": self.assumes_hash},
            "proven": self.proven,
        }

    @staticmethod
    def from_doc(doc: dict) -> "Certificate":
        if doc.get("schema") != SCHEMA_CERTIFICATE:
            raise ValueError(f"not a certificate: schema {doc.get('schema')!r}")
        b = doc["bound"]
        bound = Bound(int(doc["k"]),
                      Fraction(int(b["numerator"]), int(b["denominator"])),
                      bool(b["integral"]))
        return Certificate(
            k=int(doc["k"]),
            primes=tuple(int(x) for x in doc["primes"]),
            receipts=tuple(ReceiptRef(int(r["p"]), r["hash"], r["plan"])
                           for r in doc["receipts"]),
            product=int(doc["product"]),
            bound=bound,
            exceeds=bool(doc["exceeds"]),
            assumes_k=int(doc["assumes"]["k"]),
            assumes_source=doc["assumes"]["source"],
            assumes_hash=doc["assumes"]["hash"],
            proven=bool(doc["proven"]),
        )


def build_certificate(k: int, results, *, prior: "Certificate | dict | None" = None
                      ) -> Certificate:
    """Assemble per-prime empty verdicts into a divisibility certificate.

    Every result must be an empty full-ladder verdict for this k at a
    distinct prime.  The certificate is proven when the prime product exceeds
    C_k; the assumption chain must ground out, either at the settled cases
    (k - 1 <= BASE_KNOWN_MAX) or at a proven certificate for k - 1 passed as
    ``prior`` -- otherwise ChainError.
    """
    results = sorted(results, key=lambda r: r.p)
    if not results:
        raise ValueError("no per-prime results supplied")
    for res in results:
        if res.k != k:
            raise ValueError(f"result for k={res.k} mixed into a certificate for k={k}")
        if res.status != "empty":
            raise ValueError(f"p={res.p}: status {res.status!r}; certificates "
                             f"take empty verdicts only")
        term = parse_plan(res.plan, k, res.p).terminal
        if term != k + 1:
            raise ValueError(f"p={res.p}: ladder stops at level {term}, need {k + 1}")
    primes = tuple(r.p for r in results)
    pc = product_exceeds_bound(primes, k)
    if pc.violations:
        raise ValueError("; ".join(pc.violations))
    if k - 1 <= BASE_KNOWN_MAX:
        assumes_source, assumes_hash = "settled", None
    else:
        if prior is None:
            raise ChainError(
                f"certificate for k={k} needs the conjecture for k={k - 1}: "
                f"supply a proven certificate for k={k - 1} (settled cases "
                f"stop at k={BASE_KNOWN_MAX})")
        pcert = prior if isinstance(prior, Certificate) else Certificate.from_doc(prior)
        if pcert.k != k - 1:
            raise ChainError(f"prior certificate covers k={pcert.k}, need k={k - 1}")
        if not pcert.proven:
            raise ChainError(f"prior certificate for k={pcert.k} is not proven")
        assumes_source = "certificate"
        assumes_hash = receipt_hash(pcert.to_doc())
    refs = tuple(ReceiptRef(r.p, receipt_hash(r.to_doc()), r.plan) for r in results)
    return Certificate(k, primes, refs, pc.product, pc.bound, pc.exceeds,
                       k - 1, assumes_source, assumes_hash, proven=pc.exceeds)


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------

@dataclass
class VerifyReport:
    ok: bool
    kind: str  # "prime-receipt" | "certificate" | "unknown"
    problems: list[str]
    doc: dict


def verify_receipt(source, *, rerun: bool = False, workers: int = 1,
                   receipts_dir=None) -> VerifyReport:
    """Audit a receipt or certificate (path or already-loaded doc).

    Structural checks cover the digest, the plan, per-node bookkeeping, the
    bound arithmetic, and -- for nonempty receipts -- a from-scratch recheck
    of the recorded survivor.  ``rerun=True`` executes the ladder again and
    compares every count.  For certificates, ``receipts_dir`` additionally
    audits each referenced per-prime receipt file; verifying a cited prior
    certificate is the caller's job (its digest is pinned in the doc).
    """
    doc = source if isinstance(source, dict) else read_receipt(source)
    problems: list[str] = []
    schema = doc.get("schema")
    if schema == SCHEMA_RECEIPT:
        kind = "prime-receipt"
        _verify_prime_doc(doc, problems, rerun=rerun, workers=workers)
    elif schema == SCHEMA_CERTIFICATE:
        kind = "certificate"
        _verify_certificate_doc(doc, problems, receipts_dir=receipts_dir,
                                rerun=rerun, workers=workers)
    else:
        kind = "unknown"
        problems.append(f"unknown schema {schema!r}")
    return VerifyReport(not problems, kind, problems, doc)


def _verify_prime_doc(doc: dict, problems: list[str], *, rerun: bool,
                      workers: int) -> None:
    want = receipt_hash(doc)
    if doc.get("hash") != want:
        problems.append(f"digest mismatch: recorded {doc.get('hash')!r}, "
                        f"recomputed {want}")
    try:
        k, p = int(doc["k"]), int(doc["p"])
    except (KeyError, TypeError, ValueError):
        problems.append("missing or malformed k/p")
        return
    if not is_prime(p):
        problems.append(f"p = {p} is not prime")
    try:
        plan = parse_plan(doc.get("plan", ""), k, p)
    except (TypeError, ValueError) as err:
        problems.append(f"plan does not parse: {err}")
        return
    pcheck = validate_plan(plan, for_certificate=True)
    problems.extend("plan: " + v for v in pcheck.violations)
    status = doc.get("status")
    if status not in ("empty", "nonempty", "aborted"):
        problems.append(f"unknown status {status!r}")
        return
    if status == "aborted":
        if not doc.get("reason"):
            problems.append("aborted receipt lacks a reason")
        return  # an aborted run carries no node table to audit
    nodes = doc.get("nodes") or []
    ells = [n.get("ell") for n in nodes]
    if ells != list(plan.nodes):
        problems.append(f"node levels {ells} do not match plan nodes "
                        f"{list(plan.nodes)}")
        return
    for nd in nodes:
        ell = nd["ell"]
        if tuple(nd.get("parents", ())) != plan.parents(ell):
            problems.append(f"node {ell}: parents {nd.get('parents')} != "
                            f"plan parents {list(plan.parents(ell))}")
        examined, improper = int(nd["examined"]), int(nd["improper"])
        if not 0 <= improper <= examined:
            problems.append(f"node {ell}: improper {improper} outside "
                            f"0..examined {examined}")
            continue
        want_s = Fraction(improper, examined) if examined else Fraction(0)
        if Fraction(nd["survival"]) != want_s:
            problems.append(f"node {ell}: survival {nd['survival']} != {want_s}")
    last = nodes[-1]
    if status == "empty" and int(last["improper"]) != 0:
        problems.append("status empty but the terminal node reports survivors")
    if status == "nonempty":
        if int(last["improper"]) == 0:
            problems.append("status nonempty but the terminal node reports none")
        ev = doc.get("evidence")
        if ev:
            level = Level(k, plan.terminal, p)
            vals = tuple(int(x) for x in ev["values"])
            tup = tuple(int(x) for x in ev["witness_tuple"])
            if tuple(sorted(set(tup))) != vals:
                problems.append("evidence tuple support differs from recorded values")
            if not is_improper_tuple(tup, level):
                problems.append("evidence tuple fails the definition-level recheck")
            if not isinstance(classify_proper(vals, level), Improper):
                problems.append("evidence values are proper at the set level")
        elif not any("confirmation" in w for w in doc.get("warnings", ())):
            problems.append("nonempty receipt lacks evidence and no warning "
                            "explains its absence")
    if rerun and not problems:
        fresh = check_prime(k, p, plan=doc["plan"], workers=workers)
        if fresh.status != status:
            problems.append(f"rerun ended {fresh.status}, receipt says {status}")
        else:
            for nd, rep in zip(nodes, fresh.nodes):
                got = (rep.examined, rep.improper)
                if (int(nd["examined"]), int(nd["improper"])) != got:
                    problems.append(f"rerun node {rep.ell}: counts "
                                    f"{got} differ from the receipt")


def _verify_certificate_doc(doc: dict, problems: list[str], *, receipts_dir,
                            rerun: bool, workers: int) -> None:
    want = receipt_hash(doc)
    if doc.get("hash") != want:
        problems.append(f"digest mismatch: recorded {doc.get('hash')!r}, "
                        f"recomputed {want}")
    try:
        cert = Certificate.from_doc(doc)
    except (KeyError, TypeError, ValueError) as err:
        problems.append(f"malformed certificate: {err}")
        return
    if list(cert.primes) != sorted(set(cert.primes)):
        problems.append("primes are not distinct and sorted")
    for p in cert.primes:
        if not is_prime(p):
            problems.append(f"{p} is not prime")
    if tuple(r.p for r in cert.receipts) != cert.primes:
        problems.append("receipt references do not match the prime list")
    prod = math.prod(cert.primes)
    if prod != cert.product:
        problems.append("recorded product differs from the product of the primes")
    want_bound = bound_C(cert.k)
    if want_bound.exact != cert.bound.exact:
        problems.append("recorded bound differs from the recomputed C_k")
    if cert.exceeds != want_bound.exceeded_by(prod):
        problems.append("recorded product/bound comparison is wrong")
    if cert.assumes_k != cert.k - 1:
        problems.append(f"assumption covers k={cert.assumes_k}, "
                        f"expected k={cert.k - 1}")
    if cert.assumes_source == "settled":
        if cert.assumes_k > BASE_KNOWN_MAX:
            problems.append(f"k={cert.assumes_k} marked settled, but settled "
                            f"cases stop at k={BASE_KNOWN_MAX}")
    elif cert.assumes_source == "certificate":
        if not cert.assumes_hash:
            problems.append("assumption cites a certificate but pins no digest")
    else:
        problems.append(f"unknown assumption source {cert.assumes_source!r}")
    if cert.proven and not cert.exceeds:
        problems.append("marked proven but the product does not exceed the bound")
    if receipts_dir is None:
        return
    for ref in cert.receipts:
        path = Path(receipts_dir) / receipt_filename(cert.k, ref.p)
        if not path.exists():
            problems.append(f"missing receipt file {path.name}")
            continue
        sub = verify_receipt(path, rerun=rerun, workers=workers)
        problems.extend(f"{path.name}: {q}" for q in sub.problems)
        if sub.doc.get("hash") != ref.hash:
            problems.append(f"{path.name}: digest differs from the certificate entry")
        if sub.doc.get("status") != "empty":
            problems.append(f"{path.name}: status {sub.doc.get('status')!r}, "
                            f"certificate needs empty")
        if (sub.doc.get("k"), sub.doc.get("p")) != (cert.k, ref.p):
            problems.append(f"{path.name}: (k, p) does not match the certificate entry")
