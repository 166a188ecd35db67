"""Receipts, tamper detection, certificates, and the assumption chain."""
import json
from fractions import Fraction

import pytest

from lrsieve.certify import (
    BASE_KNOWN_MAX,
    Certificate,
    ChainError,
    PrimeResult,
    build_certificate,
    canonical_bytes,
    check_prime,
    receipt_filename,
    receipt_hash,
    verify_receipt,
    write_receipt,
)
from lrsieve.engine import NodeReport
from lrsieve.modmath import load_primes
from lrsieve.planner import parse_plan

K3_EMPTY_PRIMES = (7, 11, 13, 17)   # product 17017 > C_3 = 1728


@pytest.fixture(scope="module")
def k3_results():
    return {p: check_prime(3, p) for p in K3_EMPTY_PRIMES + (5,)}


def stub_empty_result(k: int, p: int, plan_text: str,
                      examined: int = 1000) -> PrimeResult:
    """A fabricated empty verdict with self-consistent bookkeeping, for
    exercising certificate plumbing without hours of sieving."""
    plan = parse_plan(plan_text, k, p)
    nodes = []
    for node in plan.nodes:
        improper = 0 if node == plan.terminal else examined // 2
        nodes.append(NodeReport(node, plan.parents(node), examined, improper,
                                Fraction(improper, examined), 0))
    return PrimeResult(k, p, plan_text, "empty", tuple(nodes))


# ---------------------------------------------------------------------------
# per-prime verdicts
# ---------------------------------------------------------------------------

def test_check_prime_rejects_composite_modulus():
    with pytest.raises(ValueError):
        check_prime(3, 9)


def test_check_prime_statuses(k3_results):
    assert k3_results[7].status == "empty"
    assert k3_results[5].status == "nonempty"
    aborted = check_prime(3, 7, cap=10)
    assert aborted.status == "aborted" and aborted.reason


def test_nonempty_evidence_is_tuple_confirmed(k3_results):
    ev = k3_results[5].evidence
    assert ev is not None
    assert ev.values == (1, 3, 4)           # canonical-min survivor
    assert ev.witness_tuple == (1, 3, 4)    # full support confirms itself
    assert ev.patterns_checked == 1


def test_small_prime_verdict_carries_classical_note():
    res = check_prime(3, 3)
    assert res.status == "empty"
    assert any("classical" in w for w in res.warnings)


def test_result_round_trips_through_doc(k3_results):
    for res in k3_results.values():
        assert PrimeResult.from_doc(res.to_doc()) == res


# ---------------------------------------------------------------------------
# receipts
# ---------------------------------------------------------------------------

def test_receipt_file_bytes_are_canonical(tmp_path, k3_results):
    path = tmp_path / receipt_filename(3, 7)
    digest = write_receipt(k3_results[7], path)
    raw = path.read_bytes()
    doc = json.loads(raw)
    assert canonical_bytes(doc) == raw
    assert doc["hash"] == digest == receipt_hash(doc)


def test_receipt_hash_ignores_walltime_only(k3_results):
    doc = k3_results[7].to_doc()
    base = receipt_hash(doc)
    timed = json.loads(json.dumps(doc))
    timed["nodes"][0]["wall_ms"] = 987654
    assert receipt_hash(timed) == base
    touched = json.loads(json.dumps(doc))
    touched["nodes"][0]["improper"] += 1
    assert receipt_hash(touched) != base


def test_verify_passes_on_genuine_receipts(tmp_path, k3_results):
    for p in (5, 7):
        path = tmp_path / receipt_filename(3, p)
        write_receipt(k3_results[p], path)
        rep = verify_receipt(path)
        assert rep.ok, rep.problems
        assert rep.kind == "prime-receipt"


def test_verify_rerun_recomputes_counts(tmp_path, k3_results):
    path = tmp_path / receipt_filename(3, 11)
    write_receipt(k3_results[11], path)
    rep = verify_receipt(path, rerun=True)
    assert rep.ok, rep.problems


@pytest.mark.parametrize("corrupt,needle", [
    (lambda d: d.__setitem__("status", "empty"), "terminal node reports"),
    (lambda d: d["nodes"][0].__setitem__("improper", 3), "survival"),
    (lambda d: d["evidence"].__setitem__("witness_tuple", [1, 2, 3]),
     "recheck"),
    (lambda d: d.__setitem__("p", 9), "not prime"),
    (lambda d: d.__setitem__("plan", "1>3"), "plan"),
])
def test_verify_flags_tampering(k3_results, corrupt, needle):
    doc = json.loads(json.dumps(k3_results[5].to_doc()))
    doc["hash"] = receipt_hash(doc)
    corrupt(doc)
    rep = verify_receipt(doc)
    assert not rep.ok
    assert any("digest mismatch" in q for q in rep.problems)
    assert any(needle in q for q in rep.problems), rep.problems


def test_verify_flags_aborted_without_reason():
    doc = PrimeResult(3, 7, "1>2>4", "aborted", (), reason=None).to_doc()
    doc["hash"] = receipt_hash(doc)
    rep = verify_receipt(doc)
    assert not rep.ok and any("reason" in q for q in rep.problems)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def test_certificate_from_real_runs(tmp_path, k3_results):
    results = [k3_results[p] for p in K3_EMPTY_PRIMES]
    cert = build_certificate(3, results)
    assert cert.proven and cert.exceeds
    assert cert.product == 17017 and cert.bound.exact == 1728
    assert cert.assumes_source == "settled" and cert.assumes_k == 2
    for res in results:
        write_receipt(res, tmp_path / receipt_filename(3, res.p))
    path = tmp_path / "certificate-k3.json"
    write_receipt(cert, path)
    rep = verify_receipt(path, receipts_dir=tmp_path)
    assert rep.ok, rep.problems
    assert rep.kind == "certificate"
    assert Certificate.from_doc(rep.doc) == cert


def test_certificate_not_proven_when_product_short(k3_results):
    cert = build_certificate(3, [k3_results[7], k3_results[11]])
    assert not cert.proven and not cert.exceeds
    rep = verify_receipt(cert.to_doc() | {"hash": receipt_hash(cert.to_doc())})
    assert rep.ok, rep.problems


def test_certificate_rejects_bad_inputs(k3_results):
    with pytest.raises(ValueError):
        build_certificate(3, [])
    with pytest.raises(ValueError):
        build_certificate(3, [k3_results[5]])               # nonempty
    with pytest.raises(ValueError):
        build_certificate(4, [k3_results[7]])               # wrong k
    with pytest.raises(ValueError):
        build_certificate(3, [k3_results[7], k3_results[7]])  # duplicate


def test_chain_grounds_at_settled_cases():
    assert BASE_KNOWN_MAX == 7
    s8 = load_primes("S8")
    cert8 = build_certificate(8, [stub_empty_result(8, p, "1>3>9")
                                  for p in s8])
    assert cert8.proven and cert8.assumes_source == "settled"
    assert cert8.assumes_k == 7


def test_chain_error_without_prior():
    s9 = load_primes("S9")
    stubs = [stub_empty_result(9, p, "1>2>10 & 1>5>10") for p in s9]
    with pytest.raises(ChainError):
        build_certificate(9, stubs)


def test_chain_accepts_proven_prior_only():
    s8, s9 = load_primes("S8"), load_primes("S9")
    cert8 = build_certificate(8, [stub_empty_result(8, p, "1>3>9")
                                  for p in s8])
    weak8 = build_certificate(8, [stub_empty_result(8, p, "1>3>9")
                                  for p in s8[:3]])
    stubs9 = [stub_empty_result(9, p, "1>2>10 & 1>5>10") for p in s9]
    with pytest.raises(ChainError):
        build_certificate(9, stubs9, prior=weak8)
    with pytest.raises(ChainError):
        build_certificate(9, stubs9, prior=cert8.to_doc() | {"k": 7})
    cert9 = build_certificate(9, stubs9, prior=cert8)
    assert cert9.proven
    assert cert9.assumes_source == "certificate"
    assert cert9.assumes_hash == receipt_hash(cert8.to_doc())


def test_certificate_doc_round_trip(k3_results):
    cert = build_certificate(3, [k3_results[p] for p in K3_EMPTY_PRIMES])
    assert Certificate.from_doc(cert.to_doc()) == cert
