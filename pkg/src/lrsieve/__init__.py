"""Sieve verification for the lonely runner conjecture.

For k runners and a prime p, an empty sieve ladder at level k + 1 shows that
every tight counterexample with k speeds has p dividing the product of the
speeds.  Collecting such primes past the counterexample bound C_k rules the
counterexamples out entirely, modulo the conjecture for k - 1 runners.
"""

__version__ = "1.0.0"

from .modmath import (
    AdmissibleTimes,
    Bound,
    Level,
    ProductCheck,
    ResidueUniverse,
    admissible_times,
    bound_C,
    build_universe,
    gcd_witness,
    is_prime,
    load_primes,
    product_exceeds_bound,
)
from .planner import (
    CostEstimate,
    LadderPlan,
    PlanCheck,
    default_plan,
    estimate_cost,
    parse_plan,
    validate_plan,
)
from .engine import (
    GcdWitness,
    Improper,
    ImproperCollection,
    LadderResult,
    NodeReport,
    SpeedSet,
    TimeWitness,
    classify_proper,
    compute_improper_base,
    compute_improper_within,
    run_ladder,
    shadow,
)
from .oracle import (
    DecideResult,
    EvidenceReport,
    confirm_improper_evidence,
    is_improper_tuple,
    lrc_decide,
    max_loneliness,
    naive_improper,
)
from .certify import (
    BASE_KNOWN_MAX,
    Certificate,
    ChainError,
    Evidence,
    PrimeResult,
    VerifyReport,
    build_certificate,
    check_prime,
    read_receipt,
    verify_receipt,
    write_receipt,
)

__all__ = [
    "AdmissibleTimes", "Bound", "Level", "ProductCheck", "ResidueUniverse",
    "admissible_times", "bound_C", "build_universe", "gcd_witness", "is_prime",
    "load_primes", "product_exceeds_bound",
    "CostEstimate", "LadderPlan", "PlanCheck", "default_plan", "estimate_cost",
    "parse_plan", "validate_plan",
    "GcdWitness", "Improper", "ImproperCollection", "LadderResult",
    "NodeReport", "SpeedSet", "TimeWitness", "classify_proper",
    "compute_improper_base", "compute_improper_within", "run_ladder", "shadow",
    "DecideResult", "EvidenceReport", "confirm_improper_evidence",
    "is_improper_tuple", "lrc_decide", "max_loneliness", "naive_improper",
    "BASE_KNOWN_MAX", "Certificate", "ChainError", "Evidence", "PrimeResult",
    "VerifyReport", "build_certificate", "check_prime", "read_receipt",
    "verify_receipt", "write_receipt",
]
