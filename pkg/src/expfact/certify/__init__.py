"""Certificates for factorizations, and the negative suite for the T counterexample."""

from .certificate import (
    SCHEMA,
    FactorizationCertificate,
    SpectralClaim,
    certificate_from_json,
    continuity_report,
    dumps,
    reverify,
    verify_factorization,
)
from .counterexamples import (
    ObstructionReport,
    build_T_counterexample,
    build_Tn,
    run_T_suite,
    verify_T_obstruction,
)

__all__ = [
    "SCHEMA",
    "FactorizationCertificate",
    "SpectralClaim",
    "certificate_from_json",
    "continuity_report",
    "dumps",
    "reverify",
    "verify_factorization",
    "ObstructionReport",
    "build_T_counterexample",
    "build_Tn",
    "run_T_suite",
    "verify_T_obstruction",
]
