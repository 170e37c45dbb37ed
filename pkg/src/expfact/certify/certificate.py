"""Factorization certificates: everything is recomputed from the stored factors."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..algebra import (
    DISK,
    MatrixOverAlgebra,
    holomorphy_residual,
    make_backend,
    matrix_from_json,
    matrix_to_json,
)
from ..errors import Ambiguous, ConfigurationError, StructuralError, UnsupportedBackend
from ..matfunc import mat_exp
from ..spectra import (
    EpsNeighborhood,
    hausdorff,
    roots_of_unity,
    spectrum,
    zero_in_unbounded_component,
)

SCHEMA = "expfact-cert-1"
EQUALS_SN_TOL = 1e-8
CLAIMS = ("equals_Sn", "within_Neps", "in_SigmaN")


@dataclass
class SpectralClaim:
    factor: int
    claim: str
    verified: bool
    margin: float
    eps: float | None = None

    def to_json(self):
        out = {"factor": self.factor, "claim": self.claim, "verified": self.verified, "margin": self.margin}
        if self.eps is not None:
            out["eps"] = self.eps
        return out


@dataclass
class FactorizationCertificate:
    """A = exp(B_1) ... exp(B_k), with the checks that were run on it.

    The residual is the max over samples of the spectral norm of
    ``prod exp(B_i) - A``. ``continuity_jump`` is filled on path backends and
    ``holomorphy_residual`` on DiskGrid; both are ``None`` elsewhere.
    """

    factors: list
    reconstruction_residual: float
    factor_norms: list
    spectral_claims: list
    tol: float
    continuity_jump: float | None = None
    input_continuity: float | None = None
    holomorphy_residual: float | None = None
    trace: object = None
    details: dict = field(default_factory=dict)

    @property
    def factor_count(self) -> int:
        return len(self.factors)

    @property
    def residual_ok(self) -> bool:
        return bool(self.reconstruction_residual <= self.tol)

    @property
    def verified(self) -> bool:
        return self.residual_ok and all(c.verified for c in self.spectral_claims)

    def claim(self, kind, factor=None):
        for c in self.spectral_claims:
            if c.claim == kind and (factor is None or c.factor == factor):
                return c
        raise KeyError(kind)

    def claim_specs(self):
        return [(c.factor, c.claim, c.eps) for c in self.spectral_claims]

    def to_json(self, A: MatrixOverAlgebra, trace_matrices: bool = False) -> dict:
        doc = {
            "schema": SCHEMA,
            "backend": A.space.descriptor(),
            "input": matrix_to_json(A),
            "factors": [matrix_to_json(B) for B in self.factors],
            "residual": float(self.reconstruction_residual),
            "tol": float(self.tol),
            "verified": self.verified,
            "claims": [c.to_json() for c in self.spectral_claims],
            "norms": [float(x) for x in self.factor_norms],
            "continuity": self.continuity_jump,
            "input_continuity": self.input_continuity,
            "holomorphy": self.holomorphy_residual,
            "details": self.details,
        }
        if self.trace is not None:
            doc["trace"] = self.trace.to_json(trace_matrices) if hasattr(self.trace, "to_json") else self.trace
        return doc


def continuity_report(M: MatrixOverAlgebra) -> float:
    """Largest change of any entry between adjacent samples of a path backend."""
    space = M.space
    if not space.adjacency:
        raise UnsupportedBackend(f"continuity report needs a path backend, got {space!r}")
    data = M.data
    steps = np.abs(np.diff(data, axis=0))
    jump = float(steps.max()) if steps.size else 0.0
    if space.closed:
        jump = max(jump, float(np.abs(data[0] - data[-1]).max()))
    return jump


def _claim(E, index, kind, eps):
    if kind not in CLAIMS:
        raise ConfigurationError(f"unknown spectral claim {kind!r}")
    n = E.n
    if kind == "equals_Sn":
        d = hausdorff(np.linalg.eigvals(E.data), roots_of_unity(n))
        return SpectralClaim(index, kind, bool(d <= EQUALS_SN_TOL), float(EQUALS_SN_TOL - d))
    if kind == "within_Neps":
        N = EpsNeighborhood(n, float(eps))
        worst = float(N.distance(np.linalg.eigvals(E.data)).max())
        return SpectralClaim(index, kind, bool(worst <= N.eps), float(N.eps - worst), float(eps))
    S = spectrum(E)
    margin = float(np.abs(S.points).min())
    try:
        ok = zero_in_unbounded_component(S)
    except Ambiguous:
        ok = False
    return SpectralClaim(index, kind, bool(ok), margin)


def verify_factorization(A: MatrixOverAlgebra, factors, tol: float = 1e-8, claims=(), trace=None, details=None):
    """Recompute residual, spectral claims, continuity and holomorphy for ``factors``.

    ``claims`` lists ``(factor index, kind, eps)`` with kind one of
    ``equals_Sn``, ``within_Neps``, ``in_SigmaN``; ``eps`` is only read for
    ``within_Neps``.
    """
    factors = list(factors)
    if not factors:
        raise StructuralError("at least one factor is required")
    for B in factors:
        if B.space != A.space or B.n != A.n:
            raise StructuralError(f"factor {B!r} does not match input {A!r}")
    exps = [mat_exp(B) for B in factors]
    prod = exps[0].data
    for E in exps[1:]:
        prod = prod @ E.data
    residual = float(np.linalg.norm(prod - A.data, 2, axis=(1, 2)).max())
    norms = [float(np.linalg.norm(B.data, 2, axis=(1, 2)).max()) for B in factors]
    checked = [_claim(exps[i], i, kind, eps) for i, kind, eps in claims]
    cont = cont_in = holo = None
    if A.space.adjacency:
        cont = max(continuity_report(B) for B in factors)
        cont_in = continuity_report(A)
    if A.space.kind == DISK:
        holo = max(holomorphy_residual(B) for B in factors)
    return FactorizationCertificate(
        factors=factors,
        reconstruction_residual=residual,
        factor_norms=norms,
        spectral_claims=checked,
        tol=float(tol),
        continuity_jump=cont,
        input_continuity=cont_in,
        holomorphy_residual=holo,
        trace=trace,
        details=dict(details or {}),
    )


def certificate_from_json(doc: dict):
    """Parse a certificate document into ``(A, factors, claims, tol)``."""
    if doc.get("schema") != SCHEMA:
        raise ConfigurationError(f"unsupported certificate schema {doc.get('schema')!r}")
    space = make_backend(doc["backend"])
    A = matrix_from_json(space, doc["input"])
    factors = [matrix_from_json(space, f) for f in doc["factors"]]
    claims = [(c["factor"], c["claim"], c.get("eps")) for c in doc.get("claims", [])]
    return A, factors, claims, float(doc["tol"])


def reverify(doc: dict) -> FactorizationCertificate:
    A, factors, claims, tol = certificate_from_json(doc)
    return verify_factorization(A, factors, tol, claims, details=doc.get("details"))


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)
