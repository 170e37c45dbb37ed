"""The matrix T = [[g, 1], [0, 1]], g = exp(2 pi i x) on [0, 1], and its relatives.

T has no logarithm over continuous functions on [0, 1]: its spectrum traces
the whole unit circle, and a logarithm would give a continuous square root
S with S^2 = T, which the sign analysis in :func:`verify_T_obstruction`
rules out. It is still a product of two exponentials.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..algebra import INTERVAL, AlgebraElement, MatrixOverAlgebra, SampleSpace, interval_path, log_exp1
from ..errors import ExpFactError, NotInSigmaN, TooFewSamples, UnsupportedBackend
from .certificate import continuity_report

MIN_SAMPLES = 64
VANISH_TOL = 1e-12


def _check_space(space: SampleSpace):
    if space.kind != INTERVAL:
        raise UnsupportedBackend(f"the T counterexample lives on IntervalPath, got {space!r}")
    if space.count < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples to resolve the winding, got {space.count}")


def build_T_counterexample(space: SampleSpace) -> MatrixOverAlgebra:
    _check_space(space)
    x = space.coords.real
    g = np.exp(2j * np.pi * x)
    g[-1] = 1.0
    return MatrixOverAlgebra.from_entries(space, [[AlgebraElement(space, g), 1.0], [0.0, 1.0]])


def build_Tn(space: SampleSpace, n: int) -> MatrixOverAlgebra:
    """diag(M I_{n-2}, T) with M = 1 + max |g| = 2."""
    if n < 3:
        raise ValueError(f"T_n needs n >= 3, got {n}")
    T = build_T_counterexample(space)
    M = 1.0 + float(np.abs(T.data[:, 0, 0]).max())
    data = np.zeros((space.size, n, n), complex)
    data[:, np.arange(n - 2), np.arange(n - 2)] = M
    data[:, n - 2:, n - 2:] = T.data
    return MatrixOverAlgebra(space, data)


@dataclass
class ObstructionReport:
    """One row per sign choice (f1 = s1 e^{f/2}, f4 = s4): where f1 + f4 vanishes."""

    cases: list = field(default_factory=list)

    @property
    def contradictions(self) -> int:
        return sum(1 for c in self.cases if c["vanishing"] <= VANISH_TOL)

    @property
    def max_vanishing(self) -> float:
        return max(c["vanishing"] for c in self.cases)

    @property
    def no_continuous_sqrt(self) -> bool:
        return len(self.cases) == 4 and self.contradictions == 4

    def to_json(self):
        return {
            "cases": self.cases,
            "contradictions": self.contradictions,
            "no_continuous_sqrt": self.no_continuous_sqrt,
        }


def verify_T_obstruction(T: MatrixOverAlgebra) -> ObstructionReport:
    """Check the four continuous sign choices for a square root of T.

    A square root S = [[f1, f2], [f3, f4]] of T would need f1^2 = g, f4^2 = 1
    and (f1 + f4) f2 = 1. With f = log g continuous, f1 = +-e^{f/2} and
    f4 = +-1. Opposite signs make f1 + f4 vanish at x = 0; equal signs make
    it vanish at x = 1, where e^{f/2} = e^{pi i} = -1.
    """
    _check_space(T.space)
    f = log_exp1(T.entry(0, 0)).values
    half = np.exp(f / 2)
    report = ObstructionReport()
    for s1 in (1, -1):
        for s4 in (1, -1):
            total = s1 * half + s4
            at = {"x=0": abs(total[0]), "x=1": abs(total[-1])}
            point = min(at, key=at.get)
            report.cases.append(
                {"f1_sign": s1, "f4_sign": s4, "point": point, "vanishing": float(at[point])}
            )
    return report


@dataclass
class SuiteRow:
    matrix: str
    check: str
    outcome: str
    passed: bool


def run_T_suite(samples: int = 257, eps: float = 0.25, seed: int = 0):
    """Run the negative and positive checks on T and T_3; returns a list of :class:`SuiteRow`."""
    from ..general import factorize_two_exp
    from ..matfunc import direct_log

    space = interval_path(samples)
    rows = []
    T = build_T_counterexample(space)
    report = verify_T_obstruction(T)
    rows.append(SuiteRow("T", "sign obstruction", f"{report.contradictions}/4 (max |f1+f4| {report.max_vanishing:.1e})",
                         report.no_continuous_sqrt))
    for name, A in (("T", T), ("T3", build_Tn(space, 3))):
        try:
            direct_log(A)
            rows.append(SuiteRow(name, "direct_log", "succeeded (unexpected)", False))
        except NotInSigmaN:
            rows.append(SuiteRow(name, "direct_log", "NotInSigmaN", True))
        except ExpFactError as exc:
            rows.append(SuiteRow(name, "direct_log", type(exc).__name__, False))
        try:
            _, _, cert = factorize_two_exp(A, eps, seed=seed)
        except ExpFactError as exc:
            rows.append(SuiteRow(name, "two_exp", type(exc).__name__, False))
            continue
        limit = 10 * continuity_report(A)
        rows.append(SuiteRow(name, "two_exp residual", f"{cert.reconstruction_residual:.2e}",
                             cert.reconstruction_residual <= 1e-7))
        rows.append(SuiteRow(name, "continuity", f"{cert.continuity_jump:.3e} (limit {limit:.3e})",
                             cert.continuity_jump <= limit))
    return rows
