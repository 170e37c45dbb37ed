import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from expfact.algebra import AlgebraElement, MatrixOverAlgebra, circle_path, disk_grid, finite_points, interval_path
from expfact.certify import (
    build_T_counterexample,
    build_Tn,
    continuity_report,
    dumps,
    reverify,
    run_T_suite,
    verify_factorization,
    verify_T_obstruction,
)
from expfact.errors import ConfigurationError, StructuralError, TooFewSamples, UnsupportedBackend
from expfact.matfunc import mat_exp
from expfact.triangular import two_exp_triangular

import instances


def test_identity_with_zero_factor():
    sp = finite_points(3)
    I = MatrixOverAlgebra.identity(sp, 2)
    cert = verify_factorization(I, [MatrixOverAlgebra.zeros(sp, 2)])
    assert cert.reconstruction_residual == 0 and cert.verified
    assert cert.continuity_jump is None and cert.holomorphy_residual is None


def test_recomputation_matches_pipeline():
    rng = np.random.default_rng(20)
    A = instances.upper_triangular(interval_path(65), 3, rng)
    B1, B2, cert = two_exp_triangular(A)
    again = verify_factorization(A, [B1, B2], cert.tol, cert.claim_specs())
    assert again.reconstruction_residual == cert.reconstruction_residual
    assert [c.verified for c in again.spectral_claims] == [c.verified for c in cert.spectral_claims]
    assert again.continuity_jump == cert.continuity_jump


def test_corrupted_factor_is_caught():
    rng = np.random.default_rng(21)
    A = instances.upper_triangular(interval_path(65), 3, rng)
    B1, B2, cert = two_exp_triangular(A)
    bad = MatrixOverAlgebra(B2.space, B2.data + 0.1)
    broken = verify_factorization(A, [B1, bad], cert.tol, cert.claim_specs())
    assert broken.reconstruction_residual > 1e-3 and not broken.verified


def test_json_round_trip_reverifies():
    rng = np.random.default_rng(22)
    sp = disk_grid(64, 3, 8)
    A = instances.upper_triangular(sp, 2, rng, scale=0.5)
    B1, B2, cert = two_exp_triangular(A)
    doc = json.loads(dumps(cert.to_json(A)))
    again = reverify(doc)
    assert again.verified == cert.verified
    assert again.reconstruction_residual == pytest.approx(cert.reconstruction_residual, abs=1e-15)
    assert again.holomorphy_residual == pytest.approx(cert.holomorphy_residual, abs=1e-15)

    doc["schema"] = "other"
    with pytest.raises(ConfigurationError):
        reverify(doc)


def test_unknown_claim_and_mismatched_factor():
    sp = finite_points(1)
    I = MatrixOverAlgebra.identity(sp, 2)
    with pytest.raises(ConfigurationError):
        verify_factorization(I, [MatrixOverAlgebra.zeros(sp, 2)], claims=[(0, "bogus", None)])
    with pytest.raises(StructuralError):
        verify_factorization(I, [MatrixOverAlgebra.zeros(sp, 3)])
    with pytest.raises(StructuralError):
        verify_factorization(I, [])


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_residual_is_spectral_norm_of_difference(n, seed):
    rng = np.random.default_rng(seed)
    sp = finite_points(5)
    B = instances.bounded_generator(sp, n, rng)
    E = mat_exp(B).data
    A = MatrixOverAlgebra(sp, E + 1e-3 * np.eye(n))
    cert = verify_factorization(A, [B])
    assert cert.reconstruction_residual == pytest.approx(1e-3, rel=1e-9)


# ---------------------------------------------------------------- continuity


def test_continuity_examples():
    assert continuity_report(MatrixOverAlgebra.identity(interval_path(9), 2)) == 0
    sp = interval_path(257)
    g = AlgebraElement(sp, np.exp(2j * np.pi * sp.coords.real))
    jump = continuity_report(MatrixOverAlgebra.diag([g]))
    assert jump == pytest.approx(abs(np.exp(2j * np.pi / 256) - 1)) and jump <= 0.025
    # the principal logarithm of g jumps by 2 pi across the negative axis
    principal = MatrixOverAlgebra.diag([AlgebraElement(sp, np.log(g.values))])
    assert continuity_report(principal) == pytest.approx(2 * np.pi, abs=0.05)
    with pytest.raises(UnsupportedBackend):
        continuity_report(MatrixOverAlgebra.identity(finite_points(2), 2))


def test_circle_continuity_wraps():
    sp = circle_path(16)
    z = MatrixOverAlgebra.diag([AlgebraElement.coordinate(sp)])
    assert continuity_report(z) == pytest.approx(abs(np.exp(2j * np.pi / 16) - 1))


# ---------------------------------------------------------------- the T matrix


def test_T_and_Tn_shapes():
    sp = interval_path(129)
    T = build_T_counterexample(sp)
    assert T.data[0, 0, 0] == 1 and T.data[-1, 0, 0] == 1
    np.testing.assert_array_equal(T.data[:, 0, 1], 1)
    T3 = build_Tn(sp, 3)
    np.testing.assert_array_equal(T3.data[:, 0, 0], 2)
    np.testing.assert_array_equal(T3.data[:, 1:, 1:], T.data)
    np.testing.assert_array_equal(T3.data[:, 0, 1:], 0)
    with pytest.raises(ValueError):
        build_Tn(sp, 2)


def test_T_needs_an_interval():
    with pytest.raises(TooFewSamples):
        build_T_counterexample(interval_path(16))
    with pytest.raises(UnsupportedBackend):
        build_T_counterexample(circle_path(128))


def test_sign_obstruction():
    report = verify_T_obstruction(build_T_counterexample(interval_path(257)))
    assert report.no_continuous_sqrt and report.contradictions == 4
    points = {(c["f1_sign"], c["f4_sign"]): c["point"] for c in report.cases}
    assert points[(1, -1)] == "x=0" and points[(1, 1)] == "x=1"


def test_sign_obstruction_is_absent_without_winding():
    # g = 1 everywhere: f1 = f4 = 1 gives a continuous root
    sp = interval_path(65)
    A = MatrixOverAlgebra.from_entries(sp, [[1.0, 1.0], [0.0, 1.0]])
    assert not verify_T_obstruction(A).no_continuous_sqrt


def test_T_suite_passes():
    rows = run_T_suite(samples=257)
    assert {(r.matrix, r.check) for r in rows} >= {("T", "direct_log"), ("T3", "two_exp residual")}
    assert all(r.passed for r in rows), [r for r in rows if not r.passed]
