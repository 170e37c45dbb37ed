import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from expfact.algebra import AlgebraElement, MatrixOverAlgebra, finite_points, interval_path
from expfact.certify import build_T_counterexample
from expfact.errors import BranchViolation, NoRayFound, NotInSigmaN, NotUnipotent, NumericalError
from expfact.matfunc import (
    PolylineBranch,
    RayBranch,
    choose_branch_angle,
    direct_log,
    log_unipotent,
    mat_exp,
    mat_log_branch,
    principal_log_data,
    quadrature_log,
)
from expfact.spectra import Spectrum, roots_of_unity
from expfact.triangular import cyclic_shift

import instances

ONE = finite_points(1)


def single(M):
    return MatrixOverAlgebra(ONE, np.asarray(M, complex)[None])


def random_matrix(rng, n, scale=1.0, samples=1):
    return scale * (rng.normal(size=(samples, n, n)) + 1j * rng.normal(size=(samples, n, n)))


# ---------------------------------------------------------------- exponential


def test_exp_of_zero_and_nilpotent():
    np.testing.assert_array_equal(mat_exp(single(np.zeros((3, 3)))).data[0], np.eye(3))
    np.testing.assert_allclose(mat_exp(single([[0, 1], [0, 0]])).data[0], [[1, 1], [0, 1]], atol=1e-15)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_exp_matches_eigendecomposition(n, seed):
    rng = np.random.default_rng(seed)
    V = np.eye(n) + 0.3 * random_matrix(rng, n)[0] / np.sqrt(n)
    lam = rng.uniform(-2, 2, n) + 1j * rng.uniform(-4, 4, n)
    B = V @ np.diag(lam) @ np.linalg.inv(V)
    expected = V @ np.diag(np.exp(lam)) @ np.linalg.inv(V)
    assert np.abs(mat_exp(single(B)).data[0] - expected).max() <= 1e-10 * max(1, np.abs(expected).max())


def test_exp_of_badly_scaled_matrix():
    # D B D^-1 with a wide diagonal scaling; exp commutes with the similarity
    rng = np.random.default_rng(1)
    B = random_matrix(rng, 4)[0]
    D = np.diag(10.0 ** np.arange(0, 16, 4))
    scaled = D @ B @ np.linalg.inv(D)
    expected = D @ scipy.linalg.expm(B) @ np.linalg.inv(D)
    got = mat_exp(single(scaled)).data[0]
    assert (np.abs(got - expected) <= 1e-10 * np.abs(expected) + 1e-12).all()


def test_exp_overflow_reports_sample():
    data = np.zeros((3, 2, 2), complex)
    data[2] = np.diag([1e6, 0])
    with pytest.raises(NumericalError) as err:
        mat_exp(MatrixOverAlgebra(finite_points(3), data))
    assert err.value.index == 2


def test_det_of_exp_is_exp_of_trace():
    rng = np.random.default_rng(2)
    B = MatrixOverAlgebra(finite_points(50), random_matrix(rng, 4, samples=50))
    np.testing.assert_allclose(mat_exp(B).det().values, np.exp(B.trace().values), rtol=1e-12)


# ---------------------------------------------------------------- branch angle


def test_branch_angle_for_positive_points():
    assert choose_branch_angle(Spectrum.from_points([2, 3], 0.1)) == pytest.approx(np.pi)


def test_branch_angle_between_fourth_roots():
    theta = choose_branch_angle(Spectrum.from_points(roots_of_unity(4), 0.1))
    assert theta == pytest.approx(np.pi / 4)


def test_no_ray_through_full_circle():
    circle = np.exp(2j * np.pi * np.arange(256) / 256)
    with pytest.raises(NoRayFound):
        choose_branch_angle(Spectrum.from_points(circle, 0.05))


@given(st.lists(st.complex_numbers(min_magnitude=0.5, max_magnitude=5, allow_nan=False), min_size=1, max_size=8))
def test_branch_angle_clears_points(points):
    S = Spectrum.from_points(points, 0.01)
    try:
        theta = choose_branch_angle(S)
    except NoRayFound:
        return
    assert RayBranch(theta).distance(np.asarray(points)).min() >= 0.01


# ---------------------------------------------------------------- logarithms


def test_log_examples():
    np.testing.assert_array_equal(mat_log_branch(single(np.eye(3)), np.pi).data[0], 0)
    np.testing.assert_allclose(mat_log_branch(single(np.diag([np.e, np.e**2])), np.pi).data[0],
                               np.diag([1, 2]), atol=1e-14)


def test_log_of_cyclic_shift_between_roots():
    R = cyclic_shift(4, ONE)
    L = mat_log_branch(R, np.pi / 4)
    assert np.abs(mat_exp(L).data - R.data).max() <= 1e-10
    # eigenvalue arguments are taken in (pi/4 - 2 pi, pi/4)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(L.data[0]).imag), [-1.5 * np.pi, -np.pi, -0.5 * np.pi, 0],
                               atol=1e-12)


def test_branch_violation():
    with pytest.raises(BranchViolation):
        mat_log_branch(single(np.diag([-1.0, 1.0])), np.pi, clearance=0.1)


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_principal_log_matches_scipy(n, seed):
    rng = np.random.default_rng(seed)
    A = np.eye(n) + 0.5 * random_matrix(rng, n)[0] / np.sqrt(n)
    if np.abs(np.angle(np.linalg.eigvals(A))).max() > 0.9 * np.pi:
        return
    np.testing.assert_allclose(principal_log_data(A[None])[0], scipy.linalg.logm(A), atol=1e-9)


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_branch_log_round_trip_and_arguments(n, seed):
    rng = np.random.default_rng(seed)
    A = single(random_matrix(rng, n)[0])
    S = Spectrum.from_points(np.linalg.eigvals(A.data[0]), 1e-3)
    theta = choose_branch_angle(S)
    L = mat_log_branch(A, theta, clearance=1e-3)
    assert np.abs(mat_exp(L).data - A.data).max() <= 1e-9 * max(1, np.abs(A.data).max())
    args = np.linalg.eigvals(L.data[0]).imag
    assert (args > theta - 2 * np.pi - 1e-9).all() and (args < theta + 1e-9).all()


def test_per_sample_angles():
    sp = finite_points(2)
    A = MatrixOverAlgebra(sp, [np.diag([-1.0, -1.0]), np.diag([1.0, 1.0])])
    L = mat_log_branch(A, [np.pi / 2, np.pi], clearance=0.1)
    np.testing.assert_allclose(L.data[0], -1j * np.pi * np.eye(2), atol=1e-14)
    np.testing.assert_allclose(L.data[1], 0, atol=1e-14)


def test_quadrature_agrees_with_schur_route():
    rng = np.random.default_rng(3)
    sp = finite_points(20)
    A = MatrixOverAlgebra(sp, random_matrix(rng, 3, samples=20) + 4 * np.eye(3))
    via_ray = mat_log_branch(A, np.pi, clearance=1e-3)
    via_contour = quadrature_log(A, RayBranch(np.pi))
    assert np.abs(via_ray.data - via_contour.data).max() <= 1e-8


def test_direct_log_falls_back_to_polyline_cut():
    # eigenvalues spiral around 0, so no straight ray clears them
    sp = interval_path(400)
    t = sp.coords.real
    arc = AlgebraElement(sp, (0.5 + 1.5 * t) * np.exp(2j * np.pi * 1.3 * t))
    A = MatrixOverAlgebra.diag([arc, AlgebraElement.constant(sp, 3.0)])
    with pytest.raises(NoRayFound):
        choose_branch_angle(Spectrum(np.linalg.eigvals(A.data), 0.05))
    L = direct_log(A)
    assert np.abs(mat_exp(L).data - A.data).max() <= 1e-8
    # continuity along the path: the log of the spiralling entry never jumps by 2 pi i
    assert np.abs(np.diff(L.data[:, 0, 0])).max() < 0.1


def test_polyline_branch_is_a_logarithm_off_the_cut():
    branch = PolylineBranch(np.array([0, -1j, -1 - 1j]))
    z = np.array([1.0, 1j, -1 + 0.5j, 2 - 2j])
    np.testing.assert_allclose(np.exp(branch(z)), z)


def test_direct_log_examples():
    sp = finite_points(3)
    np.testing.assert_allclose(direct_log(MatrixOverAlgebra.constant(sp, 2 * np.eye(3))).data,
                               np.broadcast_to(np.log(2) * np.eye(3), (3, 3, 3)), atol=1e-14)
    with pytest.raises(NotInSigmaN):
        direct_log(build_T_counterexample(interval_path(129)))


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_direct_log_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    sp = interval_path(33)
    A = mat_exp(instances.bounded_generator(sp, n, rng, bound=1.0))
    L = direct_log(A)
    assert np.abs(mat_exp(L).data - A.data).max() <= 1e-8


# ---------------------------------------------------------------- unipotent


def test_unipotent_examples():
    np.testing.assert_array_equal(log_unipotent(single(np.eye(3))).data[0], 0)
    np.testing.assert_array_equal(log_unipotent(single([[1, 1], [0, 1]])).data[0], [[0, 1], [0, 0]])
    A = single([[1, 2, 3], [0, 1, 4], [0, 0, 1]])
    assert np.abs(mat_exp(log_unipotent(A)).data - A.data).max() <= 1e-12


def test_non_unipotent_is_rejected():
    with pytest.raises(NotUnipotent):
        log_unipotent(single([[2, 0], [0, 1]]))


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_unipotent_log_matches_scipy(n, seed):
    rng = np.random.default_rng(seed)
    U = instances.random_unipotent(rng, n, scale=0.5)
    N = log_unipotent(single(U)).data[0]
    np.testing.assert_allclose(N, scipy.linalg.logm(U), atol=1e-7 * max(1, np.abs(N).max()))
    # log of a unipotent matrix is nilpotent
    assert np.abs(np.linalg.matrix_power(N, n)).max() <= 1e-8 * max(1, np.abs(N).max()) ** n
