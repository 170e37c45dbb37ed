"""Two-exponential factorization of triangular matrices with diagonal product 1.

A diagonal D with det D = 1 is a commutator C^-1 R^-1 C R, where R is the
cyclic shift and C = diag(1, d_1, d_1 d_2, ...). Both R and C^-1 R^-1 C
have spectrum S_n (the n-th roots of unity) and R has a constant logarithm.
For a triangular A with diagonal D, the unipotent part is rescaled by
D_n(t) = diag(1, t, ..., t^{n-1}) until R A(t) has spectrum inside N_eps,
where a ray between two roots of unity gives it a logarithm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraElement, MatrixOverAlgebra, SampleSpace, finite_points, invert_elem
from .certify.certificate import verify_factorization
from .errors import (
    DiagonalProductNotOne,
    NonUnipotentResult,
    NotDiagonal,
    NotTriangular,
    PreconditionError,
    ProductNotOne,
    ScheduleExhausted,
)
from .matfunc import mat_log_branch
from .spectra import EpsNeighborhood, in_eps_neighborhood, spectrum

PRODUCT_TOL = 1e-10
TRIANGULAR_PRODUCT_TOL = 1e-9
UNIPOTENT_TOL = 1e-8
RESIDUAL_TOL = 1e-7
T_HALVINGS = 60


def _space(space):
    return finite_points(1) if space is None else space


def cyclic_shift(n: int, space: SampleSpace | None = None) -> MatrixOverAlgebra:
    """The n-cycle permutation matrix: e_i -> e_{i+1}, e_n -> e_1."""
    if n < 2:
        raise PreconditionError(f"cyclic shift needs n >= 2, got {n}")
    R = np.roll(np.eye(n), 1, axis=0)
    return MatrixOverAlgebra.constant(_space(space), R)


def log_cyclic(n: int, space: SampleSpace | None = None) -> MatrixOverAlgebra:
    """Skew-Hermitian logarithm of the cyclic shift with eigen-angles in (-pi, pi]."""
    if n < 2:
        raise PreconditionError(f"cyclic shift needs n >= 2, got {n}")
    k = np.arange(n)
    V = np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
    angle = 2 * np.pi * k / n
    angle = np.where(angle > np.pi, angle - 2 * np.pi, angle)
    L = (V * (1j * angle)) @ V.conj().T
    return MatrixOverAlgebra.constant(_space(space), L)


@dataclass
class CommutatorData:
    """C, R and log R with D = C^-1 R^-1 C R, plus the factors B1 = -C^-1 log(R) C, B2 = log R."""

    D: MatrixOverAlgebra
    C: MatrixOverAlgebra
    C_inv: MatrixOverAlgebra
    Rn: MatrixOverAlgebra
    RnLog: MatrixOverAlgebra

    @property
    def n(self):
        return self.D.n

    @property
    def B1(self):
        return -(self.C_inv @ self.RnLog @ self.C)

    @property
    def B2(self):
        return self.RnLog

    def commutator(self) -> MatrixOverAlgebra:
        R_inv = MatrixOverAlgebra(self.Rn.space, np.swapaxes(self.Rn.data, 1, 2))
        return self.C_inv @ R_inv @ self.C @ self.Rn

    def commutator_inverse(self) -> MatrixOverAlgebra:
        """R^-1 C^-1 R C, the inverse of the diagonal."""
        R_inv = MatrixOverAlgebra(self.Rn.space, np.swapaxes(self.Rn.data, 1, 2))
        return R_inv @ self.C_inv @ self.Rn @ self.C

    def identity_residual(self) -> float:
        return float(np.abs(self.commutator().data - self.D.data).max())


def _diag_product_deviation(M: MatrixOverAlgebra) -> float:
    d = M.data[:, np.arange(M.n), np.arange(M.n)]
    return float(np.abs(d.prod(axis=1) - 1).max())


def commutator_factor_diagonal(D: MatrixOverAlgebra, tol: float = PRODUCT_TOL) -> CommutatorData:
    n = D.n
    if n < 2:
        raise PreconditionError("commutator factorization needs n >= 2")
    off = D.data.copy()
    off[:, np.arange(n), np.arange(n)] = 0
    if np.abs(off).max() > 0:
        raise NotDiagonal(f"off-diagonal entry of size {np.abs(off).max():.3e}")
    diag = D.diagonal()
    for d in diag:
        invert_elem(d)
    dev = _diag_product_deviation(D)
    if dev > tol:
        raise ProductNotOne(dev)
    cvals = np.ones((D.space.size, n), complex)
    for i in range(1, n):
        cvals[:, i] = cvals[:, i - 1] * diag[i - 1].values
    C = MatrixOverAlgebra.diag([AlgebraElement(D.space, cvals[:, i]) for i in range(n)])
    C_inv = MatrixOverAlgebra.diag([AlgebraElement(D.space, 1.0 / cvals[:, i]) for i in range(n)])
    return CommutatorData(D, C, C_inv, cyclic_shift(n, D.space), log_cyclic(n, D.space))


def scale_matrix(t, n: int, space: SampleSpace | None = None) -> MatrixOverAlgebra:
    """D_n(t) = diag(1, t, ..., t^{n-1})."""
    if t == 0:
        raise PreconditionError("scale parameter t must be nonzero")
    return MatrixOverAlgebra.constant(_space(space), np.diag(_powers(t, np.arange(n))))


def _powers(t, k):
    # real t keeps exact powers of two
    if np.isreal(t):
        return np.power(float(np.real(t)), k.astype(float))
    return complex(t) ** k.astype(float)


def _scale_conjugate(A: MatrixOverAlgebra, t) -> MatrixOverAlgebra:
    """D_n(t)^-1 A D_n(t): entry (i, j) times t^(j - i)."""
    k = np.arange(A.n)
    factor = _powers(t, k[None, :] - k[:, None])
    return MatrixOverAlgebra(A.space, A.data * factor)


def residual_unipotent(A: MatrixOverAlgebra, t, cd: CommutatorData, tol: float = UNIPOTENT_TOL) -> MatrixOverAlgebra:
    """A(t) = R^-1 C^-1 R C D_n(t)^-1 A D_n(t), unipotent upper triangular."""
    At = cd.commutator_inverse() @ _scale_conjugate(A, t)
    n = A.n
    k = np.arange(n)
    diag_dev = float(np.abs(At.data[:, k, k] - 1).max())
    low = At.strictly_lower_max()
    if max(diag_dev, low) > tol:
        raise NonUnipotentResult(
            f"A(t) is not unipotent upper triangular (diagonal {diag_dev:.3e}, lower part {low:.3e})"
        )
    return At


def eps_admissible(n: int, eps: float) -> bool:
    return 0 < eps < np.sin(np.pi / n)


def choose_t(A: MatrixOverAlgebra, eps: float, cd: CommutatorData):
    """First t in 1, 1/2, 1/4, ... with spectrum(R A(t)) inside N_eps.

    Returns ``(t, A(t))``.
    """
    n = A.n
    if not eps_admissible(n, eps):
        raise PreconditionError(f"eps must lie in (0, sin(pi/n)) = (0, {np.sin(np.pi / n):.4f}) for n={n}")
    N = EpsNeighborhood(n, eps)
    for k in range(T_HALVINGS + 1):
        t = 2.0 ** -k
        At = residual_unipotent(A, t, cd)
        if in_eps_neighborhood(spectrum(cd.Rn @ At, resolution=1.0), N):
            return t, At
    raise ScheduleExhausted(f"no t >= 2^-{T_HALVINGS} puts the spectrum of R A(t) inside N_{eps}")


def _is_upper(M, tol):
    return M.strictly_lower_max() <= tol


def _is_lower(M, tol):
    return M.strictly_upper_max() <= tol


def two_exp_triangular(A: MatrixOverAlgebra, eps: float = 0.25, tol: float = RESIDUAL_TOL):
    """Factor a triangular A with diagonal product 1 as exp(B1) exp(B2).

    exp(B1) has spectrum exactly S_n and exp(B2) has spectrum in N_eps.
    Lower-triangular input is handled by conjugating with the reversal
    permutation, which maps it to upper-triangular form and keeps both
    spectral claims. Returns ``(B1, B2, certificate)``.
    """
    n = A.n
    if n < 2:
        raise PreconditionError("triangular factorization needs n >= 2")
    scale_tol = 1e-13 * max(1.0, A.max_abs())
    if _is_upper(A, scale_tol):
        flip = False
        U = A
    elif _is_lower(A, scale_tol):
        flip = True
        U = MatrixOverAlgebra(A.space, A.data[:, ::-1, ::-1].copy())
    else:
        raise NotTriangular("matrix is neither upper nor lower triangular")
    dev = _diag_product_deviation(U)
    if dev > TRIANGULAR_PRODUCT_TOL:
        raise DiagonalProductNotOne(dev)
    k = np.arange(n)
    D = MatrixOverAlgebra(U.space, np.zeros_like(U.data))
    D.data[:, k, k] = U.data[:, k, k]
    cd = commutator_factor_diagonal(D, tol=TRIANGULAR_PRODUCT_TOL)
    t, At = choose_t(U, eps, cd)
    L = mat_log_branch(cd.Rn @ At, np.pi / n, clearance=0.5 * (np.sin(np.pi / n) - eps))
    B1 = _scale_conjugate(cd.B1, 1.0 / t)
    B2 = _scale_conjugate(L, 1.0 / t)
    if flip:
        B1 = MatrixOverAlgebra(A.space, B1.data[:, ::-1, ::-1].copy())
        B2 = MatrixOverAlgebra(A.space, B2.data[:, ::-1, ::-1].copy())
    cert = verify_factorization(
        A,
        [B1, B2],
        tol,
        claims=[(0, "equals_Sn", None), (1, "within_Neps", eps)],
        details={"route": "triangular", "t": t, "eps": eps, "lower": flip},
    )
    return B1, B2, cert
