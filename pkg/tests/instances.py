"""Seeded random instances shared by the unit and acceptance tests."""

import numpy as np

from expfact.algebra import FINITE, MatrixOverAlgebra, is_exp1
from expfact.matfunc import mat_exp


def poly_values(space, rng, shape, degree, scale=1.0):
    """Random complex polynomial entries in the sample coordinate, evaluated at every sample."""
    c = rng.normal(size=(degree + 1,) + shape) + 1j * rng.normal(size=(degree + 1,) + shape)
    c *= scale / np.sqrt(2 * (degree + 1))
    powers = space.coords[None, :] ** np.arange(degree + 1)[:, None]
    return np.einsum("ks,k...->s...", powers, c)


def prod_one_diagonal(space, n, rng):
    """Diagonal matrix with pointwise random entries whose product is 1."""
    d = np.exp(rng.uniform(-1, 1, (space.size, n)) + 1j * rng.uniform(-np.pi, np.pi, (space.size, n)))
    d[:, -1] = 1.0 / d[:, :-1].prod(axis=1)
    data = np.zeros((space.size, n, n), complex)
    data[:, np.arange(n), np.arange(n)] = d
    return MatrixOverAlgebra(space, data)


def upper_triangular(space, n, rng, degree=3, scale=1.0):
    """Constant diagonal with product 1, polynomial strictly upper part."""
    d = np.exp(rng.uniform(-1, 1, n) + 1j * rng.uniform(-np.pi, np.pi, n))
    d[-1] = 1.0 / d[:-1].prod()
    data = np.triu(poly_values(space, rng, (n, n), degree, scale), 1)
    data[:, np.arange(n), np.arange(n)] = d
    return MatrixOverAlgebra(space, data)


def bounded_generator(space, n, rng, bound=1.5, degree=2):
    """Degree-2 polynomial matrix (independent samples on FinitePoints) with sup spectral norm ``bound``."""
    if space.kind == FINITE:
        data = rng.normal(size=(space.size, n, n)) + 1j * rng.normal(size=(space.size, n, n))
    else:
        data = poly_values(space, rng, (n, n), degree)
    return MatrixOverAlgebra(space, data * bound / np.linalg.norm(data, 2, axis=(1, 2)).max())


def exp_product(space, n, rng, bound=1.5):
    """A = exp(P) exp(Q) with bounded random P, Q."""
    return mat_exp(bounded_generator(space, n, rng, bound)) @ mat_exp(bounded_generator(space, n, rng, bound))


def unitriangular(space, n, rng, upper, degree=2, scale=0.5):
    M = poly_values(space, rng, (n, n), degree, scale)
    M = np.triu(M, 1) if upper else np.tril(M, -1)
    return MatrixOverAlgebra(space, M + np.eye(n))


def alternating_product(space, n, rng, t, degree=2, scale=0.5, first_upper=True):
    return [unitriangular(space, n, rng, (i % 2 == 0) == first_upper, degree, scale) for i in range(t)]


def holomorphic_family(space, n, rng, kind):
    """Polynomial-entry DiskGrid inputs: triangular, unitriangular products, or a perturbed scalar."""
    if kind == "tri":
        return upper_triangular(space, n, rng)
    if kind == "unitri":
        A = MatrixOverAlgebra.identity(space, n)
        for F in alternating_product(space, n, rng, int(rng.integers(2, 4))):
            A = A @ F
        return A
    while True:
        phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
        A = MatrixOverAlgebra(space, 1.5 * phase * np.eye(n) + poly_values(space, rng, (n, n), 2, 0.5))
        if is_exp1(A.det()):
            return A


def random_normal_rhp(rng, n):
    """U diag(lam) U^H with Re lam > 0; returns the matrix and its principal log."""
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    lam = np.exp(rng.uniform(-2, 2, n)) * np.exp(1j * rng.uniform(-0.49 * np.pi, 0.49 * np.pi, n))
    A = Q @ np.diag(lam) @ Q.conj().T
    L = Q @ np.diag(np.log(lam)) @ Q.conj().T
    return A, L


def random_unipotent(rng, n, scale=1.0):
    """S (I + N) S^-1 with N strictly upper triangular and S well conditioned."""
    N = np.triu(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), 1) * scale
    S = np.eye(n) + 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(n)
    return S @ (np.eye(n) + N) @ np.linalg.inv(S)
