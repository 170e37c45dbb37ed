"""Matrix exponential and logarithms over the sampled algebra.

Everything is evaluated sample by sample. The logarithm uses a branch cut
that is fixed for the whole call (a ray from 0, or a polyline when no ray
clears the spectrum), so the result is a single holomorphic function of the
matrix and inherits continuity and holomorphy from the input.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .algebra import MatrixOverAlgebra
from .errors import BranchViolation, NoRayFound, NotInSigmaN, NotUnipotent, NumericalError
from .spectra import Spectrum, escape_path, spectrum, zero_in_unbounded_component

ANGLE_CANDIDATES = 720
# inverse scaling and squaring: take square roots until the diagonal is this close to 1
ISS_RADIUS = 0.25
ISS_NODES = 12
MAX_SQRTS = 64

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(ISS_NODES)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


# --------------------------------------------------------------------------
# exponential
# --------------------------------------------------------------------------


def _balance(data, sweeps=40):
    """Diagonal scalings d (powers of 2) with d^-1 A d roughly row/column balanced."""
    S, n = data.shape[0], data.shape[1]
    d = np.ones((S, n))
    A = data.copy()
    mag = np.abs(A)
    for _ in range(sweeps):
        changed = False
        for i in range(n):
            c = mag[:, :, i].sum(axis=1) - mag[:, i, i]
            r = mag[:, i, :].sum(axis=1) - mag[:, i, i]
            ok = (c > 0) & (r > 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                f = np.where(ok, 2.0 ** np.round(0.5 * np.log2(np.where(ok, r / c, 1.0))), 1.0)
            better = ok & (c * f + r / f < 0.95 * (c + r))
            if not better.any():
                continue
            changed = True
            f = np.where(better, f, 1.0)
            d[:, i] *= f
            A[:, :, i] *= f[:, None]
            A[:, i, :] /= f[:, None]
            mag[:, :, i] *= f[:, None]
            mag[:, i, :] /= f[:, None]
        if not changed:
            break
    return A, d


def mat_exp(B: MatrixOverAlgebra) -> MatrixOverAlgebra:
    """Pointwise matrix exponential (balanced scaling and squaring)."""
    data = B.data
    if not np.isfinite(data).all():
        bad = np.flatnonzero(~np.isfinite(data).all(axis=(1, 2)))
        raise NumericalError("non-finite input to exponential", int(bad[0]))
    balanced, d = _balance(data)
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.expm(balanced)
        E = E * d[:, :, None] / d[:, None, :]
    ok = np.isfinite(E).all(axis=(1, 2))
    if not ok.all():
        raise NumericalError("matrix exponential overflowed", int(np.flatnonzero(~ok)[0]))
    return MatrixOverAlgebra(B.space, E)


# --------------------------------------------------------------------------
# branch selection
# --------------------------------------------------------------------------


def ray_distance(points, theta):
    """Distance from each point to the closed ray {r e^{i theta}, r >= 0}."""
    w = np.asarray(points, dtype=complex) * np.exp(-1j * np.asarray(theta))
    return np.where(w.real > 0, np.abs(w.imag), np.abs(w))


def candidate_angles(count=ANGLE_CANDIDATES):
    return -np.pi + 2 * np.pi * np.arange(1, count + 1) / count


def choose_branch_angle(S: Spectrum) -> float:
    """Direction of a cut ray clearing the spectrum by at least ``rho``.

    Among admissible directions the one farthest in angle from every
    spectrum point wins; ties go to the smallest ``|theta|``, then to the
    positive angle.
    """
    pts = S.points
    thetas = candidate_angles()
    admissible = np.ones(thetas.shape[0], bool)
    clearance = np.full(thetas.shape[0], np.pi)
    for s in range(0, pts.shape[0], 2048):
        chunk = pts[s:s + 2048]
        rot = chunk[None, :] * np.exp(-1j * thetas)[:, None]
        dist = np.where(rot.real > 0, np.abs(rot.imag), np.abs(rot))
        admissible &= dist.min(axis=1) >= S.resolution
        clearance = np.minimum(clearance, np.abs(np.angle(rot)).min(axis=1))
    if not admissible.any():
        raise NoRayFound("every candidate ray passes within rho of the spectrum")
    score = np.where(admissible, clearance, -1.0)
    best = score.max()
    tied = np.flatnonzero(score >= best - 1e-12)
    order = sorted(tied, key=lambda k: (round(abs(thetas[k]), 12), -thetas[k]))
    return float(thetas[order[0]])


# --------------------------------------------------------------------------
# logarithm along a ray
# --------------------------------------------------------------------------


def _schur(data):
    T = np.empty_like(data)
    Z = np.empty_like(data)
    for s in range(data.shape[0]):
        T[s], Z[s] = scipy.linalg.schur(data[s], output="complex")
    return T, Z


def _sqrt_tri(T):
    """Principal square roots of a batch of upper-triangular matrices."""
    n = T.shape[1]
    R = np.zeros_like(T)
    idx = np.arange(n)
    R[:, idx, idx] = np.sqrt(T[:, idx, idx])
    for j in range(1, n):
        for i in range(j - 1, -1, -1):
            acc = T[:, i, j] - np.einsum("sk,sk->s", R[:, i, i + 1:j], R[:, i + 1:j, j])
            R[:, i, j] = acc / (R[:, i, i] + R[:, j, j])
    return R


def _log_tri(T):
    """Principal logarithm of a batch of upper-triangular matrices.

    Inverse scaling and squaring: repeated square roots bring the diagonal
    near 1, then log(I + X) = int_0^1 X (I + tX)^-1 dt by Gauss-Legendre.
    The diagonal and first superdiagonal are then recomputed from exact
    scalar formulas.
    """
    S, n = T.shape[0], T.shape[1]
    idx = np.arange(n)
    lam = T[:, idx, idx]
    if np.any((lam.imag == 0) & (lam.real <= 0)):
        raise BranchViolation("eigenvalue on the principal cut", int(np.flatnonzero(((lam.imag == 0) & (lam.real <= 0)).any(axis=1))[0]))
    R = T.copy()
    roots = np.zeros(S, int)
    active = np.abs(lam - 1).max(axis=1) > ISS_RADIUS
    while active.any():
        if roots.max() >= MAX_SQRTS:
            raise NumericalError("square-root iteration did not converge", int(np.flatnonzero(active)[0]))
        R[active] = _sqrt_tri(R[active])
        roots[active] += 1
        active = np.abs(R[:, idx, idx] - 1).max(axis=1) > ISS_RADIUS
    X = R - np.eye(n)
    L = np.zeros_like(T)
    eye = np.eye(n)
    for t, w in zip(_GL_NODES, _GL_WEIGHTS):
        L += w * np.linalg.solve(eye + t * X, X)
    L *= (2.0 ** roots)[:, None, None]
    L = np.triu(L)
    logs = np.log(lam)
    L[:, idx, idx] = logs
    if n > 1:
        a, b = lam[:, :-1], lam[:, 1:]
        la, lb = logs[:, :-1], logs[:, 1:]
        L[:, idx[:-1], idx[1:]] = T[:, idx[:-1], idx[1:]] * _log_divided_difference(a, b, la, lb)
    return L


def _log_divided_difference(a, b, la, lb):
    """(log b - log a) / (b - a), accurate when a and b are close."""
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (lb - la) / (b - a)
        z = (b - a) / (b + a)
        unwind = np.ceil(((lb - la).imag - np.pi) / (2 * np.pi))
        stable = (2 * np.arctanh(z) + 2j * np.pi * unwind) / (b - a)
    far = (np.abs(a) < 0.5 * np.abs(b)) | (np.abs(b) < 0.5 * np.abs(a))
    out = np.where(far, direct, stable)
    return np.where(a == b, 1.0 / a, out)


def principal_log_data(data):
    """Principal matrix logarithm of a stack of matrices (no eigenvalue on (-inf, 0])."""
    T, Z = _schur(data)
    L = _log_tri(T)
    return Z @ L @ np.conj(np.swapaxes(Z, 1, 2))


def mat_log_branch(A: MatrixOverAlgebra, theta, clearance: float | None = None) -> MatrixOverAlgebra:
    """Logarithm whose scalar branch has its cut along the ray at angle ``theta``.

    Eigenvalue arguments are taken in ``(theta - 2 pi, theta)``. ``theta`` may
    be one angle or one per sample. Eigenvalues closer than ``clearance``
    (default: the spectrum resolution) to the ray raise
    :class:`BranchViolation`.
    """
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (A.space.size,))
    shift = np.pi - theta
    rotated = A.data * np.exp(1j * shift)[:, None, None]
    T, Z = _schur(rotated)
    n = A.n
    lam = T[:, np.arange(n), np.arange(n)] * np.exp(-1j * shift)[:, None]
    if clearance is None:
        clearance = spectrum(A).resolution
    dist = ray_distance(lam, theta[:, None]).min(axis=1)
    bad = np.flatnonzero(dist < clearance)
    if bad.size:
        k = int(bad[np.argmin(dist[bad])])
        raise BranchViolation(
            f"spectrum within {dist[k]:.3e} of the cut at angle {theta[k]:.4f} (clearance {clearance:.3e})", k
        )
    L = Z @ _log_tri(T) @ np.conj(np.swapaxes(Z, 1, 2))
    L -= 1j * shift[:, None, None] * np.eye(n)
    if not np.isfinite(L).all():
        raise NumericalError("non-finite logarithm", int(np.flatnonzero(~np.isfinite(L).all(axis=(1, 2)))[0]))
    return MatrixOverAlgebra(A.space, L)


# --------------------------------------------------------------------------
# polyline cuts and contour quadrature
# --------------------------------------------------------------------------


class PolylineBranch:
    """A scalar logarithm with its cut along a polyline from 0, then a radial tail.

    ``vertices[0] = 0``; past the last vertex ``v`` the cut continues along
    the ray through ``v``. Arguments are measured as the branch cut along
    that ray, corrected by the winding number of the closed polygon (the
    polyline followed by the straight segment back to 0).
    """

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=complex)
        if v.shape[0] < 2 or v[0] != 0:
            raise ValueError("polyline must start at 0 and have at least two vertices")
        self.vertices = v
        self.psi = float(np.angle(v[-1]))

    def winding(self, z):
        z = np.asarray(z, dtype=complex)
        loop = np.append(self.vertices, 0.0)
        a = loop[:-1][:, None] - z.ravel()[None, :]
        b = loop[1:][:, None] - z.ravel()[None, :]
        turns = np.angle(b / a).sum(axis=0) / (2 * np.pi)
        return np.round(turns).reshape(z.shape)

    def arg(self, z):
        z = np.asarray(z, dtype=complex)
        base = self.psi + np.angle(z * np.exp(-1j * self.psi))
        base = np.where(base > self.psi, base - 2 * np.pi, base)
        return base - 2 * np.pi * self.winding(z)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.log(np.abs(z)) + 1j * self.arg(z)

    def distance(self, z):
        """Distance from points to the cut (polyline plus tail)."""
        z = np.asarray(z, dtype=complex).ravel()
        a, b = self.vertices[:-1], self.vertices[1:]
        d = b - a
        t = np.clip(((z[:, None] - a[None, :]) * np.conj(d)[None, :]).real / np.abs(d)[None, :] ** 2, 0, 1)
        seg = np.abs(z[:, None] - (a[None, :] + t * d[None, :])).min(axis=1)
        u = np.exp(1j * self.psi)
        end = self.vertices[-1]
        s = np.maximum(((z - end) * np.conj(u)).real, 0.0)
        tail = np.abs(z - (end + s * u))
        return np.minimum(seg, tail)


class RayBranch:
    """Scalar logarithm with cut along the ray at angle ``theta``."""

    def __init__(self, theta):
        self.theta = float(theta)

    def arg(self, z):
        z = np.asarray(z, dtype=complex)
        a = self.theta + np.angle(z * np.exp(-1j * self.theta))
        return np.where(a >= self.theta, a - 2 * np.pi, a)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.log(np.abs(z)) + 1j * self.arg(z)

    def distance(self, z):
        return ray_distance(np.asarray(z, dtype=complex).ravel(), self.theta)


def _clusters(lam, gap):
    """Group eigenvalues by single linkage at distance ``gap``."""
    n = lam.shape[0]
    label = np.arange(n)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(lam[i] - lam[j]) < gap and label[i] != label[j]:
                label[label == label[j]] = label[i]
    return [np.flatnonzero(label == g) for g in np.unique(label)]


def quadrature_log(A: MatrixOverAlgebra, branch, nodes: int = 128) -> MatrixOverAlgebra:
    """f(A) = (1/2 pi i) sum over circles of f(zeta)(zeta I - A)^-1 dzeta, with f a scalar log branch.

    Each sample gets circles around its eigenvalue clusters, sized to stay
    clear of the cut and of the other clusters. Used as an independent check
    on :func:`mat_log_branch` and as the fallback when no ray clears the
    spectrum.
    """
    n = A.n
    eye = np.eye(n)
    out = np.empty_like(A.data)
    w = np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
    for s in range(A.space.size):
        M = A.data[s]
        lam = np.linalg.eigvals(M)
        cut = branch.distance(lam)
        if cut.min() <= 0:
            raise BranchViolation("eigenvalue on the cut", s)
        groups = _clusters(lam, 0.5 * cut.min())
        acc = np.zeros((n, n), complex)
        for g in groups:
            c = lam[g].mean()
            spread = np.abs(lam[g] - c).max()
            others = np.delete(lam, g)
            room = min(float(branch.distance([c])[0]), np.abs(others - c).min() if others.size else np.inf)
            if room <= spread:
                raise NumericalError("eigenvalue clusters too close for contour quadrature", s)
            r = np.sqrt(max(spread, 1e-3 * room) * room) if spread > 0 else 0.5 * room
            r = min(max(r, spread + 0.25 * (room - spread)), spread + 0.75 * (room - spread))
            zeta = c + r * w
            res = np.linalg.solve(zeta[:, None, None] * eye - M, np.broadcast_to(eye, (nodes, n, n)))
            acc += np.einsum("k,kij->ij", branch(zeta) * (zeta - c) / nodes, res)
        out[s] = acc
    return MatrixOverAlgebra(A.space, out)


# --------------------------------------------------------------------------
# composed logarithms
# --------------------------------------------------------------------------


def direct_log(A: MatrixOverAlgebra, resolution: float | None = None) -> MatrixOverAlgebra:
    """A logarithm of ``A`` when 0 lies in the unbounded component of the spectrum complement.

    Raises :class:`NotInSigmaN` when the spectrum separates 0 from infinity.
    """
    S = spectrum(A, resolution)
    if not zero_in_unbounded_component(S):
        raise NotInSigmaN("0 is enclosed by the spectrum; the branch-cut logarithm does not apply")
    try:
        theta = choose_branch_angle(S)
    except NoRayFound:
        branch = PolylineBranch(escape_path(S))
        return quadrature_log(A, branch)
    return mat_log_branch(A, theta, clearance=S.resolution)


def log_unipotent(A: MatrixOverAlgebra, tol: float = 1e-8) -> MatrixOverAlgebra:
    """Finite logarithm series of a unipotent matrix."""
    n = A.n
    N = A.data - np.eye(n)
    P = np.linalg.matrix_power(N, n)
    scale = np.maximum(1.0, np.linalg.norm(N, 2, axis=(1, 2)) ** n)
    dev = np.abs(P).max(axis=(1, 2)) / scale
    if dev.max() > tol:
        k = int(np.argmax(dev))
        raise NotUnipotent(f"(A - I)^n is {dev[k]:.3e} (relative) at sample {k}")
    out = np.zeros_like(N)
    term = np.broadcast_to(np.eye(n), N.shape).copy()
    for i in range(1, n):
        term = term @ N
        out += ((-1) ** (i + 1) / i) * term
    return MatrixOverAlgebra(A.space, out)
