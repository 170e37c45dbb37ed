"""Two-exponential factorization of matrices with exponential determinant.

The reduction works one dimension at a time:

1. a constant column swap puts a nonzero entry below the diagonal in the
   first column (``pivot_swap``);
2. a unipotent upper-triangular C shifts the first column so that its top
   entry becomes an exponential (``column_reduce``, by verified search);
3. the first row is cleared, leaving a lower block G (``clear_first_row``);
4. G = exp(L1) exp(L2) recursively;
5. a scalar lambda separates spectra so the two block-triangular factors
   can be conjugated to block-diagonal form (``choose_lambda``,
   ``block_decouple``).

Upper-triangular matrices go to :mod:`expfact.triangular` after splitting
off a scalar n-th root of the determinant. Also here: regrouping of
alternating unitriangular products into unipotent factors, and the single
exponential on finite sample spaces.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from ._phase import phase_increments, unwrap_log
from .algebra import (
    CIRCLE,
    DISK,
    FINITE,
    OUTER_RADIUS,
    ZERO_TOL,
    AlgebraElement,
    MatrixOverAlgebra,
    is_exp1,
    lift_to_enlarged,
    log_exp1,
    matrix_from_json,
    matrix_to_json,
)
from .certify.certificate import verify_factorization
from .errors import (
    AllLowerEntriesZero,
    CommonZero,
    DetNotExp1,
    ExpFactError,
    NoLowerEntry,
    NotAlternating,
    NotExp1,
    NotFinitePoints,
    NotInvertibleAtPoint,
    NotLeftInvertible,
    NotUnitriangular,
    NotUnipotent,
    PreconditionError,
    ScheduleExhausted,
    SearchExhausted,
    SolveFailure,
    TopLeftNotExp1,
)
from .matfunc import choose_branch_angle, log_unipotent, mat_exp, mat_log_branch
from .spectra import Spectrum
from .triangular import two_exp_triangular

logger = logging.getLogger(__name__)

SHIFT_MARGIN = 0.125
# DiskGrid: required distance (estimated) from the zeros of a shifted entry to the boundary
ZERO_GAP = 0.1
# fallback candidates below this fraction of the margins are not used
SCORE_FLOOR = 1e-3
BRANCH_SEARCH_ZEROS = 6
INTERPOLATION_SLACK = 4
RANDOM_CANDIDATES = 200
RANDOM_DEGREE = 2
CONSTANT_LIMIT = 80.0
LAMBDA_DOUBLINGS = 60
CONDITION_LIMIT = 1e12
RESIDUAL_TOL = 1e-6
SINGLE_EXP_TOL = 1e-9
# disks the DiskGrid reduction tries before the unit grid
ENLARGED_RADII = (OUTER_RADIUS, 1.1, 1.05)
ENLARGED_REFINE = 2


# --------------------------------------------------------------------------
# trace
# --------------------------------------------------------------------------


@dataclass
class ReductionTrace:
    """What one level of the reduction did, with the child level for G.

    ``M`` and ``M_inv`` transport factors of the reduced matrix back to the
    input: input = M A2 M^-1.
    """

    n: int
    route: str
    steps: list = field(default_factory=list)
    M: MatrixOverAlgebra | None = None
    M_inv: MatrixOverAlgebra | None = None
    reduced: MatrixOverAlgebra | None = None
    child: "ReductionTrace | None" = None

    def add(self, kind, **operands):
        self.steps.append((kind, operands))

    @property
    def conjugators(self):
        out, node = [], self
        while node is not None:
            if node.M is not None:
                out.append((node.M, node.M_inv))
            node = node.child
        return out

    def replay(self, A: MatrixOverAlgebra) -> MatrixOverAlgebra:
        """Apply this level's conjugation to ``A``; reproduces ``reduced``."""
        if self.M is None:
            return A
        return self.M_inv @ A @ self.M

    def replay_residual(self, A: MatrixOverAlgebra) -> float:
        if self.reduced is None:
            return 0.0
        return float(np.abs(self.replay(A).data - self.reduced.data).max())

    def to_json(self, matrices: bool = False) -> dict:
        out = {
            "n": self.n,
            "route": self.route,
            "steps": [{"kind": k, **_jsonable(ops)} for k, ops in self.steps],
        }
        if matrices and self.M is not None:
            out["M"] = matrix_to_json(self.M)
            out["M_inv"] = matrix_to_json(self.M_inv)
            out["reduced"] = matrix_to_json(self.reduced)
        if self.child is not None:
            out["child"] = self.child.to_json(matrices)
        return out


def replay_trace(A: MatrixOverAlgebra, doc: dict) -> float:
    """Re-run the conjugations stored in a trace document (with matrices) starting from A.

    At each general level, ``M_inv X M`` must reproduce the stored reduced
    matrix and ``M M_inv`` the identity; the next level's input is the
    block G rebuilt from the reduced matrix. Returns the largest deviation.
    """
    worst, X, node = 0.0, A, doc
    while node is not None and "M" in node:
        M = matrix_from_json(X.space, node["M"])
        M_inv = matrix_from_json(X.space, node["M_inv"])
        reduced = matrix_from_json(X.space, node["reduced"])
        scale = max(1.0, reduced.max_abs())
        worst = max(
            worst,
            float(np.abs((M_inv @ X @ M).data - reduced.data).max()) / scale,
            float(np.abs((M @ M_inv).data - np.eye(X.n)).max()),
        )
        X = clear_first_row(reduced).G
        node = node.get("child")
    return worst


def _jsonable(ops):
    out = {}
    for k, v in ops.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        elif isinstance(v, complex):
            v = [v.real, v.imag]
        elif isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


# --------------------------------------------------------------------------
# shift search
# --------------------------------------------------------------------------


def shift_constants():
    """Constant shifts in search order: by modulus, then by argument in [0, 2 pi)."""
    axis = np.linspace(-5.0, 5.0, 41)
    base = (axis[:, None] + 1j * axis[None, :]).ravel()
    cands = np.concatenate([base * s for s in (1, 2, 4, 8, 16)])
    cands = cands[np.abs(cands) <= CONSTANT_LIMIT]
    cands = np.unique(np.round(cands, 12))
    arg = np.mod(np.angle(cands), 2 * np.pi)
    order = np.lexsort((np.round(arg, 12), np.round(np.abs(cands), 12)))
    return cands[order]


def _random_polys(space, count, rng):
    """Values of random polynomials of degree <= 2 with coefficients in the unit disk.

    On the circle conj(z) = 1/z is in the algebra, so Laurent terms down to
    z^-2 are included there.
    """
    low = -RANDOM_DEGREE if space.kind == CIRCLE else 0
    degrees = np.arange(low, RANDOM_DEGREE + 1)
    r = np.sqrt(rng.uniform(size=(count, degrees.size)))
    c = r * np.exp(2j * np.pi * rng.uniform(size=(count, degrees.size)))
    z = space.coords
    powers = z[None, :] ** degrees[:, None]
    return c @ powers


def _relative_clearance(a1, shifted_part, result):
    scale = np.maximum(np.abs(a1).max(), np.abs(shifted_part).max(axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(scale > 0, np.abs(result).min(axis=-1) / scale, 0.0)


def _zero_gap_boundary(f, zeta):
    """min |f| / max |f'| on the boundary circle ``zeta``, per row of ``f``."""
    M = f.shape[1]
    coef = np.fft.fft(f, axis=1)
    coef[:, (M + 1) // 2:] = 0
    deriv = np.fft.ifft(coef * np.arange(M), axis=1) / zeta
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = np.abs(f).min(axis=1) / np.abs(deriv).max(axis=1)
    return np.where(np.isnan(gap), 0.0, gap)


def _zero_gap(values, space):
    """DiskGrid: first-order estimate of how far the zeros of each row stay from the boundary."""
    f = np.atleast_2d(values)[:, space.boundary]
    return _zero_gap_boundary(f, space.coords[space.boundary])


def _cauchy(values, zeta, z, order=0):
    """Cauchy integral (or its first derivative) from boundary samples ``zeta`` at points ``z``.

    Barycentric form: the trapezoid rule divided by the same rule applied
    to 1, differentiated as a quotient for ``order=1``. Exact for
    polynomials of degree below the number of samples.
    """
    d = zeta[None, :] - np.asarray(z)[:, None]
    # a point on a node gives nan, which callers treat as unresolved
    with np.errstate(divide="ignore", invalid="ignore"):
        w = zeta[None, :] / d
        num, den = (values[None, :] * w).mean(axis=1), w.mean(axis=1)
        if order == 0:
            return num / den
        dnum, dden = (values[None, :] * w / d).mean(axis=1), (w / d).mean(axis=1)
        return (dnum * den - num * dden) / den**2


def _zeros_inside(f, zeta, newton_steps: int = 3):
    """Zeros inside the circle ``zeta`` of the holomorphic function with boundary values ``f``.

    Counted by the argument principle, located from the power sums of
    f'/f (Newton identities) and polished by Newton steps. None when the
    boundary data is too coarse to tell.
    """
    M = f.shape[0]
    try:
        m = round(phase_increments(f, closed=True).sum() / (2 * np.pi))
    except ExpFactError:
        return None
    if m <= 0:
        return np.zeros(0, complex)
    coef = np.fft.fft(f) / M
    coef[(M + 1) // 2:] = 0
    # zeta f'(zeta) / f(zeta) on the boundary
    g = np.fft.ifft(coef * np.arange(M)) * M / f
    power = np.array([np.mean(g * zeta**p) for p in range(1, m + 1)])
    e = np.zeros(m + 1, complex)
    e[0] = 1
    for j in range(1, m + 1):
        e[j] = sum((-1) ** (i - 1) * e[j - i] * power[i - 1] for i in range(1, j + 1)) / j
    roots = np.roots(e * (-1.0) ** np.arange(m + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(newton_steps):
            roots = roots - _cauchy(f, zeta, roots) / _cauchy(f, zeta, roots, order=1)
    if not np.all(np.isfinite(roots)) or np.abs(roots).max() >= np.abs(zeta[0]):
        return None
    return roots


def _interpolants(data, nodes, zeta, radius, slack):
    """Boundary values of polynomials g with g(nodes) = data + 2 pi i k, one row per branch choice k.

    g has degree len(nodes) - 1 + slack and the smallest coefficients in
    the variable z / radius.
    """
    m = nodes.shape[0]
    if m == 0:
        return np.zeros((1, zeta.shape[0]), complex)
    V = (nodes[:, None] / radius) ** np.arange(m + slack)[None, :]
    shifts = np.array(list(itertools.product((0, -1, 1), repeat=min(m, BRANCH_SEARCH_ZEROS))))
    shifts = np.pad(shifts, ((0, 0), (0, m - shifts.shape[1])))
    rhs = data[None, :] + 2j * np.pi * shifts
    coef = np.linalg.pinv(V) @ rhs.T
    return ((zeta[:, None] / radius) ** np.arange(m + slack)[None, :] @ coef).T


def _interpolation_shift(a1: AlgebraElement, a2: AlgebraElement, margin: float = SHIFT_MARGIN):
    """Holomorphic b with a1 + b a2 = e^h on DiskGrid, or None.

    h must satisfy e^h = a1 at the zeros z_j of a2 inside the boundary
    circle, and b = (e^h - a1) / a2 is then holomorphic; it is evaluated by
    the Cauchy integral from the boundary. Two forms of h are scored: a
    polynomial interpolating log a1(z_j), and L0 + g where L0 is a
    logarithm of a1 / P (P the monic polynomial of the zeros of a1) and g
    interpolates log P(z_j). Branches of the logarithms at the z_j are
    chosen among three neighbouring ones per zero.
    """
    space = a1.space
    bnd = space.boundary
    zeta = space.coords[bnd]
    radius = float(np.abs(zeta[0]))
    f1, f2 = a1.values[bnd], a2.values[bnd]
    if np.abs(f2).min() <= ZERO_TOL * np.abs(f2).max():
        return None
    z2 = _zeros_inside(f2, zeta)
    if z2 is None:
        return None
    logs = []
    vals = _cauchy(f1, zeta, z2)
    if vals.size == 0 or np.abs(vals).min() > ZERO_TOL:
        for slack in (0, INTERPOLATION_SLACK):
            logs.append(_interpolants(np.log(vals), z2, zeta, radius, slack))
    z1 = _zeros_inside(f1, zeta)
    if z1 is not None:
        P = np.prod(zeta[:, None] - z1[None, :], axis=1)
        at = np.prod(z2[:, None] - z1[None, :], axis=1)
        try:
            L0 = unwrap_log(f1 / P)
        except ExpFactError:
            L0 = None
        if L0 is not None and abs(L0[-1].imag - L0[0].imag) < np.pi and (at.size == 0 or np.abs(at).min() > ZERO_TOL):
            for slack in (0, INTERPOLATION_SLACK):
                logs.append(L0[None, :] + _interpolants(np.log(at), z2, zeta, radius, slack))
    if not logs:
        return None
    h = np.concatenate(logs)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        u = np.exp(h)
        ring_b = (u - f1[None, :]) / f2[None, :]
        rel = np.abs(u).min(axis=1) / np.maximum(np.abs(f1).max(), np.abs(ring_b * f2).max(axis=1))
        score = np.minimum(rel / margin, _zero_gap_boundary(u, zeta) / ZERO_GAP)
    score = np.where(np.isfinite(score), score, -np.inf)
    best = int(np.argmax(score))
    b = np.empty(space.size, complex)
    b[bnd] = ring_b[best]
    b[space.interior] = _cauchy(ring_b[best], zeta, space.coords[space.interior])
    return b if np.all(np.isfinite(b)) else None


def _direct_shift(a1: AlgebraElement, a2: AlgebraElement, tol: float):
    """b = (1 - a1) / a2 on path backends where a2 has no zeros, so a1 + b a2 = 1."""
    if a1.space.kind == DISK or np.abs(a2.values).min() <= tol:
        return None
    return (1.0 - a1.values) / a2.values


def shift_search(a1: AlgebraElement, a2: AlgebraElement, tol: float = ZERO_TOL, seed: int = 0,
                 margin: float = SHIFT_MARGIN) -> AlgebraElement:
    """An element b with a1 + b a2 an exponential.

    Candidates are tried in a fixed order (constants by modulus, then seeded
    random polynomials). A candidate is accepted when a1 + b a2 is an
    exponential and its smallest value is at least ``margin`` times the size
    of the terms; on DiskGrid its zeros must also stay about ``ZERO_GAP``
    away from the boundary circle. If no candidate meets both, a
    constructed shift (interpolation on the disk, division on paths) is
    tried, then the best exponential candidate above ``SCORE_FLOOR``, and
    last the constructed shift whatever its score.
    """
    space = a1.space
    if np.abs(a2.values).max() <= tol:
        raise PreconditionError("shift direction a2 vanishes identically")
    common = np.maximum(np.abs(a1.values), np.abs(a2.values))
    if common.min() <= tol:
        raise CommonZero(f"a1 and a2 vanish together at sample {int(np.argmin(common))}")

    disk = space.kind == DISK

    def accept(b):
        return is_exp1(a1 + AlgebraElement(space, b) * a2)

    def scores(cands):
        part = cands * a2.values[None, :]
        shifted = a1.values[None, :] + part
        score = _relative_clearance(a1.values, part, shifted) / margin
        if disk:
            score = np.minimum(score, _zero_gap(shifted, space) / ZERO_GAP)
        return score

    rng = np.random.default_rng(seed)
    batches = [
        shift_constants()[:, None] * np.ones(space.size),
        _random_polys(space, RANDOM_CANDIDATES, rng),
    ]
    pool = []
    for cands in batches:
        score = scores(cands)
        for k in np.flatnonzero(score >= 1):
            if accept(cands[k]):
                return AlgebraElement(space, cands[k])
        pool += [(score[k], cands[k]) for k in np.flatnonzero((score > 0) & (score < 1))]
    built = _interpolation_shift(a1, a2, margin) if disk else _direct_shift(a1, a2, tol)
    if built is not None and accept(built):
        if scores(built[None, :])[0] >= 1 or not pool:
            logger.info("shift search: using constructed shift")
            return AlgebraElement(space, built)
        pool.append((scores(built[None, :])[0], built))
    pool.sort(key=lambda item: -item[0])
    for best_score, c in pool:
        if best_score < SCORE_FLOOR:
            break
        if accept(c):
            logger.info("shift search: no candidate reached the margins, using relative score %.3g", best_score)
            return AlgebraElement(space, c)
    if built is not None and accept(built):
        # valid but badly conditioned; later steps divide by a1 + b a2
        logger.warning("shift search: only the constructed shift works, relative score %.3g",
                       scores(built[None, :])[0])
        return AlgebraElement(space, built)
    best_score = pool[0][0] * margin if pool else 0.0
    raise SearchExhausted("no shift makes a1 + b a2 an exponential", max(best_score, 0.0))


def stable_rank_reduce(col, tol: float = ZERO_TOL, seed: int = 0, margin: float = SHIFT_MARGIN):
    """Shifts b_1..b_{n-1} with (a_i + b_i a_n)_{i<n} free of common zeros."""
    n = len(col)
    if n < 3:
        raise PreconditionError("stable rank reduction needs n >= 3")
    space = col[0].space
    vals = np.stack([a.values for a in col])
    if np.abs(vals).max(axis=0).min() <= tol:
        raise NotLeftInvertible("column entries vanish together at some sample")
    head, an = vals[:-1], vals[-1]

    def score(b):
        shifted = head + b * an[None, :]
        scale = max(np.abs(head).max(), np.abs(b * an[None, :]).max())
        return np.abs(shifted).max(axis=0).min() / scale if scale > 0 else 0.0

    def candidates():
        yield np.zeros((n - 1, space.size), complex)
        for c in shift_constants():
            if c == 0:
                continue
            for i in range(n - 1):
                b = np.zeros((n - 1, space.size), complex)
                b[i] = c
                yield b
        rng = np.random.default_rng(seed)
        for _ in range(RANDOM_CANDIDATES):
            yield _random_polys(space, n - 1, rng)

    best, best_score = None, -np.inf
    for b in candidates():
        s = score(b)
        if s >= margin:
            return [AlgebraElement(space, row) for row in b]
        if s > best_score:
            best, best_score = b, s
    if best is not None and best_score * np.abs(vals).max() > tol:
        return [AlgebraElement(space, row) for row in best]
    raise SearchExhausted("no shift leaves the shortened column free of common zeros", max(best_score, 0.0))


def column_reduce(col, tol: float = ZERO_TOL, seed: int = 0) -> MatrixOverAlgebra:
    """Unipotent upper-triangular C with (C col)_1 an exponential."""
    n = len(col)
    if n < 2:
        raise PreconditionError("column reduction needs n >= 2")
    if max(np.abs(a.values).max() for a in col[1:]) <= tol:
        raise AllLowerEntriesZero("entries 2..n of the column vanish identically")
    return _column_reduce(list(col), tol, seed)


def _column_reduce(col, tol, seed):
    n = len(col)
    space = col[0].space
    C = np.broadcast_to(np.eye(n, dtype=complex), (space.size, n, n)).copy()
    if n == 2:
        a1, a2 = col
        if np.abs(a2.values).max() <= tol:
            if is_exp1(a1):
                return MatrixOverAlgebra(space, C)
            raise AllLowerEntriesZero("a2 vanishes and a1 is not an exponential")
        b = shift_search(a1, a2, tol, seed)
        C[:, 0, 1] = b.values
        return MatrixOverAlgebra(space, C)
    bs = stable_rank_reduce(col, tol, seed)
    C[:, :-1, -1] = np.stack([b.values for b in bs], axis=1)
    prefix = [a + b * col[-1] for a, b in zip(col[:-1], bs)]
    inner = _column_reduce(prefix, tol, seed)
    C2 = np.broadcast_to(np.eye(n, dtype=complex), (space.size, n, n)).copy()
    C2[:, :-1, :-1] = inner.data
    return MatrixOverAlgebra(space, C2 @ C)


# --------------------------------------------------------------------------
# reduction steps
# --------------------------------------------------------------------------


def pivot_swap(A: MatrixOverAlgebra, tol: float = ZERO_TOL):
    """Constant transposition S with S^-1 A S having a nonzero entry below a_11.

    Returns ``(S, A', (i, j))`` where ``(i, j)`` is the pivot found in A.
    """
    n = A.n
    mags = np.abs(A.data).max(axis=0)
    for j in range(n - 1):
        for i in range(j + 1, n):
            if mags[i, j] > tol:
                P = np.eye(n)
                if j:
                    P[[0, j]] = P[[j, 0]]
                S = MatrixOverAlgebra.constant(A.space, P)
                return S, S @ A @ S, (i, j)
    raise NoLowerEntry("no nonzero entry below the diagonal")


@dataclass
class ClearedRow:
    a11: AlgebraElement
    H: np.ndarray
    G: MatrixOverAlgebra
    K: np.ndarray

    def product(self) -> np.ndarray:
        """[[a11, 0], [H, G]] @ [[1, K], [0, I]] as raw data."""
        S, m = self.G.data.shape[0], self.G.n
        left = np.zeros((S, m + 1, m + 1), complex)
        left[:, 0, 0] = self.a11.values
        left[:, 1:, :1] = self.H
        left[:, 1:, 1:] = self.G.data
        right = np.broadcast_to(np.eye(m + 1, dtype=complex), left.shape).copy()
        right[:, :1, 1:] = self.K
        return left @ right


def clear_first_row(A2: MatrixOverAlgebra) -> ClearedRow:
    a11 = A2.entry(0, 0)
    if not is_exp1(a11):
        raise TopLeftNotExp1("top-left entry is not an exponential")
    K = A2.data[:, :1, 1:] / a11.values[:, None, None]
    H = A2.data[:, 1:, :1].copy()
    G = A2.data[:, 1:, 1:] - H @ K
    return ClearedRow(a11, H, MatrixOverAlgebra(A2.space, G), K)


def _matching(values, edges):
    """For each edge and each eigenvalue at its first end, the nearest eigenvalue at its second end."""
    a, b = values[edges[:, 0]], values[edges[:, 1]]
    return np.abs(a[:, :, None] - b[:, None, :]).argmin(axis=2)


def _segments_clear(d, edges, match, rho) -> bool:
    """Every value of ``d`` and every segment between matched values on an edge stays farther than rho from 0."""
    if not (np.abs(d) > rho).all():
        return False
    if edges.shape[0] == 0:
        return True
    a = d[edges[:, 0]]
    b = np.take_along_axis(d[edges[:, 1]], match, axis=1)
    step = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.clip(-(a * step.conj()).real / np.abs(step) ** 2, 0.0, 1.0)
    t = np.where(np.isfinite(t), t, 0.0)
    return bool((np.abs(a + t * step) > rho).all())


def choose_lambda(a11: AlgebraElement, G1: MatrixOverAlgebra, G2: MatrixOverAlgebra, rho: float = 1e-3) -> float:
    """First lambda = 2^k lambda_0 separating sigma(lambda G1) from a11 and 1 from sigma(G2 / lambda).

    Separation is checked at every sample and along the segments joining
    matched eigenvalues at adjacent samples, with clearance ``rho``.
    """
    space = G1.space
    edges = space.edges
    s1, s2 = np.linalg.eigvals(G1.data), np.linalg.eigvals(G2.data)
    a = a11.values[:, None]
    match1, match2 = _matching(s1, edges), _matching(s2, edges)
    low = float(np.abs(s1).min())
    if low == 0:
        raise PreconditionError("G1 is singular")
    lam0 = max(1.0, (1.0 + float(np.abs(a).max())) / low)
    for k in range(LAMBDA_DOUBLINGS + 1):
        lam = lam0 * 2.0**k
        if _segments_clear(lam * s1 - a, edges, match1, rho) and _segments_clear(s2 / lam - 1.0, edges, match2, rho):
            return lam
    raise ScheduleExhausted(f"no lambda <= 2^{LAMBDA_DOUBLINGS} lambda_0 separates the spectra")


def _solve(M, rhs, what):
    cond = np.linalg.cond(M)
    worst = float(np.max(cond))
    if not np.isfinite(worst) or worst > CONDITION_LIMIT:
        raise SolveFailure(f"{what} is ill-conditioned", worst)
    return np.linalg.solve(M, rhs)


def block_decouple(lam: float, a11: AlgebraElement, H, G1: MatrixOverAlgebra, K, G2: MatrixOverAlgebra,
                   L1: MatrixOverAlgebra, L2: MatrixOverAlgebra, log_a11: AlgebraElement | None = None):
    """Logs B1, B2 of the two block-triangular factors of the cleared matrix.

    [[a11, 0], [H, lam G1]] = P^-1 diag(a11, lam G1) P with P = [[1, 0], [X, I]]
    and [[1, K], [0, G2/lam]] = Q^-1 diag(1, G2/lam) Q with Q = [[1, Y], [0, I]],
    where X = (lam G1 - a11 I)^-1 H and Y = K (I - G2/lam)^-1. ``L1``, ``L2``
    are logarithms of G1, G2. Returns ``(B1, B2, X, Y)``.
    """
    space = G1.space
    m = G1.n
    eye = np.eye(m)
    X = _solve(lam * G1.data - a11.values[:, None, None] * eye, H, "lam G1 - a11 I")
    Mt = np.swapaxes(eye - G2.data / lam, 1, 2)
    Y = np.swapaxes(_solve(Mt, np.swapaxes(K, 1, 2), "I - G2/lam"), 1, 2)
    if log_a11 is None:
        log_a11 = log_exp1(a11)
    S = space.size
    ln = np.log(lam)

    D1 = np.zeros((S, m + 1, m + 1), complex)
    D1[:, 0, 0] = log_a11.values
    D1[:, 1:, 1:] = L1.data + ln * eye
    D2 = np.zeros_like(D1)
    D2[:, 1:, 1:] = L2.data - ln * eye

    # P^-1 D1 P and Q^-1 D2 Q, expanded blockwise
    B1 = D1.copy()
    B1[:, 1:, :1] = D1[:, 1:, 1:] @ X - X * D1[:, :1, :1]
    B2 = D2.copy()
    B2[:, :1, 1:] = -(Y @ D2[:, 1:, 1:])
    return MatrixOverAlgebra(space, B1), MatrixOverAlgebra(space, B2), X, Y


# --------------------------------------------------------------------------
# the full reduction
# --------------------------------------------------------------------------


def _is_upper(A, tol):
    return A.strictly_lower_max() <= tol


def _factor(A: MatrixOverAlgebra, eps: float, tol: float, seed: int, trace: ReductionTrace):
    n = A.n
    space = A.space
    if n == 1:
        trace.route = "scalar"
        a = A.entry(0, 0)
        try:
            L = log_exp1(a)
        except NotExp1 as exc:
            raise DetNotExp1(str(exc)) from exc
        B1 = MatrixOverAlgebra(space, L.values[:, None, None])
        return B1, MatrixOverAlgebra.zeros(space, 1)

    det = A.det()
    if not is_exp1(det):
        raise DetNotExp1("det A is not an exponential")

    if _is_upper(A, tol):
        trace.route = "triangular"
        delta = log_exp1(det)
        shift = delta.values / n
        scaled = MatrixOverAlgebra(space, A.data * np.exp(-shift)[:, None, None])
        B1, B2, cert = two_exp_triangular(scaled, eps)
        B1 = B1 + MatrixOverAlgebra(space, shift[:, None, None] * np.eye(n))
        trace.add("triangular", t=cert.details["t"], det_shift=float(np.abs(shift).max()))
        return B1, B2

    trace.route = "general"
    S, A1, pivot = pivot_swap(A, tol)
    trace.add("pivot_swap", pivot=pivot)
    col = [A1.entry(i, 0) for i in range(n)]
    C = column_reduce(col, tol, seed)
    C_inv = MatrixOverAlgebra(space, np.linalg.inv(C.data))
    A2 = C @ A1 @ C_inv
    trace.add("column_reduce", shift_size=float(np.abs(C.data - np.eye(n)).max()))
    trace.M = S @ C_inv
    trace.M_inv = C @ S
    trace.reduced = A2

    cleared = clear_first_row(A2)
    trace.add("clear_row", K_size=float(np.abs(cleared.K).max()), H_size=float(np.abs(cleared.H).max()))
    trace.child = ReductionTrace(n - 1, "pending")
    trace.add("recurse", n=n - 1)
    L1, L2 = _factor(cleared.G, eps, tol, seed, trace.child)
    G1, G2 = mat_exp(L1), mat_exp(L2)
    lam = choose_lambda(cleared.a11, G1, G2)
    B1, B2, X, Y = block_decouple(lam, cleared.a11, cleared.H, G1, cleared.K, G2, L1, L2)
    trace.add("block_split", lam=lam, X_size=float(np.abs(X).max()), Y_size=float(np.abs(Y).max()))
    return trace.M @ B1 @ trace.M_inv, trace.M @ B2 @ trace.M_inv


def _restrict(M, big, space):
    return None if M is None else MatrixOverAlgebra(space, M.data[big.base_index])


def _restrict_trace(trace: ReductionTrace, big, space):
    node = trace
    while node is not None:
        node.M, node.M_inv = _restrict(node.M, big, space), _restrict(node.M_inv, big, space)
        node.reduced = _restrict(node.reduced, big, space)
        node = node.child


def _factor_enlarged(A: MatrixOverAlgebra, eps, zero_tol, seed, radius=OUTER_RADIUS, refine=ENLARGED_REFINE):
    """Run the reduction on the disk of the given radius and restrict the logs back to A's samples."""
    space = A.space
    big = space.enlarged(radius, refine)
    lifted = MatrixOverAlgebra(big, lift_to_enlarged(A.data, space, big))
    trace = ReductionTrace(A.n, "pending")
    B1, B2 = _factor(lifted, eps, zero_tol, seed, trace)
    _restrict_trace(trace, big, space)
    return _restrict(B1, big, space), _restrict(B2, big, space), trace


def factorize_two_exp(A: MatrixOverAlgebra, eps: float = 0.25, tol: float = RESIDUAL_TOL,
                      zero_tol: float = ZERO_TOL, seed: int = 0):
    """Factor A (with det A an exponential) as exp(B1) exp(B2).

    On DiskGrid the reduction first runs on larger disks (radii
    ``ENLARGED_RADII``), with A continued there from its boundary samples,
    so that every intermediate quantity is checked beyond the unit circle;
    if those fail it runs on the unit grid. Returns ``(B1, B2, certificate)``. Failures
    inside the reduction carry the partial :class:`ReductionTrace` as
    ``exc.trace``.
    """
    if not is_exp1(A.det()):
        raise DetNotExp1("det A is not an exponential; A is not a product of exponentials")
    claims = []
    k = np.arange(A.n)
    if A.strictly_lower_max() <= zero_tol and np.abs(A.data[:, k, k].prod(axis=1) - 1).max() <= 1e-9:
        claims = [(0, "equals_Sn", None), (1, "within_Neps", eps)]

    def certify(B1, B2, trace, radius):
        return verify_factorization(
            A, [B1, B2], tol, claims=claims, trace=trace,
            details={"route": trace.route, "eps": eps, "seed": seed, "radius": radius},
        )

    for radius in ENLARGED_RADII if A.space.kind == DISK else ():
        try:
            B1, B2, trace = _factor_enlarged(A, eps, zero_tol, seed, radius)
        except ExpFactError as exc:
            logger.info("run on the disk of radius %g failed (%s)", radius, type(exc).__name__)
            continue
        cert = certify(B1, B2, trace, radius)
        if cert.verified:
            return B1, B2, cert
        logger.info("run on the disk of radius %g did not verify (residual %.3e)", radius,
                    cert.reconstruction_residual)
    trace = ReductionTrace(A.n, "pending")
    try:
        B1, B2 = _factor(A, eps, zero_tol, seed, trace)
    except ExpFactError as exc:
        exc.trace = trace
        raise
    return B1, B2, certify(B1, B2, trace, 1.0)


# --------------------------------------------------------------------------
# unitriangular regrouping
# --------------------------------------------------------------------------


def _unitriangular_kind(F: MatrixOverAlgebra, tol=1e-12):
    n = F.n
    k = np.arange(n)
    scale = max(1.0, F.max_abs())
    if np.abs(F.data[:, k, k] - 1).max() > tol * scale:
        return None
    up, lo = F.strictly_upper_max(), F.strictly_lower_max()
    if lo <= tol * scale:
        return "upper"
    if up <= tol * scale:
        return "lower"
    return None


def regroup_unitriangular(factors):
    """Rewrite A_1 A_2 ... A_t (alternating unitriangular) as floor(t/2) + 1 unipotent factors.

    Factor i is C_i A_{2i} C_i^-1 with C_i = A_1 A_3 ... A_{2i-1}; the last is
    the product of all odd-position factors.
    """
    factors = list(factors)
    t = len(factors)
    if t < 2:
        raise NotAlternating("need at least two factors")
    kinds = []
    for i, F in enumerate(factors):
        kind = _unitriangular_kind(F)
        if kind is None:
            raise NotUnitriangular(f"factor {i} is not unitriangular")
        kinds.append(kind)
    for i in range(1, t):
        if kinds[i] == kinds[i - 1] and factors[i].n > 1:
            raise NotAlternating(f"factors {i - 1} and {i} are both {kinds[i]} triangular")
    out = []
    C = factors[0]
    for i in range(1, t // 2 + 1):
        if i > 1:
            C = C @ factors[2 * i - 2]
        C_inv = MatrixOverAlgebra(C.space, np.linalg.inv(C.data))
        out.append(C @ factors[2 * i - 1] @ C_inv)
    if t % 2 == 1 and t > 1:
        C = C @ factors[t - 1]
    out.append(C)
    return out


# --------------------------------------------------------------------------
# one exponential on finite sample spaces
# --------------------------------------------------------------------------


def single_exp_finite(A: MatrixOverAlgebra, tol: float = 1e-12):
    """B with exp(B) = A on a finite sample space, as a sum of per-point logarithms.

    Point i contributes B_i = log(e_i (A - I) + I), where e_i is the
    indicator of point i, computed with its own branch ray. Each branch
    keeps log 1 = 0, so B_i vanishes off point i and B = sum B_i.
    Returns ``(B, certificate)``.
    """
    space = A.space
    if space.kind != FINITE:
        raise NotFinitePoints(f"single exponential construction needs FinitePoints, got {space!r}")
    n = A.n
    dets = np.abs(np.linalg.det(A.data))
    scale = np.maximum(1.0, np.abs(A.data).max(axis=(1, 2))) ** n
    bad = np.flatnonzero(dets <= tol * scale)
    if bad.size:
        raise NotInvertibleAtPoint(int(bad[0]))
    B = MatrixOverAlgebra.zeros(space, n)
    thetas = []
    for i in range(space.size):
        lam = np.append(np.linalg.eigvals(A.data[i]), 1.0)
        theta = choose_branch_angle(Spectrum.from_points(lam, 0.25 * np.abs(lam).min()))
        if theta <= 0:
            theta += 2 * np.pi
        thetas.append(theta)
        Ai = MatrixOverAlgebra.identity(space, n)
        Ai.data[i] = A.data[i]
        B = B + mat_log_branch(Ai, theta, clearance=0.0)
    cert = verify_factorization(A, [B], SINGLE_EXP_TOL, details={"route": "single_exp", "angles": thetas})
    return B, cert


def check_unipotent_factors(factors):
    """Every factor accepted by the unipotent logarithm (raises otherwise)."""
    for F in factors:
        log_unipotent(F)
    return True
