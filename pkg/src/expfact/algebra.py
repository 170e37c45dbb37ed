"""Sampled commutative function algebras and matrices over them.

An algebra element is stored by its values on a finite sample of the maximal
ideal space (its Gelfand transform, discretized). Four sample layouts are
supported:

``FinitePoints(k)``
    k isolated points; the algebra is C^k.
``IntervalPath(m)``
    m ordered samples of [0, 1].
``CirclePath(m)``
    m ordered samples of the unit circle (a closed path).
``DiskGrid(N, rings, cap)``
    N samples of the unit circle followed by the center and ``rings - 1``
    interior rings of N samples each; elements are meant to be holomorphic
    inside, which :func:`holomorphy_residual` checks against the boundary
    Cauchy integral. An enlarged copy (``outer_radius > 1``) puts the
    boundary on a larger circle and keeps the unit circle as an extra ring;
    the factorization runs there so that zeros and poles of intermediate
    quantities stay away from the unit disk.

All arithmetic is pointwise, so any formula built from algebra operations is
evaluated sample by sample. Matrices keep their entries as one complex array
of shape ``(samples, n, n)``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from functools import cached_property
from numbers import Number

import numpy as np

from ._phase import phase_increments, unwrap_log
from .errors import (
    ConfigurationError,
    NotExp1,
    NotInvertible,
    StructuralError,
    Undersampled,
    UnsupportedBackend,
)

logger = logging.getLogger(__name__)

FINITE = "FinitePoints"
INTERVAL = "IntervalPath"
DISK = "DiskGrid"
CIRCLE = "CirclePath"
KINDS = (FINITE, INTERVAL, DISK, CIRCLE)

INVERT_TOL = 1e-10
ZERO_TOL = 1e-8
# radius of the outer ring used to keep singularities away from the unit circle
OUTER_RADIUS = 1.2


@dataclass(frozen=True)
class SampleSpace:
    """A discretized maximal ideal space.

    ``count`` is the number of points (FinitePoints), path samples
    (IntervalPath, CirclePath) or boundary samples (DiskGrid).
    """

    kind: str
    count: int
    radial_rings: int = 0
    degree_cap: int = 0
    outer_radius: float = 1.0
    refine: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown backend kind {self.kind!r}")
        if self.count < 1:
            raise ConfigurationError(f"{self.kind}: count must be >= 1, got {self.count}")
        if self.kind == INTERVAL and self.count < 2:
            raise ConfigurationError("IntervalPath needs at least 2 samples")
        if self.kind == CIRCLE and self.count < 3:
            raise ConfigurationError("CirclePath needs at least 3 samples")
        if self.kind == DISK:
            if self.count < 8:
                raise ConfigurationError("DiskGrid boundary_count must be >= 8")
            if self.radial_rings < 1:
                raise ConfigurationError("DiskGrid radial_rings must be >= 1")
            if self.degree_cap < 0:
                raise ConfigurationError("DiskGrid degree_cap must be >= 0")
        if self.outer_radius < 1 or self.refine < 1 or (
            self.kind != DISK and (self.outer_radius != 1 or self.refine != 1)
        ):
            raise ConfigurationError("outer_radius >= 1 and refine >= 1 are only used by DiskGrid")

    def __repr__(self):
        if self.kind == DISK:
            extra = f",R={self.outer_radius:g}x{self.refine}" if self.enlarged_flag else ""
            return f"DiskGrid({self.count},{self.radial_rings},{self.degree_cap}{extra})"
        return f"{self.kind}({self.count})"

    @cached_property
    def coords(self) -> np.ndarray:
        """Complex coordinate of every sample, in storage order."""
        k = self.count
        if self.kind == FINITE:
            return np.linspace(0.0, 1.0, k).astype(complex) if k > 1 else np.zeros(1, complex)
        if self.kind == INTERVAL:
            return (np.arange(k) / (k - 1)).astype(complex)
        angles = np.exp(2j * np.pi * np.arange(k) / k)
        if self.kind == CIRCLE:
            return angles
        rings = [self.outer_radius * angles, np.zeros(1, complex)]
        rings += [(j / self.radial_rings) * angles for j in range(1, self.radial_rings)]
        if self.enlarged_flag:
            rings.append(angles)
        return np.concatenate(rings)

    @property
    def enlarged_flag(self) -> bool:
        return self.outer_radius > 1 or self.refine > 1

    def enlarged(self, radius: float = OUTER_RADIUS, refine: int = 1) -> "SampleSpace":
        """DiskGrid with the boundary moved to ``radius`` and every circle sampled ``refine`` times
        as densely; the unit circle becomes the last ring."""
        if self.kind != DISK or self.enlarged_flag:
            raise UnsupportedBackend(f"cannot enlarge {self!r}")
        return SampleSpace(DISK, self.count * refine, self.radial_rings, self.degree_cap, float(radius), refine)

    @cached_property
    def base_index(self) -> np.ndarray:
        """Indices, in this enlarged space, of the samples of the unit-radius grid (in its order)."""
        if not self.enlarged_flag:
            return np.arange(self.size)
        m, f = self.count, self.refine
        every = f * np.arange(m // f)
        parts = [self.size - m + every, np.array([m])]
        parts += [m + 1 + (j - 1) * m + every for j in range(1, self.radial_rings)]
        return np.concatenate(parts)

    @cached_property
    def ring_slices(self) -> list:
        """DiskGrid only: slices of the interior rings, from the outside in."""
        n, r = self.count, self.radial_rings
        inner = [slice(n + 1 + (j - 1) * n, n + 1 + j * n) for j in range(r - 1, 0, -1)]
        if self.enlarged_flag:
            inner.insert(0, slice(self.size - n, self.size))
        return inner

    @property
    def points(self) -> np.ndarray:
        return self.coords

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def adjacency(self) -> bool:
        """True when samples are ordered along a path."""
        return self.kind in (INTERVAL, CIRCLE)

    @property
    def closed(self) -> bool:
        return self.kind == CIRCLE

    @property
    def contractible(self) -> bool:
        return self.kind != CIRCLE

    @property
    def boundary(self) -> slice:
        if self.kind != DISK:
            raise UnsupportedBackend(f"{self!r} has no boundary circle")
        return slice(0, self.count)

    @property
    def interior(self) -> slice:
        if self.kind != DISK:
            raise UnsupportedBackend(f"{self!r} has no interior samples")
        return slice(self.count, self.size)

    @cached_property
    def rays(self) -> np.ndarray:
        """DiskGrid only: index paths from each boundary sample inward to the center."""
        if self.kind != DISK:
            raise UnsupportedBackend(f"{self!r} has no radial structure")
        n = self.count
        cols = [np.arange(n)] + [np.arange(s.start, s.stop) for s in self.ring_slices]
        cols.append(np.full(n, n))
        return np.stack(cols, axis=1)

    @cached_property
    def edges(self) -> np.ndarray:
        """Pairs of adjacent samples, shape (E, 2); used for curve-thickness estimates."""
        k, idx = self.count, np.arange(self.count)
        if self.kind == FINITE:
            return np.zeros((0, 2), dtype=int)
        if self.kind == INTERVAL:
            return np.stack([idx[:-1], idx[1:]], axis=1)
        ring = np.stack([idx, np.roll(idx, -1)], axis=1)
        if self.kind == CIRCLE:
            return ring
        pieces = [ring] + [ring + s.start for s in self.ring_slices]
        return np.concatenate(pieces)

    @cached_property
    def cauchy_weights(self) -> np.ndarray:
        """Weights W with interior values ~= W @ boundary values.

        Trapezoid rule for the Cauchy integral, divided by the same rule
        applied to the constant 1 (barycentric form); exact for
        polynomials of degree below the boundary count.
        """
        zeta = self.coords[self.boundary]
        z = self.coords[self.interior]
        W = zeta[None, :] / (zeta[None, :] - z[:, None])
        return W / W.sum(axis=1, keepdims=True)

    def descriptor(self) -> dict:
        if self.kind == FINITE:
            return {"kind": FINITE, "count": self.count}
        if self.kind == DISK:
            return {
                "kind": DISK,
                "boundary_count": self.count,
                "radial_rings": self.radial_rings,
                "degree_cap": self.degree_cap,
            }
        return {"kind": self.kind, "samples": self.count}


_SHORTHAND = re.compile(r"^\s*(\w+)\s*\(([^)]*)\)\s*$")


def make_backend(descriptor) -> SampleSpace:
    """Build a :class:`SampleSpace` from a JSON-style descriptor.

    Accepts a dict such as ``{"kind": "DiskGrid", "boundary_count": 128,
    "radial_rings": 4, "degree_cap": 8}`` or the shorthand string
    ``"DiskGrid(128,4,8)"``.
    """
    if isinstance(descriptor, SampleSpace):
        return descriptor
    if isinstance(descriptor, str):
        m = _SHORTHAND.match(descriptor)
        if not m:
            raise ConfigurationError(f"cannot parse backend {descriptor!r}")
        kind = m.group(1)
        try:
            args = [int(a) for a in m.group(2).split(",") if a.strip()]
        except ValueError as exc:
            raise ConfigurationError(f"non-integer count in {descriptor!r}") from exc
        if kind == DISK:
            if len(args) != 3:
                raise ConfigurationError("DiskGrid takes (boundary_count, radial_rings, degree_cap)")
            return SampleSpace(DISK, args[0], args[1], args[2])
        if len(args) != 1:
            raise ConfigurationError(f"{kind} takes one count")
        return SampleSpace(kind, args[0])
    if not isinstance(descriptor, dict):
        raise ConfigurationError(f"backend descriptor must be a dict or string, got {type(descriptor)}")
    kind = descriptor.get("kind")
    try:
        if kind == FINITE:
            return SampleSpace(FINITE, int(descriptor.get("count", descriptor.get("k"))))
        if kind in (INTERVAL, CIRCLE):
            return SampleSpace(kind, int(descriptor.get("samples", descriptor.get("m"))))
        if kind == DISK:
            return SampleSpace(
                DISK,
                int(descriptor["boundary_count"]),
                int(descriptor.get("radial_rings", 1)),
                int(descriptor.get("degree_cap", 8)),
            )
    except (TypeError, KeyError) as exc:
        raise ConfigurationError(f"incomplete backend descriptor {descriptor!r}") from exc
    raise ConfigurationError(f"unknown backend kind {kind!r}")


def finite_points(k):
    return SampleSpace(FINITE, k)


def interval_path(m):
    return SampleSpace(INTERVAL, m)


def circle_path(m):
    return SampleSpace(CIRCLE, m)


def disk_grid(boundary_count, radial_rings, degree_cap):
    return SampleSpace(DISK, boundary_count, radial_rings, degree_cap)


# --------------------------------------------------------------------------
# elements
# --------------------------------------------------------------------------


class AlgebraElement:
    """One algebra element: its values at every sample of ``space``.

    ``poly`` (ascending coefficients in the sample coordinate) is carried only
    on DiskGrid and only while its degree stays within the space's cap; the
    sample values are always authoritative.
    """

    __slots__ = ("space", "values", "poly")

    def __init__(self, space: SampleSpace, values, poly=None):
        values = np.asarray(values, dtype=complex)
        if values.shape != (space.size,):
            raise StructuralError(f"expected {space.size} values for {space!r}, got shape {values.shape}")
        self.space = space
        self.values = values
        if poly is not None and (space.kind != DISK or len(poly) - 1 > space.degree_cap):
            poly = None
        self.poly = None if poly is None else np.asarray(poly, dtype=complex)

    @classmethod
    def constant(cls, space, c):
        return cls(space, np.full(space.size, c, dtype=complex), [c])

    @classmethod
    def coordinate(cls, space):
        return cls(space, space.coords.copy(), [0.0, 1.0])

    @classmethod
    def from_poly(cls, space, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        values = np.polynomial.polynomial.polyval(space.coords, coeffs)
        return cls(space, values, coeffs)

    def __repr__(self):
        return f"AlgebraElement({self.space!r}, max|a|={self.sup_norm():.4g})"

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def is_zero(self, tol=ZERO_TOL) -> bool:
        return self.sup_norm() <= tol

    def _coerce(self, other):
        if isinstance(other, AlgebraElement):
            return other
        if isinstance(other, Number):
            return AlgebraElement.constant(self.space, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else elem_arith("add", self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else elem_arith("sub", self, other)

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else elem_arith("sub", other, self)

    def __mul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else elem_arith("mul", self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return AlgebraElement(self.space, -self.values, None if self.poly is None else -self.poly)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * invert_elem(other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * invert_elem(self)


def elem_arith(kind: str, a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Pointwise ``add``, ``sub`` or ``mul`` of two elements on the same space."""
    if a.space != b.space:
        raise StructuralError(f"elements live on different spaces: {a.space!r} vs {b.space!r}")
    P = np.polynomial.polynomial
    if kind == "add":
        values = a.values + b.values
        poly = None if a.poly is None or b.poly is None else P.polyadd(a.poly, b.poly)
    elif kind == "sub":
        values = a.values - b.values
        poly = None if a.poly is None or b.poly is None else P.polysub(a.poly, b.poly)
    elif kind == "mul":
        values = a.values * b.values
        poly = None if a.poly is None or b.poly is None else P.polymul(a.poly, b.poly)
    else:
        raise ValueError(f"unknown arithmetic kind {kind!r}")
    if poly is not None and len(poly) - 1 > a.space.degree_cap:
        logger.info("dropping polynomial payload of degree %d > cap %d", len(poly) - 1, a.space.degree_cap)
        poly = None
    return AlgebraElement(a.space, values, poly)


def invert_elem(a: AlgebraElement, tol: float = INVERT_TOL) -> AlgebraElement:
    """Pointwise reciprocal; raises :class:`NotInvertible` at the first near-zero sample."""
    mags = np.abs(a.values)
    bad = np.flatnonzero(mags <= tol)
    if bad.size:
        raise NotInvertible(int(bad[0]), float(mags[bad[0]]))
    poly = a.poly if a.poly is not None and len(a.poly) == 1 else None
    return AlgebraElement(a.space, 1.0 / a.values, None if poly is None else 1.0 / poly)


def zero_locus(a: AlgebraElement, tol: float = ZERO_TOL) -> set:
    return set(np.flatnonzero(np.abs(a.values) <= tol).tolist())


def is_exp1(a: AlgebraElement, tol: float = INVERT_TOL) -> bool:
    """Whether ``a`` is an exponential in the algebra.

    On FinitePoints and IntervalPath this is invertibility. On CirclePath
    the winding number around 0 must also vanish. On DiskGrid the boundary
    winding must vanish too: elements are holomorphic there, so by the
    argument principle this rules out zeros that fall between samples.
    """
    if np.abs(a.values).min() <= tol:
        return False
    if a.space.kind in (FINITE, INTERVAL):
        return True
    # on the disk, boundary winding counts interior zeros missed by the samples
    path = a.values[a.space.boundary] if a.space.kind == DISK else a.values
    try:
        turns = phase_increments(path, closed=True).sum() / (2 * np.pi)
    except Undersampled:
        return False
    return round(turns) == 0


def log_exp1(a: AlgebraElement, tol: float = INVERT_TOL) -> AlgebraElement:
    """A continuous logarithm of ``a`` (the witness for ``is_exp1``).

    Path spaces unwrap the phase along the path; DiskGrid unwraps along the
    boundary circle and then inward along each ray to the center, and checks
    that every ring and the center come out consistent.
    """
    space, v = a.space, a.values
    mags = np.abs(v)
    if mags.min() <= tol:
        idx = int(np.argmin(mags))
        raise NotExp1(f"element vanishes (|a| = {mags[idx]:.3e}) at sample {idx}")
    if space.kind == FINITE:
        return AlgebraElement(space, np.log(v))
    if space.kind == INTERVAL:
        return AlgebraElement(space, _snap(v, unwrap_log(v)))
    if space.kind == CIRCLE:
        turns = phase_increments(v, closed=True).sum() / (2 * np.pi)
        if round(turns) != 0:
            raise NotExp1(f"element winds {round(turns)} times around 0 on the circle")
        return AlgebraElement(space, _snap(v, unwrap_log(v)))

    out = np.empty_like(v)
    bnd = unwrap_log(np.append(v[space.boundary], v[0]))
    if abs(bnd[-1].imag - bnd[0].imag) > np.pi:
        raise NotExp1("element winds around 0 on the boundary circle")
    out[space.boundary] = bnd[:-1]
    rays = space.rays
    along = v[rays]
    steps = phase_increments(along, closed=False)
    phase = out[rays[:, 0]].imag[:, None] + np.concatenate(
        [np.zeros((rays.shape[0], 1)), np.cumsum(steps, axis=1)], axis=1
    )
    center = phase[:, -1]
    if np.ptp(center) > 1e-6:
        raise Undersampled("radial phase continuation disagrees at the center", index=space.count)
    out[rays[:, 1:-1]] = np.log(np.abs(along[:, 1:-1])) + 1j * phase[:, 1:-1]
    out[space.count] = np.log(np.abs(v[space.count])) + 1j * center.mean()
    out = _snap(v, out)
    for ring in space.ring_slices:
        jumps = np.abs(np.diff(np.append(out[ring].imag, out[ring][0].imag)))
        if jumps.max() > np.pi:
            raise Undersampled("ring phases inconsistent after radial continuation", index=ring.start)
    return AlgebraElement(space, out)


def _snap(values, approx):
    """Replace an approximate continuous log by the exact principal log plus 2*pi*i*k."""
    principal = np.log(values)
    return principal + 2j * np.pi * np.round((approx - principal).imag / (2 * np.pi))


def lift_to_enlarged(values, space: SampleSpace, big: SampleSpace) -> np.ndarray:
    """Sample values on an enlarged copy of ``space``: the Taylor series from the boundary
    samples at the new points, the original values at the shared ones."""
    values = np.asarray(values)
    N = space.count
    coef = np.fft.fft(values[space.boundary], axis=0) / N
    coef = coef[: (N + 1) // 2]
    powers = big.coords[:, None] ** np.arange(coef.shape[0])[None, :]
    out = np.tensordot(powers, coef, axes=(1, 0))
    out[big.base_index] = values
    return out


def exp_elem(a: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(a.space, np.exp(a.values))


def holomorphy_residual(a) -> float:
    """Max interior deviation from the boundary Cauchy integral (DiskGrid only).

    Accepts an :class:`AlgebraElement` or a :class:`MatrixOverAlgebra`
    (maximum over entries).
    """
    space = a.space
    if space.kind != DISK:
        raise UnsupportedBackend(f"holomorphy residual needs DiskGrid, got {space!r}")
    vals = a.values if isinstance(a, AlgebraElement) else a.data.reshape(space.size, -1).T
    vals = np.atleast_2d(vals)
    recon = vals[:, space.boundary] @ space.cauchy_weights.T
    return float(np.abs(vals[:, space.interior] - recon).max())


# --------------------------------------------------------------------------
# matrices
# --------------------------------------------------------------------------


class MatrixOverAlgebra:
    """An n x n matrix over the sampled algebra, stored as ``data[sample, i, j]``."""

    __slots__ = ("space", "data")

    def __init__(self, space: SampleSpace, data):
        data = np.asarray(data, dtype=complex)
        if data.ndim != 3 or data.shape[0] != space.size or data.shape[1] != data.shape[2]:
            raise StructuralError(
                f"matrix data must have shape ({space.size}, n, n), got {data.shape}"
            )
        self.space = space
        self.data = data

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def __repr__(self):
        return f"MatrixOverAlgebra(n={self.n}, space={self.space!r})"

    @classmethod
    def identity(cls, space, n):
        return cls.constant(space, np.eye(n))

    @classmethod
    def constant(cls, space, M):
        M = np.asarray(M, dtype=complex)
        return cls(space, np.broadcast_to(M, (space.size,) + M.shape).copy())

    @classmethod
    def zeros(cls, space, n):
        return cls(space, np.zeros((space.size, n, n), complex))

    @classmethod
    def from_entries(cls, space, rows):
        """Build from a nested list of elements and/or scalars."""
        n = len(rows)
        data = np.empty((space.size, n, n), complex)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise StructuralError("matrix entries must form a square array")
            for j, e in enumerate(row):
                if isinstance(e, AlgebraElement):
                    if e.space != space:
                        raise StructuralError(f"entry ({i},{j}) lives on {e.space!r}, not {space!r}")
                    data[:, i, j] = e.values
                else:
                    data[:, i, j] = e
        return cls(space, data)

    @classmethod
    def diag(cls, elements):
        space = elements[0].space
        n = len(elements)
        data = np.zeros((space.size, n, n), complex)
        for i, e in enumerate(elements):
            if e.space != space:
                raise StructuralError("diagonal entries live on different spaces")
            data[:, i, i] = e.values
        return cls(space, data)

    def entry(self, i, j) -> AlgebraElement:
        return AlgebraElement(self.space, self.data[:, i, j].copy())

    def at(self, index) -> np.ndarray:
        """The complex n x n matrix at one sample."""
        return self.data[index]

    def diagonal(self):
        return [self.entry(i, i) for i in range(self.n)]

    def _check(self, other):
        if not isinstance(other, MatrixOverAlgebra):
            return False
        if other.space != self.space:
            raise StructuralError(f"matrices live on different spaces: {self.space!r} vs {other.space!r}")
        if other.n != self.n:
            raise StructuralError(f"dimension mismatch: {self.n} vs {other.n}")
        return True

    def __matmul__(self, other):
        if not isinstance(other, MatrixOverAlgebra):
            return NotImplemented
        if other.space != self.space:
            raise StructuralError(f"matrices live on different spaces: {self.space!r} vs {other.space!r}")
        return MatrixOverAlgebra(self.space, self.data @ other.data)

    def __add__(self, other):
        if not self._check(other):
            return NotImplemented
        return MatrixOverAlgebra(self.space, self.data + other.data)

    def __sub__(self, other):
        if not self._check(other):
            return NotImplemented
        return MatrixOverAlgebra(self.space, self.data - other.data)

    def __neg__(self):
        return MatrixOverAlgebra(self.space, -self.data)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            if other.space != self.space:
                raise StructuralError("scalar element lives on a different space")
            return MatrixOverAlgebra(self.space, self.data * other.values[:, None, None])
        if isinstance(other, Number):
            return MatrixOverAlgebra(self.space, self.data * other)
        return NotImplemented

    __rmul__ = __mul__

    def transpose(self):
        return MatrixOverAlgebra(self.space, np.swapaxes(self.data, 1, 2).copy())

    @property
    def T(self):
        return self.transpose()

    def det(self) -> AlgebraElement:
        return AlgebraElement(self.space, np.linalg.det(self.data))

    def trace(self) -> AlgebraElement:
        return AlgebraElement(self.space, np.trace(self.data, axis1=1, axis2=2))

    def inv(self, tol: float = INVERT_TOL):
        """Pointwise inverse; raises :class:`NotInvertible` where the determinant is tiny."""
        d = np.abs(np.linalg.det(self.data))
        bad = np.flatnonzero(d <= tol)
        if bad.size:
            raise NotInvertible(int(bad[0]), float(d[bad[0]]))
        return MatrixOverAlgebra(self.space, np.linalg.inv(self.data))

    def sub(self, rows, cols):
        """Submatrix data (not necessarily square), as a raw array."""
        return self.data[:, rows, :][:, :, cols]

    def max_abs(self) -> float:
        return float(np.abs(self.data).max())

    def strictly_lower_max(self) -> float:
        return float(np.abs(np.tril(self.data, -1)).max()) if self.n > 1 else 0.0

    def strictly_upper_max(self) -> float:
        return float(np.abs(np.triu(self.data, 1)).max()) if self.n > 1 else 0.0

    def conjugate_by(self, M: "MatrixOverAlgebra", M_inv: "MatrixOverAlgebra" = None):
        """Return ``M @ self @ M^{-1}``."""
        if M_inv is None:
            M_inv = M.inv()
        return M @ self @ M_inv


# --------------------------------------------------------------------------
# JSON literals
# --------------------------------------------------------------------------


def _pairs(z):
    z = np.asarray(z, dtype=complex).ravel()
    return [[float(x.real), float(x.imag)] for x in z]


def _unpairs(pairs):
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim == 1:
        return arr.astype(complex)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ConfigurationError("complex numbers must be [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def element_to_json(a: AlgebraElement) -> dict:
    return {"samples": _pairs(a.values)}


def element_from_json(space: SampleSpace, literal) -> AlgebraElement:
    if isinstance(literal, Number):
        return AlgebraElement.constant(space, literal)
    if not isinstance(literal, dict):
        raise ConfigurationError(f"element literal must be an object, got {literal!r}")
    if "poly" in literal:
        return AlgebraElement.from_poly(space, _unpairs(literal["poly"]))
    if "samples" in literal:
        values = _unpairs(literal["samples"])
        if values.shape[0] != space.size:
            raise ConfigurationError(f"literal has {values.shape[0]} samples, space has {space.size}")
        return AlgebraElement(space, values)
    raise ConfigurationError("element literal needs 'poly' or 'samples'")


def matrix_to_json(M: MatrixOverAlgebra) -> dict:
    return {
        "n": M.n,
        "entries": [[element_to_json(M.entry(i, j)) for j in range(M.n)] for i in range(M.n)],
    }


def matrix_from_json(space: SampleSpace, literal) -> MatrixOverAlgebra:
    try:
        rows = literal["entries"]
    except (TypeError, KeyError) as exc:
        raise ConfigurationError("matrix literal needs 'entries'") from exc
    n = literal.get("n", len(rows))
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ConfigurationError(f"matrix literal is not {n}x{n}")
    return MatrixOverAlgebra.from_entries(space, [[element_from_json(space, e) for e in r] for r in rows])
