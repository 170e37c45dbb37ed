"""Spectra of matrices over the sampled algebra, and topology tests on them.

The spectrum of a matrix over a commutative algebra is the union over the
maximal ideal space of the pointwise eigenvalues. Here it is a finite point
cloud, one eigenvalue set per sample, thickened by a resolution radius
``rho`` for topological decisions: a disk of radius ``rho`` around each point
stands in for the continuous curve or region traced between samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order

from ._phase import phase_increments
from .algebra import MatrixOverAlgebra, SampleSpace
from .errors import Ambiguous, NumericalError

RESOLUTION_FLOOR = 1e-3
# raster side-length caps: membership test, and the (rarer) escape-path search
MAX_CELLS = 2048
MAX_PATH_CELLS = 512


@dataclass
class Spectrum:
    """Pointwise eigenvalues, ``values[sample, k]``, with resolution ``rho``."""

    values: np.ndarray
    resolution: float

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=complex))
        if not self.resolution > 0:
            raise ValueError("spectrum resolution must be positive")

    @classmethod
    def from_points(cls, points, resolution):
        return cls(np.asarray(points, dtype=complex).reshape(-1, 1), float(resolution))

    @property
    def points(self) -> np.ndarray:
        return self.values.ravel()

    @property
    def sample_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.values.shape[0]), self.values.shape[1])

    def to_json(self) -> dict:
        out = []
        for i, row in enumerate(self.values):
            used = np.zeros(row.shape[0], bool)
            for k, lam in enumerate(row):
                if used[k]:
                    continue
                same = (~used) & (np.abs(row - lam) <= 1e-12 * (1.0 + abs(lam)))
                used |= same
                out.append(
                    {"value": [float(lam.real), float(lam.imag)], "sample": i, "multiplicity": int(same.sum())}
                )
        return {"resolution": self.resolution, "points": out}


@dataclass(frozen=True)
class EpsNeighborhood:
    """Closed eps-neighbourhood of the n-th roots of unity."""

    n: int
    eps: float

    @property
    def roots(self) -> np.ndarray:
        return roots_of_unity(self.n)

    def distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.abs(z[..., None] - self.roots).min(axis=-1)

    def contains(self, z) -> np.ndarray:
        return self.distance(z) <= self.eps


def roots_of_unity(n) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n) / n)


def default_resolution(values: np.ndarray, space: SampleSpace) -> float:
    """Twice the largest eigenvalue step between adjacent samples, floored."""
    edges = space.edges
    if edges.shape[0] == 0:
        return RESOLUTION_FLOOR
    a, b = values[edges[:, 0]], values[edges[:, 1]]
    d = np.abs(a[:, :, None] - b[:, None, :])
    gap = max(d.min(axis=2).max(), d.min(axis=1).max())
    return max(RESOLUTION_FLOOR, 2.0 * float(gap))


def spectrum(A: MatrixOverAlgebra, resolution: float | None = None) -> Spectrum:
    try:
        values = np.linalg.eigvals(A.data)
    except np.linalg.LinAlgError as exc:
        bad = np.flatnonzero(~np.isfinite(A.data).all(axis=(1, 2)))
        raise NumericalError(f"eigenvalue solver failed: {exc}", int(bad[0]) if bad.size else None) from exc
    finite = np.isfinite(values).all(axis=1)
    if not finite.all():
        raise NumericalError("non-finite eigenvalues", int(np.flatnonzero(~finite)[0]))
    if resolution is None:
        resolution = default_resolution(values, A.space)
    return Spectrum(values, float(resolution))


def hausdorff(a, b) -> float:
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    return max(_directed(a, b), _directed(b, a))


def _directed(a, b, chunk=4096):
    worst = 0.0
    for s in range(0, a.shape[0], chunk):
        d = np.abs(a[s:s + chunk, None] - b[None, :]).min(axis=1)
        worst = max(worst, float(d.max()))
    return worst


def set_distance(a, b, chunk=4096) -> float:
    """Smallest distance between two finite point sets."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    best = np.inf
    for s in range(0, a.shape[0], chunk):
        best = min(best, float(np.abs(a[s:s + chunk, None] - b[None, :]).min()))
    return best


def in_eps_neighborhood(S: Spectrum, N: EpsNeighborhood) -> bool:
    return bool(N.contains(S.points).all())


# --------------------------------------------------------------------------
# complement topology by rasterized flood fill
# --------------------------------------------------------------------------


class _Raster:
    """Cells of size h on a box around the spectrum and 0; 0 sits at a cell center."""

    def __init__(self, points, rho, max_cells):
        pts = np.append(points, 0.0)
        pad = rho
        lo_x, hi_x = pts.real.min() - pad, pts.real.max() + pad
        lo_y, hi_y = pts.imag.min() - pad, pts.imag.max() + pad
        extent = max(hi_x - lo_x, hi_y - lo_y)
        self.h = h = max(rho / 2.0, extent / (max_cells - 6))
        self.i0 = int(np.floor(lo_x / h)) - 2
        self.j0 = int(np.floor(lo_y / h)) - 2
        nx = int(np.ceil(hi_x / h)) + 3 - self.i0
        ny = int(np.ceil(hi_y / h)) + 3 - self.j0
        self.blocked = np.zeros((nx, ny), bool)
        w = int(np.ceil(rho / h)) + 1
        off = np.arange(-w, w + 1)
        pi = np.round(points.real / h).astype(int)
        pj = np.round(points.imag / h).astype(int)
        ci = pi[:, None, None] + off[None, :, None]
        cj = pj[:, None, None] + off[None, None, :]
        dx = np.maximum(np.abs(ci * h - points.real[:, None, None]) - h / 2, 0.0)
        dy = np.maximum(np.abs(cj * h - points.imag[:, None, None]) - h / 2, 0.0)
        hit = dx**2 + dy**2 <= rho**2
        ci, cj = np.broadcast_arrays(ci, cj)
        self.blocked[ci[hit] - self.i0, cj[hit] - self.j0] = True
        self.origin = (-self.i0, -self.j0)

    def center(self, i, j):
        return (i + self.i0) * self.h + 1j * (j + self.j0) * self.h

    def outside_labels(self):
        labels, _ = ndimage.label(~self.blocked)
        edge = np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
        return labels, set(edge[edge > 0].tolist())


def zero_in_unbounded_component(S: Spectrum) -> bool:
    """Whether 0 can be joined to infinity without touching the rho-thickened spectrum."""
    pts, rho = S.points, S.resolution
    dmin = float(np.abs(pts).min())
    if dmin <= rho:
        raise Ambiguous(f"0 lies within rho={rho:.3g} of the spectrum (distance {dmin:.3g})")
    raster = _Raster(pts, rho, MAX_CELLS)
    if raster.blocked[raster.origin]:
        raise Ambiguous(f"0 is not resolved at cell size {raster.h:.3g}")
    labels, outside = raster.outside_labels()
    return labels[raster.origin] in outside


def escape_path(S: Spectrum) -> np.ndarray:
    """A polyline from 0 to beyond the spectrum that keeps distance >= rho from it.

    Returns vertices (complex); the last vertex lies outside the bounding box,
    so the radial ray continuing from it is also clear. Raises
    :class:`Ambiguous` if 0 is too close, and ``ValueError`` if 0 is enclosed.
    """
    pts, rho = S.points, S.resolution
    if float(np.abs(pts).min()) <= rho:
        raise Ambiguous("0 lies within rho of the spectrum")
    raster = _Raster(pts, rho, MAX_PATH_CELLS)
    free = ~raster.blocked
    if not free[raster.origin]:
        raise Ambiguous(f"0 is not resolved at cell size {raster.h:.3g}")
    nx, ny = free.shape
    ids = np.arange(nx * ny).reshape(nx, ny)
    rows, cols = [], []
    for a, b in ((ids[:-1, :], ids[1:, :]), (ids[:, :-1], ids[:, 1:])):
        ok = free.ravel()[a.ravel()] & free.ravel()[b.ravel()]
        rows.append(a.ravel()[ok])
        cols.append(b.ravel()[ok])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    graph = coo_matrix((np.ones(rows.shape[0]), (rows, cols)), shape=(nx * ny, nx * ny)).tocsr()
    start = ids[raster.origin]
    order, pred = breadth_first_order(graph, start, directed=False, return_predecessors=True)
    on_edge = np.zeros((nx, ny), bool)
    on_edge[[0, -1], :] = True
    on_edge[:, [0, -1]] = True
    hits = order[on_edge.ravel()[order]]
    if hits.size == 0:
        raise ValueError("0 is enclosed by the spectrum; no escape path exists")
    node = hits[0]
    cells = [node]
    while node != start:
        node = pred[node]
        cells.append(node)
    cells.reverse()
    verts = np.array([raster.center(*divmod(int(c), ny)) for c in cells])
    verts[0] = 0.0
    return _simplify(verts)


def _simplify(verts):
    """Drop interior vertices that are collinear with their neighbours."""
    if verts.shape[0] <= 2:
        return verts
    d = np.diff(verts)
    keep = [0]
    for k in range(1, verts.shape[0] - 1):
        if abs((d[k - 1].conjugate() * d[k]).imag) > 1e-12 * abs(d[k - 1]) * abs(d[k]):
            keep.append(k)
    keep.append(verts.shape[0] - 1)
    return verts[keep]


# --------------------------------------------------------------------------
# winding numbers
# --------------------------------------------------------------------------


def phase_turns(values, closed=True) -> float:
    """Total principal phase change along the samples, in turns."""
    return float(phase_increments(np.asarray(values, dtype=complex), closed=closed).sum() / (2 * np.pi))


def winding_number(values, closed=True):
    """Winding number of sampled nonvanishing values around 0.

    Closed paths return an int; open paths return the raw (real) number of
    turns, with no integer claim.
    """
    turns = phase_turns(values, closed=closed)
    return int(round(turns)) if closed else turns


def winding_residual(values) -> float:
    turns = phase_turns(values, closed=True)
    return abs(turns - round(turns))
