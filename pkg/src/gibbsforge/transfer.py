"""Discretised transfer operator, its leading eigen-triple and conformality checks.

The default discretisation averages the operator over each bin:

    A[i, j] = (1/|I_i|) * integral over {x in I_i, g(x) in I_j} of e^{phi(g(x))} dx,

summed over the inverse branches g.  Substituting y = g(x) turns each piece
into an integral of e^{phi(y)} |f'(y)| over a sub-interval of the domain,
so only forward evaluations are needed and, for phi = -log|f'|, Lebesgue
measure is an exact left eigenvector on any grid.  Midpoint collocation
is available as ``scheme="midpoint"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .circle import GL_NODES, GL_WEIGHTS, arc_pieces
from .errors import (
    DegenerateDensity,
    IntervalSpansBranches,
    InvalidParameter,
    NoConvergence,
    NoPreimage,
)


@dataclass(frozen=True)
class Grid:
    endpoints: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.endpoints, dtype=float)
        if e.ndim != 1 or e.size < 2:
            raise InvalidParameter("grid needs at least two endpoints")
        if e[0] != 0.0 or e[-1] != 1.0 or np.any(np.diff(e) <= 0):
            raise InvalidParameter("grid endpoints must increase strictly from 0 to 1")
        object.__setattr__(self, "endpoints", e)

    @property
    def n_bins(self):
        return self.endpoints.size - 1

    @property
    def widths(self):
        return np.diff(self.endpoints)

    @property
    def midpoints(self):
        return 0.5 * (self.endpoints[:-1] + self.endpoints[1:])

    def locate(self, x):
        """Bin index of each x (right-closed at 1)."""
        idx = np.searchsorted(self.endpoints, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.n_bins - 1)


def uniform_grid(n_bins: int) -> Grid:
    if n_bins < 1:
        raise InvalidParameter("n_bins must be >= 1")
    e = np.linspace(0.0, 1.0, n_bins + 1)
    return Grid(e)


def make_grid(fmap, n_bins: int, tol: float = 1e-12) -> Grid:
    """Uniform grid with every branch endpoint inserted when not already present."""
    e = np.linspace(0.0, 1.0, n_bins + 1)
    extra = [b for b in fmap.breakpoints if np.min(np.abs(e - b)) > tol]
    if extra:
        e = np.sort(np.concatenate([e, extra]))
    return Grid(e)


@dataclass(frozen=True)
class DiscreteMeasure:
    grid: Grid
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.n_bins,):
            raise InvalidParameter("weights must have one entry per bin")
        if np.any(w < -1e-15):
            raise InvalidParameter("weights must be nonnegative")
        object.__setattr__(self, "weights", np.maximum(w, 0.0))

    @classmethod
    def normalized(cls, grid, weights):
        w = np.maximum(np.asarray(weights, dtype=float), 0.0)
        total = w.sum()
        if not total > 0:
            raise DegenerateDensity("measure has zero total mass")
        return cls(grid, w / total)

    @classmethod
    def lebesgue(cls, grid):
        return cls(grid, grid.widths.copy())

    @property
    def total(self):
        return float(self.weights.sum())

    @property
    def density(self):
        """Density with respect to Lebesgue (piecewise constant)."""
        return self.weights / self.grid.widths

    def cdf(self, x):
        """Piecewise-linear distribution function on [0, 1]."""
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        return np.interp(np.asarray(x, dtype=float), self.grid.endpoints, cum)

    def mass(self, a, b):
        """Mass of [a, b]; wraps through 0 when a > b (circle arcs)."""
        if a <= b:
            return float(self.cdf(b) - self.cdf(a))
        return float(self.cdf(1.0) - self.cdf(a) + self.cdf(b))

    def integrate(self, func, a=0.0, b=1.0):
        """integral of func over [a, b] against the piecewise-constant density."""
        e = self.grid.endpoints
        lo = np.maximum(e[:-1], a)
        hi = np.minimum(e[1:], b)
        # bins without mass are skipped so func may be singular there
        keep = (hi > lo) & (self.weights > 0)
        lo, hi = lo[keep], hi[keep]
        dens = self.density[keep]
        x = lo[:, None] + (hi - lo)[:, None] * GL_NODES[None, :]
        vals = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
        return float(np.sum(dens * (hi - lo) * (vals @ GL_WEIGHTS)))

    def sample(self, size, rng):
        """Inverse-CDF sampling with uniform placement inside the chosen bin."""
        cum = np.cumsum(self.weights)
        cum /= cum[-1]
        u = rng.random(size)
        j = np.minimum(np.searchsorted(cum, u, side="right"), self.grid.n_bins - 1)
        e = self.grid.endpoints
        return e[j] + rng.random(size) * (e[j + 1] - e[j])


def l1_distance(m1: DiscreteMeasure, m2: DiscreteMeasure) -> float:
    return float(np.sum(np.abs(m1.weights - m2.weights)))


def kolmogorov_distance(m1: DiscreteMeasure, m2: DiscreteMeasure) -> float:
    return float(np.max(np.abs(np.cumsum(m1.weights) - np.cumsum(m2.weights))))


@dataclass(frozen=True)
class Piece:
    """Sub-interval of one branch domain mapped into a single (row, column) cell."""

    row: int
    col: int
    branch: int
    y0: float
    y1: float


def branch_pieces(fmap, grid: Grid):
    """Split every branch domain at column edges and at preimages of row edges.

    Returns arrays (row, col, branch, y0, y1); y0 < y1 always.
    """
    e = grid.endpoints
    rows, cols, brs, y0s, y1s = [], [], [], [], []
    for k, b in enumerate(fmap.branches):
        lo_img, hi_img = b.image
        if lo_img < -1e-12 or hi_img > 1 + 1e-12:
            raise InvalidParameter(f"branch {k} image {b.image} leaves [0, 1]")
        xr = e[(e > lo_img) & (e < hi_img)]
        y_from_rows = b.inverse(xr) if xr.size else np.empty(0)
        y_cols = e[(e > b.lo) & (e < b.hi)]
        y = np.unique(np.concatenate([[b.lo, b.hi], y_from_rows, y_cols]))
        y = y[(y >= b.lo) & (y <= b.hi)]
        keep = np.concatenate([[True], np.diff(y) > 1e-15])
        y = y[keep]
        ya, yb = y[:-1], y[1:]
        ym = 0.5 * (ya + yb)
        xm = b.forward(ym)
        rows.append(grid.locate(xm))
        cols.append(grid.locate(ym))
        brs.append(np.full(ya.size, k))
        y0s.append(ya)
        y1s.append(yb)
    return (
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(brs),
        np.concatenate(y0s),
        np.concatenate(y1s),
    )


@dataclass(frozen=True)
class TransferMatrix:
    grid: Grid
    entries: sp.csr_matrix
    scheme: str = "cell"
    zero_rows: tuple = ()


def _piece_integrals(fmap, phi, br, y0, y1):
    """integral over [y0, y1] of e^{phi(y)} |f'(y)| dy, branch by branch."""
    out = np.empty(y0.size)
    y = y0[:, None] + (y1 - y0)[:, None] * GL_NODES[None, :]
    for k, b in enumerate(fmap.branches):
        m = br == k
        if not np.any(m):
            continue
        yy = y[m].ravel()
        vals = np.exp(phi(yy)) * np.abs(b.derivative(yy))
        out[m] = (y1[m] - y0[m]) * (vals.reshape(-1, GL_NODES.size) @ GL_WEIGHTS)
    return out


def build_matrix(fmap, phi, grid: Grid, scheme: str = "cell") -> TransferMatrix:
    """Discretise L_phi on ``grid``.  See the module docstring for the schemes."""
    N = grid.n_bins
    if scheme == "cell":
        row, col, br, y0, y1 = branch_pieces(fmap, grid)
        vals = _piece_integrals(fmap, phi, br, y0, y1) / grid.widths[row]
        A = sp.coo_matrix((vals, (row, col)), shape=(N, N)).tocsr()
    elif scheme == "midpoint":
        x = grid.midpoints
        rs, cs, vs = [], [], []
        for m, y in fmap.preimage_table(x):
            rs.append(np.nonzero(m)[0])
            cs.append(grid.locate(y[m]))
            vs.append(np.exp(phi(y[m])))
        A = sp.coo_matrix(
            (np.concatenate(vs), (np.concatenate(rs), np.concatenate(cs))), shape=(N, N)
        ).tocsr()
    else:
        raise InvalidParameter(f"unknown scheme {scheme!r}")
    A.sum_duplicates()
    A.eliminate_zeros()
    zero = tuple(int(i) for i in np.nonzero(np.diff(A.indptr) == 0)[0])
    return TransferMatrix(grid, A, scheme, zero)


def lebesgue_transport(fmap, grid: Grid) -> sp.csr_matrix:
    """Row-stochastic push-forward of bin masses under f (uniform within bins).

    T[j, i] is the fraction of bin j whose image lands in bin i.  Bins
    outside the domain (partial-domain maps) get zero rows.
    """
    row, col, _, y0, y1 = branch_pieces(fmap, grid)
    vals = (y1 - y0) / grid.widths[col]
    T = sp.coo_matrix((vals, (col, row)), shape=(grid.n_bins,) * 2).tocsr()
    T.sum_duplicates()
    return T


@dataclass(frozen=True)
class EigenData:
    grid: Grid
    lam: float
    eigenfunction: np.ndarray
    eigenmeasure: DiscreteMeasure
    residual_right: float
    residual_left: float
    iterations: int
    matrix: Optional[TransferMatrix] = field(default=None, repr=False)

    @property
    def pressure(self):
        return math.log(self.lam)


def power_eigendata(matrix: TransferMatrix, tol: float = 1e-10, max_iter: int = 100_000,
                    check_every: int = 10) -> EigenData:
    """Leading eigenvalue with right (h) and left (nu) eigenvectors by power iteration.

    Both iterations start from all-ones.  nu is scaled to a probability and h
    so that sum h_j nu_j = 1.
    """
    if tol <= 0:
        raise InvalidParameter("tol must be positive")
    A = matrix.entries
    if matrix.zero_rows:
        raise NoPreimage(f"{len(matrix.zero_rows)} grid rows have no preimage")
    AT = A.T.tocsr()
    N = A.shape[0]
    h = np.ones(N)
    v = np.ones(N) / N
    res_r = res_l = math.inf
    lam = math.nan
    it = 0
    while it < max_iter:
        h = A @ h
        h /= np.max(np.abs(h))
        v = AT @ v
        v /= np.sum(v)
        it += 1
        if it % check_every == 0 or it == max_iter:
            Ah = A @ h
            lam = float(v @ Ah / (v @ h))
            res_r = float(np.max(np.abs(Ah - lam * h)) / np.max(np.abs(h)))
            res_l = float(np.sum(np.abs(AT @ v - lam * v)))
            if res_r <= tol and res_l <= tol:
                break
    if not (res_r <= tol and res_l <= tol):
        raise NoConvergence(it, res_r, res_l)
    v = np.maximum(v, 0.0)
    v /= v.sum()
    h = np.maximum(h, 0.0)
    h /= float(h @ v)
    return EigenData(
        grid=matrix.grid,
        lam=lam,
        eigenfunction=h,
        eigenmeasure=DiscreteMeasure(matrix.grid, v),
        residual_right=res_r,
        residual_left=res_l,
        iterations=it,
        matrix=matrix,
    )


def compute_eigendata(fmap, phi, grid: Grid, scheme: str = "cell", tol: float = 1e-10,
                      max_iter: int = 100_000) -> EigenData:
    return power_eigendata(build_matrix(fmap, phi, grid, scheme), tol, max_iter)


def pressure(eigen: EigenData) -> float:
    return math.log(eigen.lam)


def jacobian_at(eigen: EigenData, phi, x):
    """J_nu f(x) = lambda e^{-phi(x)}."""
    val = eigen.lam * np.exp(-phi(np.atleast_1d(np.asarray(x, dtype=float))))
    return float(val[0]) if np.ndim(x) == 0 else val


def conformality_residual(fmap, eigen: EigenData, phi, test_intervals) -> float:
    """max over test intervals A of |nu(f(A)) - integral_A lambda e^{-phi} dnu|."""
    nu = eigen.eigenmeasure
    worst = 0.0
    for a, b in test_intervals:
        a, b = float(a), float(b)
        ka = fmap.branch_index(np.array([a]))[0]
        # the closed right end may sit on the next branch's left end
        kb = fmap.branch_index(np.array([np.nextafter(b, a)]))[0]
        if ka < 0 or ka != kb or not a < b:
            raise IntervalSpansBranches(f"[{a}, {b}] is not inside a single branch domain")
        br = fmap.branches[ka]
        fa = float(br.forward(np.array([a]))[0])
        fb = float(br.forward(np.array([b]))[0])
        # unreduced branch images lie in [0, 1], so f(A) never wraps
        image_mass = nu.mass(min(fa, fb), max(fa, fb))
        jac_mass = nu.integrate(lambda x: eigen.lam * np.exp(-phi(x)), a, b)
        worst = max(worst, abs(image_mass - jac_mass))
    return worst
