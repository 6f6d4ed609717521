"""Dynamical balls, distortion along them, and Gibbs ratios at hyperbolic times."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circle import GL_NODES, GL_WEIGHTS, arc_pieces
from .errors import DegenerateBall, InvalidParameter, NotHyperbolicTime, PointOutsideDomain
from .hyptimes import hyperbolic_time_mask
from .potentials import birkhoff_sums


@dataclass(frozen=True)
class DynamicalBall:
    """B(x, n, delta) stored as offsets (lo, hi) relative to the center."""

    center: float
    length: int
    radius: float
    lo: float
    hi: float

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def interval(self):
        """(a, b) in absolute coordinates; on the circle a > b means the ball wraps through 0."""
        a, b = self.center + self.lo, self.center + self.hi
        return a % 1.0 if a < 0 or a >= 1 else a, b % 1.0 if b < 0 or b > 1 else b

    def sample(self, k):
        """k points spread over the closed ball, as absolute positions (unreduced)."""
        return self.center + np.linspace(self.lo, self.hi, k)


def default_delta(fmap, floor=0.05):
    """Half the distance from the contraction region to the nearest covering boundary, floored."""
    if not fmap.contraction_region:
        return floor
    bounds = [e for p in fmap.covering for e in p]
    best = math.inf
    for arc in fmap.contraction_region:
        for lo, hi in arc_pieces(arc):
            for e in bounds:
                if lo < e < hi:
                    continue
                d = min(abs(e - lo), abs(e - hi))
                if fmap.circle:
                    d = min(d, 1.0 - d)
                if d > 0:
                    best = min(best, d)
    return max(0.5 * best, floor) if math.isfinite(best) else floor


def _pullback_offsets(fmap, xj, xnext, lo, hi):
    """Offsets around xj of the local inverse branch applied to xnext + [lo, hi] (vectorised)."""
    if fmap.circle and fmap.full_branch:
        Fx = fmap.lift(xj)
        return fmap.lift_inverse(Fx + lo) - xj, fmap.lift_inverse(Fx + hi) - xj
    k = fmap.branch_index(xj)
    out_lo = np.full(xj.shape, np.nan)
    out_hi = np.full(xj.shape, np.nan)
    for i, b in enumerate(fmap.branches):
        m = k == i
        if not np.any(m):
            continue
        ilo, ihi = b.image
        p = b.inverse(np.clip(xnext[m] + lo[m], ilo, ihi)) - xj[m]
        q = b.inverse(np.clip(xnext[m] + hi[m], ilo, ihi)) - xj[m]
        out_lo[m] = np.minimum(p, q)
        out_hi[m] = np.maximum(p, q)
    return out_lo, out_hi


def _orbit_table(fmap, xs, n):
    """Forward orbits of xs, shape (len(xs), n + 1); raises if any leaves the domain."""
    out = np.empty((xs.size, n + 1))
    y = fmap.reduce(xs)
    out[:, 0] = y
    for j in range(n):
        if np.any(fmap.branch_index(y) < 0):
            raise PointOutsideDomain(f"an orbit leaves the domain at step {j}")
        y = fmap.forward(y)
        out[:, j + 1] = y
    return out


def _ball_offsets(fmap, pts, ns, delta, levels=False):
    """Pull [-delta, delta] back from step n of each orbit row; returns (lo, hi) arrays.

    With ``levels`` the offsets of f^j(B) around f^j(x) for every j <= n are
    returned as well, as two (rows, n_max + 1) arrays (NaN beyond each n).
    """
    lo = np.full(ns.shape, -float(delta))
    hi = np.full(ns.shape, float(delta))
    m = int(ns.max(initial=0))
    if levels:
        LO = np.full((ns.size, m + 1), np.nan)
        HI = np.full((ns.size, m + 1), np.nan)
        LO[np.arange(ns.size), ns] = lo
        HI[np.arange(ns.size), ns] = hi
    for j in range(m - 1, -1, -1):
        act = ns > j
        if not np.any(act):
            continue
        plo, phi_ = _pullback_offsets(fmap, pts[act, j], pts[act, j + 1], lo[act], hi[act])
        lo[act] = np.maximum(plo, -delta)
        hi[act] = np.minimum(phi_, delta)
        if levels:
            LO[act, j] = lo[act]
            HI[act, j] = hi[act]
    if levels:
        return lo, hi, LO, HI
    return lo, hi


def _resolved_masses(fmap, phi, eigen, nu, pts, ns, LO, HI, resolve_bins):
    """nu(B) for each row, measured where f^j(B) first spans ``resolve_bins`` bins.

    Uses the Jacobian of the conformal measure:
    nu(B) = lambda^{-j} integral over f^j(B) of exp(S_j phi(g_j y)) dnu(y),
    with g_j the inverse branch along the orbit.  The integral is done by
    Gauss-Legendre on pieces cut at the grid endpoints.
    """
    grid = nu.grid
    e = grid.endpoints
    dens = nu.density
    width = resolve_bins * float(grid.widths.max())
    rows = np.arange(ns.size)
    wide = (HI - LO) >= width
    wide[rows, ns] = True
    js = np.argmax(wide, axis=1)
    node_row, node_off, node_w = [], [], []
    for r in rows:
        j = js[r]
        a = pts[r, j] + LO[r, j]
        b = pts[r, j] + HI[r, j]
        k = math.floor(a)
        shifted = np.concatenate([e + k, e + k + 1])
        cuts = np.concatenate([[a], shifted[(shifted > a) & (shifted < b)], [b]])
        u, v = cuts[:-1], cuts[1:]
        bins = grid.locate(np.mod(0.5 * (u + v), 1.0) if fmap.circle else 0.5 * (u + v))
        x = u[:, None] + (v - u)[:, None] * GL_NODES[None, :]
        w = (dens[bins] * (v - u))[:, None] * GL_WEIGHTS[None, :]
        node_row.append(np.full(x.size, r))
        node_off.append(x.ravel() - pts[r, j])
        node_w.append(w.ravel())
    node_row = np.concatenate(node_row)
    off = np.concatenate(node_off)
    wts = np.concatenate(node_w)
    node_j = js[node_row]
    S = np.zeros(off.size)
    if not phi.is_constant:
        for i in range(int(js.max(initial=0)) - 1, -1, -1):
            act = node_j > i
            if not np.any(act):
                continue
            r = node_row[act]
            o, _ = _pullback_offsets(fmap, pts[r, i], pts[r, i + 1], off[act], off[act])
            off[act] = o
            S[act] += phi(pts[r, i] + o)
    else:
        S = node_j * float(phi(np.zeros(1))[0])
    contrib = wts * np.exp(S - node_j * math.log(eigen.lam))
    return np.bincount(node_row, weights=contrib, minlength=ns.size)


def _check_delta(fmap, delta):
    min_len = min(b.hi - b.lo for b in fmap.branches)
    if not 0.0 < delta <= min_len / 2.0:
        raise InvalidParameter(f"delta must lie in (0, {min_len / 2.0}]")


def dynamical_ball(fmap, x, n, delta) -> DynamicalBall:
    """Connected component through x of {y : d(f^j y, f^j x) <= delta, 0 <= j <= n}."""
    if n < 0:
        raise InvalidParameter("n must be >= 0")
    _check_delta(fmap, delta)
    pts = _orbit_table(fmap, np.array([float(x)]), n)
    lo, hi = _ball_offsets(fmap, pts, np.array([n]), delta)
    lo, hi = float(lo[0]), float(hi[0])
    if not hi - lo >= 4.0 * np.spacing(max(abs(float(x)), 1.0)):
        raise DegenerateBall(f"ball around {x!r} collapsed below machine resolution")
    return DynamicalBall(float(pts[0, 0]), int(n), float(delta), lo, hi)


def ball_mass(nu, ball: DynamicalBall, circle=True) -> float:
    a = ball.center + ball.lo
    b = ball.center + ball.hi
    if not circle:
        return nu.mass(max(a, 0.0), min(b, 1.0))
    if a < 0.0:
        return nu.mass(a + 1.0, 1.0) + nu.mass(0.0, b)
    if b > 1.0:
        return nu.mass(a, 1.0) + nu.mass(0.0, b - 1.0)
    return nu.mass(a, b)


def distortion_ratio(fmap, phi, eigen, ball: DynamicalBall, samples: int = 50) -> float:
    """max/min of J_nu f^n over sampled ball points, i.e. exp(max S_n phi - min S_n phi)."""
    y = ball.sample(samples)
    S = birkhoff_sums(fmap, phi, y, ball.length)
    return float(math.exp(S.max() - S.min()))


def distortion_bound(hoelder_constant, hoelder_exponent, c, delta):
    """K0 from the geometric series C (2 delta)^a sum_j e^{-c a j / 2}."""
    if hoelder_constant == 0.0:
        return 1.0
    q = math.exp(-c * hoelder_exponent / 2.0)
    return math.exp(hoelder_constant * (2.0 * delta) ** hoelder_exponent / (1.0 - q))


def is_hyperbolic_time(fmap, x, n, c) -> bool:
    pts = _orbit_table(fmap, np.array([float(x)]), n)[0]
    log_L = np.log(fmap.lipschitz(pts[:-1]))
    return bool(n >= 1 and hyperbolic_time_mask(log_L, c)[-1])


def _ratios(fmap, phi, eigen, nu, pts, ns, delta, resolve_bins):
    """Gibbs ratios for orbit rows ``pts`` at times ``ns``; NaN where the ball collapses."""
    lo, hi, LO, HI = _ball_offsets(fmap, pts, ns, delta, levels=True)
    x = pts[:, 0]
    ok = hi - lo >= 4.0 * np.spacing(np.maximum(np.abs(x), 1.0))
    S = np.concatenate([np.zeros((pts.shape[0], 1)), np.cumsum(phi(pts[:, :-1]), axis=1)], axis=1)
    log_den = -math.log(eigen.lam) * ns + S[np.arange(ns.size), ns]
    out = np.full(ns.size, np.nan)
    if not np.any(ok):
        return out
    if resolve_bins > 0:
        mass = _resolved_masses(fmap, phi, eigen, nu, pts[ok], ns[ok], LO[ok], HI[ok], resolve_bins)
    else:
        mass = np.array([ball_mass(nu, DynamicalBall(float(x[r]), int(ns[r]), float(delta),
                                                     float(lo[r]), float(hi[r])), fmap.circle)
                         for r in np.nonzero(ok)[0]])
    out[ok] = mass / np.exp(log_den[ok])
    return out


def gibbs_ratio(fmap, phi, eigen, nu, x, n, delta, c, check=True, resolve_bins=8) -> float:
    """nu(B(x, n, delta)) / exp(-P n + S_n phi(x)) with P = log lambda.

    Balls narrower than ``resolve_bins`` grid bins are measured through the
    Jacobian of nu at the first iterate whose image is that wide, since a
    piecewise-constant density cannot resolve them.  ``resolve_bins=0``
    measures the ball directly by proportional allocation within bins.
    Raises NotHyperbolicTime unless n is a c-hyperbolic time for x.
    """
    if check and not is_hyperbolic_time(fmap, x, n, c):
        raise NotHyperbolicTime(f"{n} is not a {c}-hyperbolic time for {x!r}")
    dynamical_ball(fmap, x, n, delta)  # validates delta and degeneracy
    pts = _orbit_table(fmap, np.array([float(x)]), n)
    return float(_ratios(fmap, phi, eigen, nu, pts, np.array([int(n)]), delta, resolve_bins)[0])


@dataclass(frozen=True)
class GibbsSample:
    x: np.ndarray
    n: np.ndarray
    ratio: np.ndarray

    @property
    def K(self):
        """Smallest K with every ratio in [1/K, K]."""
        return float(max(self.ratio.max(), 1.0 / self.ratio.min()))


def gibbs_ratios_at_hyperbolic_times(fmap, phi, eigen, nu, xs, n_max, delta, c,
                                     resolve_bins=8) -> GibbsSample:
    """Gibbs ratios at every c-hyperbolic time n <= n_max of each starting point.

    Balls that collapse below machine resolution are skipped.  See
    :func:`gibbs_ratio` for ``resolve_bins``.
    """
    _check_delta(fmap, delta)
    xs = np.asarray(xs, dtype=float)
    pts = _orbit_table(fmap, xs, n_max)
    mask = hyperbolic_time_mask(np.log(fmap.lipschitz(pts[:, :-1])), c)
    rows, cols = np.nonzero(mask)
    ns = cols + 1
    ratios = _ratios(fmap, phi, eigen, nu, pts[rows], ns, delta, resolve_bins)
    ok = np.isfinite(ratios)
    return GibbsSample(pts[rows, 0][ok], ns[ok], ratios[ok])
