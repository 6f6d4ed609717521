"""Piecewise-monotone maps of the circle/interval and the (H1)(H2)(P) checker.

Every map is a finite ordered list of monotone branches.  Circle maps use
half-open branch domains [lo, hi) and reduce images mod 1; interval maps
(possibly defined on a proper subset of [0, 1], as in the Cantor example)
use closed domains.  All evaluation routines are vectorised over numpy
arrays; the scalar operations raise the documented errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .circle import (
    arc_contains,
    arc_inside,
    arc_pieces,
    arcs_contain,
    arcs_overlap,
    invert_monotone,
    sample_arcs,
)
from .errors import InvalidParameter, NoPreimage, PointOutsideDomain, UnknownMap
from .potentials import Potential, oscillation

Arc = tuple


@dataclass(frozen=True)
class BranchSpec:
    """One monotone branch ``forward: domain -> range`` with its inverse."""

    domain: tuple
    forward: Callable
    inverse: Callable
    derivative: Callable
    increasing: bool = True

    @property
    def lo(self):
        return self.domain[0]

    @property
    def hi(self):
        return self.domain[1]

    @cached_property
    def image(self):
        """Closed image interval (sorted)."""
        a = float(self.forward(np.array([self.lo]))[0])
        b = float(self.forward(np.array([self.hi]))[0])
        return (min(a, b), max(a, b))


@dataclass(frozen=True)
class IntervalMap:
    branches: tuple
    contraction_region: tuple = ()
    covering: tuple = ()
    name: str = "map"
    circle: bool = True
    # integer d when the map is exactly x -> d x mod 1 (exact digit-shift orbits)
    multiplier: Optional[int] = None
    params: tuple = ()

    def __post_init__(self):
        doms = sorted(b.domain for b in self.branches)
        for (a0, b0), (a1, b1) in zip(doms, doms[1:]):
            if a1 < b0 - 1e-15:
                raise InvalidParameter(f"branch domains overlap: {(a0, b0)} and {(a1, b1)}")

    # -- structure ----------------------------------------------------------
    @property
    def degree(self):
        return len(self.branches)

    @property
    def k0(self):
        return len(self.covering)

    @cached_property
    def q(self):
        """Number of covering elements meeting the contraction region."""
        return sum(
            1 for p in self.covering if any(arcs_overlap(p, a) for a in self.contraction_region)
        )

    @cached_property
    def breakpoints(self):
        pts = {0.0, 1.0}
        for b in self.branches:
            pts.update((float(b.lo), float(b.hi)))
        return np.array(sorted(pts))

    @cached_property
    def domain_intervals(self):
        return [b.domain for b in self.branches]

    @cached_property
    def full_branch(self):
        """Every branch is increasing and maps its domain onto all of [0, 1]."""
        for b in self.branches:
            lo, hi = b.image
            if not (b.increasing and abs(lo) < 1e-12 and abs(hi - 1.0) < 1e-12):
                return False
        return True

    # -- vectorised evaluation ---------------------------------------------
    def reduce(self, x):
        x = np.asarray(x, dtype=float)
        return np.mod(x, 1.0) if self.circle else x

    def branch_index(self, x):
        """Index of the branch containing each x, -1 when outside every domain."""
        x = self.reduce(x)
        idx = np.full(x.shape, -1, dtype=int)
        for k, b in enumerate(self.branches):
            if self.circle:
                inside = (x >= b.lo) & (x < b.hi)
            else:
                inside = (x >= b.lo) & (x <= b.hi)
            idx = np.where((idx < 0) & inside, k, idx)
        return idx

    def _apply(self, x, attr):
        x = self.reduce(x)
        idx = self.branch_index(x)
        out = np.full(x.shape, np.nan)
        for k, b in enumerate(self.branches):
            m = idx == k
            if np.any(m):
                out[m] = getattr(b, attr)(x[m])
        return out

    def forward(self, x):
        """Vectorised f(x); NaN outside the domain."""
        y = self._apply(x, "forward")
        if self.circle:
            y = np.mod(y, 1.0)
        return y

    def derivative(self, x):
        return self._apply(x, "derivative")

    def lipschitz(self, x):
        """Vectorised L(x) = 1/|f'(x)|."""
        return 1.0 / np.abs(self.derivative(x))

    def preimage_table(self, y):
        """Per-branch preimages of y; entry k is (mask, x) with x valid where mask."""
        y = np.asarray(y, dtype=float)
        table = []
        for b in self.branches:
            lo, hi = b.image
            m = (y >= lo - 1e-15) & (y <= hi + 1e-15)
            x = np.full(y.shape, np.nan)
            if np.any(m):
                x[m] = b.inverse(np.clip(y[m], lo, hi))
                if self.circle:
                    # half-open domains: the right endpoint belongs to the next branch
                    m &= x < b.hi
            table.append((m, x))
        return table

    # -- lift for full-branch circle maps -----------------------------------
    def lift(self, u):
        """Continuous increasing lift F: R -> R with F(u + 1) = F(u) + degree."""
        if not (self.circle and self.full_branch):
            raise InvalidParameter(f"{self.name} has no full-branch lift")
        u = np.asarray(u, dtype=float)
        k = np.floor(u)
        x = u - k
        idx = self.branch_index(x)
        val = np.empty(u.shape)
        for i, b in enumerate(self.branches):
            m = idx == i
            val[m] = i + b.forward(x[m])
        return self.degree * k + val

    def lift_inverse(self, v):
        if not (self.circle and self.full_branch):
            raise InvalidParameter(f"{self.name} has no full-branch lift")
        v = np.asarray(v, dtype=float)
        d = self.degree
        k = np.floor(v / d)
        r = v - d * k
        i = np.clip(np.floor(r).astype(int), 0, d - 1)
        y = r - i
        out = np.empty(v.shape)
        for j, b in enumerate(self.branches):
            m = i == j
            out[m] = b.inverse(y[m])
        return k + out


# -- scalar operations ------------------------------------------------------

def evaluate(fmap: IntervalMap, x: float) -> float:
    """f(x) for a single point, reduced mod 1 on the circle."""
    k = int(fmap.branch_index(np.array([x]))[0])
    if k < 0:
        raise PointOutsideDomain(f"{x!r} is outside every branch domain of {fmap.name}")
    return float(fmap.forward(np.array([x]))[0])


def preimages(fmap: IntervalMap, y: float) -> list:
    """All preimages of y as (point, branch index), one per branch whose range holds y."""
    out = []
    for k, (m, x) in enumerate(fmap.preimage_table(np.array([y], dtype=float))):
        if m[0]:
            out.append((float(x[0]), k))
    if not out:
        raise NoPreimage(f"{y!r} has no preimage under {fmap.name}")
    return out


def lipschitz_inverse(fmap: IntervalMap, x: float) -> float:
    if fmap.branch_index(np.array([x]))[0] < 0:
        raise PointOutsideDomain(f"{x!r} is outside every branch domain of {fmap.name}")
    return float(fmap.lipschitz(np.array([x]))[0])


def degree_floor(fmap: IntervalMap, grid_resolution: int = 10_000) -> float:
    """log of the minimal number of preimages over a sample of the range.

    Only the first iterate is sampled; for full-branch maps this is h(f) exactly.
    """
    if grid_resolution < 2:
        raise InvalidParameter("grid_resolution must be >= 2")
    lo = min(b.image[0] for b in fmap.branches)
    hi = max(b.image[1] for b in fmap.branches)
    y = lo + (np.arange(grid_resolution) + 0.5) * (hi - lo) / grid_resolution
    counts = sum(m.astype(int) for m, _ in fmap.preimage_table(y))
    return math.log(int(counts.min())) if counts.min() > 0 else -math.inf


# -- hypotheses -------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisReport:
    h_f: float
    L_sup_inside: float
    L_sup_outside: float
    sigma: float
    q: int
    k0: int
    oscillation: float
    p_margin: float
    p_margin_local: float
    eps0: float
    admissible_c: float
    gamma: float
    passes_H1: bool
    passes_H2: bool
    passes_P: bool

    @property
    def passes(self):
        return self.passes_H1 and self.passes_H2 and self.passes_P

    @property
    def failing(self):
        names = []
        if not self.passes_H1:
            names.append("H1")
        if not self.passes_H2:
            names.append("H2")
        if not self.passes_P:
            names.append("P")
        return names

    def as_dict(self):
        return {
            "h_f": self.h_f,
            "L_sup_inside": self.L_sup_inside,
            "L_sup_outside": self.L_sup_outside,
            "sigma": self.sigma,
            "q": self.q,
            "k0": self.k0,
            "oscillation": self.oscillation,
            "p_margin": self.p_margin,
            "p_margin_local": self.p_margin_local,
            "eps0": self.eps0,
            "admissible_c": self.admissible_c,
            "gamma": self.gamma,
            "passes_H1": self.passes_H1,
            "passes_H2": self.passes_H2,
            "passes_P": self.passes_P,
        }


def _domain_samples(fmap: IntervalMap, n: int):
    total = sum(b.hi - b.lo for b in fmap.branches)
    pts = []
    for b in fmap.branches:
        m = max(2, int(round(n * (b.hi - b.lo) / total)))
        x = np.linspace(b.lo, b.hi, m + 1)
        pts.append(x[:-1] if fmap.circle else x)
    return np.concatenate(pts)


def default_sigma(fmap: IntervalMap, resolution: int = 10_000) -> float:
    """inf of |f'| over the complement of the contraction region (sampled)."""
    x = _domain_samples(fmap, resolution)
    outside = ~arcs_contain(fmap.contraction_region, x)
    return float(np.min(np.abs(fmap.derivative(x[outside]))))


def check_hypotheses(
    fmap: IntervalMap,
    potential: Potential,
    sigma: Optional[float] = None,
    gamma: float = 0.9,
    resolution: int = 10_000,
) -> HypothesisReport:
    """Evaluate (H1), (H2), (P) and the admissible constants c, eps0 (dimension 1)."""
    if sigma is None:
        sigma = default_sigma(fmap, resolution)
    if not sigma > 1.0:
        raise InvalidParameter(f"sigma must exceed 1, got {sigma}")
    if not 0.0 < gamma < 1.0:
        raise InvalidParameter(f"gamma must lie in (0, 1), got {gamma}")

    h_f = degree_floor(fmap, resolution)
    x = _domain_samples(fmap, resolution)
    inside = arcs_contain(fmap.contraction_region, x)
    L = fmap.lipschitz(x)
    # the contraction region may be too thin for the sample grid
    extra = sample_arcs(fmap.contraction_region, 257)
    extra = extra[fmap.branch_index(extra) >= 0] if extra.size else extra
    L_out = float(np.max(L[~inside])) if np.any(~inside) else 0.0
    if np.any(inside) or extra.size:
        L_in = float(np.max(np.concatenate([L[inside], fmap.lipschitz(extra)])))
    else:
        # empty contraction region: (H1) holds with L := 1/sigma
        L_in = 1.0 / sigma

    q = fmap.q
    osc = oscillation(potential, fmap.domain_intervals, resolution=max(16, resolution // max(1, fmap.degree)))
    if q == 0:
        p_margin = math.inf
        p_margin_local = math.inf
        eps0 = math.inf
    else:
        log_q = math.log(q)
        p_margin = h_f - log_q - osc
        touching = [p for p in fmap.covering if any(arcs_overlap(p, a) for a in fmap.contraction_region)]
        xs = sample_arcs(touching, 2049)
        xs = xs[fmap.branch_index(xs) >= 0]
        xd = _domain_samples(fmap, resolution)
        sup_local = float(np.max(potential(xs)))
        inf_all = float(np.min(potential(xd)))
        p_margin_local = h_f - log_q - (sup_local - inf_all)
        eps0 = max(0.0, h_f - log_q - osc - math.log(L_in)) / 2.0

    expansion = gamma * math.log(L_in) - (1.0 - gamma) * math.log(sigma)
    admissible_c = max(0.0, -0.5 * expansion)

    # eps0 depends on the (P) margin, so it is reported but not part of (H1)
    passes_H1 = bool(sigma > 1.0 and L_out <= (1.0 / sigma) * (1 + 1e-9) and admissible_c > 0)
    passes_H2 = bool(q < math.exp(h_f))
    passes_P = bool(p_margin > 0)
    return HypothesisReport(
        h_f=h_f,
        L_sup_inside=L_in,
        L_sup_outside=L_out,
        sigma=float(sigma),
        q=q,
        k0=fmap.k0,
        oscillation=osc,
        p_margin=p_margin,
        p_margin_local=p_margin_local,
        eps0=eps0,
        admissible_c=admissible_c,
        gamma=gamma,
        passes_H1=passes_H1,
        passes_H2=passes_H2,
        passes_P=passes_P,
    )


# -- the map zoo ------------------------------------------------------------

def _linear_branch(lo, hi, slope, offset=0.0):
    return BranchSpec(
        domain=(lo, hi),
        forward=lambda x, lo=lo, s=slope, o=offset: s * (x - lo) + o,
        inverse=lambda y, lo=lo, s=slope, o=offset: lo + (y - o) / s,
        derivative=lambda x, s=slope: np.full(np.shape(x), s, dtype=float),
        increasing=slope > 0,
    )


def doubling() -> IntervalMap:
    return linear_full_branch([2.0, 2.0], name="doubling")


def linear_full_branch(slopes: Sequence[float], name: str = "linear_full_branch") -> IntervalMap:
    """Circle map with increasing linear full branches of the given slopes."""
    slopes = [float(s) for s in slopes]
    if len(slopes) < 2 or any(s <= 1.0 for s in slopes):
        raise InvalidParameter("need at least two slopes, all > 1")
    widths = [1.0 / s for s in slopes]
    if abs(sum(widths) - 1.0) > 1e-12:
        raise InvalidParameter(f"inverse slopes must sum to 1, got {sum(widths)!r}")
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    edges[-1] = 1.0
    branches = tuple(_linear_branch(float(edges[i]), float(edges[i + 1]), s) for i, s in enumerate(slopes))
    mult = None
    d = len(slopes)
    if all(s == float(d) for s in slopes):
        mult = d
    return IntervalMap(
        branches=branches,
        contraction_region=(),
        covering=tuple(b.domain for b in branches),
        name=name,
        circle=True,
        multiplier=mult,
        params=tuple(slopes),
    )


def manneville_pomeau_circle(alpha: float, region: float = 0.1) -> IntervalMap:
    """Circle version of the Manneville-Pomeau map with neutral fixed point 0 = 1."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter("alpha must lie in (0, 1)")
    if not 0.0 < region <= 0.25:
        raise InvalidParameter("contraction region half-width must lie in (0, 1/4]")
    a = alpha
    c = 2.0 ** a

    def f1(x):
        return x * (1.0 + c * np.power(x, a))

    def df1(x):
        return 1.0 + (1.0 + a) * c * np.power(x, a)

    def f2(x):
        return x - c * np.power(np.maximum(1.0 - x, 0.0), 1.0 + a)

    def df2(x):
        return 1.0 + (1.0 + a) * c * np.power(np.maximum(1.0 - x, 0.0), a)

    b1 = BranchSpec((0.0, 0.5), f1, lambda y: invert_monotone(f1, df1, y, 0.0, 0.5), df1)
    b2 = BranchSpec((0.5, 1.0), f2, lambda y: invert_monotone(f2, df2, y, 0.5, 1.0), df2)
    return IntervalMap(
        branches=(b1, b2),
        contraction_region=((1.0 - region, region),),
        covering=((0.75, 0.25), (0.25, 0.75)),
        name="manneville_pomeau_circle",
        circle=True,
        params=(alpha, region),
    )


def _pitchfork_profile(s, w):
    """Slope-deficit lift of the deformed doubling map on u in [-1/2, 1/2).

    f'(u) = 2 - K (Psi(u/w) - w), Psi(t) = sin^2(pi t) on |t| < 1, so the
    slope equals s at u = +-w/2, 2 + K w at u = 0 and outside the window,
    and the mean slope stays 2 (degree preserved).
    """
    K = (2.0 - s) / (1.0 - w)

    def psi_int(t):
        # integral of Psi from 0 to t, odd in t
        ta = np.minimum(np.abs(t), 1.0)
        return np.sign(t) * (ta / 2.0 - np.sin(2.0 * np.pi * ta) / (4.0 * np.pi))

    def lift(u):
        return 2.0 * u - K * (w * psi_int(u / w) - w * u)

    def dlift(u):
        t = np.abs(u / w)
        psi = np.where(t < 1.0, np.sin(np.pi * t) ** 2, 0.0)
        return 2.0 - K * (psi - w)

    return lift, dlift


def pitchfork_doubling(s: float, w: float) -> IntervalMap:
    """Doubling map deformed on the window |x| < w around its fixed point 0.

    The slope dips to ``s`` at x = +-w/2 while the fixed point itself stays
    repelling, so no attracting orbit is created and the map stays
    topologically mixing.  The lift remains odd and C^0-close to 2x.
    """
    if not 0.0 < w <= 0.2:
        raise InvalidParameter("window half-width w must lie in (0, 0.2]")
    if not 0.0 < s <= 2.0:
        raise InvalidParameter("dip slope s must lie in (0, 2]")
    lift, dlift = _pitchfork_profile(s, w)
    u = np.linspace(0.0, w, 4001)[1:]
    if np.any(lift(u) <= u):
        raise InvalidParameter(f"dip slope s={s} creates extra fixed points in the window")

    def f1(x):
        return lift(x)

    def f2(x):
        return lift(x - 1.0) + 1.0

    def df2(x):
        return dlift(x - 1.0)

    # outside the window the lift is affine: u -> a u -/+ K w / 2
    a = 2.0 + (2.0 - s) / (1.0 - w) * w
    shift = 0.5 * (a - 2.0)
    y_w = float(lift(np.array([w]))[0])

    def g1(y):
        y = np.asarray(y, dtype=float)
        x = (y + shift) / a
        near = y < y_w
        if np.any(near):
            x[near] = invert_monotone(f1, dlift, y[near], 0.0, w)
        return x

    def g2(y):
        y = np.asarray(y, dtype=float)
        x = (y - 1.0 - shift) / a + 1.0
        near = y > 1.0 - y_w
        if np.any(near):
            x[near] = invert_monotone(f2, df2, y[near], 1.0 - w, 1.0)
        return x

    b1 = BranchSpec((0.0, 0.5), f1, g1, dlift)
    b2 = BranchSpec((0.5, 1.0), f2, g2, df2)
    return IntervalMap(
        branches=(b1, b2),
        contraction_region=((1.0 - w, w),),
        covering=((0.75, 0.25), (0.25, 0.75)),
        name="pitchfork_doubling",
        circle=True,
        multiplier=2 if s == 2.0 else None,
        params=(s, w),
    )


def cantor_unimodal(region: float = 0.05) -> IntervalMap:
    """f(x) = -8x(x-1)(x+1/8) restricted to f^{-1}([0, 1]); the survivor set is a Cantor set."""

    def f(x):
        return -8.0 * x * (x - 1.0) * (x + 0.125)

    def df(x):
        return -24.0 * x * x + 14.0 * x + 1.0

    crit = (14.0 + math.sqrt(14.0 ** 2 + 4 * 24.0)) / 48.0
    one = np.array([1.0])
    a = float(invert_monotone(f, df, one, 0.0, crit, increasing=True)[0])
    b = float(invert_monotone(f, df, one, crit, 1.0, increasing=False)[0])
    b1 = BranchSpec((0.0, a), f, lambda y: invert_monotone(f, df, y, 0.0, a, True), df, True)
    b2 = BranchSpec((b, 1.0), f, lambda y: invert_monotone(f, df, y, b, 1.0, False), df, False)
    return IntervalMap(
        branches=(b1, b2),
        contraction_region=((0.0, region),),
        covering=((0.0, a), (b, 1.0)),
        name="cantor_unimodal",
        circle=False,
        params=(region,),
    )


BUILTIN_MAPS = {
    "doubling": lambda *p: doubling(),
    "linear_full_branch": lambda *p: linear_full_branch(p),
    "manneville_pomeau_circle": lambda *p: manneville_pomeau_circle(*p),
    "pitchfork_doubling": lambda *p: pitchfork_doubling(*p),
    "cantor_unimodal": lambda *p: cantor_unimodal(*p),
}


def builtin_map(name: str, params: Sequence[float] = ()) -> IntervalMap:
    try:
        factory = BUILTIN_MAPS[name]
    except KeyError:
        raise UnknownMap(name) from None
    try:
        return factory(*[float(p) for p in params])
    except TypeError as exc:
        raise InvalidParameter(f"bad parameters for {name}: {list(params)}") from exc


def validate_map(fmap: IntervalMap, samples: int = 1000, seed: int = 0) -> None:
    """Check the structural invariants of a map; raise InvalidParameter on failure."""
    rng = np.random.default_rng(seed)
    for k, b in enumerate(fmap.branches):
        x = rng.uniform(b.lo, b.hi, samples)
        back = b.inverse(b.forward(x))
        if np.max(np.abs(back - x)) > 1e-10:
            raise InvalidParameter(f"branch {k}: inverse(forward(x)) drifts from x")
        if np.any(np.abs(b.derivative(x)) <= 0):
            raise InvalidParameter(f"branch {k}: vanishing derivative")
    for a in fmap.contraction_region:
        if not any(arc_inside(a, p) for p in fmap.covering[: max(fmap.q, 1)]) and fmap.q:
            raise InvalidParameter("contraction region not inside the first q covering elements")
    y = rng.uniform(0.0, 1.0, samples)
    counts = sum(m.astype(int) for m, _ in fmap.preimage_table(y))
    if np.any(counts < 1):
        raise InvalidParameter("some point of the range has no preimage")
