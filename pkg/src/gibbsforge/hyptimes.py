"""Hyperbolic times along orbits, first-time tails and itinerary counting.

n is a c-hyperbolic time for x when every tail product of inverse Lipschitz
constants along the first n iterates beats e^{-ck}.  Writing
S_m = sum_{j<m} (log L(f^j x) + c), this is the statement that S_n is a
strict new running minimum of (S_0, ..., S_n), which gives an O(n) scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .circle import arcs_contain
from .errors import InvalidParameter, OrbitEscaped

# ties in the strict inequality are broken against the candidate time
TIE_TOL = 1e-12


@dataclass(frozen=True)
class OrbitRecord:
    x0: float
    points: np.ndarray
    log_L: np.ndarray

    @property
    def length(self):
        return self.log_L.size


@dataclass(frozen=True)
class HyperbolicTimeRecord:
    c: float
    times: np.ndarray
    length: int
    density: float
    max_gap_ratio: float
    max_gap: int
    first_time: Optional[int]


def _digit_orbit(d, x0, n, rng, window=64):
    """Orbit of x -> d x mod 1 via its base-d digits.

    The float x0 has a terminating expansion, so its digits are followed by
    random ones; this realises a typical point within one ulp of x0 and
    avoids the collapse of float orbits onto 0.
    """
    digits = []
    x = float(x0) % 1.0
    for _ in range(window):
        x *= d
        k = int(math.floor(x))
        digits.append(k)
        x -= k
    digits = np.array(digits, dtype=np.int64)
    tail = rng.integers(0, d, size=n + window)
    # keep x0's digits where they carry information; the float is exact in them
    nz = np.nonzero(digits)[0]
    used = (nz[-1] + 1) if nz.size else 0
    allv = np.concatenate([digits[:used], tail])
    scale = float(d) ** -np.arange(1, window + 1)
    idx = np.arange(n + 1)[:, None] + np.arange(window)[None, :]
    pts = allv[idx] @ scale
    pts[0] = float(x0) % 1.0
    return np.minimum(pts, np.nextafter(1.0, 0.0))


def orbit_points(fmap, x0, n, rng=None):
    """n + 1 orbit points starting at x0 (raises OrbitEscaped on partial domains)."""
    if fmap.multiplier is not None:
        rng = rng if rng is not None else np.random.default_rng(0)
        return _digit_orbit(fmap.multiplier, x0, n, rng)
    pts = np.empty(n + 1)
    x = np.array([float(x0)])
    pts[0] = fmap.reduce(x)[0]
    for j in range(n):
        if fmap.branch_index(x)[0] < 0:
            raise OrbitEscaped(f"orbit of {x0!r} left the domain at step {j}")
        x = fmap.forward(x)
        pts[j + 1] = x[0]
    return pts


def orbits_batch(fmap, x0, n, rng):
    """Orbits of many starting points at once, shape (len(x0), n + 1).

    Rows whose orbit escapes the domain are filled with NaN from that step on.
    """
    x0 = np.asarray(x0, dtype=float)
    if fmap.multiplier is not None:
        return np.vstack([_digit_orbit(fmap.multiplier, x, n, rng) for x in x0])
    out = np.empty((x0.size, n + 1))
    x = fmap.reduce(x0)
    out[:, 0] = x
    for j in range(n):
        x = fmap.forward(x)
        out[:, j + 1] = x
    return out


def make_orbit(fmap, x0, n, seed=None) -> OrbitRecord:
    rng = np.random.default_rng(seed)
    pts = orbit_points(fmap, x0, n, rng)
    if np.any(fmap.branch_index(pts[:-1]) < 0):
        raise OrbitEscaped(f"orbit of {x0!r} left the domain")
    return OrbitRecord(float(x0), pts, np.log(fmap.lipschitz(pts[:-1])))


def hyperbolic_time_mask(log_L, c):
    """Boolean array m with m[n-1] true iff n is a c-hyperbolic time (vectorised over rows)."""
    log_L = np.asarray(log_L, dtype=float)
    S = np.cumsum(log_L + c, axis=-1)
    S0 = np.zeros(S.shape[:-1] + (1,))
    prev = np.concatenate([S0, S[..., :-1]], axis=-1)
    runmin = np.minimum.accumulate(prev, axis=-1)
    return S < runmin - TIE_TOL


def _gap_stats(times, length):
    tail = times[times >= length / 2.0]
    if tail.size < 2:
        return math.inf if tail.size else math.nan, 0
    ratios = tail[1:] / tail[:-1]
    return float(ratios.max()), int(np.max(np.diff(tail)))


def hyperbolic_times(orbit, c: float) -> HyperbolicTimeRecord:
    """All c-hyperbolic times n <= len(orbit) with density and gap statistics.

    ``orbit`` may be an OrbitRecord or a bare sequence of log L values.
    max_gap_ratio is taken over times in the second half of the orbit.
    """
    if not c > 0:
        raise InvalidParameter("c must be positive")
    log_L = orbit.log_L if isinstance(orbit, OrbitRecord) else np.asarray(orbit, dtype=float)
    n = log_L.size
    times = np.nonzero(hyperbolic_time_mask(log_L, c))[0] + 1
    ratio, gap = _gap_stats(times, n)
    return HyperbolicTimeRecord(
        c=float(c),
        times=times,
        length=n,
        density=times.size / n if n else 0.0,
        max_gap_ratio=ratio,
        max_gap=gap,
        first_time=int(times[0]) if times.size else None,
    )


def hyperbolic_times_bruteforce(log_L, c):
    """Direct check of the definition over every (n, k); quadratic, used as an oracle."""
    log_L = [float(v) for v in log_L]
    out = []
    for n in range(1, len(log_L) + 1):
        ok = True
        for k in range(1, n + 1):
            if not sum(log_L[n - k:n]) + c * k < -TIE_TOL:
                ok = False
                break
        if ok:
            out.append(n)
    return out


def pliss_check(orbit, c: float) -> bool:
    """Whether 'average log L <= -2c implies at least one hyperbolic time' held."""
    log_L = orbit.log_L if isinstance(orbit, OrbitRecord) else np.asarray(orbit, dtype=float)
    if log_L.size == 0 or log_L.mean() > -2.0 * c:
        return True
    return bool(np.any(hyperbolic_time_mask(log_L, c)))


@dataclass(frozen=True)
class TailResult:
    n: np.ndarray
    probability: np.ndarray
    mean_first_time: float
    samples: int
    censored: int
    escaped: int
    seed: int

    def loglinear_fit(self):
        """Least-squares slope and R^2 of log P(n1 > n) over the nonzero tail."""
        keep = self.probability > 0
        x = self.n[keep].astype(float)
        y = np.log(self.probability[keep])
        if x.size < 3:
            return math.nan, math.nan
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
        return float(slope), r2


def first_times(fmap, x0, c, n_max, rng):
    """First c-hyperbolic time of each starting point; n_max + 1 when none occurs by n_max.

    Returns (first_time, escaped_mask).
    """
    pts = orbits_batch(fmap, x0, n_max, rng)
    logs = np.log(fmap.lipschitz(pts[:, :-1]))
    escaped = ~np.all(np.isfinite(logs), axis=1)
    logs = np.where(np.isfinite(logs), logs, 0.0)
    mask = hyperbolic_time_mask(logs, c)
    has = mask.any(axis=1)
    first = np.where(has, mask.argmax(axis=1) + 1, n_max + 1)
    return first, escaped


def first_time_tail(fmap, nu, c, n_max, samples, seed) -> TailResult:
    """Empirical tail P(n1 > n), n = 0..n_max, for points drawn from nu.

    Orbits that leave the domain are excluded and counted.  Points with no
    hyperbolic time up to n_max enter the mean as n_max + 1 (a lower bound).
    """
    if samples < 1000:
        raise InvalidParameter("samples must be >= 1000")
    rng = np.random.default_rng(seed)
    x0 = nu.sample(samples, rng)
    first, escaped = first_times(fmap, x0, c, n_max, rng)
    first = first[~escaped]
    ns = np.arange(n_max + 1)
    m = max(first.size, 1)
    prob = np.array([(first > k).sum() / m for k in ns])
    return TailResult(
        n=ns,
        probability=prob,
        mean_first_time=float(first.mean()) if first.size else math.nan,
        samples=int(first.size),
        censored=int((first > n_max).sum()),
        escaped=int(escaped.sum()),
        seed=int(seed),
    )


def visit_frequency_measure(fmap, nu, gamma, n, samples, seed) -> float:
    """Monte Carlo estimate of nu{x : (1/n) #{j < n : f^j x in A} >= gamma}."""
    if not 0.0 <= gamma < 1.0:
        raise InvalidParameter("gamma must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    x0 = nu.sample(samples, rng)
    pts = orbits_batch(fmap, x0, n - 1, rng)
    inside = arcs_contain(fmap.contraction_region, pts) & np.isfinite(pts)
    freq = inside.sum(axis=1) / n
    return float(np.mean(freq >= gamma))


def _check_itinerary_args(n, gamma, q, k0):
    if not (isinstance(n, (int, np.integer)) and n >= 0):
        raise InvalidParameter("n must be a nonnegative integer")
    if n > 64:
        raise InvalidParameter("n must be <= 64")
    if not 0 <= q <= k0:
        raise InvalidParameter("need 0 <= q <= k0")
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameter("gamma must lie in [0, 1]")


def itinerary_count(n: int, gamma: float, q: int, k0: int) -> int:
    """Exact number of length-n itineraries over k0 symbols with more than gamma*n entries <= q."""
    _check_itinerary_args(n, gamma, q, k0)
    g = Fraction(repr(float(gamma)))
    total = 0
    for m in range(n + 1):
        if m > g * n:
            total += math.comb(n, m) * q ** m * (k0 - q) ** (n - m)
    return total


def c_gamma_estimate(gamma: float, q: int, k0: int, n: int) -> float:
    """(1/n) log itinerary_count; an upper-biased finite-n stand-in for c_gamma."""
    count = itinerary_count(n, gamma, q, k0)
    if count == 0:
        return -math.inf
    return math.log(count) / n
