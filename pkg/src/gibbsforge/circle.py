"""Arcs on the circle [0, 1)/~ and small numerical helpers shared by the modules.

An arc is a pair ``(a, b)`` of numbers in [0, 1].  When ``a <= b`` it denotes
the half-open interval [a, b); when ``a > b`` it wraps through 0 and denotes
[a, 1) U [0, b).  Interval maps (non-circle) only ever use ``a <= b``.
"""

import numpy as np

# Gauss-Legendre nodes/weights on [0, 1], used for every per-piece integral.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)
GL_NODES = 0.5 * (_GL_X + 1.0)
GL_WEIGHTS = 0.5 * _GL_W


def circle_distance(x, y):
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def arc_length(arc):
    a, b = arc
    return b - a if a <= b else (1.0 - a) + b


def arc_pieces(arc):
    """Split an arc into non-wrapping [lo, hi) pieces."""
    a, b = arc
    if a <= b:
        return [(a, b)] if b > a else []
    return [p for p in ((a, 1.0), (0.0, b)) if p[1] > p[0]]


def arc_contains(arc, x):
    x = np.asarray(x, dtype=float)
    a, b = arc
    if a <= b:
        return (x >= a) & (x < b)
    return (x >= a) | (x < b)


def arcs_contain(arcs, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=bool)
    for arc in arcs:
        out |= arc_contains(arc, x)
    return out


def arcs_overlap(arc1, arc2):
    """Positive-length overlap between two arcs."""
    for lo1, hi1 in arc_pieces(arc1):
        for lo2, hi2 in arc_pieces(arc2):
            if min(hi1, hi2) - max(lo1, lo2) > 0:
                return True
    return False


def arc_inside(inner, outer):
    """True when arc ``inner`` is contained in arc ``outer`` (up to 1e-12)."""
    for lo, hi in arc_pieces(inner):
        probe = np.linspace(lo, hi, 65)[:-1]
        probe = np.clip(probe + 1e-12, lo, hi)
        if not np.all(arc_contains(outer, probe)):
            return False
    return True


def sample_arcs(arcs, per_arc):
    """Closed-endpoint sample grid of ``per_arc`` points on each non-wrapping piece."""
    pts = [np.linspace(lo, hi, per_arc) for arc in arcs for lo, hi in arc_pieces(arc)]
    if not pts:
        return np.empty(0)
    return np.concatenate(pts)


def invert_monotone(func, dfunc, y, lo, hi, increasing=True, tol=1e-15, max_iter=100):
    """Vectorised safeguarded Newton solve of ``func(x) = y`` on [lo, hi].

    ``func`` must be strictly monotone on [lo, hi] with ``func(lo)``/``func(hi)``
    bracketing every target.  Falls back to bisection whenever the Newton
    step leaves the current bracket.
    """
    y = np.asarray(y, dtype=float)
    a = np.full(y.shape, float(lo))
    b = np.full(y.shape, float(hi))
    fa, fb = func(a), func(b)
    span = fb - fa
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(span != 0, (y - fa) / span, 0.5)
    x = a + np.clip(t, 0.0, 1.0) * (b - a)
    sgn = 1.0 if increasing else -1.0
    for _ in range(max_iter):
        r = sgn * (func(x) - y)
        # r < 0 means the root lies to the right of x
        a = np.where(r < 0, x, a)
        b = np.where(r > 0, x, b)
        d = sgn * dfunc(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = r / d
        xn = x - step
        bad = ~np.isfinite(xn) | (xn <= a) | (xn >= b)
        xn = np.where(bad, 0.5 * (a + b), xn)
        done = (np.abs(xn - x) <= tol * np.maximum(1.0, np.abs(x))) | (r == 0)
        x = np.where(r == 0, x, xn)
        if np.all(done) or np.all(b - a <= tol):
            break
    return x
