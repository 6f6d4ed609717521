"""Hölder potentials, Birkhoff sums and oscillation estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameter, OrbitEscaped, UnknownPotential


@dataclass(frozen=True)
class Potential:
    """A real observable with declared (or estimated) Hölder data.

    ``evaluator`` must be vectorised: it receives a float array and returns
    an array of the same shape.
    """

    evaluator: Callable
    hoelder_exponent: float = 1.0
    hoelder_constant: float = 0.0
    name: str = "potential"
    params: tuple = ()

    def __call__(self, x):
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    @property
    def is_constant(self):
        """True only for potentials built as constants; a zero Hölder constant on
        each branch domain still allows jumps between branches."""
        return self.name in ("zero", "constant")


def oscillation(phi: Potential, domain: Sequence, resolution: int = 4096) -> float:
    """sup - inf of phi over a union of closed intervals.

    Sampled on ``resolution`` points per interval, then once more at double
    resolution; the larger of the two estimates is returned.
    """
    if resolution < 16:
        raise InvalidParameter("resolution must be >= 16")
    intervals = list(domain)
    if not intervals:
        return 0.0

    def spread(m):
        vals = np.concatenate([phi(np.linspace(lo, hi, m)) for lo, hi in intervals])
        vals = vals[np.isfinite(vals)]
        return float(vals.max() - vals.min()) if vals.size else 0.0

    return max(spread(resolution), spread(2 * resolution))


def estimate_hoelder_constant(evaluator, intervals, exponent, points=2048, inflate=1.05):
    """Largest sampled Hölder quotient within each interval, inflated by ``inflate``.

    Pairs are taken at dyadic index offsets on a uniform grid, which covers
    separations from one grid step up to the interval length.
    """
    best = 0.0
    for lo, hi in intervals:
        # stay strictly inside half-open domains
        x = np.linspace(lo, hi, points + 1)[:-1] + 0.25 * (hi - lo) / points
        v = np.asarray(evaluator(x), dtype=float)
        k = 1
        while k < points:
            dv = np.abs(v[k:] - v[:-k])
            dx = x[k:] - x[:-k]
            best = max(best, float(np.max(dv / dx ** exponent)))
            k *= 2
    return inflate * best


def _log_derivative(fmap):
    return lambda x: np.log(np.abs(fmap.derivative(x)))


def _exponent_for(fmap):
    # the neutral point of the intermittent map limits the modulus of continuity
    if fmap.name == "manneville_pomeau_circle":
        return float(fmap.params[0])
    return 1.0


def zero_potential() -> Potential:
    return Potential(lambda x: np.zeros(np.shape(x)), 1.0, 0.0, "zero")


def constant_potential(value: float) -> Potential:
    value = float(value)
    return Potential(lambda x: np.full(np.shape(x), value), 1.0, 0.0, "constant", (value,))


def minus_t_log_deriv(fmap, t: float) -> Potential:
    t = float(t)
    logd = _log_derivative(fmap)
    ev = lambda x: -t * logd(x)
    alpha = _exponent_for(fmap)
    C = estimate_hoelder_constant(ev, fmap.domain_intervals, alpha)
    return Potential(ev, alpha, C, "minus_t_log_deriv", (t,))


def minus_log_deriv_plus_beta(fmap, beta: float) -> Potential:
    beta = float(beta)
    if beta < 0:
        raise InvalidParameter("beta must be >= 0")
    ev = lambda x: -np.log(np.abs(fmap.derivative(x)) + beta)
    alpha = _exponent_for(fmap)
    C = estimate_hoelder_constant(ev, fmap.domain_intervals, alpha)
    return Potential(ev, alpha, C, "minus_log_deriv_plus_beta", (beta,))


def builtin_potential(name: str, params: Sequence[float], fmap) -> Potential:
    params = [float(p) for p in params]
    if name == "zero":
        return zero_potential()
    if name == "minus_t_log_deriv":
        if len(params) != 1:
            raise InvalidParameter("minus_t_log_deriv takes one parameter t")
        return minus_t_log_deriv(fmap, params[0])
    if name == "minus_log_deriv_plus_beta":
        if len(params) != 1:
            raise InvalidParameter("minus_log_deriv_plus_beta takes one parameter beta")
        return minus_log_deriv_plus_beta(fmap, params[0])
    raise UnknownPotential(name)


def birkhoff_sum(fmap, phi: Potential, x: float, n: int) -> float:
    """S_n phi(x) = sum_{j<n} phi(f^j x)."""
    if n < 0:
        raise InvalidParameter("n must be >= 0")
    return float(birkhoff_sums(fmap, phi, np.array([x], dtype=float), n)[0])


def birkhoff_sums(fmap, phi: Potential, x, n: int):
    """Vectorised Birkhoff sums; raises OrbitEscaped if any orbit leaves the domain."""
    y = np.array(x, dtype=float, copy=True)
    total = np.zeros(y.shape)
    for _ in range(n):
        if np.any(fmap.branch_index(y) < 0):
            raise OrbitEscaped("orbit left the map domain")
        total += phi(y)
        y = fmap.forward(y)
    return total
