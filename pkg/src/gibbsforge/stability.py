"""Statistical and stochastic stability sweeps.

Random perturbations are translations by a uniform amount in [-eps, eps]
measured in the coordinate u = F(x) of a reference measure (F its
distribution function), so the noise law is absolutely continuous with
respect to that measure with density 1/(2 eps) and its support contains a
ball around f(x).  With the conformal measure nu as reference this is a
non-degenerate perturbation with respect to nu; with Lebesgue as reference it is plain additive noise
x -> f(x) + omega mod 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .dynamics import check_hypotheses, default_sigma
from .equilibrium import equilibrium_from_eigendata, nu_transport
from .errors import GridTooCoarse, HypothesisViolated, InvalidParameter, NoConvergence
from .transfer import (
    DiscreteMeasure,
    Grid,
    compute_eigendata,
    kolmogorov_distance,
    l1_distance,
    lebesgue_transport,
)


@dataclass(frozen=True)
class PerturbationFamily:
    parameter_values: tuple
    map_at: Callable
    potential_at: Callable
    base_parameter: float = 0.0

    @property
    def base(self):
        return self.map_at(self.base_parameter), self.potential_at(self.base_parameter)


@dataclass(frozen=True)
class SweepResult:
    parameter: list
    distance_L1: list
    distance_kolmogorov: list
    lambdas: list
    pressures: list

    def rows(self):
        return list(zip(self.parameter, self.distance_L1, self.distance_kolmogorov,
                        self.lambdas, self.pressures))


def _gate(fmap, phi, t, sigma, gamma):
    rep = check_hypotheses(fmap, phi, sigma=sigma, gamma=gamma)
    if not rep.passes:
        raise HypothesisViolated(t, rep.failing)
    return rep


def statistical_sweep(family: PerturbationFamily, grid: Grid, sigma: Optional[float] = None,
                      gamma: float = 0.9, tol: float = 1e-10) -> SweepResult:
    """Distances from mu_t to mu_base along the family, on one shared grid.

    (H1)(H2)(P) are checked at every parameter with one (sigma, gamma); when
    sigma is not given it is the smallest automatic sigma over the family.
    """
    maps = {t: family.map_at(t) for t in family.parameter_values}
    pots = {t: family.potential_at(t) for t in family.parameter_values}
    base_map, base_phi = family.base
    if sigma is None:
        sigma = min(default_sigma(m) for m in list(maps.values()) + [base_map])
    _gate(base_map, base_phi, family.base_parameter, sigma, gamma)
    base = equilibrium_from_eigendata(compute_eigendata(base_map, base_phi, grid, tol=tol)).measure
    out = SweepResult([], [], [], [], [])
    for t in family.parameter_values:
        _gate(maps[t], pots[t], t, sigma, gamma)
        eig = compute_eigendata(maps[t], pots[t], grid, tol=tol)
        mu = equilibrium_from_eigendata(eig).measure
        out.parameter.append(float(t))
        out.distance_L1.append(l1_distance(mu, base))
        out.distance_kolmogorov.append(kolmogorov_distance(mu, base))
        out.lambdas.append(eig.lam)
        out.pressures.append(math.log(eig.lam))
    return out


@dataclass(frozen=True)
class NoiseKernel:
    epsilon: float
    matrix: sp.csr_matrix
    reference: str = "lebesgue"


def _overlap_integral(a, b, c, d, eps):
    """integral over u in [a, b], v in [c, d] of 1{|u - v| <= eps} (vectorised)."""

    def G2(t):
        return np.where(t <= -eps, 0.0, np.where(t <= eps, 0.5 * (t + eps) ** 2, 2.0 * eps * t))

    return G2(b - c) - G2(a - c) - G2(b - d) + G2(a - d)


def _overlap_length(x, c, d, eps):
    return np.clip(np.minimum(d, x + eps) - np.maximum(c, x - eps), 0.0, None)


def noise_kernel(grid: Grid, epsilon: float, reference: Optional[DiscreteMeasure] = None) -> NoiseKernel:
    """Row-stochastic bin kernel of a uniform circular translation in reference coordinates.

    K[i, k] is the probability that a point spread over bin i according to
    the reference measure lands in bin k.  Lebesgue is the default reference.
    """
    if not 0.0 < epsilon:
        raise InvalidParameter("epsilon must be positive")
    w = grid.widths if reference is None else np.asarray(reference.weights, dtype=float)
    w = w / w.sum()
    if epsilon < w.max():
        raise GridTooCoarse(f"epsilon={epsilon} is below the largest bin mass {w.max():.3g}")
    N = grid.n_bins
    C = np.concatenate([[0.0], np.cumsum(w)])
    C[-1] = 1.0
    eps = min(float(epsilon), 0.5)
    rows, cols, vals = [], [], []
    for i in range(N):
        a, b = C[i], C[i + 1]
        for m in (-1.0, 0.0, 1.0):
            lo = np.searchsorted(C[1:] + m, a - eps, side="right")
            hi = np.searchsorted(C[:-1] + m, b + eps, side="left")
            if hi <= lo:
                continue
            k = np.arange(lo, hi)
            c, d = C[k] + m, C[k + 1] + m
            if b > a:
                v = _overlap_integral(a, b, c, d, eps) / (2.0 * eps * (b - a))
            else:
                v = _overlap_length(a, c, d, eps) / (2.0 * eps)
            keep = v > 0
            rows.append(np.full(keep.sum(), i))
            cols.append(k[keep])
            vals.append(v[keep])
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N)).tocsr()
    K.sum_duplicates()
    rs = np.asarray(K.sum(axis=1)).ravel()
    K = (sp.diags(1.0 / rs) @ K).tocsr()
    return NoiseKernel(float(epsilon), K, "lebesgue" if reference is None else "reference")


def noisy_transition(fmap, grid: Grid, kernel: NoiseKernel, transport=None) -> sp.csr_matrix:
    """Transition matrix of x -> f(x) then noise: P_f K."""
    if transport is None:
        transport = lebesgue_transport(fmap, grid)
    return (transport @ kernel.matrix).tocsr()


def stationary_measure(transition, grid: Grid, tol: float = 1e-10, max_iter: int = 100_000,
                       start: Optional[np.ndarray] = None) -> DiscreteMeasure:
    """Left fixed probability vector of a row-stochastic matrix by power iteration."""
    PT = transition.T.tocsr()
    N = grid.n_bins
    v = np.full(N, 1.0 / N) if start is None else np.asarray(start, dtype=float) / np.sum(start)
    res = math.inf
    for it in range(1, max_iter + 1):
        nv = PT @ v
        nv /= nv.sum()
        res = float(np.sum(np.abs(nv - v)))
        v = nv
        if res <= tol:
            return DiscreteMeasure(grid, v)
    raise NoConvergence(max_iter, math.nan, res)


def stationarity_residual(measure: DiscreteMeasure, transition) -> float:
    return float(np.sum(np.abs(transition.T @ measure.weights - measure.weights)))


def stochastic_sweep(fmap, phi, grid: Grid, epsilons: Sequence[float], noise: str = "nu",
                     sigma: Optional[float] = None, gamma: float = 0.9, tol: float = 1e-10,
                     eigen=None) -> SweepResult:
    """Distance in L1(nu) between dmu^eps/dnu and dmu/dnu for each noise level.

    ``noise="nu"`` translates in nu-coordinates and pushes mass with the
    nu-consistent transport; ``noise="lebesgue"`` uses additive noise and
    Lebesgue-uniform transport.
    """
    if noise not in ("nu", "lebesgue"):
        raise InvalidParameter(f"unknown noise model {noise!r}")
    _gate(fmap, phi, 0.0, sigma, gamma)
    if eigen is None:
        eigen = compute_eigendata(fmap, phi, grid, tol=tol)
    mu = equilibrium_from_eigendata(eigen).measure
    if noise == "nu":
        transport = nu_transport(eigen, fmap)
        reference = eigen.eigenmeasure
    else:
        transport = lebesgue_transport(fmap, grid)
        reference = None
    out = SweepResult([], [], [], [], [])
    for eps in epsilons:
        K = noise_kernel(grid, eps, reference)
        T = noisy_transition(fmap, grid, K, transport)
        mu_eps = stationary_measure(T, grid, tol=tol)
        out.parameter.append(float(eps))
        # mu^eps and mu both live on nu-weighted bins, so L1(nu) of densities is plain L1
        out.distance_L1.append(l1_distance(mu_eps, mu))
        out.distance_kolmogorov.append(kolmogorov_distance(mu_eps, mu))
        out.lambdas.append(eigen.lam)
        out.pressures.append(math.log(eigen.lam))
    return out
