"""Equilibrium state mu = h nu, push-forwards, Rokhlin entropy and basin checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateDensity, InvalidParameter
from .hyptimes import orbits_batch
from .transfer import DiscreteMeasure, EigenData, branch_pieces, lebesgue_transport


@dataclass(frozen=True)
class EquilibriumState:
    measure: DiscreteMeasure
    density_vs_nu: np.ndarray
    density_sup: float
    density_inf: float
    phi_integral: float = math.nan
    entropy: float = math.nan
    entropy_alt: float = math.nan
    entropy_discrepancy: float = math.nan
    variational_defect: float = math.nan

    def summary(self):
        return {
            "density_sup": self.density_sup,
            "density_inf": self.density_inf,
            "phi_integral": self.phi_integral,
            "entropy": self.entropy,
            "entropy_alt": self.entropy_alt,
            "entropy_discrepancy": self.entropy_discrepancy,
            "variational_defect": self.variational_defect,
        }


def equilibrium_from_eigendata(eigen: EigenData, fmap=None, phi=None) -> EquilibriumState:
    """mu_j = h_j nu_j.  With ``fmap`` and ``phi`` the entropy fields are filled as well.

    Density extremes are taken over the support of nu only.
    """
    nu = eigen.eigenmeasure
    h = eigen.eigenfunction
    mu = DiscreteMeasure.normalized(nu.grid, h * nu.weights)
    supp = nu.weights > 0
    eq = EquilibriumState(
        measure=mu,
        density_vs_nu=h,
        density_sup=float(h[supp].max()),
        density_inf=float(h[supp].min()),
    )
    if fmap is None or phi is None:
        return eq
    phi_int = mu.integrate(phi)
    eq = replace(eq, phi_integral=phi_int)
    ent, alt = _rokhlin_forms(fmap, phi, eq, eigen)
    eq = replace(eq, entropy=ent, entropy_alt=alt, entropy_discrepancy=abs(ent - alt))
    return replace(eq, variational_defect=variational_defect(eq, eigen))


def _rokhlin_forms(fmap, phi, eq, eigen):
    if not eq.density_inf > 0:
        raise DegenerateDensity("dmu/dnu vanishes somewhere on supp nu")
    grid = eq.measure.grid
    log_lam = math.log(eigen.lam)
    phi_int = eq.phi_integral if math.isfinite(eq.phi_integral) else eq.measure.integrate(phi)
    with np.errstate(divide="ignore"):
        log_h = np.log(eq.density_vs_nu)
    mu = eq.measure.weights
    supp = mu > 0
    # integral of log h(f x) dmu: mu spread uniformly in each bin, h constant per bin
    row, col, _, y0, y1 = branch_pieces(fmap, grid)
    frac = (y1 - y0) / grid.widths[col]
    w = mu[col] * frac
    lh = log_h[row]
    keep = w > 0
    if np.any(~np.isfinite(lh[keep])):
        raise DegenerateDensity("mu charges the image of a bin where h vanishes")
    int_log_h_f = float(np.sum(w[keep] * lh[keep]))
    int_log_h = float(np.sum(mu[supp] * log_h[supp]))
    form_a = log_lam - phi_int + int_log_h_f - int_log_h
    form_b = log_lam - phi_int
    return form_a, form_b


def entropy_rokhlin(fmap, phi, eq: EquilibriumState, eigen: EigenData) -> float:
    """h_mu(f) = integral of log(lambda e^{-phi} h o f / h) dmu by grid quadrature."""
    return _rokhlin_forms(fmap, phi, eq, eigen)[0]


def variational_defect(eq: EquilibriumState, eigen: EigenData) -> float:
    return abs(eq.entropy + eq.phi_integral - math.log(eigen.lam))


def nu_transport(eigen: EigenData, fmap=None) -> sp.csr_matrix:
    """Row-stochastic push-forward consistent with the conformal measure nu.

    Mass in bin j splits over image bins i in proportion to nu_i A_ij, which
    is how nu itself distributes inside the bin.  Bins with nu_j = 0 fall
    back to Lebesgue-uniform transport when ``fmap`` is given.
    """
    A = eigen.matrix.entries
    nu = eigen.eigenmeasure.weights
    lam = eigen.lam
    pos = nu > 0
    inv = np.zeros_like(nu)
    inv[pos] = 1.0 / (lam * nu[pos])
    P = (sp.diags(inv) @ A.T.tocsr() @ sp.diags(nu)).tocsr()
    # renormalise away the power-iteration residual
    rs = np.asarray(P.sum(axis=1)).ravel()
    scale = np.zeros_like(rs)
    scale[rs > 0] = 1.0 / rs[rs > 0]
    P = (sp.diags(scale) @ P).tocsr()
    if fmap is not None and np.any(~pos):
        T = lebesgue_transport(fmap, eigen.grid)
        P = (P + sp.diags((~pos).astype(float)) @ T).tocsr()
    return P


def pushforward(measure: DiscreteMeasure, transport) -> DiscreteMeasure:
    return DiscreteMeasure(measure.grid, transport.T @ measure.weights)


def invariance_residual(measure: DiscreteMeasure, transport) -> float:
    return float(np.sum(np.abs(transport.T @ measure.weights - measure.weights)))


def cesaro_pushforward(fmap, nu: DiscreteMeasure, n: int, eigen: Optional[EigenData] = None,
                       transport=None) -> DiscreteMeasure:
    """(1/n) sum_{j<n} f^j_* nu on the grid.

    The transport defaults to the nu-consistent one when ``eigen`` is given
    and to Lebesgue-uniform bin transport otherwise.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if transport is None:
        transport = nu_transport(eigen, fmap) if eigen is not None else lebesgue_transport(fmap, nu.grid)
    PT = transport.T.tocsr()
    w = nu.weights.copy()
    acc = np.zeros_like(w)
    for _ in range(n):
        acc += w
        w = PT @ w
    return DiscreteMeasure(nu.grid, acc / n)


def typical_orbits(fmap, eigen: EigenData, phi, start: DiscreteMeasure, samples: int, n: int, rng):
    """Orbit segments of length n + 1 for points typical for mu = h nu.

    Built backwards: from y_0 drawn from ``start``, each step picks a preimage
    g_i(y) with probability proportional to e^{phi(g_i y)} h(g_i y).  Inverse
    branches contract, so the reversed sequence is an accurate forward orbit
    of its first point, unlike forward float iteration of an expanding map.
    Returns an array (samples, n + 1) whose row k is (x, f x, ..., f^n x).
    """
    grid = eigen.grid
    h = eigen.eigenfunction
    y = start.sample(samples, rng)
    out = np.empty((samples, n + 1))
    out[:, n] = y
    for k in range(n - 1, -1, -1):
        table = fmap.preimage_table(y)
        W = np.zeros((len(table), samples))
        X = np.zeros((len(table), samples))
        for i, (m, x) in enumerate(table):
            if np.any(m):
                X[i, m] = x[m]
                W[i, m] = np.exp(phi(x[m])) * h[grid.locate(x[m])]
        tot = W.sum(axis=0)
        if np.any(tot <= 0):
            raise DegenerateDensity("no admissible preimage with positive weight")
        cum = np.cumsum(W / tot, axis=0)
        u = rng.random(samples)
        pick = np.minimum((u[None, :] > cum).sum(axis=0), len(table) - 1)
        y = X[pick, np.arange(samples)]
        out[:, k] = y
    return out


def basin_check(fmap, eq: EquilibriumState, nu: DiscreteMeasure, test_functions: Sequence,
                n: int, samples: int, seed: int, eigen: Optional[EigenData] = None, phi=None) -> float:
    """max over psi of |median Birkhoff average of psi - integral psi dmu|.

    With ``eigen`` and ``phi`` the orbits come from :func:`typical_orbits`
    started at ``nu``; otherwise starting points are drawn from ``nu`` and
    iterated forward.
    """
    rng = np.random.default_rng(seed)
    if eigen is not None and phi is not None:
        pts = typical_orbits(fmap, eigen, phi, nu, samples, n, rng)
    else:
        pts = orbits_batch(fmap, nu.sample(samples, rng), n, rng)
    pts = pts[:, :n]
    worst = 0.0
    for psi in test_functions:
        avg = np.nanmedian(np.mean(psi(pts), axis=1))
        worst = max(worst, abs(float(avg) - eq.measure.integrate(psi)))
    return worst
