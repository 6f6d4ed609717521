import math

import numpy as np
import pytest

from gibbsforge.dynamics import builtin_map, linear_full_branch
from gibbsforge.equilibrium import (
    basin_check,
    cesaro_pushforward,
    equilibrium_from_eigendata,
    invariance_residual,
    nu_transport,
    pushforward,
)
from gibbsforge.potentials import builtin_potential, constant_potential, zero_potential
from gibbsforge.transfer import DiscreteMeasure, compute_eigendata, l1_distance, make_grid, uniform_grid

DOUBLING = builtin_map("doubling")
SLOPES = linear_full_branch([3.0, 1.5])
PITCHFORK = builtin_map("pitchfork_doubling", (0.8, 0.05))
SLOPES_ENTROPY = math.log(3) / 3 + 2 * math.log(1.5) / 3


def _state(fmap, phi, N):
    eig = compute_eigendata(fmap, phi, make_grid(fmap, N))
    return eig, equilibrium_from_eigendata(eig, fmap, phi)


@pytest.fixture(scope="module")
def pitchfork_state():
    return _state(PITCHFORK, zero_potential(), 2048)


def test_doubling_equilibrium():
    eig, eq = _state(DOUBLING, zero_potential(), 1024)
    assert np.max(np.abs(eq.measure.density - 1.0)) <= 1e-8
    assert eq.entropy == pytest.approx(math.log(2), abs=1e-6)
    assert eq.entropy == pytest.approx(eig.pressure, abs=1e-9)
    assert eq.phi_integral == 0.0
    assert eq.variational_defect <= 1e-6


def test_doubling_constant_potential_entropy():
    _, eq = _state(DOUBLING, constant_potential(-math.log(2)), 256)
    assert eq.entropy == pytest.approx(math.log(2), abs=1e-9)
    assert eq.variational_defect <= 1e-9


@pytest.mark.parametrize("slopes", [(3.0, 1.5), (2.0, 2.0), (4.0, 2.0, 4.0)])
def test_piecewise_linear_lebesgue(slopes):
    fmap = linear_full_branch(slopes)
    phi = builtin_potential("minus_t_log_deriv", (1.0,), fmap)
    eig, eq = _state(fmap, phi, 1024)
    assert np.max(np.abs(eq.measure.weights - eig.grid.widths)) <= 1e-8
    assert np.max(np.abs(eq.density_vs_nu - 1.0)) <= 1e-8


def test_slopes_entropy_oracle():
    assert SLOPES_ENTROPY == pytest.approx(0.63651, abs=1e-5)
    phi = builtin_potential("minus_t_log_deriv", (1.0,), SLOPES)
    _, eq = _state(SLOPES, phi, 1024)
    assert eq.entropy == pytest.approx(SLOPES_ENTROPY, abs=1e-6)
    assert eq.phi_integral == pytest.approx(-SLOPES_ENTROPY, abs=1e-6)
    assert eq.variational_defect <= 1e-6


def test_slopes_half_defect():
    phi = builtin_potential("minus_t_log_deriv", (0.5,), SLOPES)
    eig, eq = _state(SLOPES, phi, 4096)
    assert eig.lam == pytest.approx(3 ** -0.5 + 1.5 ** -0.5, abs=1e-9)
    assert eq.variational_defect <= 1e-2


def test_mp_density_bounds():
    mp = builtin_map("manneville_pomeau_circle", (0.25,))
    _, eq = _state(mp, builtin_potential("minus_log_deriv_plus_beta", (0.5,), mp), 2048)
    assert 0.0 < eq.density_inf <= eq.density_sup < math.inf


@pytest.mark.parametrize("name,params,pot,pparams", [
    ("doubling", (), "zero", ()),
    ("linear_full_branch", (3.0, 1.5), "minus_t_log_deriv", (0.5,)),
    ("manneville_pomeau_circle", (0.25,), "minus_log_deriv_plus_beta", (0.5,)),
    ("pitchfork_doubling", (0.8, 0.05), "zero", ()),
    ("cantor_unimodal", (), "zero", ()),
    ("cantor_unimodal", (), "minus_t_log_deriv", (0.5,)),
])
def test_invariance_and_rokhlin(name, params, pot, pparams):
    fmap = builtin_map(name, params)
    phi = builtin_potential(pot, pparams, fmap)
    N = 1024
    eig, eq = _state(fmap, phi, N)
    P = nu_transport(eig, fmap)
    rows = np.asarray(P.sum(axis=1)).ravel()
    # bins lying in a gap of a partial-domain map have no image
    inside = fmap.branch_index(eig.grid.midpoints) >= 0
    assert np.allclose(rows[inside], 1.0, atol=1e-12) and np.all(rows[~inside] == 0.0)
    assert invariance_residual(eq.measure, P) <= 3 / N
    assert eq.entropy_discrepancy <= 5 / N


def test_cesaro_examples(pitchfork_state):
    nu = DiscreteMeasure.lebesgue(uniform_grid(512))
    avg = cesaro_pushforward(DOUBLING, nu, 37)
    assert np.max(np.abs(avg.weights - nu.weights)) <= 1e-15
    eig, eq = pitchfork_state
    one = cesaro_pushforward(PITCHFORK, eig.eigenmeasure, 1, eigen=eig)
    assert np.array_equal(one.weights, eig.eigenmeasure.weights)
    dists = [l1_distance(cesaro_pushforward(PITCHFORK, eig.eigenmeasure, n, eigen=eig), eq.measure)
             for n in (25, 50, 100, 200)]
    assert dists[-1] < 0.05
    assert all(b <= a for a, b in zip(dists, dists[1:]))


def test_pushforward_preserves_mass(pitchfork_state):
    eig, eq = pitchfork_state
    P = nu_transport(eig, PITCHFORK)
    assert pushforward(eq.measure, P).total == pytest.approx(1.0, abs=1e-12)


def test_basin_doubling():
    nu = DiscreteMeasure.lebesgue(uniform_grid(256))
    _, eq = _state(DOUBLING, zero_potential(), 256)
    d = basin_check(DOUBLING, eq, nu, [lambda x: x], 10_000, 50, seed=0)
    assert d <= 0.02
    assert basin_check(DOUBLING, eq, nu, [np.ones_like], 100, 20, seed=0) == pytest.approx(0.0, abs=1e-12)


def test_basin_pitchfork(pitchfork_state):
    eig, eq = pitchfork_state
    d = basin_check(PITCHFORK, eq, eig.eigenmeasure, [lambda x: np.cos(2 * np.pi * x)], 10_000, 200,
                    seed=1, eigen=eig, phi=zero_potential())
    assert d <= 0.05
