import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbsforge.dynamics import builtin_map, check_hypotheses, linear_full_branch
from gibbsforge.errors import InvalidParameter, NotHyperbolicTime
from gibbsforge.gibbs import (
    default_delta,
    distortion_bound,
    distortion_ratio,
    dynamical_ball,
    gibbs_ratio,
    gibbs_ratios_at_hyperbolic_times,
    is_hyperbolic_time,
)
from gibbsforge.potentials import Potential, builtin_potential, zero_potential
from gibbsforge.transfer import compute_eigendata, make_grid, uniform_grid

DOUBLING = builtin_map("doubling")
PITCHFORK = builtin_map("pitchfork_doubling", (0.8, 0.05))
C_PITCHFORK = check_hypotheses(PITCHFORK, zero_potential(), gamma=0.5).admissible_c


@pytest.fixture(scope="module")
def doubling_eigen():
    return compute_eigendata(DOUBLING, zero_potential(), uniform_grid(1024))


def test_doubling_ball_closed_form():
    rng = np.random.default_rng(0)
    for x in rng.random(20):
        for n in range(0, 12):
            ball = dynamical_ball(DOUBLING, x, n, 0.25)
            assert ball.width == pytest.approx(0.5 * 2.0 ** -n, rel=1e-12)
            assert -ball.lo == pytest.approx(ball.hi, rel=1e-9)


def test_ball_at_zero_length():
    ball = dynamical_ball(PITCHFORK, 0.3, 0, 0.1)
    assert (ball.lo, ball.hi) == (-0.1, 0.1)


def test_delta_bounds():
    with pytest.raises(InvalidParameter):
        dynamical_ball(DOUBLING, 0.3, 2, 0.3)
    assert default_delta(DOUBLING) == 0.05
    assert default_delta(PITCHFORK) == pytest.approx(0.1)


def test_mp_ball_contracts_at_hyperbolic_time():
    mp = builtin_map("manneville_pomeau_circle", (0.5,))
    c = check_hypotheses(mp, zero_potential(), gamma=0.5).admissible_c
    assert is_hyperbolic_time(mp, 0.9, 3, c)
    ball = dynamical_ball(mp, 0.9, 3, 0.1)
    assert 0.0 < ball.width <= 0.2 * math.exp(-3 * c / 2)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(0.0, 1.0, exclude_max=True), n=st.integers(0, 15))
def test_nesting(x, n):
    outer = dynamical_ball(PITCHFORK, x, n, 0.1)
    inner = dynamical_ball(PITCHFORK, x, n + 1, 0.1)
    assert outer.lo - 1e-15 <= inner.lo and inner.hi <= outer.hi + 1e-15


def test_ball_size_at_hyperbolic_times():
    rng = np.random.default_rng(4)
    checked = 0
    for x in rng.random(200):
        for n in range(1, 16):
            if is_hyperbolic_time(PITCHFORK, x, n, C_PITCHFORK):
                ball = dynamical_ball(PITCHFORK, x, n, 0.1)
                assert ball.width <= 0.2 * math.exp(-C_PITCHFORK * n / 2) * (1 + 1e-12)
                checked += 1
    assert checked > 100


def test_distortion_examples(doubling_eigen):
    ball = dynamical_ball(DOUBLING, 0.3, 8, 0.25)
    assert distortion_ratio(DOUBLING, zero_potential(), doubling_eigen, ball) == 1.0
    wave = Potential(lambda x: np.sin(2 * np.pi * x) / (2 * np.pi), 1.0, 1.0, "wave")
    c = check_hypotheses(DOUBLING, wave).admissible_c
    K0 = distortion_bound(1.0, 1.0, c, 0.25)
    rng = np.random.default_rng(1)
    for x in rng.random(30):
        for n in (1, 5, 10, 20):
            ball = dynamical_ball(DOUBLING, x, n, 0.25)
            assert distortion_ratio(DOUBLING, wave, doubling_eigen, ball) <= K0


def test_distortion_never_exceeds_series_bound():
    phi = builtin_potential("minus_t_log_deriv", (0.5,), PITCHFORK)
    eig = compute_eigendata(PITCHFORK, phi, make_grid(PITCHFORK, 512))
    c = check_hypotheses(PITCHFORK, phi, gamma=0.5).admissible_c
    K0 = distortion_bound(phi.hoelder_constant, phi.hoelder_exponent, c, 0.1)
    rng = np.random.default_rng(2)
    for x in rng.random(50):
        for n in range(1, 21):
            if is_hyperbolic_time(PITCHFORK, x, n, c):
                ball = dynamical_ball(PITCHFORK, x, n, 0.1)
                assert distortion_ratio(PITCHFORK, phi, eig, ball) <= K0


def test_doubling_gibbs_ratio(doubling_eigen):
    nu = doubling_eigen.eigenmeasure
    rng = np.random.default_rng(3)
    for x in rng.random(30):
        for n in range(1, 21):
            r = gibbs_ratio(DOUBLING, zero_potential(), doubling_eigen, nu, x, n, 0.25, 0.1)
            assert r == pytest.approx(0.5, abs=1e-3)


def test_gibbs_ratio_requires_hyperbolic_time():
    eig = compute_eigendata(PITCHFORK, zero_potential(), make_grid(PITCHFORK, 256))
    # the fixed point 0 has slope 2 + K w but nearby points linger in the slope dip
    x = 0.02
    n = next(n for n in range(1, 20) if not is_hyperbolic_time(PITCHFORK, x, n, C_PITCHFORK))
    with pytest.raises(NotHyperbolicTime):
        gibbs_ratio(PITCHFORK, zero_potential(), eig, eig.eigenmeasure, x, n, 0.1, C_PITCHFORK)


def test_slopes_gibbs_ratio_exact():
    fmap = linear_full_branch([3.0, 1.5])
    phi = builtin_potential("minus_t_log_deriv", (1.0,), fmap)
    eig = compute_eigendata(fmap, phi, make_grid(fmap, 3000))
    delta = 0.01
    rng = np.random.default_rng(6)
    hits = 0
    for x in rng.random(400):
        n = 4
        orbit = [x]
        for _ in range(n):
            orbit.append(float(fmap.forward(np.array([orbit[-1]]))[0]))
        # keep orbits whose delta-neighbourhoods never meet a breakpoint
        if any(min(abs(y - b) for b in (0.0, 1 / 3, 1.0)) <= delta for y in orbit):
            continue
        r = gibbs_ratio(fmap, phi, eig, eig.eigenmeasure, x, n, delta, 0.1, check=False)
        assert r == pytest.approx(2 * delta, rel=1e-6)
        hits += 1
    assert hits > 20


def _pitchfork_K(N, xs):
    eig = compute_eigendata(PITCHFORK, zero_potential(), make_grid(PITCHFORK, N))
    return gibbs_ratios_at_hyperbolic_times(PITCHFORK, zero_potential(), eig, eig.eigenmeasure,
                                            xs, 20, 0.1, C_PITCHFORK)


def test_pitchfork_gibbs_interval_stable():
    xs = np.random.default_rng(3).random(100)
    s1 = _pitchfork_K(1024, xs)
    s2 = _pitchfork_K(2048, xs)
    assert s1.ratio.size > 100
    for s in (s1, s2):
        assert np.all(s.ratio >= 1 / s.K) and np.all(s.ratio <= s.K)
        assert s.ratio.max() / s.ratio.min() <= s.K ** 2
    assert abs(s2.K - s1.K) <= 0.2 * s1.K


def test_resolved_and_direct_masses_agree_on_wide_balls():
    eig = compute_eigendata(PITCHFORK, zero_potential(), make_grid(PITCHFORK, 4096))
    nu = eig.eigenmeasure
    for x in (0.13, 0.37, 0.61, 0.88):
        # at n = 1 the ball spans hundreds of bins, so both measurements see the same nu
        a = gibbs_ratio(PITCHFORK, zero_potential(), eig, nu, x, 1, 0.1, C_PITCHFORK, check=False)
        b = gibbs_ratio(PITCHFORK, zero_potential(), eig, nu, x, 1, 0.1, C_PITCHFORK, check=False,
                        resolve_bins=0)
        assert a == pytest.approx(b, rel=5e-3)
