import math

import numpy as np
import pytest

from rotorchain.model import ModelParams
from rotorchain.theory import (
    GRID_STEP,
    KTooSmallError,
    MomentSet,
    asymptotic_moments,
    bessel_i,
    char_coefficients,
    clt_check_scale,
    default_support,
    g_density,
    is_even_and_unimodal,
    lattice_total,
    local_limit_constant,
    moments,
    timescale,
    winding_distribution,
    _conv_power_at_integers,
)


def params(n, ratio, sigma=1.0):
    """ModelParams with the given J / sigma^2."""
    return ModelParams(N=n, J=ratio * sigma**2, sigma=sigma)


# ---------------------------------------------------------------- bessel

def _i_series(order, x, terms=30):
    """Reference power series sum_k (x/2)^(2k+order) / (k! (k+order)!)."""
    total = 0.0
    for k in range(terms):
        total += (x / 2) ** (2 * k + order) / (
            math.factorial(k) * math.factorial(k + order)
        )
    return total


def test_bessel_trivial_values():
    assert bessel_i(0, 0.0) == 1.0
    assert bessel_i(1, 0.0) == 0.0


def test_bessel_against_power_series():
    assert bessel_i(0, 1.0) == pytest.approx(1.2660658777520082, rel=1e-12)
    for x in (0.5, 1.0, 3.0, 7.5, 14.0):
        assert bessel_i(0, x) == pytest.approx(_i_series(0, x), rel=1e-12)
        assert bessel_i(1, x) == pytest.approx(_i_series(1, x), rel=1e-12)


def test_bessel_validation():
    with pytest.raises(ValueError):
        bessel_i(0, -1.0)
    with pytest.raises(ValueError):
        bessel_i(2, 1.0)


# ---------------------------------------------------------------- moments

def test_moments_uniform_case():
    m = moments(0.0)
    assert m.m == pytest.approx(2 * math.pi, rel=1e-12)
    assert m.s2 == pytest.approx(1.0 / 12.0, rel=1e-10)
    assert m.beta3 == pytest.approx(1.0 / 32.0, rel=1e-10)


def test_moments_match_normalizer_identity():
    for kappa in (0.5, 2.0, 10.0, 50.0, 200.0):
        m = moments(kappa)
        assert m.m == pytest.approx(2 * math.pi * bessel_i(0, kappa), rel=1e-10)


def test_moments_laplace_asymptotics_at_50():
    m = moments(50.0)
    ref = asymptotic_moments(50.0)
    assert m.m == pytest.approx(ref.m, rel=0.02)
    assert m.s2 == pytest.approx(ref.s2, rel=0.05)


def test_moments_beta3_asymptotics():
    m = moments(200.0)
    assert m.beta3 == pytest.approx(asymptotic_moments(200.0).beta3, rel=0.05)


def test_moments_lyapunov_ordering():
    for kappa in (0.0, 0.5, 2.0, 10.0, 50.0):
        m = moments(kappa)
        assert m.beta3 >= m.s2**1.5


def test_momentset_rejects_bad_ordering():
    with pytest.raises(ValueError):
        MomentSet(kappa=1.0, m=1.0, s2=0.25, beta3=0.01)


# ---------------------------------------------------------------- winding law

def test_two_uniform_increments_never_wind():
    # triangular density of two uniforms vanishes at +-1: the two-bond chain
    # (below the N >= 3 model floor, so via the raw grid) never winds
    vals = _conv_power_at_integers(2, 0.0, 2, GRID_STEP, 1)
    probs = vals / vals.sum()
    assert probs[2] == pytest.approx(1.0, abs=1e-9)
    assert probs[1] == pytest.approx(0.0, abs=1e-9)


def test_oracle_is_normalized_and_even():
    d = winding_distribution(params(64, 6.0), 7)
    assert d.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(d.probabilities, d.probabilities[::-1])


def test_oracle_matches_poisson_total():
    # independent route: sum over integers of the convolution power equals
    # the character sum over integer frequencies
    for n, ratio in ((16, 2.0), (64, 6.0), (256, 20.0)):
        p = params(n, ratio)
        K = default_support(p)
        vals = _conv_power_at_integers(n, p.kappa, K, GRID_STEP, 1)
        assert vals.sum() == pytest.approx(lattice_total(n, p.kappa), rel=1e-9)


def test_oracle_unimodal_on_grid():
    for n in (16, 64):
        for ratio in (0.0 + 1e-9, 2.0, 20.0):
            d = winding_distribution(params(n, ratio), default_support(params(n, ratio)))
            assert is_even_and_unimodal(d.probabilities)


def test_oracle_k_too_small():
    with pytest.raises(KTooSmallError):
        winding_distribution(params(64, 0.5), 1)


def test_oracle_frozen_regime():
    # J/sigma^2 >> N: all mass at W = 0
    d = winding_distribution(params(8, 320.0), 2)
    assert d.prob(0) >= 0.99


def test_oracle_clt_regime_variance():
    # J/sigma^2 << N: the law is Gaussian on the lattice with variance N s^2
    p = params(4096, 8.0)
    d = winding_distribution(p, default_support(p))
    ns2 = p.N * moments(p.kappa).s2
    assert d.variance() == pytest.approx(ns2, rel=0.01)


def test_g_density_normalized():
    for kappa in (0.0, 3.0, 30.0):
        ys = np.linspace(-0.5, 0.5, 20001)
        mass = np.trapezoid(g_density(ys, kappa), ys)
        assert mass == pytest.approx(1.0, rel=1e-6)


def test_char_coefficients_shrink():
    r = char_coefficients(3.0, 10)
    assert r[0] == 1.0
    assert np.all(np.diff(r) < 0)


# ---------------------------------------------------------------- clt scale

def test_clt_scale_hand_value():
    assert clt_check_scale(ModelParams(N=100, J=20.0, sigma=3.0)) == pytest.approx(
        0.6623, abs=2e-4
    )


def test_clt_scale_algebraic_identity():
    # scale^2 * (2 sigma^2 N) / (4 pi^2 J) == 1 for any parameters
    for p in (params(17, 3.3), ModelParams(N=40, J=8.0, sigma=0.45)):
        s = clt_check_scale(p)
        assert s**2 * (2 * p.sigma**2 * p.N) / (4 * math.pi**2 * p.J) == pytest.approx(1.0)


# ---------------------------------------------------------------- timescale

def test_timescale_hand_values():
    t20 = timescale(ModelParams(N=20, J=20.0, sigma=3.0), 0.0)
    assert t20.t_center == pytest.approx(0.4613, abs=2e-4)
    t100 = timescale(ModelParams(N=100, J=20.0, sigma=3.0), 0.0)
    assert t100.t_center == pytest.approx(0.09226, abs=5e-5)


def test_timescale_doubling_n_halves_center():
    a = timescale(params(16, 4.0), 0.2)
    b = timescale(params(32, 4.0), 0.2)
    assert a.t_center == pytest.approx(2 * b.t_center, rel=1e-12)
    assert b.t_lower < b.t_center < b.t_upper


def test_timescale_log_space_survives_huge_exponents():
    t = timescale(ModelParams(N=1000, J=5000.0, sigma=1.0), 0.1)
    assert t.log_t_center == pytest.approx(5000.0 - math.log(1000))
    assert math.isinf(t.t_center)  # exp overflows; the log field is the API


def test_timescale_validation():
    with pytest.raises(ValueError):
        timescale(params(10, 2.0), 1.5)


# ---------------------------------------------------------------- local limit

def test_local_limit_constant_is_modest():
    c = local_limit_constant(params(1024, 8.0), kmax=3)
    print(f"[local-limit] fitted C = {c:.4f} at N=1024, J/sigma^2=8")
    assert 0 < c < 50
