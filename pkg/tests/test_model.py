import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotorchain.model import (
    ILL_DEFINED,
    ModelParams,
    bond_increments,
    good_interval_count,
    grad_hamiltonian,
    hamiltonian,
    is_bad_event,
    phase_minimizer,
    winding_number,
    wrap,
)

from conftest import random_state


# ---------------------------------------------------------------- wrap

def test_wrap_identity():
    assert wrap(0.0) == 0.0


def test_wrap_boundary_cases():
    # the representative convention is (-pi, pi]: both 3 pi and -pi map to +pi
    assert wrap(3 * math.pi) == math.pi
    assert wrap(-math.pi) == math.pi
    assert wrap(math.pi) == math.pi


def test_wrap_rejects_non_finite():
    with pytest.raises(ValueError):
        wrap(float("nan"))
    with pytest.raises(ValueError):
        wrap(float("inf"))


@given(st.floats(-1e6, 1e6))
def test_wrap_range_and_congruence(theta):
    w = wrap(theta)
    assert -math.pi < w <= math.pi
    # congruent mod 2 pi (tolerance scales with the size of the input)
    k = (theta - w) / (2 * math.pi)
    assert abs(k - round(k)) < 1e-9 * max(1.0, abs(theta))


@given(st.floats(-50.0, 50.0))
def test_wrap_idempotent(theta):
    w = wrap(theta)
    assert wrap(w) == w


# ---------------------------------------------------------------- hamiltonian

def test_hamiltonian_constant_configuration():
    p = ModelParams(N=12, J=3.0, sigma=1.0)
    assert hamiltonian(np.full(12, 0.7), p) == pytest.approx(-3.0 * 12)


@pytest.mark.parametrize("k", [-2, -1, 0, 1, 3])
def test_hamiltonian_phase_minimizers(k):
    p = ModelParams(N=16, J=2.5, sigma=1.0)
    x = phase_minimizer(p, k)
    assert hamiltonian(x, p) == pytest.approx(-2.5 * 16 * math.cos(2 * math.pi * k / 16))


def test_hamiltonian_quarter_turns_vanishes():
    # four bonds of pi/2 each: every cosine is zero
    p = ModelParams(N=4, J=1.0, sigma=1.0)
    x = wrap(np.array([0.0, math.pi / 2, math.pi, 3 * math.pi / 2]))
    assert hamiltonian(x, p) == pytest.approx(0.0, abs=1e-12)


@given(st.integers(3, 64), st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_hamiltonian_global_rotation_invariance(n, seed):
    p = ModelParams(N=n, J=1.7, sigma=0.9)
    x = random_state(n, seed)
    c = np.random.default_rng(seed + 1).uniform(-math.pi, math.pi)
    assert hamiltonian(wrap(x + c), p) == pytest.approx(hamiltonian(x, p), abs=1e-9 * n)


@given(st.integers(3, 64), st.integers(0, 2**32 - 1), st.integers(1, 63))
@settings(max_examples=25, deadline=None)
def test_hamiltonian_cyclic_shift_invariance(n, seed, shift):
    p = ModelParams(N=n, J=1.0, sigma=1.0, field_B=0.4)
    x = random_state(n, seed)
    assert hamiltonian(np.roll(x, shift % n), p) == pytest.approx(
        hamiltonian(x, p), abs=1e-9 * n
    )


# ---------------------------------------------------------------- gradient

def test_grad_zero_at_constant_configuration():
    p = ModelParams(N=9, J=4.0, sigma=1.0)
    np.testing.assert_allclose(grad_hamiltonian(np.full(9, -1.2), p), 0.0, atol=1e-14)


def test_grad_zero_at_phase_minimizers():
    p = ModelParams(N=8, J=5.0, sigma=1.0)
    np.testing.assert_allclose(
        grad_hamiltonian(phase_minimizer(p, 2), p), 0.0, atol=1e-12
    )


def _fd_gradient(x, p, h=1e-5):
    g = np.empty(len(x))
    for i in range(len(x)):
        up = x.copy()
        dn = x.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (hamiltonian(up, p) - hamiltonian(dn, p)) / (2 * h)
    return g


@pytest.mark.parametrize("field", [0.0, 0.6])
def test_grad_matches_finite_differences(field):
    p = ModelParams(N=5, J=2.0, sigma=1.0, field_B=field)
    x = random_state(5, 77)
    g = grad_hamiltonian(x, p)
    fd = _fd_gradient(x, p)
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-8)


@given(st.integers(3, 48), st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_grad_sums_to_zero_without_field(n, seed):
    p = ModelParams(N=n, J=3.0, sigma=1.0)
    assert abs(grad_hamiltonian(random_state(n, seed), p).sum()) < 1e-10 * n


# ---------------------------------------------------------------- winding

def test_winding_single_turn():
    p = ModelParams(N=24, J=1.0, sigma=1.0)
    x = wrap(2 * math.pi * np.arange(24) / 24)
    assert winding_number(x) == 1


def test_winding_constant_is_zero():
    assert winding_number(np.full(7, 2.0)) == 0


def test_winding_minus_two_turns():
    p = ModelParams(N=10, J=1.0, sigma=1.0)
    assert winding_number(phase_minimizer(p, -2)) == -2


def test_winding_ill_defined_at_pi_bond():
    assert winding_number(np.array([0.0, math.pi, 0.0])) is ILL_DEFINED


def test_winding_bound():
    # wrapped bonds are at most pi, so |W| <= N/2 for any state
    for seed in range(20):
        x = random_state(11, seed)
        w = winding_number(x)
        assert w is ILL_DEFINED or abs(w) <= 11 / 2


@given(st.integers(4, 40), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_winding_homotopy_invariance(n, seed):
    """Perturbations too small for any bond to cross pi leave W unchanged."""
    gen = np.random.default_rng(seed)
    k = int(gen.integers(-1, 2))
    x = phase_minimizer(ModelParams(N=n, J=1.0, sigma=1.0), k)
    margin = (math.pi - np.max(np.abs(bond_increments(x)))) / 2.01
    pert = gen.uniform(-margin, margin, n)
    assert winding_number(wrap(x + pert)) == k


@given(st.integers(3, 40), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_winding_rotation_and_shift_invariance(n, seed):
    x = random_state(n, seed)
    w = winding_number(x)
    if w is ILL_DEFINED:
        return
    c = np.random.default_rng(seed + 9).uniform(-math.pi, math.pi)
    assert winding_number(wrap(x + c)) == w
    assert winding_number(np.roll(x, 3)) == w


@given(st.integers(3, 40), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_winding_orientation_flip(n, seed):
    x = random_state(n, seed)
    w = winding_number(x)
    if w is ILL_DEFINED:
        return
    assert winding_number(x[::-1].copy()) == -w


# ---------------------------------------------------------------- good intervals

def test_good_intervals_constant_configuration():
    x = np.full(12, 0.3)
    for r in (1, 2, 3, 5, 12):
        assert good_interval_count(x, r, 0.01) == 12 // r


def test_good_intervals_single_turn():
    # every bond of the one-turn state is 2 pi / N, good as soon as 3 delta
    # reaches that
    n = 16
    x = wrap(2 * math.pi * np.arange(n) / n)
    assert good_interval_count(x, 2, 2 * math.pi / (3 * n) + 1e-12) == n // 2


def test_good_intervals_with_pi_bond():
    # A half-turn step up forces a second pi bond at the closure: intervals
    # containing either are bad, all others good.  (A ring state with exactly
    # one pi bond cannot exist: wrapped bonds must sum to a multiple of 2 pi.)
    x = np.zeros(10)
    x[9] = math.pi
    assert good_interval_count(x, 1, 0.1) == 8


def test_good_intervals_validation():
    with pytest.raises(ValueError):
        good_interval_count(np.zeros(5), 6, 0.1)
    with pytest.raises(ValueError):
        good_interval_count(np.zeros(5), 2, 0.0)


def test_bad_event_trivial_cases():
    # r = N: the single block is always good and floor(N/2r) = 0
    x = random_state(12, 3)
    assert not is_bad_event(x, 12, math.pi)
    # disordered chain with tiny delta: no good blocks at all
    assert is_bad_event(random_state(64, 4), 8, 1e-6)


# ---------------------------------------------------------------- params

def test_params_kappa():
    p = ModelParams(N=10, J=20.0, sigma=3.0)
    assert p.kappa == pytest.approx(20.0 / 18.0)
    assert p.coupling_ratio == pytest.approx(20.0 / 9.0)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(N=2, J=1.0, sigma=1.0)
    with pytest.raises(ValueError):
        ModelParams(N=5, J=0.0, sigma=1.0)
    with pytest.raises(ValueError):
        ModelParams(N=5, J=1.0, sigma=-1.0)
