"""Deterministic oracles for the equilibrium winding laws and timescales.

Everything here is closed-form or quadrature/FFT numerics with explicit
accuracy checks; no sampling.  The increment density on the circle is

    h(x) = exp(kappa cos x) / m,    m = 2 pi I0(kappa),

with kappa = J / (2 sigma^2), and g denotes the density of the rescaled
representative rho / (2 pi) on [-1/2, 1/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .model import TWO_PI, ModelParams

#: Default grid step for the convolution-power oracle.  The operation
#: contract requires step <= 2^-10; this finer default keeps the Richardson
#: check comfortably under its 1e-8 threshold for every kappa, including the
#: jump-dominated kappa = 0 case.
GRID_STEP = 2.0**-14

RICHARDSON_TOL = 1e-8
ALIAS_TOL = 1e-10
TAIL_MASS_TOL = 1e-9


class KTooSmallError(ValueError):
    """The requested support [-K, K] misses more than the allowed tail mass."""


def bessel_i(order: int, kappa: float) -> float:
    """Modified Bessel function of the first kind, orders 0 and 1.

    Delegates to scipy's exponentially-scaled implementation so that large
    kappa neither overflows nor loses relative accuracy.
    """
    if order not in (0, 1):
        raise ValueError(f"bessel_i: order must be 0 or 1, got {order}")
    if kappa < 0:
        raise ValueError("bessel_i: kappa must be >= 0")
    return float(special.ive(order, kappa) * math.exp(kappa))


def log_bessel_i0(kappa: float) -> float:
    """log I0(kappa), safe for arbitrarily large kappa."""
    if kappa < 0:
        raise ValueError("log_bessel_i0: kappa must be >= 0")
    return float(np.log(special.ive(0, kappa)) + kappa)


@dataclass(frozen=True)
class MomentSet:
    """Normalizer and absolute moments of the rescaled increment rho / 2 pi."""

    kappa: float
    m: float
    s2: float
    beta3: float

    def __post_init__(self):
        if not self.s2 > 0:
            raise ValueError("MomentSet: s2 must be positive")
        if self.beta3 < self.s2**1.5 * (1 - 1e-12):
            raise ValueError("MomentSet: Lyapunov ordering beta3 >= s2^(3/2) violated")


def _g_scaled(y: np.ndarray, kappa: float) -> np.ndarray:
    """g(y) = exp(kappa cos 2 pi y) / I0(kappa), in overflow-free form.

    The e^kappa factors of numerator and scaled Bessel function cancel, so
    this is exact for any kappa.
    """
    return np.exp(kappa * (np.cos(TWO_PI * y) - 1.0)) / special.ive(0, kappa)


def g_density(y, kappa: float):
    """Density of rho / 2 pi on [-1/2, 1/2] (zero outside)."""
    y = np.asarray(y, dtype=float)
    out = np.where(np.abs(y) <= 0.5, _g_scaled(y, kappa), 0.0)
    return out if out.ndim else float(out)


def moments(kappa: float) -> MomentSet:
    """m = 2 pi I0(kappa); s2 and beta3 by adaptive quadrature of g."""
    if kappa < 0:
        raise ValueError("moments: kappa must be >= 0")
    m = TWO_PI * bessel_i(0, kappa)

    def s2_int(y):
        return y * y * _g_scaled(y, kappa)

    def b3_int(y):
        return abs(y) ** 3 * _g_scaled(y, kappa)

    points = (0.0,) if kappa > 5 else None
    s2 = integrate.quad(s2_int, -0.5, 0.5, epsabs=1e-12, limit=200, points=points)[0]
    beta3 = integrate.quad(b3_int, -0.5, 0.5, epsabs=1e-12, limit=200, points=points)[0]
    return MomentSet(kappa=kappa, m=m, s2=s2, beta3=beta3)


def asymptotic_moments(kappa: float) -> MomentSet:
    """Laplace-method asymptotics of (m, s2, beta3) as kappa -> infinity.

    With sigma^2 / J = 1 / (2 kappa):
        m     ~ 2 sqrt(pi) e^kappa (2 kappa)^(-1/2)
        s2    ~ 2 (2 pi)^-2 (2 kappa)^-1
        beta3 ~ (8 (2 pi)^-3 / sqrt(pi)) (2 kappa)^(-3/2)
    """
    s2j = 1.0 / (2.0 * kappa)
    return MomentSet(
        kappa=kappa,
        m=2.0 * math.sqrt(math.pi) * math.exp(kappa) * math.sqrt(s2j),
        s2=2.0 * (TWO_PI**-2) * s2j,
        beta3=8.0 * (TWO_PI**-3) / math.sqrt(math.pi) * s2j**1.5,
    )


@dataclass(frozen=True)
class WindingDistribution:
    """Law of the winding number on the integer support [-K, K]."""

    support: np.ndarray
    probabilities: np.ndarray
    provenance: str  # "ORACLE" or "EMPIRICAL"
    n_samples: int = 0

    def __post_init__(self):
        if self.provenance not in ("ORACLE", "EMPIRICAL"):
            raise ValueError("provenance must be ORACLE or EMPIRICAL")
        if self.support.shape != self.probabilities.shape:
            raise ValueError("support/probabilities shape mismatch")
        if np.any(self.probabilities < 0):
            raise ValueError("negative probabilities")
        if abs(self.probabilities.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1 within 1e-9")

    @property
    def K(self) -> int:
        return int(self.support[-1])

    def prob(self, k: int) -> float:
        if abs(k) > self.K:
            return 0.0
        return float(self.probabilities[k + self.K])

    def variance(self) -> float:
        return float(np.sum(self.support.astype(float) ** 2 * self.probabilities))


def _conv_power_at_integers(N: int, kappa: float, K: int, step: float, pad: int) -> np.ndarray:
    """Values of the N-fold self-convolution of g at the integers -K..K.

    g is sampled at midpoints of cells of width ``step`` (the support edges
    +-1/2 then fall between samples, so the jump there costs no accuracy) and
    the convolution power is taken by FFT on a circular grid covering
    [-K-pad, K+pad).  For odd N one endpoint-sampled factor with halved edge
    weights keeps the integers on the output grid.
    """
    P = K + pad
    M = int(round(2 * P / step))
    half = int(round(0.5 / step))  # cells per half-support; step divides 1/2 exactly
    pmid = np.zeros(M)
    jm = np.arange(-half, half)
    pmid[jm % M] = _g_scaled((jm + 0.5) * step, kappa) * step
    fmid = np.fft.rfft(pmid)
    if N % 2 == 0:
        fconv = fmid**N
        offset = N // 2
    else:
        pend = np.zeros(M)
        je = np.arange(-half, half + 1)
        pend[je % M] = _g_scaled(je * step, kappa) * step
        pend[(-half) % M] *= 0.5
        pend[half % M] *= 0.5
        fconv = fmid ** (N - 1) * np.fft.rfft(pend)
        offset = (N - 1) // 2
    q = np.fft.irfft(fconv, n=M)
    kk = np.arange(-K, K + 1)
    idx = (np.round(kk / step).astype(int) - offset) % M
    return q[idx] / step


def char_coefficients(kappa: float, nmax: int) -> np.ndarray:
    """Characteristic-function values E[exp(-i n rho)] = I_n(kappa)/I0(kappa)."""
    n = np.arange(nmax + 1)
    return special.ive(n, kappa) / special.ive(0, kappa)


def lattice_total(N: int, kappa: float) -> float:
    """sum_k g^(*N)(k) over all integers, via Poisson summation.

    Equals sum_n (I_n(kappa)/I0(kappa))^N; used as an independent cross-check
    and to bound the tail mass outside the requested support.
    """
    nmax = int(max(64, kappa + 20 * math.sqrt(kappa + 1)))
    r = char_coefficients(kappa, nmax)
    terms = r**N
    if terms[-1] > 1e-18:
        raise RuntimeError("lattice_total: characteristic series not converged")
    return float(terms[0] + 2.0 * terms[1:].sum())


def winding_distribution(
    p: ModelParams, K: int, step: float = GRID_STEP, pad: int = 1
) -> WindingDistribution:
    """Oracle winding law mu(W = k) = g^(*N)(k) / sum_k g^(*N)(k) on [-K, K].

    Runs the grid convolution at ``step`` and ``step/2`` (Richardson check),
    doubles the circular padding (aliasing check), symmetrizes (g is even),
    and verifies the tail mass outside [-K, K] against the Poisson-summation
    total.  Raises KTooSmallError when the tail exceeds the budget.
    """
    if K < 1:
        raise ValueError("winding_distribution: K must be >= 1")
    N, kappa = p.N, p.kappa
    # run the grid on a support wide enough for the whole law, whatever K is
    k_int = max(K, default_support(p))
    v_coarse = _conv_power_at_integers(N, kappa, k_int, step, pad)
    v_padded = _conv_power_at_integers(N, kappa, k_int, step, 2 * pad)
    v = _conv_power_at_integers(N, kappa, k_int, step / 2, 2 * pad)
    scale = v.max()
    alias_move = np.max(np.abs(v_padded - v_coarse)) / scale
    if alias_move > ALIAS_TOL:
        raise RuntimeError(f"winding_distribution: aliasing check failed ({alias_move:.2e})")
    richardson_move = np.max(np.abs(v - v_padded)) / scale
    if richardson_move > RICHARDSON_TOL:
        raise RuntimeError(
            f"winding_distribution: Richardson check failed ({richardson_move:.2e})"
        )
    # even symmetrization + clipping of FFT noise-floor negatives
    v = 0.5 * (v + v[::-1])
    v = np.where(v < 0, 0.0, v)
    total = lattice_total(N, kappa)
    window = v[k_int - K : k_int + K + 1]
    tail = 1.0 - window.sum() / total
    if tail > TAIL_MASS_TOL:
        raise KTooSmallError(
            f"tail mass {tail:.3e} outside [-{K}, {K}] exceeds {TAIL_MASS_TOL:.1e}; "
            f"increase K"
        )
    probs = window / window.sum()
    return WindingDistribution(
        support=np.arange(-K, K + 1), probabilities=probs, provenance="ORACLE"
    )


def default_support(p: ModelParams, sigmas: float = 7.5) -> int:
    """A support bound K covering ``sigmas`` standard deviations of W."""
    s2 = moments(p.kappa).s2
    return max(2, int(math.ceil(sigmas * math.sqrt(p.N * s2))))


def clt_check_scale(p: ModelParams) -> float:
    """The central-limit normalization 2 pi sqrt(J / (2 sigma^2 N))."""
    return TWO_PI * math.sqrt(p.J / (2.0 * p.sigma**2 * p.N))


@dataclass(frozen=True)
class TimescalePrediction:
    """Exit-time window exp(J/sigma^2 (1 +- eps) - log N), kept in log space."""

    epsilon: float
    log_t_lower: float
    log_t_center: float
    log_t_upper: float

    @property
    def t_lower(self) -> float:
        return _safe_exp(self.log_t_lower)

    @property
    def t_center(self) -> float:
        return _safe_exp(self.log_t_center)

    @property
    def t_upper(self) -> float:
        return _safe_exp(self.log_t_upper)


def _safe_exp(logv: float) -> float:
    try:
        return math.exp(logv)
    except OverflowError:
        return float("inf")


def timescale(p: ModelParams, epsilon: float) -> TimescalePrediction:
    if not 0 <= epsilon < 1:
        raise ValueError("timescale: need 0 <= epsilon < 1")
    ratio = p.coupling_ratio
    logn = math.log(p.N)
    return TimescalePrediction(
        epsilon=epsilon,
        log_t_lower=ratio * (1.0 - epsilon) - logn,
        log_t_center=ratio - logn,
        log_t_upper=ratio * (1.0 + epsilon) - logn,
    )


def local_limit_constant(p: ModelParams, kmax: int = 3) -> float:
    """Fitted constant C in |mu(W=k) - phi(k/(s sqrt N))/(s sqrt N)| <= C/(s N).

    Reports the smallest C making the bound hold for |k| <= kmax.
    """
    mom = moments(p.kappa)
    s = math.sqrt(mom.s2)
    dist = winding_distribution(p, max(default_support(p), kmax))
    sn = s * math.sqrt(p.N)
    worst = 0.0
    for k in range(-kmax, kmax + 1):
        gauss = math.exp(-0.5 * (k / sn) ** 2) / (sn * math.sqrt(TWO_PI))
        worst = max(worst, abs(dist.prob(k) - gauss) * s * p.N)
    return worst


def is_even_and_unimodal(values: np.ndarray, rel_floor: float = 1e-9) -> bool:
    """Check evenness and non-increase in |k|, down to a relative noise floor.

    Values below ``rel_floor * max`` are treated as numerical zero; increases
    smaller than the floor are tolerated ("at numerical resolution").
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n % 2 == 0:
        raise ValueError("expected an odd-length, symmetric support")
    floor = rel_floor * v.max()
    if np.max(np.abs(v - v[::-1])) > floor:
        return False
    right = v[n // 2 :]
    increases = np.diff(right)
    return bool(np.all(increases <= floor))
