"""Samplers for the equilibrium measure, its winding-conditioned versions,
and the von Mises increment law.

Two independent routes to equilibrium are provided:

* ``GibbsSampler`` / ``ConditionalGibbsSampler`` -- single-site Metropolis
  with a global-rotation move, usable at any size;
* ``sample_bridge_increments`` / ``sample_mu_exact`` -- exact draws via the
  representation of the chain as a von Mises random walk conditioned to
  close, with the closing bond supplying the rejection weight.

The exact route validates the MCMC route wherever both are feasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import TWO_PI, ModelParams, wrap

#: below this concentration the von Mises law is numerically uniform
_KAPPA_UNIFORM = 1e-8


@dataclass(frozen=True)
class VonMisesLaw:
    """Increment law on the circle: density exp(kappa cos x) / m, mean 0."""

    kappa: float

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("VonMisesLaw: kappa must be >= 0")

    def density(self, x):
        from scipy import special

        x = np.asarray(x, dtype=float)
        return np.exp(self.kappa * (np.cos(x) - 1.0)) / (
            2.0 * np.pi * special.ive(0, self.kappa)
        )

    def sample(self, rng: np.random.Generator, size=None):
        return sample_von_mises(self.kappa, rng, size=size)


def sample_von_mises(kappa: float, rng: np.random.Generator, size=None):
    """Exact von Mises draws (mean direction 0) by Best-Fisher rejection.

    Wrapped-Cauchy envelope; uniformly efficient in kappa, exact for all
    kappa >= 0 (kappa = 0 degenerates to the uniform law on (-pi, pi]).
    """
    if kappa < 0:
        raise ValueError("sample_von_mises: kappa must be >= 0")
    scalar = size is None
    shape = () if scalar else (size if isinstance(size, tuple) else (size,))
    n = int(np.prod(shape)) if shape else 1
    if kappa < _KAPPA_UNIFORM:
        out = wrap(rng.uniform(-np.pi, np.pi, size=n))
        return float(out[0]) if scalar else out.reshape(shape)
    tau = 1.0 + np.sqrt(1.0 + 4.0 * kappa * kappa)
    rho = (tau - np.sqrt(2.0 * tau)) / (2.0 * kappa)
    r = (1.0 + rho * rho) / (2.0 * rho)
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = int((n - filled) * 1.6) + 16
        u1 = rng.random(m)
        u2 = rng.random(m)
        u3 = rng.random(m)
        z = np.cos(np.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        accept = (c * (2.0 - c) - u2 > 0.0)
        slow = ~accept
        accept[slow] = np.log(c[slow] / u2[slow]) + 1.0 - c[slow] >= 0.0
        vals = np.sign(u3[accept] - 0.5) * np.arccos(np.clip(f[accept], -1.0, 1.0))
        take = min(n - filled, len(vals))
        out[filled : filled + take] = vals[:take]
        filled += take
    out = wrap(out)
    return float(out[0]) if scalar else out.reshape(shape)


@dataclass(frozen=True)
class McmcConfig:
    proposal_width: float = 0.8
    burn_in_sweeps: int = 500
    thinning_sweeps: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.proposal_width > 0:
            raise ValueError("McmcConfig: proposal_width must be > 0")
        if self.burn_in_sweeps < 1:
            raise ValueError("McmcConfig: burn_in_sweeps must be >= 1")
        if self.thinning_sweeps < 1:
            raise ValueError("McmcConfig: thinning_sweeps must be >= 1")


#: acceptance-rate target for the burn-in width tuner
_TARGET_ACCEPTANCE = 0.4


class GibbsSampler:
    """Single-site Metropolis for exp(-H/(2 sigma^2)), batched over chains.

    Sites are updated in an even/odd (checkerboard) schedule -- on the ring
    the two halves are conditionally independent, so each half-sweep is a
    block of simultaneous single-site Metropolis moves -- followed by a
    global rotation move, which costs nothing when B = 0 and mixes the
    rotation mode instantly.  The proposal width is tuned toward 40%
    acceptance during burn-in, then frozen.
    """

    #: winding sector to which proposals are restricted; None = unrestricted
    fixed_winding = None

    def __init__(self, p: ModelParams, cfg: McmcConfig, rng=None, n_chains: int = 1):
        self.p = p
        self.cfg = cfg
        self.rng = rng if rng is not None else np.random.Generator(
            np.random.Philox(np.random.SeedSequence(cfg.seed))
        )
        self.n_chains = n_chains
        self.width = cfg.proposal_width
        self.acceptance_rate = float("nan")
        # an odd ring is not 2-colorable: leave the last site to its own
        # block so no two simultaneously-updated sites are neighbours
        if p.N % 2 == 0:
            self._blocks = (np.arange(0, p.N, 2), np.arange(1, p.N, 2))
        else:
            self._blocks = (
                np.arange(0, p.N - 1, 2),
                np.arange(1, p.N - 1, 2),
                np.array([p.N - 1]),
            )
        self.x = self._initial_state()
        self._burned_in = False

    def _initial_state(self) -> np.ndarray:
        return np.zeros((self.n_chains, self.p.N))

    def sweep(self) -> float:
        """One full sweep (all site blocks + global rotation); returns acceptance."""
        p, rng = self.p, self.rng
        x = self.x
        R, N = x.shape
        two_s2 = 2.0 * p.sigma**2
        accepted = 0
        for idx in self._blocks:
            prop = wrap(x[:, idx] + rng.uniform(-self.width, self.width, (R, len(idx))))
            xm = x[:, (idx - 1) % N]
            xp = x[:, (idx + 1) % N]
            cur = x[:, idx]
            d_h = -p.J * (
                np.cos(prop - xm) + np.cos(xp - prop) - np.cos(cur - xm) - np.cos(xp - cur)
            )
            if p.field_B:
                d_h -= p.field_B * (np.cos(prop) - np.cos(cur))
            ok = rng.random((R, len(idx))) < np.exp(np.minimum(0.0, -d_h / two_s2))
            if self.fixed_winding is not None:
                d_w = (
                    wrap(prop - xm)
                    - wrap(cur - xm)
                    + wrap(xp - prop)
                    - wrap(xp - cur)
                )
                ok &= np.abs(d_w) < 1e-9
            rows, cols = np.nonzero(ok)
            x[rows, idx[cols]] = prop[rows, cols]
            accepted += len(rows)
        self._global_rotation()
        return accepted / (R * N)

    def _global_rotation(self):
        """Rotate every chain by a uniform angle (bond- and winding-preserving)."""
        p, rng = self.p, self.rng
        shift = rng.uniform(-np.pi, np.pi, (self.n_chains, 1))
        if p.field_B:
            cur = np.sum(np.cos(self.x), axis=1, keepdims=True)
            new = np.sum(np.cos(wrap(self.x + shift)), axis=1, keepdims=True)
            d_h = -p.field_B * (new - cur)
            ok = rng.random((self.n_chains, 1)) < np.exp(
                np.minimum(0.0, -d_h / (2.0 * p.sigma**2))
            )
            shift = np.where(ok, shift, 0.0)
        self.x = wrap(self.x + shift)

    def burn_in(self):
        """Run the configured burn-in, tuning the width toward 40% acceptance."""
        rates = []
        for sweep_no in range(self.cfg.burn_in_sweeps):
            rates.append(self.sweep())
            if (sweep_no + 1) % 20 == 0:
                recent = float(np.mean(rates[-20:]))
                self.width = float(
                    np.clip(self.width * np.exp(recent - _TARGET_ACCEPTANCE), 1e-3, np.pi)
                )
        self.acceptance_rate = float(np.mean(rates[-20:])) if rates else float("nan")
        self._burned_in = True

    def sample(self) -> np.ndarray:
        """Next thinned state (first call performs the burn-in).

        Returns shape (N,) for a single chain, (n_chains, N) otherwise.
        """
        if not self._burned_in:
            self.burn_in()
        rates = [self.sweep() for _ in range(self.cfg.thinning_sweeps)]
        self.acceptance_rate = float(np.mean(rates))
        out = self.x.copy()
        return out[0] if self.n_chains == 1 else out


class ConditionalGibbsSampler(GibbsSampler):
    """Metropolis restricted to the sector {W = k}.

    Starts from the phase-k minimizer and rejects any single-site move whose
    local wrapped-bond change would alter the winding; the global rotation
    never does.  Connectivity of the sector under single-site moves is an
    assumption, spot-checked against the exact sampler at small N.
    """

    def __init__(self, p: ModelParams, k: int, cfg: McmcConfig, rng=None, n_chains: int = 1):
        if abs(k) >= p.N / 2:
            raise ValueError(f"ConditionalGibbsSampler: need |k| < N/2, got k={k}, N={p.N}")
        self.k = k
        self.fixed_winding = k
        super().__init__(p, cfg, rng=rng, n_chains=n_chains)

    def _initial_state(self) -> np.ndarray:
        base = wrap(TWO_PI * self.k * np.arange(self.p.N) / self.p.N)
        return np.tile(base, (self.n_chains, 1))


def sample_mu(p: ModelParams, cfg: McmcConfig, rng=None) -> GibbsSampler:
    """Convenience constructor for the unconditioned sampler."""
    return GibbsSampler(p, cfg, rng=rng)


def sample_mu_conditional(p: ModelParams, k: int, cfg: McmcConfig, rng=None) -> ConditionalGibbsSampler:
    """Convenience constructor for the {W = k} sampler."""
    return ConditionalGibbsSampler(p, k, cfg, rng=rng)


def sample_bridge_increments(
    N: int, kappa: float, n_samples: int, rng: np.random.Generator, batch: int = 50_000
) -> np.ndarray:
    """Exact closed-chain increment vectors, shape (n_samples, N).

    Draws N-1 i.i.d. von Mises increments and accepts with probability
    h(-S_{N-1}) / sup h = exp(kappa (cos S_{N-1} - 1)); the final increment
    wrap(-S_{N-1}) closes the chain.  The accepted vectors follow the law of
    (xi_1, ..., xi_N) conditioned on the chain closing, with every winding
    sector represented with its equilibrium weight.
    """
    if N < 2:
        raise ValueError("sample_bridge_increments: N must be >= 2")
    chunks = []
    got = 0
    while got < n_samples:
        inc = sample_von_mises(kappa, rng, size=(batch, N - 1))
        partial = inc.sum(axis=1)
        accept = rng.random(batch) < np.exp(kappa * (np.cos(partial) - 1.0))
        kept = inc[accept]
        closing = wrap(-partial[accept])
        chunks.append(np.column_stack([kept, closing]))
        got += int(accept.sum())
    return np.concatenate(chunks)[:n_samples]


def bridge_windings(increments: np.ndarray) -> np.ndarray:
    """Winding numbers of closed increment vectors (rows sum to 2 pi W)."""
    return np.round(increments.sum(axis=1) / TWO_PI).astype(int)


def sample_mu_exact(p: ModelParams, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Exact equilibrium states, shape (n_samples, N): uniform rotation plus
    bridge increments accumulated around the ring."""
    inc = sample_bridge_increments(p.N, p.kappa, n_samples, rng)
    xi = rng.uniform(-np.pi, np.pi, size=(n_samples, 1))
    x = wrap(xi + np.cumsum(inc, axis=1))
    x[:, -1] = wrap(xi[:, 0])  # closure is exact by construction
    return x


def sample_mu_conditional_exact(
    p: ModelParams, k: int, n_samples: int, rng: np.random.Generator, max_batches: int = 10_000
) -> np.ndarray:
    """Exact draws from the {W = k} sector by filtering bridge samples.

    Feasible when the sector is not too rare (small N, moderate kappa);
    raises RuntimeError if the sector never shows up.
    """
    states = []
    got = 0
    batches = 0
    while got < n_samples:
        inc = sample_bridge_increments(p.N, p.kappa, 4096, rng)
        w = bridge_windings(inc)
        sel = inc[w == k]
        batches += 1
        if len(sel):
            xi = rng.uniform(-np.pi, np.pi, size=(len(sel), 1))
            x = wrap(xi + np.cumsum(sel, axis=1))
            x[:, -1] = wrap(xi[:, 0])
            states.append(x)
            got += len(sel)
        if batches > max_batches:
            raise RuntimeError(
                f"sector W={k} too rare for exact sampling (got {got} in {batches} batches)"
            )
    return np.concatenate(states)[:n_samples]
