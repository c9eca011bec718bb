"""Reproducible experiment drivers.

Every driver is a pure function of (spec, extra arguments): replica streams
are keyed (seed, replica_index, purpose), so results are bit-identical under
any scheduling, and grid points sharing N reuse the same replica streams
(common random numbers) for variance reduction in ratio estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as sps

from . import stats
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    first_exit_batch,
    make_rng,
    simulate,
)
from .equilibrium import ConditionalGibbsSampler, GibbsSampler, McmcConfig
from .model import (
    ILL_DEFINED,
    ModelParams,
    good_interval_count,
    hamiltonian,
    magnetization,
    midchain_correlation,
    winding_number,
)
from .theory import (
    WindingDistribution,
    clt_check_scale,
    default_support,
    moments,
    timescale,
    winding_distribution,
)

KINDS = (
    "winding-trace",
    "exit-histogram",
    "scaling-sweep",
    "clt-test",
    "correlation",
    "field-response",
    "bad-event-watch",
)

#: replicas integrated in lock-step per batch (memory/vectorization balance)
BATCH_REPLICAS = 256

#: stream sub-keys, so MCMC initialisation and dynamics draws never overlap
_INIT_KEY = 0
_DYN_KEY = 1


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    params: ModelParams
    integrator: IntegratorConfig
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    replicas: int = 1
    start_winding: int = 0
    sweep_grid: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; valid: {KINDS}")
        if self.replicas < 1:
            raise ValueError("ExperimentSpec: replicas must be >= 1")
        if self.kind == "scaling-sweep" and not self.sweep_grid:
            raise ValueError("ExperimentSpec: scaling-sweep requires a nonempty sweep_grid")

    @property
    def seed(self) -> int:
        return self.integrator.seed


@dataclass(frozen=True)
class FitResult:
    rate_mle: float
    ks_statistic: float
    ks_pvalue: float
    n_censored: int

    def __post_init__(self):
        if not self.rate_mle > 0:
            raise ValueError("FitResult: rate_mle must be positive")


def standard_observables(p: ModelParams, r: int | None = None, delta: float | None = None):
    """The named per-sample observables recorded along trajectories."""
    obs = {
        "energy": lambda x: hamiltonian(x, p),
        "midchain_correlation": midchain_correlation,
        "magnetization": magnetization,
    }
    if r is not None and delta is not None:
        obs["good_interval_count"] = lambda x: float(good_interval_count(x, r, delta))
    return obs


def conditional_initial_state(
    p: ModelParams, k: int, mcmc: McmcConfig, seed: int, replica: int
) -> np.ndarray:
    """The mu|W=k initial state owned by one replica index."""
    sampler = ConditionalGibbsSampler(p, k, mcmc, rng=make_rng(seed, replica, _INIT_KEY))
    return sampler.sample()


def run_exit_replicas(
    p: ModelParams,
    cfg: IntegratorConfig,
    mcmc: McmcConfig,
    k: int,
    replicas: int,
    seed: int | None = None,
) -> list:
    """First-exit records for ``replicas`` independent replicas from mu|W=k.

    Initial states come from the conditional sampler exclusively; dynamics
    noise and initialisation use disjoint per-replica streams, and batching
    is purely an execution detail (results match one-at-a-time runs bit for
    bit).
    """
    seed = cfg.seed if seed is None else seed
    records: list = [None] * replicas
    for lo in range(0, replicas, BATCH_REPLICAS):
        batch = list(range(lo, min(lo + BATCH_REPLICAS, replicas)))
        x0 = np.stack([conditional_initial_state(p, k, mcmc, seed, rep) for rep in batch])
        rngs = [make_rng(seed, rep, _DYN_KEY) for rep in batch]
        for rep, rec in zip(batch, first_exit_batch(x0, p, cfg, k, rngs)):
            records[rep] = rec
    return records


def run_winding_trace(spec: ExperimentSpec) -> Trajectory:
    """Long dynamics run from a conditional equilibrium state, winding recorded."""
    if spec.kind != "winding-trace":
        raise ValueError("run_winding_trace: spec.kind must be winding-trace")
    p, cfg = spec.params, spec.integrator
    x0 = conditional_initial_state(p, spec.start_winding, spec.mcmc, spec.seed, 0)
    return simulate(
        x0, p, cfg, observables=standard_observables(p), rng=make_rng(spec.seed, 0, _DYN_KEY)
    )


def run_exit_histogram(spec: ExperimentSpec, k: int):
    """Replicated first exits from mu|W=k plus a censoring-aware exponential fit.

    Returns (records, FitResult).  Raises DegenerateFitError when too few
    exits are observed to fit anything.
    """
    if spec.kind != "exit-histogram":
        raise ValueError("run_exit_histogram: spec.kind must be exit-histogram")
    records = run_exit_replicas(
        spec.params, spec.integrator, spec.mcmc, k, spec.replicas, seed=spec.seed
    )
    times = np.array([r.exit_time for r in records])
    censored = np.array([r.censored for r in records])
    rate = stats.exponential_rate_mle(times, censored)
    uncensored = times[~censored]
    if len(uncensored) < 2:
        raise stats.DegenerateFitError("fewer than 2 uncensored exits; cannot run the KS test")
    d, pval = stats.ks_exponential(uncensored, rate, make_rng(spec.seed, 2**32, 7))
    fit = FitResult(
        rate_mle=rate, ks_statistic=d, ks_pvalue=pval, n_censored=int(censored.sum())
    )
    return records, fit


def run_scaling_sweep(spec: ExperimentSpec):
    """Mean exit times over a grid of (N, J, sigma) triples.

    Replica streams are keyed by replica index only, so grid points with
    equal N consume identical noise sequences (common random numbers).
    Returns a list of row dicts.
    """
    if spec.kind != "scaling-sweep":
        raise ValueError("run_scaling_sweep: spec.kind must be scaling-sweep")
    rows = []
    for N, J, sigma in spec.sweep_grid:
        p = ModelParams(N=int(N), J=float(J), sigma=float(sigma), field_B=spec.params.field_B)
        records = run_exit_replicas(
            p, spec.integrator, spec.mcmc, spec.start_winding, spec.replicas, seed=spec.seed
        )
        est = stats.MeanEstimate.from_records(
            np.array([r.exit_time for r in records]),
            np.array([r.censored for r in records]),
        )
        rows.append(
            {
                "N": p.N,
                "J": p.J,
                "sigma": p.sigma,
                "mean_exit": est.mean,
                "stderr": est.stderr,
                "n_censored": est.n_censored,
                "replicas": spec.replicas,
            }
        )
    return rows


@dataclass(frozen=True)
class CltResult:
    distribution: WindingDistribution
    chi2_pvalue: float
    normality_pvalue: float
    scale: float
    n_samples: int


def equilibrium_winding_samples(spec: ExperimentSpec, n: int) -> np.ndarray:
    """Thinned winding samples from the unconditioned equilibrium sampler."""
    sampler = GibbsSampler(spec.params, spec.mcmc, rng=make_rng(spec.seed, 0, _INIT_KEY))
    ws = np.empty(n, dtype=int)
    for i in range(n):
        w = winding_number(sampler.sample())
        ws[i] = 0 if w is ILL_DEFINED else int(w)
    return ws


def run_clt_test(spec: ExperimentSpec, n_samples: int | None = None) -> CltResult:
    """Winding samples from the equilibrium sampler against the oracle law.

    Chi-square against the convolution oracle, plus an Anderson-Darling
    normality check of the integer-lattice-smoothed windings W + U(-1/2,1/2)
    standardized by their exact standard deviation sqrt(N s^2 + 1/12); the
    asymptotic constant clt_check_scale is reported alongside (it converges
    to the exact one only as kappa grows).
    """
    if spec.kind != "clt-test":
        raise ValueError("run_clt_test: spec.kind must be clt-test")
    n = spec.replicas if n_samples is None else n_samples
    if n < 1:
        raise ValueError("run_clt_test: need at least one sample")
    p = spec.params
    ws = equilibrium_winding_samples(spec, n)
    kmax = int(max(default_support(p), abs(ws.min()), abs(ws.max())))
    oracle = winding_distribution(p, kmax)
    support = np.arange(-kmax, kmax + 1)
    counts = np.array([np.sum(ws == kk) for kk in support])
    _, chi2_p, _ = stats.chi_square_vs_expected(counts, oracle.probabilities)

    rng = make_rng(spec.seed, 2**32, 11)
    exact_std = np.sqrt(p.N * moments(p.kappa).s2 + 1.0 / 12.0)
    smoothed = (ws + rng.uniform(-0.5, 0.5, n)) / exact_std
    gof = sps.goodness_of_fit(
        sps.norm,
        smoothed,
        known_params={"loc": 0.0, "scale": 1.0},
        statistic="ad",
        n_mc_samples=499,
        rng=np.random.default_rng(12345),
    )
    emp = WindingDistribution(
        support=support,
        probabilities=counts / counts.sum(),
        provenance="EMPIRICAL",
        n_samples=n,
    )
    return CltResult(
        distribution=emp,
        chi2_pvalue=chi2_p,
        normality_pvalue=float(gof.pvalue),
        scale=clt_check_scale(p),
        n_samples=n,
    )


def run_correlation(spec: ExperimentSpec, phases=(0, 1), n_samples: int | None = None):
    """Conditional-equilibrium averages of cos(X_1 - X_{N/2}) per phase."""
    if spec.kind != "correlation":
        raise ValueError("run_correlation: spec.kind must be correlation")
    n = spec.replicas if n_samples is None else n_samples
    out = {}
    for k in phases:
        sampler = ConditionalGibbsSampler(
            spec.params, k, spec.mcmc, rng=make_rng(spec.seed, k, _INIT_KEY)
        )
        vals = [midchain_correlation(sampler.sample()) for _ in range(n)]
        out[k] = float(np.mean(vals))
    return out


def run_field_response(spec: ExperimentSpec, B: float, phases=(0, 1)):
    """Time-averaged magnetization under dynamics with field, per phase.

    The horizon is capped at a tenth of the field-free exit timescale so the
    measurement probes the metastable state, not global equilibrium.
    """
    if spec.kind != "field-response":
        raise ValueError("run_field_response: spec.kind must be field-response")
    if B < 0:
        raise ValueError("run_field_response: B must be >= 0")
    base = spec.params
    p = ModelParams(N=base.N, J=base.J, sigma=base.sigma, field_B=B)
    t_meta = timescale(p, 0.0).t_center / 10.0
    horizon = min(spec.integrator.max_time, t_meta) if spec.integrator.max_time > 0 else t_meta
    # ~2000 recorded magnetization samples per replica is plenty for the mean
    stride = max(spec.integrator.record_stride, int(horizon / spec.integrator.dt / 2000) or 1)
    cfg = replace(spec.integrator, max_time=horizon, record_stride=stride)
    out = {}
    for k in phases:
        means = []
        for rep in range(spec.replicas):
            sampler = ConditionalGibbsSampler(
                p, k, spec.mcmc, rng=make_rng(spec.seed, rep, _INIT_KEY, k)
            )
            x0 = sampler.sample()
            traj = simulate(
                x0,
                p,
                cfg,
                observables={"magnetization": magnetization},
                rng=make_rng(spec.seed, rep, _DYN_KEY, k),
            )
            means.append(float(np.mean(traj.observables["magnetization"])))
        out[k] = float(np.mean(means))
    return out


def dynamics_bond_samples(
    p: ModelParams,
    dt: float,
    n_states: int,
    seed: int,
    chains: int = 16,
    bonds_per_state: int = 4,
    stride_time: float = 1.5,
    settle_time: float = 4.0,
    mcmc: McmcConfig | None = None,
    start_winding: int = 0,
) -> np.ndarray:
    """Bond increments sampled along equilibrium-started dynamics.

    Runs ``chains`` lock-step trajectories (per-chain streams) and records
    ``bonds_per_state`` well-separated bonds every ``stride_time`` time
    units: separated bonds decorrelate the chi-square statistics that the
    closure constraint would otherwise distort.
    """
    from .dynamics import MOBILITY, NOISE_BLOCK
    from .model import wrap

    mcmc = mcmc or McmcConfig(burn_in_sweeps=200)
    stride = max(1, int(round(stride_time / dt)))
    settle = int(round(settle_time / dt))
    per_chain = -(-n_states // chains)
    x = np.stack(
        [
            ConditionalGibbsSampler(
                p, start_winding, mcmc, rng=make_rng(seed, i, _INIT_KEY)
            ).sample()
            for i in range(chains)
        ]
    )
    rngs = [make_rng(seed, i, _DYN_KEY) for i in range(chains)]
    picks = np.linspace(0, p.N, bonds_per_state, endpoint=False).astype(int)
    noise_scale = p.sigma * np.sqrt(dt)
    total = settle + stride * per_chain
    bonds = []
    step = 0
    while step < total:
        m = min(NOISE_BLOCK, total - step)
        noise = np.stack([r.standard_normal((NOISE_BLOCK, p.N)) for r in rngs])[:, :m]
        for j in range(m):
            xm = np.roll(x, 1, axis=1)
            xp = np.roll(x, -1, axis=1)
            drift = MOBILITY * p.J * (np.sin(x - xm) + np.sin(x - xp))
            if p.field_B:
                drift += MOBILITY * p.field_B * np.sin(x)
            x = wrap(x - drift * dt + noise_scale * noise[:, j])
            if step >= settle and (step - settle) % stride == 0:
                b = wrap(x - np.roll(x, 1, axis=1))
                bonds.append(b[:, picks].ravel())
            step += 1
    return np.concatenate(bonds)


def run_bad_event_watch(spec: ExperimentSpec, r: int, delta: float) -> float:
    """Fraction of recorded samples in the bad event along equilibrium dynamics."""
    if spec.kind != "bad-event-watch":
        raise ValueError("run_bad_event_watch: spec.kind must be bad-event-watch")
    p, cfg = spec.params, spec.integrator
    sampler = GibbsSampler(p, spec.mcmc, rng=make_rng(spec.seed, 0, _INIT_KEY))
    x0 = sampler.sample()
    traj = simulate(
        x0,
        p,
        cfg,
        observables={"good_intervals": lambda x: float(good_interval_count(x, r, delta))},
        rng=make_rng(spec.seed, 0, _DYN_KEY),
    )
    threshold = p.N // (2 * r)
    return float(np.mean(traj.observables["good_intervals"] < threshold))
