"""Euler-Maruyama integration on the torus, trajectories and first exits.

The simulated diffusion is

    dX = -MOBILITY * grad H(X) dt + sigma dB,

whose invariant measure is exp(-H / (2 sigma^2)) exactly when
MOBILITY = 1/4: with noise amplitude sigma fixed, the drift mobility is the
one free constant, and 1/4 is the unique value reversible for the model's
equilibrium measure (a plain -grad H drift would equilibrate four times
colder, at exp(-2 H / sigma^2), and decouple the dynamics from every
equilibrium oracle in this package).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    ILL_DEFINED,
    TWO_PI,
    ModelParams,
    grad_hamiltonian,
    validate_state,
    winding_number,
    wrap,
)

#: Drift mobility making the dynamics reversible for exp(-H/(2 sigma^2)).
MOBILITY = 0.25

#: Steps per pre-drawn noise block.  Fixed so that batched and sequential
#: replica execution consume each replica's stream identically.
NOISE_BLOCK = 256

#: dt budget: J * dt <= DT_DRIFT_BUDGET and sigma * sqrt(dt) <= DT_NOISE_BUDGET
#: keep single-step bond motion far below pi, so winding changes are caught
#: bond by bond.
DT_DRIFT_BUDGET = 0.02
DT_NOISE_BUDGET = 0.05


def check_dt_budget(p: ModelParams, dt: float) -> None:
    """Raise ValueError naming the violated budget rule, if any."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if p.J * dt > DT_DRIFT_BUDGET * (1 + 1e-12):
        raise ValueError(
            f"dt budget violated: J*dt = {p.J * dt:.4g} exceeds J*dt <= {DT_DRIFT_BUDGET}"
        )
    if p.sigma * np.sqrt(dt) > DT_NOISE_BUDGET * (1 + 1e-12):
        raise ValueError(
            f"dt budget violated: sigma*sqrt(dt) = {p.sigma * np.sqrt(dt):.4g} "
            f"exceeds sigma*sqrt(dt) <= {DT_NOISE_BUDGET}"
        )


def default_dt(p: ModelParams) -> float:
    """Largest dt satisfying both budget rules."""
    return min(DT_DRIFT_BUDGET / p.J, (DT_NOISE_BUDGET / p.sigma) ** 2)


@dataclass(frozen=True)
class IntegratorConfig:
    """Time step, horizon, recording stride and RNG seed.

    ``max_time = 0`` is allowed and means "record the initial sample only".
    The dt budget involves the model parameters, so it is checked by
    ``validate_for`` (and by the CLI), not at construction.
    """

    dt: float
    max_time: float
    record_stride: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("IntegratorConfig: dt must be > 0")
        if self.max_time < 0:
            raise ValueError("IntegratorConfig: max_time must be >= 0")
        if self.record_stride < 1:
            raise ValueError("IntegratorConfig: record_stride must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("IntegratorConfig: seed must fit in 64 bits")

    def validate_for(self, p: ModelParams) -> None:
        check_dt_budget(p, self.dt)
        if self.max_time > 0 and self.record_stride * self.dt > self.max_time:
            raise ValueError(
                "IntegratorConfig: record_stride*dt exceeds max_time; nothing recorded"
            )

    @property
    def n_steps(self) -> int:
        return int(np.floor(self.max_time / self.dt + 1e-9))


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator for the stream (seed, *key).

    Streams with distinct keys are independent; the same key always yields
    the same stream, so replicas are reproducible under any scheduling.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class Trajectory:
    """Recorded times, windings and optional scalar observables.

    Windings are stored as floats with NaN marking ill-defined samples
    (a bond exactly at pi), which have probability zero.
    """

    times: np.ndarray
    windings: np.ndarray
    observables: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.windings):
            raise ValueError("Trajectory: times/windings length mismatch")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("Trajectory: times must be strictly increasing")
        for name, vals in self.observables.items():
            if len(vals) != len(self.times):
                raise ValueError(f"Trajectory: observable {name!r} length mismatch")

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class ExitRecord:
    """First time the winding left its starting value, or censoring at the horizon."""

    start_winding: int
    exit_time: float
    exit_target: object  # int, ILL_DEFINED, or None when censored
    censored: bool

    def __post_init__(self):
        if not self.censored and self.exit_target == self.start_winding:
            raise ValueError("ExitRecord: exit_target equals start_winding")


def em_step(x: np.ndarray, p: ModelParams, dt: float, noise: np.ndarray) -> np.ndarray:
    """One explicit Euler-Maruyama step; caller supplies the N standard normals."""
    if not dt > 0:
        raise ValueError("em_step: dt must be > 0")
    noise = np.asarray(noise, dtype=float)
    drift = MOBILITY * grad_hamiltonian(x, p)
    return wrap(x - drift * dt + p.sigma * np.sqrt(dt) * noise)


def _drift_batch(x: np.ndarray, p: ModelParams) -> np.ndarray:
    """MOBILITY * grad H for a batch of states, shape (R, N)."""
    xm = np.roll(x, 1, axis=1)
    xp = np.roll(x, -1, axis=1)
    g = p.J * (np.sin(x - xm) + np.sin(x - xp))
    if p.field_B:
        g += p.field_B * np.sin(x)
    return MOBILITY * g


def _winding_batch(x: np.ndarray) -> np.ndarray:
    """Windings of a batch of states as floats; NaN where ill-defined."""
    d = wrap(x - np.roll(x, 1, axis=1))
    w = d.sum(axis=1) / TWO_PI
    bad = np.any(np.abs(d) >= np.pi - 1e-12, axis=1)
    w = np.round(w)
    return np.where(bad, np.nan, w)


def simulate(
    x0: np.ndarray,
    p: ModelParams,
    cfg: IntegratorConfig,
    observables: dict | None = None,
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Integrate from x0, recording winding (recomputed from scratch) and
    requested observables every ``record_stride`` steps, sample 0 included.

    ``observables`` maps a name to a callable state -> float.
    """
    x = np.array(validate_state(x0, p), dtype=float)
    if rng is None:
        rng = make_rng(cfg.seed)
    observables = observables or {}
    n_steps = cfg.n_steps
    rec_idx = list(range(0, n_steps + 1, cfg.record_stride))
    times = np.array([i * cfg.dt for i in rec_idx])
    windings = np.empty(len(rec_idx))
    obs = {name: np.empty(len(rec_idx)) for name in observables}

    def record(slot, state):
        w = winding_number(state)
        windings[slot] = np.nan if w is ILL_DEFINED else w
        for name, fn in observables.items():
            obs[name][slot] = fn(state)

    record(0, x)
    slot = 1
    noise_scale = p.sigma * np.sqrt(cfg.dt)
    step = 0
    while step < n_steps:
        m = min(NOISE_BLOCK, n_steps - step)
        noise = rng.standard_normal((NOISE_BLOCK, len(x)))[:m]
        for j in range(m):
            x = wrap(x - MOBILITY * grad_hamiltonian(x, p) * cfg.dt + noise_scale * noise[j])
            step += 1
            if step % cfg.record_stride == 0:
                record(slot, x)
                slot += 1
    return Trajectory(times=times, windings=windings, observables=obs)


def first_exit(
    x0: np.ndarray,
    p: ModelParams,
    cfg: IntegratorConfig,
    k: int,
    rng: np.random.Generator | None = None,
) -> ExitRecord:
    """Run until the per-step winding check first differs from k (or goes
    ill-defined); no sub-step interpolation.  Censors at max_time."""
    w0 = winding_number(x0)
    if w0 is ILL_DEFINED or w0 != k:
        raise ValueError(f"first_exit: initial winding {w0!r} differs from k={k}")
    if rng is None:
        rng = make_rng(cfg.seed)
    recs = first_exit_batch(np.asarray(x0, float)[None, :], p, cfg, k, [rng])
    return recs[0]


def first_exit_batch(
    x0s: np.ndarray,
    p: ModelParams,
    cfg: IntegratorConfig,
    k: int,
    rngs: list,
) -> list:
    """First exits for a batch of replicas advanced in lock-step.

    Each replica consumes its own generator in (NOISE_BLOCK, N) chunks, so
    results are bit-identical to running the replicas one at a time.
    """
    x = np.array(x0s, dtype=float)
    R, N = x.shape
    if len(rngs) != R:
        raise ValueError("first_exit_batch: one generator per replica required")
    n_steps = cfg.n_steps
    noise_scale = p.sigma * np.sqrt(cfg.dt)
    exit_step = np.zeros(R, dtype=np.int64)
    exit_target: list = [None] * R
    alive = np.arange(R)
    step = 0
    while step < n_steps and len(alive):
        m = min(NOISE_BLOCK, n_steps - step)
        noise = np.stack([rngs[i].standard_normal((NOISE_BLOCK, N)) for i in alive])[:, :m]
        live = np.ones(len(alive), dtype=bool)
        for j in range(m):
            idx = np.flatnonzero(live)
            if not len(idx):
                break
            x[alive[idx]] = wrap(
                x[alive[idx]]
                - _drift_batch(x[alive[idx]], p) * cfg.dt
                + noise_scale * noise[idx, j]
            )
            w = _winding_batch(x[alive[idx]])
            exited = np.isnan(w) | (w != k)
            if np.any(exited):
                for pos, wi in zip(idx[exited], w[exited]):
                    rep = alive[pos]
                    exit_step[rep] = step + j + 1
                    exit_target[rep] = ILL_DEFINED if np.isnan(wi) else int(wi)
                live[idx[exited]] = False
        alive = alive[live]
        step += m
    out = []
    for rep in range(R):
        if exit_target[rep] is None:
            out.append(
                ExitRecord(start_winding=k, exit_time=cfg.max_time, exit_target=None, censored=True)
            )
        else:
            out.append(
                ExitRecord(
                    start_winding=k,
                    exit_time=exit_step[rep] * cfg.dt,
                    exit_target=exit_target[rep],
                    censored=False,
                )
            )
    return out
