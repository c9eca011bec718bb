"""Statistical fitting and goodness-of-fit helpers used by the experiments.

The exponential machinery is censoring-aware throughout: deep-metastability
runs censor at the horizon, and a naive mean over uncensored exits would
bias low.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps


class DegenerateFitError(RuntimeError):
    """No uncensored observation survived; nothing can be fitted."""


def exponential_rate_mle(times: np.ndarray, censored: np.ndarray) -> float:
    """Censored-exponential MLE: (number uncensored) / (total observed time)."""
    times = np.asarray(times, dtype=float)
    censored = np.asarray(censored, dtype=bool)
    n_unc = int(np.sum(~censored))
    if n_unc == 0:
        raise DegenerateFitError(
            f"all {len(times)} replicas censored (horizon too short for the "
            f"observed metastability); cannot fit an exponential rate"
        )
    return n_unc / float(times.sum())


def ks_exponential(
    uncensored_times: np.ndarray,
    rate: float,
    rng: np.random.Generator,
    n_boot: int = 2000,
):
    """KS statistic of the uncensored exits against Exp(rate), with the
    estimated-parameter (Lilliefors-type) null computed by parametric
    bootstrap: each bootstrap sample is refitted before its statistic is
    taken, which is the standard small-sample correction for a rate
    estimated from the same data.

    Returns (statistic, p_value).
    """
    x = np.sort(np.asarray(uncensored_times, dtype=float))
    n = len(x)
    if n < 2:
        raise DegenerateFitError("need at least 2 uncensored exits for a KS test")
    d_obs = _ks_stat_exponential(x, rate)
    sims = rng.exponential(1.0, size=(n_boot, n))
    sims.sort(axis=1)
    rates = 1.0 / sims.mean(axis=1)
    grid = np.arange(1, n + 1) / n
    cdf = 1.0 - np.exp(-rates[:, None] * sims)
    d_plus = np.max(grid[None, :] - cdf, axis=1)
    d_minus = np.max(cdf - (np.arange(n) / n)[None, :], axis=1)
    d_boot = np.maximum(d_plus, d_minus)
    p = (1.0 + np.sum(d_boot >= d_obs)) / (n_boot + 1.0)
    return float(d_obs), float(p)


def _ks_stat_exponential(sorted_x: np.ndarray, rate: float) -> float:
    n = len(sorted_x)
    cdf = 1.0 - np.exp(-rate * sorted_x)
    d_plus = np.max(np.arange(1, n + 1) / n - cdf)
    d_minus = np.max(cdf - np.arange(n) / n)
    return float(max(d_plus, d_minus))


def chi_square_vs_expected(
    counts: np.ndarray, probabilities: np.ndarray, min_expected: float = 5.0
):
    """Pearson chi-square of observed counts against expected probabilities.

    Bins with expected count below ``min_expected`` are pooled into their
    nearest healthy neighbour, preserving totals.  Returns
    (statistic, p_value, dof).
    """
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probabilities, dtype=float)
    if counts.shape != probs.shape:
        raise ValueError("counts/probabilities shape mismatch")
    n = counts.sum()
    expected = probs * n
    obs_pool = list(counts)
    exp_pool = list(expected)
    while len(exp_pool) > 2 and min(exp_pool) < min_expected:
        i = int(np.argmin(exp_pool))
        j = i + 1 if i == 0 else i - 1 if i == len(exp_pool) - 1 else (
            i + 1 if exp_pool[i + 1] < exp_pool[i - 1] else i - 1
        )
        e_val = exp_pool.pop(i)
        o_val = obs_pool.pop(i)
        if j > i:
            j -= 1
        exp_pool[j] += e_val
        obs_pool[j] += o_val
    obs_pool = np.asarray(obs_pool)
    exp_pool = np.asarray(exp_pool)
    if np.any(exp_pool <= 0):
        raise ValueError("chi_square_vs_expected: empty expected bin after pooling")
    exp_pool *= obs_pool.sum() / exp_pool.sum()
    stat = float(np.sum((obs_pool - exp_pool) ** 2 / exp_pool))
    dof = len(obs_pool) - 1
    p = float(sps.chi2.sf(stat, dof))
    return stat, p, dof


def chi_square_hist(
    samples: np.ndarray, cdf, lo: float, hi: float, n_bins: int = 50
):
    """Equal-probability-bin chi-square of samples against a continuous law.

    ``cdf`` maps values in [lo, hi] to [0, 1]; bins are the cdf quantiles so
    every bin has equal expected mass.  Returns (statistic, p_value, dof).
    """
    samples = np.asarray(samples, dtype=float)
    u = np.linspace(0.0, 1.0, n_bins + 1)
    grid = np.linspace(lo, hi, 4096)
    cvals = cdf(grid)
    edges = np.interp(u, cvals, grid)
    edges[0], edges[-1] = lo, hi
    counts, _ = np.histogram(samples, bins=edges)
    probs = np.full(n_bins, 1.0 / n_bins)
    return chi_square_vs_expected(counts, probs)


@dataclass(frozen=True)
class MeanEstimate:
    """Censoring-aware mean exit time with its Monte Carlo standard error."""

    mean: float
    stderr: float
    n_uncensored: int
    n_censored: int

    @classmethod
    def from_records(cls, times: np.ndarray, censored: np.ndarray) -> "MeanEstimate":
        rate = exponential_rate_mle(times, censored)
        n_unc = int(np.sum(~np.asarray(censored, bool)))
        mean = 1.0 / rate
        # exponential MLE: Var(1/rate_hat) ~ mean^2 / n_uncensored
        return cls(
            mean=mean,
            stderr=mean / np.sqrt(n_unc),
            n_uncensored=n_unc,
            n_censored=int(len(times) - n_unc),
        )
