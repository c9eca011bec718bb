import math

import numpy as np
import pytest

from rotorchain.dynamics import IntegratorConfig, default_dt
from rotorchain.equilibrium import McmcConfig
from rotorchain.experiments import (
    ExperimentSpec,
    FitResult,
    run_bad_event_watch,
    run_clt_test,
    run_correlation,
    run_exit_histogram,
    run_exit_replicas,
    run_field_response,
    run_scaling_sweep,
    run_winding_trace,
)
from rotorchain.model import ModelParams
from rotorchain.stats import DegenerateFitError
from rotorchain.theory import timescale


def spec_for(kind, p, *, dt=None, max_time=1.0, seed=0, replicas=1, k=0, grid=(),
             burn_in=150, thinning=3):
    return ExperimentSpec(
        kind=kind,
        params=p,
        integrator=IntegratorConfig(dt=dt or default_dt(p), max_time=max_time, seed=seed),
        mcmc=McmcConfig(burn_in_sweeps=burn_in, thinning_sweeps=thinning, seed=seed),
        replicas=replicas,
        start_winding=k,
        sweep_grid=grid,
    )


def test_spec_validation():
    p = ModelParams(N=8, J=1.0, sigma=1.0)
    with pytest.raises(ValueError):
        spec_for("nonsense", p)
    with pytest.raises(ValueError):
        spec_for("scaling-sweep", p)  # empty grid
    with pytest.raises(ValueError):
        spec_for("winding-trace", p, replicas=0)


def test_winding_trace_zero_horizon():
    p = ModelParams(N=12, J=2.0, sigma=1.0)
    traj = run_winding_trace(spec_for("winding-trace", p, max_time=0.0, k=1))
    assert len(traj) == 1
    assert traj.windings[0] == 1


def test_winding_trace_deep_metastability_stays_put():
    # J/sigma^2 = 40 at N = 10: no winding change over the whole run
    p = ModelParams(N=10, J=40.0, sigma=1.0)
    traj = run_winding_trace(
        spec_for("winding-trace", p, max_time=2.0, k=1, seed=3)
    )
    assert np.all(traj.windings == 1)


def test_winding_trace_fast_phase_visits_integers():
    # N=100, J=20, sigma=3 sits in the fast phase (J/sigma^2 < log N): the
    # winding random-walks through several values within 100 t_center
    p = ModelParams(N=100, J=20.0, sigma=3.0)
    horizon = 100 * timescale(p, 0.0).t_center
    spec = spec_for("winding-trace", p, max_time=horizon, k=0, seed=5)
    spec = ExperimentSpec(
        kind=spec.kind, params=p,
        integrator=IntegratorConfig(dt=spec.integrator.dt, max_time=horizon,
                                    record_stride=20, seed=5),
        mcmc=spec.mcmc, replicas=1, start_winding=0,
    )
    traj = run_winding_trace(spec)
    assert len(np.unique(traj.windings[np.isfinite(traj.windings)])) >= 3


def test_exit_histogram_runs_and_fits():
    p = ModelParams(N=10, J=2.5, sigma=1.0)
    horizon = 40 * timescale(p, 0.0).t_center
    spec = spec_for("exit-histogram", p, max_time=horizon, seed=7, replicas=60, k=0)
    records, fit = run_exit_histogram(spec, 0)
    assert len(records) == 60
    assert fit.rate_mle > 0
    assert 0 <= fit.ks_pvalue <= 1
    assert fit.n_censored == sum(r.censored for r in records)


def test_exit_histogram_degenerate_when_horizon_vanishes():
    p = ModelParams(N=10, J=20.0, sigma=1.0)
    spec = spec_for("exit-histogram", p, dt=1e-3, max_time=1e-3, seed=1, replicas=1, k=0)
    with pytest.raises(DegenerateFitError):
        run_exit_histogram(spec, 0)


def test_exit_mean_within_predicted_window_with_slack():
    # order-of-magnitude containment: the mean exit lies inside the
    # eps = 0.5 prediction window widened by a factor N (the scaling law is
    # asymptotic in N; its slack is polynomial and unquantified)
    p = ModelParams(N=10, J=2.5, sigma=1.0)
    ts = timescale(p, 0.5)
    spec = spec_for("exit-histogram", p, max_time=160 * timescale(p, 0.0).t_center,
                    seed=43, replicas=120, k=0)
    _, fit = run_exit_histogram(spec, 0)
    mean = 1.0 / fit.rate_mle
    assert ts.t_lower / p.N <= mean <= ts.t_upper * p.N


def test_exit_replicas_reproducible():
    p = ModelParams(N=8, J=2.0, sigma=1.0)
    cfg = IntegratorConfig(dt=2.5e-3, max_time=10.0, seed=21)
    mcmc = McmcConfig(burn_in_sweeps=100, thinning_sweeps=2, seed=21)
    a = run_exit_replicas(p, cfg, mcmc, 0, 8)
    b = run_exit_replicas(p, cfg, mcmc, 0, 8)
    assert [r.exit_time for r in a] == [r.exit_time for r in b]


def test_scaling_sweep_shapes_and_crn():
    p = ModelParams(N=8, J=2.0, sigma=1.0)
    grid = ((8, 2.0, 1.0), (8, 2.0, 1.0), (12, 2.0, 1.0))
    spec = spec_for("scaling-sweep", p, dt=2.5e-3, max_time=30.0, seed=13,
                    replicas=12, grid=grid)
    rows = run_scaling_sweep(spec)
    assert len(rows) == 3
    # identical grid points share replica streams: identical results
    assert rows[0]["mean_exit"] == rows[1]["mean_exit"]
    assert rows[0]["N"] == 8 and rows[2]["N"] == 12


def test_clt_test_small_system():
    p = ModelParams(N=16, J=3.0, sigma=1.0)
    spec = spec_for("clt-test", p, max_time=1.0, seed=17, burn_in=200, thinning=4)
    res = run_clt_test(spec, n_samples=1500)
    assert res.n_samples == 1500
    assert res.distribution.probabilities.sum() == pytest.approx(1.0)
    assert res.chi2_pvalue > 0.01


def test_clt_test_zero_samples_rejected():
    p = ModelParams(N=16, J=3.0, sigma=1.0)
    spec = spec_for("clt-test", p)
    with pytest.raises(ValueError):
        run_clt_test(spec, n_samples=0)


def test_correlation_signs_by_phase():
    # J/sigma^2 = 12, N = 32: aligned in phase 0, anti-aligned across the
    # ring in phase 1
    p = ModelParams(N=32, J=12.0, sigma=1.0)
    spec = spec_for("correlation", p, seed=19, burn_in=200, thinning=2)
    res = run_correlation(spec, n_samples=250)
    assert res[0] > 0.5
    assert res[1] < 0.0


def test_correlation_near_aligned_limit():
    p = ModelParams(N=8, J=200.0, sigma=1.0)
    spec = spec_for("correlation", p, seed=23, burn_in=150, thinning=2)
    res = run_correlation(spec, phases=(0,), n_samples=100)
    assert res[0] > 0.95


def test_field_response_zero_field_symmetric():
    p = ModelParams(N=16, J=6.0, sigma=1.0)
    spec = spec_for("field-response", p, max_time=2.0, seed=29, replicas=6,
                    burn_in=150, thinning=2)
    res = run_field_response(spec, 0.0)
    assert abs(res[0]) < 0.2
    assert abs(res[1]) < 0.2


def test_field_response_strong_field_aligns_phase_zero():
    p = ModelParams(N=12, J=4.0, sigma=1.0)
    spec = spec_for("field-response", p, max_time=2.0, seed=31, replicas=4,
                    burn_in=150, thinning=2)
    res = run_field_response(spec, 40.0, phases=(0,))
    assert res[0] > 0.9


def test_bad_event_watch_extremes():
    p = ModelParams(N=16, J=1e-9, sigma=1.0)
    spec = spec_for("bad-event-watch", p, dt=2e-3, max_time=2.0, seed=37,
                    burn_in=100, thinning=1)
    frac_disordered = run_bad_event_watch(spec, 4, 1e-8)
    assert frac_disordered == pytest.approx(1.0)
    frac_trivial = run_bad_event_watch(spec, 16, math.pi)
    assert frac_trivial == 0.0


def test_fit_result_validation():
    with pytest.raises(ValueError):
        FitResult(rate_mle=0.0, ks_statistic=0.1, ks_pvalue=0.5, n_censored=0)
