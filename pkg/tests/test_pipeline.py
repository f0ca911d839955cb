import numpy as np
import pytest

from sparsemd.pipeline import PipelineConfig, recover_problems, run_pipeline, sample_times
from sparsemd.recovery import IhtConfig, recover_batch
from sparsemd.signal_model import InputError


def test_default_parameters():
    cfg = PipelineConfig()
    assert (cfg.T_c, cfg.W, cfg.delta, cfg.omega, cfg.Q, cfg.M_s, cfg.eta, cfg.xi, cfg.n_max) == (
        0.27e-3, 64, 32, 3, 9, 8, 1.0, 1e-4, 200)
    assert cfg.K == 199 * 32 + 64


@pytest.mark.parametrize("bad", [dict(W=63), dict(Q=4), dict(M_s=65), dict(sampling="x"), dict(preset="x"),
                                 dict(omega=0), dict(n_columns=0), dict(f_o=-1)])
def test_config_validation(bad):
    with pytest.raises(InputError):
        PipelineConfig(**bad)


def test_full_sampling_sparse_beats_stft():
    res = run_pipeline(PipelineConfig(n_columns=60, seed=4))
    m = res.metrics
    assert m["empty_windows"] == 0 and m["fill_fraction"] == 1.0
    assert m["rmse_sparse"] <= m["rmse_stft"]
    assert m["path_hits"] > 0.9


def test_sixteenth_sparse_run_is_valid():
    res = run_pipeline(PipelineConfig(n_columns=60, sampling="uniform", per_window=4, seed=1))
    assert res.sparse.columns.min() >= 0 and res.sparse.columns.max() <= 1
    assert not res.sparse.gaps.any()
    assert res.metrics["rmse_sparse"] < res.metrics["rmse_stft"]


def test_sparse_traffic_without_injection_leaves_gaps():
    cfg = PipelineConfig(n_columns=40, sampling="poisson", rate=60.0, seed=3)
    res = run_pipeline(cfg)
    assert res.empty_windows
    assert res.sparse.gaps[res.empty_windows].all()
    inj = run_pipeline(PipelineConfig(n_columns=40, sampling="poisson", rate=60.0, seed=3, inject=True))
    assert inj.empty_windows == [] and inj.metrics["n_inj"] > 0
    assert np.all(inj.injection.units_per_window() >= cfg.M_s)


def test_injected_samples_land_on_their_slots():
    cfg = PipelineConfig(n_columns=20, sampling="poisson", rate=200.0, seed=8, inject=True)
    res = run_pipeline(cfg)
    assert res.grid.mask[res.injection.injected_slots()].all()
    times, log = sample_times(cfg, 0)
    assert np.all(np.diff(times) > 0)
    assert np.all(np.isin(log.injected_slots() * cfg.T_c, times))


def test_parallel_equals_sequential():
    rng = np.random.default_rng(0)
    B, W = 700, 64
    masks = rng.random((B, W)) < 0.2
    masks[:, 0] = True
    vals = rng.standard_normal((B, W)) + 1j * rng.standard_normal((B, W))
    seq = recover_batch(vals, masks, IhtConfig())[0]
    par = recover_problems(vals, masks, IhtConfig(), workers=4, chunk=50)
    assert np.array_equal(seq, par)
    a = run_pipeline(PipelineConfig(n_columns=30, sampling="uniform", per_window=8, workers=1))
    b = run_pipeline(PipelineConfig(n_columns=30, sampling="uniform", per_window=8, workers=3))
    assert np.array_equal(a.sparse.columns, b.sparse.columns)


def test_static_preset_runs():
    res = run_pipeline(PipelineConfig(preset="static", n_columns=10, noise_std=0.0))
    assert res.metrics["n_columns"] == 10
