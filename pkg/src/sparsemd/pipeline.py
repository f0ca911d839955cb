"""End-to-end processing: scene -> CIR samples -> grid -> per-path IHT -> spectrograms."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from . import aggregator as agg
from .injection import bin_traffic, simulate_injection
from .recovery import IhtConfig, recover_batch
from .resampler import RegularGrid, half_window_subsample, slotted_resample, window_count
from .scenes import PRESETS, Scene
from .signal_model import CirStream, InputError, RadioConfig, TrafficTrace, poisson_trace

logger = logging.getLogger(__name__)

SAMPLING_MODES = ("full", "uniform", "poisson", "trace")


@dataclass
class PipelineConfig:
    # grid, window and recovery settings (defaults follow the reference system)
    T_c: float = 0.27e-3
    W: int = 64
    delta: int = 32
    omega: int = 3
    Q: int = 9
    M_s: int = 8
    eta: float = 1.0
    xi: float = 1e-4
    n_max: int = 200
    # radio
    f_o: float = 60.48e9
    B: float = 1.76e9
    L: int = 32
    N_BP: int = 4
    # scene and sampling
    preset: str = "walking"
    noise_std: float = 0.1
    n_columns: int = 200
    seed: int = 0
    sampling: str = "full"
    per_window: int = 16
    rate: float = 90.0
    inject: bool = False
    background_interval: int = 0
    workers: int = 1
    # I/O
    stream: Optional[str] = None
    trace: Optional[str] = None
    out: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.W < 2 or self.W % 2:
            raise InputError(f"W must be even and >= 2, got {self.W}")
        if not 1 <= self.delta <= self.W:
            raise InputError(f"delta must be in [1, W], got {self.delta}")
        if self.Q < 1 or self.Q % 2 == 0:
            raise InputError(f"Q must be a positive odd integer, got {self.Q}")
        if not 0 <= self.M_s <= self.W:
            raise InputError(f"M_s must be in [0, W], got {self.M_s}")
        if self.sampling not in SAMPLING_MODES:
            raise InputError(f"sampling must be one of {SAMPLING_MODES}, got {self.sampling!r}")
        if self.preset not in PRESETS:
            raise InputError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        if self.n_columns < 1:
            raise InputError("n_columns must be >= 1")
        if self.workers < 1:
            raise InputError("workers must be >= 1")
        self.radio()
        self.iht()

    def radio(self) -> RadioConfig:
        return RadioConfig(f_o=self.f_o, B=self.B, T_c=self.T_c, L=self.L, N_BP=self.N_BP)

    def iht(self) -> IhtConfig:
        return IhtConfig(self.omega, self.eta, self.xi, self.n_max)

    @property
    def K(self) -> int:
        return (self.n_columns - 1) * self.delta + self.W

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def _rngs(seed):
    names = ("scene", "noise", "sampling")
    return dict(zip(names, np.random.SeedSequence(seed).spawn(len(names))))


def make_scene(cfg: PipelineConfig, seed) -> Scene:
    radio = cfg.radio()
    if cfg.preset == "walking":
        return PRESETS["walking"](radio, cfg.K * cfg.T_c, seed=seed, W=cfg.W, noise_std=cfg.noise_std)
    return PRESETS[cfg.preset](radio, noise_std=cfg.noise_std, seed=seed)


def sample_times(cfg: PipelineConfig, seed, trace: TrafficTrace | None = None):
    """CIR sample instants relative to the grid origin, plus the injection log if any."""
    K, T_c = cfg.K, cfg.T_c
    if cfg.sampling == "full":
        return np.arange(K) * T_c, None
    if cfg.sampling == "uniform":
        mask = half_window_subsample(K, cfg.W, cfg.per_window, seed)
        return np.flatnonzero(mask) * T_c, None
    if cfg.sampling == "poisson":
        trace = poisson_trace(cfg.rate, (K - 0.5) * T_c, seed)
        origin = 0.0
    else:
        if trace is None:
            raise InputError("sampling='trace' needs a traffic trace")
        origin = float(trace.timestamps[0])
    times = trace.timestamps - origin
    times = times[times < (K - 0.5) * T_c]
    log = None
    if cfg.inject:
        timeline = bin_traffic(trace, T_c, K, origin=origin)
        log = simulate_injection(timeline, cfg.M_s, cfg.W)
        times = np.concatenate((times, log.injected_slots() * T_c))
    return np.unique(times), log


def recover_problems(values, masks, iht: IhtConfig, workers: int = 1, chunk: int = 64):
    """IHT over (B, W) problems; worker threads each take contiguous chunks."""
    B = values.shape[0]
    if workers <= 1 or B <= chunk:
        return recover_batch(values, masks, iht)[0]
    starts = range(0, B, chunk)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(
            lambda s: recover_batch(values[s:s + chunk], masks[s:s + chunk], iht, parallel=False)[0], starts))
    return np.concatenate(parts, axis=0)


@dataclass
class PipelineResult:
    sparse: agg.Spectrogram
    stft: agg.Spectrogram
    truth: Optional[agg.Spectrogram]
    grid: RegularGrid
    selections: list
    empty_windows: list
    metrics: dict
    injection: object = None


def process_grid(grid: RegularGrid, cfg: PipelineConfig, target_bp: int | None = None) -> tuple:
    """Background removal, path selection, recovery and aggregation on a grid.

    Returns (sparse spectrogram, STFT spectrogram, selections, empty windows).
    """
    W, delta, Q = cfg.W, cfg.delta, cfg.Q
    interval = cfg.background_interval or grid.K
    clean = agg.background_subtract(grid, max(interval, 2))
    n_win = min(window_count(grid.K, W, delta), cfg.n_columns)
    if n_win == 0:
        raise InputError(f"grid of {grid.K} slots is shorter than one window ({W})")
    if target_bp is None:
        P = np.zeros(grid.values.shape[1:])
        if grid.mask.any():
            v = clean.values[grid.mask]
            P = np.mean(v.real**2 + v.imag**2, axis=0)
        target_bp = int(np.unravel_index(np.argmax(P), P.shape)[1])

    L = grid.values.shape[1]
    selections, empty = [], []
    problems, owners = [], []
    win_slots = np.arange(W)
    for m in range(n_win):
        sel = agg.select_strongest_path(clean, m, W, delta, bp=target_bp)
        selections.append(sel)
        if not sel.valid:
            empty.append(m)
            continue
        idx = m * delta + win_slots
        for ell in agg.path_range(sel.ell, Q, L):
            problems.append(clean.values[idx, ell, target_bp])
            owners.append(m)
    owners = np.asarray(owners, dtype=np.int64)
    sparse_cols: list = [None] * n_win
    stft_cols: list = [None] * n_win
    if problems:
        values = np.stack(problems)
        masks = np.stack([grid.mask[m * delta + win_slots] for m in owners])
        H = recover_problems(values, masks, cfg.iht(), cfg.workers)
        sp = H.real**2 + H.imag**2
        X = np.fft.fft(np.where(masks, values, 0), axis=1, norm="ortho")
        st = X.real**2 + X.imag**2
        for m in np.unique(owners):
            rows = owners == m
            sparse_cols[m] = agg.normalize_column(sp[rows].sum(axis=0))
            stft_cols[m] = agg.normalize_column(st[rows].sum(axis=0))
    build = dict(n_columns=n_win, W=W, T_c=grid.T_c, delta=delta, f_o=cfg.f_o)
    return agg.build_spectrogram(sparse_cols, **build), agg.build_spectrogram(stft_cols, **build), selections, empty


def run_pipeline(cfg: PipelineConfig, stream: CirStream | None = None, trace: TrafficTrace | None = None) -> PipelineResult:
    """Run the full chain; with ``stream`` given the scene synthesis is skipped."""
    seeds = _rngs(cfg.seed)
    scene = None
    log = None
    if stream is None:
        scene = make_scene(cfg, seeds["scene"])
        times, log = sample_times(cfg, seeds["sampling"], trace)
        if times.size == 0:
            raise InputError("no CIR samples fall inside the processing span")
        stream = scene.sample(times, seed=seeds["noise"])
        origin = 0.0
    else:
        origin = None
    grid = slotted_resample(stream, cfg.T_c, cfg.K, origin=origin)
    sparse, stft, selections, empty = process_grid(grid, cfg, None if scene is None else scene.target_bp)
    truth = None
    metrics = {"n_columns": sparse.n_columns, "fill_fraction": grid.fill_fraction,
               "empty_windows": len(empty), "backend": _backend()}
    if scene is not None:
        truth = agg.ground_truth(scene, sparse.n_columns, cfg.W, cfg.delta, cfg.Q)
        metrics["rmse_sparse"] = agg.rmse(sparse, truth)
        metrics["rmse_stft"] = agg.rmse(stft, truth)
        metrics["path_hits"] = float(np.mean([s.valid and s.ell == scene.target_bin for s in selections]))
    if log is not None:
        metrics["n_inj"] = log.n_inj
    return PipelineResult(sparse, stft, truth, grid, selections, empty, metrics, log)


def _backend():
    from ._accel import backend_name

    return backend_name()
