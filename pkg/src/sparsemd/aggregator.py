"""Target path selection, multi-path aggregation and spectrogram scoring."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .recovery import SparseSpectrum
from .resampler import RegularGrid, window_count
from .signal_model import InputError, RadioConfig, velocity_bins

logger = logging.getLogger(__name__)


class ShortSpectrogramWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PathSelection:
    ell: int
    bp: int
    valid: bool = True
    confident: bool = True
    power: float = 0.0


def background_subtract(grid: RegularGrid, interval: int) -> RegularGrid:
    """Remove the per-cell mean over available slots in blocks of ``interval`` slots.

    Empty slots stay zero and the mask is unchanged. If ``interval`` exceeds
    the grid length a single global mean is used.
    """
    if interval < 2:
        raise InputError(f"background interval must be >= 2 slots, got {interval}")
    interval = min(interval, grid.K)
    out = grid.values.copy()
    for start in range(0, grid.K, interval):
        sl = slice(start, start + interval)
        m = grid.mask[sl]
        if not m.any():
            continue
        block = out[sl]
        block[m] -= block[m].mean(axis=0)
    return grid.replace_values(out)


def window_power(grid: RegularGrid, m: int, W: int, delta: int | None = None) -> np.ndarray:
    """Mean |h|^2 over the available slots of window m, per (ell, b); NaN if empty."""
    delta = W // 2 if delta is None else delta
    sl = slice(m * delta, m * delta + W)
    mask = grid.mask[sl]
    if not mask.any():
        return np.full(grid.values.shape[1:], np.nan)
    v = grid.values[sl][mask]
    return np.mean(v.real**2 + v.imag**2, axis=0)


def select_strongest_path(grid: RegularGrid, m: int, W: int, delta: int | None = None,
                          bp: int | None = None, threshold: float | None = None) -> PathSelection:
    """Cell with the largest mean power over the available slots of window m.

    With ``bp`` given only that beam is searched. Ties go to the lower
    (ell, b). The selection is flagged not ``confident`` when its power is
    below ``threshold``, and not ``valid`` when the window is empty.
    """
    P = window_power(grid, m, W, delta)
    if np.isnan(P).all():
        return PathSelection(0, 0 if bp is None else bp, valid=False, confident=False)
    if bp is not None:
        ell = int(np.argmax(P[:, bp]))
        b = bp
    else:
        ell, b = (int(i) for i in np.unravel_index(np.argmax(P), P.shape))
    power = float(P[ell, b])
    confident = threshold is None or power >= threshold
    return PathSelection(ell, b, True, confident, power)


def detection_threshold(L: int, N_BP: int, W: int, noise_std: float, n_windows: int = 200, seed=None) -> float:
    """mean + 3*std of the strongest-cell window power in noise-only grids."""
    rng = np.random.default_rng(seed)
    scale = noise_std / np.sqrt(2)
    n = rng.standard_normal((n_windows, W, L, N_BP)) * scale
    n = n + 1j * rng.standard_normal(n.shape) * scale
    peak = np.mean(np.abs(n) ** 2, axis=1).reshape(n_windows, -1).max(axis=1)
    return float(peak.mean() + 3 * peak.std())


def path_range(ell_star: int, Q: int, L: int) -> range:
    """Bins ell_star - Q//2 .. ell_star + Q//2, clipped to [0, L)."""
    if Q < 1 or Q % 2 == 0:
        raise InputError(f"number of aggregated paths must be a positive odd integer, got {Q}")
    return range(max(0, ell_star - Q // 2), min(L, ell_star + Q // 2 + 1))


def normalize_column(D) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant column maps to zeros."""
    D = np.asarray(D, dtype=np.float64)
    lo, hi = D.min(), D.max()
    if hi == lo:
        return np.zeros_like(D)
    return (D - lo) / (hi - lo)


def sum_power(powers) -> np.ndarray:
    powers = [np.asarray(p, dtype=np.float64) for p in powers]
    if not powers:
        raise InputError("no spectra to aggregate")
    return np.sum(powers, axis=0)


def aggregate_md(spectra: Sequence[SparseSpectrum | None], Q: int, normalize: bool = True) -> np.ndarray:
    """Sum of per-path |H|^2, min-max normalised.

    ``spectra`` covers the (clipped) Q bins around the target; ``None`` marks
    a path whose recovery failed and is skipped.
    """
    if Q < 1 or Q % 2 == 0:
        raise InputError(f"number of aggregated paths must be a positive odd integer, got {Q}")
    if len(spectra) > Q:
        raise InputError(f"got {len(spectra)} spectra for Q={Q}")
    valid = [s.power for s in spectra if s is not None]
    if not valid:
        raise InputError("no valid spectra to aggregate")
    D = sum_power(valid)
    return normalize_column(D) if normalize else D


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Lambda x W micro-Doppler columns in natural DFT order.

    ``gaps[i]`` marks columns that could not be computed (stored as zeros).
    """

    columns: np.ndarray
    T_c: float
    delta: int
    f_o: float
    c: float = 2.9979e8
    gaps: np.ndarray = field(default=None)

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=np.float64)
        if cols.ndim != 2 or cols.shape[0] < 1:
            raise InputError("spectrogram needs at least one column")
        object.__setattr__(self, "columns", cols)
        g = np.zeros(cols.shape[0], bool) if self.gaps is None else np.asarray(self.gaps, bool)
        object.__setattr__(self, "gaps", g)

    @property
    def shape(self):
        return self.columns.shape

    @property
    def W(self) -> int:
        return self.columns.shape[1]

    @property
    def n_columns(self) -> int:
        return self.columns.shape[0]

    def velocities(self) -> np.ndarray:
        radio = RadioConfig(f_o=self.f_o, T_c=self.T_c, c=self.c)
        return velocity_bins(radio, self.W)

    def velocity_order(self) -> np.ndarray:
        return np.argsort(self.velocities(), kind="stable")

    def shifted(self):
        """(sorted velocities, columns re-ordered so velocity ascends)."""
        order = self.velocity_order()
        return self.velocities()[order], self.columns[:, order]

    def times(self) -> np.ndarray:
        """Start time [s] of each column's window."""
        return np.arange(self.n_columns) * self.delta * self.T_c

    @property
    def duration(self) -> float:
        return self.n_columns * self.delta * self.T_c


def build_spectrogram(columns: Sequence[np.ndarray | None], n_columns: int, W: int, T_c: float,
                      delta: int, f_o: float, c: float = 2.9979e8) -> Spectrogram:
    """Stack up to ``n_columns`` columns in window order.

    ``None`` entries become all-zero gap columns. Fewer columns than requested
    yields a shorter spectrogram and a warning.
    """
    cols = list(columns)[:n_columns]
    if len(cols) < n_columns:
        warnings.warn(f"only {len(cols)} of {n_columns} columns available", ShortSpectrogramWarning, stacklevel=2)
    if not cols:
        raise InputError("no columns to build a spectrogram from")
    gaps = np.array([c is None for c in cols])
    mat = np.zeros((len(cols), W))
    for i, col in enumerate(cols):
        if col is not None:
            mat[i] = col
    return Spectrogram(mat, T_c, delta, f_o, c, gaps)


def rmse(a: Spectrogram | np.ndarray, b: Spectrogram | np.ndarray) -> float:
    A = a.columns if isinstance(a, Spectrogram) else np.asarray(a, dtype=np.float64)
    B = b.columns if isinstance(b, Spectrogram) else np.asarray(b, dtype=np.float64)
    if A.shape != B.shape:
        raise InputError(f"spectrogram shapes differ: {A.shape} vs {B.shape}")
    return float(np.sqrt(np.mean((A - B) ** 2)))


def ground_truth(scene, n_columns: int, W: int, delta: int, Q: int) -> Spectrogram:
    """Reference spectrogram drawn from the scene's moving reflectors.

    Each moving track in the Q bins around the target contributes its
    target-beam power, weighted by the fraction of the window spent at each
    velocity, at its Doppler position; positions between two DFT bins are
    split linearly. Static reflectors and noise are left out. Columns are
    min-max normalised.
    """
    radio = scene.radio
    dv = 2 * radio.c / (4 * radio.f_o * radio.T_c) / W
    lo, hi = scene.target_bin - Q // 2, scene.target_bin + Q // 2
    tracks = [t for t in scene.moving_tracks if lo <= t.distance_bin <= hi]
    cols = []
    for m in range(n_columns):
        D = np.zeros(W)
        t0, t1 = m * delta * radio.T_c, (m * delta + W) * radio.T_c
        for tr in tracks:
            power = abs(tr.bp_gain[scene.target_bp]) ** 2
            D_seg = tr.segment_duration
            first, last = int(t0 // D_seg), int(np.ceil(t1 / D_seg))
            for j in range(first, last):
                frac = (min(t1, (j + 1) * D_seg) - max(t0, j * D_seg)) / (t1 - t0)
                if frac <= 0:
                    continue
                v = tr.velocity[min(j, tr.velocity.size - 1)]
                pos = -v / dv
                g = int(np.floor(pos))
                w_hi = pos - g
                D[g % W] += power * frac * (1 - w_hi)
                D[(g + 1) % W] += power * frac * w_hi
        cols.append(normalize_column(D))
    return build_spectrogram(cols, n_columns, W, radio.T_c, delta, radio.f_o, radio.c)
