"""Slotted resampling onto a regular grid and half-overlapping windowing."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .signal_model import CirStream, InputError


class ShortGridWarning(UserWarning):
    """The grid is shorter than one window, so no window could be cut."""


@dataclass(frozen=True, eq=False)
class RegularGrid:
    """CIR on slots ``k*T_c`` (k = 0..K-1) relative to ``origin``.

    ``values`` has shape (K, L, N_BP); ``mask[k]`` is false for empty slots,
    whose values are zero. ``source_times[k]`` is the absolute time of the kept
    sample (NaN when empty).
    """

    T_c: float
    values: np.ndarray
    mask: np.ndarray
    origin: float = 0.0
    source_times: np.ndarray | None = None

    def __post_init__(self):
        if self.values.ndim != 3 or self.mask.shape != (self.values.shape[0],):
            raise InputError("grid values must be (K, L, N_BP) with a (K,) mask")
        if self.values.shape[0] < 1:
            raise InputError("grid needs K >= 1 slots")

    @property
    def K(self) -> int:
        return self.values.shape[0]

    @property
    def fill_fraction(self) -> float:
        return float(np.mean(self.mask))

    def replace_values(self, values) -> "RegularGrid":
        return RegularGrid(self.T_c, values, self.mask, self.origin, self.source_times)


@dataclass(frozen=True, eq=False)
class CirWindow:
    """W consecutive slots of one (path, beam) cell.

    ``available`` lists the in-window indices of the present samples;
    ``values`` is zero elsewhere.
    """

    m: int
    offset: int
    values: np.ndarray
    available: np.ndarray

    @property
    def W(self) -> int:
        return self.values.size

    @property
    def mask(self) -> np.ndarray:
        out = np.zeros(self.W, dtype=bool)
        out[self.available] = True
        return out

    @property
    def measurements(self) -> np.ndarray:
        return self.values[self.available]

    @classmethod
    def from_samples(cls, values, mask, m=0, offset=0) -> "CirWindow":
        mask = np.asarray(mask, dtype=bool)
        vals = np.where(mask, np.asarray(values, dtype=np.complex128), 0)
        return cls(m, offset, vals, np.flatnonzero(mask))


def slotted_resample(stream: CirStream, T_c: float, K: int, origin: float | None = None) -> RegularGrid:
    """Keep, for each slot, the sample nearest its centre.

    Slot k collects samples with ``k*T_c - T_c/2 <= t - origin < k*T_c + T_c/2``;
    the one closest to ``k*T_c`` wins and equidistant samples resolve to the
    earlier one. Slots with no sample stay zero and unmasked. Samples beyond
    the last slot are dropped. ``origin`` defaults to the first sample time.
    """
    if K <= 0:
        raise InputError(f"slot count must be positive, got {K}")
    if not T_c > 0:
        raise InputError(f"grid step must be positive, got {T_c}")
    if len(stream) == 0:
        raise InputError("cannot resample an empty CIR stream")
    if origin is None:
        origin = float(stream.times[0])
    rel = stream.times - origin
    src = kernels.slot_assign(rel, float(T_c), int(K))
    mask = src >= 0
    values = np.zeros((K, stream.L, stream.N_BP), dtype=np.complex128)
    values[mask] = stream.gains[src[mask]]
    source_times = np.full(K, np.nan)
    source_times[mask] = stream.times[src[mask]]
    return RegularGrid(float(T_c), values, mask, float(origin), source_times)


def window_count(K: int, W: int, delta: int) -> int:
    return 0 if W > K else (K - W) // delta + 1


def _check_window_args(W, delta):
    if W < 2 or W % 2:
        raise InputError(f"window length must be even and >= 2, got {W}")
    if delta < 1:
        raise InputError(f"window shift must be positive, got {delta}")


def window_arrays(grid: RegularGrid, W: int, delta: int | None = None, ell: int = 0, b: int = 0):
    """Stacked windows of one cell: values (M, W) and masks (M, W)."""
    delta = W // 2 if delta is None else delta
    _check_window_args(W, delta)
    n = window_count(grid.K, W, delta)
    if n == 0:
        warnings.warn(f"grid of {grid.K} slots is shorter than a window of {W}", ShortGridWarning, stacklevel=2)
        return np.zeros((0, W), np.complex128), np.zeros((0, W), bool)
    idx = np.arange(n)[:, None] * delta + np.arange(W)[None, :]
    return grid.values[idx, ell, b], grid.mask[idx]


def cut_windows(grid: RegularGrid, W: int, delta: int | None = None, ell: int = 0, b: int = 0) -> list[CirWindow]:
    """Windows ``[m*delta, m*delta + W)`` of cell (ell, b); delta defaults to W/2."""
    delta = W // 2 if delta is None else delta
    vals, masks = window_arrays(grid, W, delta, ell, b)
    return [CirWindow(m, m * delta, vals[m], np.flatnonzero(masks[m])) for m in range(vals.shape[0])]


def half_window_subsample(K: int, W: int, per_window: int, seed=None) -> np.ndarray:
    """Slot mask keeping ``per_window/2`` random slots in every half-window.

    Every half-overlapping window of W slots then holds exactly ``per_window``
    samples. Slots past the last full half-window are dropped.
    """
    half = W // 2
    if per_window % 2 or not 0 < per_window <= W:
        raise InputError(f"per_window must be even and in (0, {W}], got {per_window}")
    rng = np.random.default_rng(seed)
    mask = np.zeros(K, dtype=bool)
    for h in range(K // half):
        keep = rng.choice(half, per_window // 2, replace=False)
        mask[h * half + keep] = True
    return mask
