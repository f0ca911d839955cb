"""Per-path Doppler spectrum recovery by iterative hard thresholding (IHT)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from . import kernels
from .resampler import CirWindow
from .signal_model import InputError

logger = logging.getLogger(__name__)


class EmptyWindowError(RuntimeError):
    """A window has no available sample, so nothing can be recovered."""

    def __init__(self, message="window has no available samples", windows=()):
        super().__init__(message)
        self.windows = tuple(windows)


@dataclass(frozen=True)
class IhtConfig:
    """IHT settings: sparsity ``omega``, step ``eta``, stop threshold ``xi`` on
    the iterate change, iteration cap ``n_max``."""

    omega: int = 3
    eta: float = 1.0
    xi: float = 1e-4
    n_max: int = 200

    def __post_init__(self):
        if self.omega < 1:
            raise InputError(f"sparsity level must be >= 1, got {self.omega}")
        if not self.eta > 0:
            raise InputError(f"step size must be positive, got {self.eta}")
        if not self.xi > 0:
            raise InputError(f"convergence threshold must be positive, got {self.xi}")
        if self.n_max < 1:
            raise InputError(f"iteration cap must be >= 1, got {self.n_max}")

    def check_window(self, W: int):
        if self.omega > W:
            raise InputError(f"sparsity level {self.omega} exceeds window length {W}")


class PartialIdft:
    """Rows ``rows`` of the unitary inverse DFT of size W.

    ``apply`` maps a spectrum to the available time samples, ``adjoint`` is its
    conjugate transpose (zero-fill, then unitary forward DFT).
    """

    def __init__(self, W: int, rows):
        rows = np.asarray(rows, dtype=np.int64).reshape(-1)
        if rows.size < 1:
            raise InputError("partial inverse DFT needs at least one row")
        if np.any((rows < 0) | (rows >= W)) or np.unique(rows).size != rows.size:
            raise InputError(f"rows must be distinct indices in [0, {W})")
        self.W = int(W)
        self.rows = rows

    def apply(self, H):
        H = np.asarray(H, dtype=np.complex128)
        if H.shape != (self.W,):
            raise InputError(f"expected a spectrum of length {self.W}, got shape {H.shape}")
        return np.fft.ifft(H, norm="ortho")[self.rows]

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.complex128)
        if y.shape != (self.rows.size,):
            raise InputError(f"expected {self.rows.size} measurements, got shape {y.shape}")
        full = np.zeros(self.W, dtype=np.complex128)
        full[self.rows] = y
        return np.fft.fft(full, norm="ortho")

    def matrix(self):
        gi = np.outer(self.rows, np.arange(self.W)) % self.W
        return np.exp(2j * np.pi * gi / self.W) / np.sqrt(self.W)


@dataclass(frozen=True, eq=False)
class SparseSpectrum:
    coeffs: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coeffs)

    @property
    def power(self) -> np.ndarray:
        return self.coeffs.real**2 + self.coeffs.imag**2


class IhtResult(NamedTuple):
    spectrum: SparseSpectrum
    iterations: int
    converged: bool


def recover_batch(values, masks, cfg: IhtConfig, parallel: bool = True):
    """IHT on stacked zero-filled windows (B, W); returns coeffs, iterations, flags.

    Raises EmptyWindowError listing the rows that have no available sample.
    Pass ``parallel=False`` when calling from worker threads.
    """
    values = np.asarray(values, dtype=np.complex128)
    masks = np.asarray(masks, dtype=bool)
    if values.ndim != 2 or values.shape != masks.shape:
        raise InputError("values and masks must be matching (B, W) arrays")
    cfg.check_window(values.shape[1])
    empty = np.flatnonzero(~masks.any(axis=1))
    if empty.size:
        raise EmptyWindowError(f"{empty.size} window(s) without available samples", empty.tolist())
    H, iters, conv = kernels.iht_batch(np.where(masks, values, 0), masks, cfg.omega, cfg.eta, cfg.xi, cfg.n_max,
                                      parallel=parallel)
    nnz = np.count_nonzero(H, axis=1)
    assert np.all(nnz <= cfg.omega), "IHT output exceeds the sparsity level"
    return H, iters, conv


def iht_recover(window: CirWindow, cfg: IhtConfig = IhtConfig()) -> IhtResult:
    """Recover the W-point Doppler spectrum of one window from its available samples."""
    if window.available.size == 0:
        raise EmptyWindowError(f"window {window.m} has no available samples", [window.m])
    H, iters, conv = recover_batch(window.values[None, :], window.mask[None, :], cfg)
    return IhtResult(SparseSpectrum(H[0]), int(iters[0]), bool(conv[0]))


def iht_iterates(window: CirWindow, cfg: IhtConfig = IhtConfig()) -> Iterator[tuple[np.ndarray, float]]:
    """Step-by-step IHT through ``PartialIdft``, yielding (iterate, residual norm).

    Slow reference path for diagnostics; follows the same stopping rule as
    ``iht_recover``.
    """
    if window.available.size == 0:
        raise EmptyWindowError(f"window {window.m} has no available samples", [window.m])
    cfg.check_window(window.W)
    op = PartialIdft(window.W, window.available)
    y = window.measurements
    H = np.zeros(window.W, dtype=np.complex128)
    prev = float(np.linalg.norm(y))
    for n in range(cfg.n_max):
        Hn = kernels.hard_threshold(H + cfg.eta * op.adjoint(y - op.apply(H)), cfg.omega)
        gamma = np.linalg.norm(Hn - H)
        H = Hn
        r = float(np.linalg.norm(y - op.apply(H)))
        if r > prev * (1 + 1e-12):
            logger.debug("window %d: residual rose at iteration %d (%.3g -> %.3g)", window.m, n + 1, prev, r)
        prev = r
        yield H, r
        if gamma < cfg.xi:
            return


def stft_baseline(window: CirWindow) -> np.ndarray:
    """Power of the unitary DFT of the zero-filled window."""
    X = np.fft.fft(window.values, norm="ortho")
    return X.real**2 + X.imag**2
