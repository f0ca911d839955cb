"""Radio parameters, reflector tracks and synthetic CIR streams."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 2.9979e8


class InputError(ValueError):
    """Raised for malformed or inconsistent user input."""


@dataclass(frozen=True)
class RadioConfig:
    """Carrier, bandwidth and CIR layout.

    Units: ``f_o`` and ``B`` in Hz, ``T_c`` in seconds. ``L`` is the number of
    distance bins and ``N_BP`` the number of beam patterns.
    """

    f_o: float = 60.48e9
    B: float = 1.76e9
    T_c: float = 0.27e-3
    L: int = 32
    N_BP: int = 4
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.f_o > 0:
            raise InputError(f"carrier frequency must be positive, got {self.f_o}")
        if not self.B > 0:
            raise InputError(f"bandwidth must be positive, got {self.B}")
        if not self.T_c > 0:
            raise InputError(f"grid step must be positive, got {self.T_c}")
        if self.L < 1 or self.N_BP < 1:
            raise InputError(f"need L >= 1 and N_BP >= 1, got L={self.L}, N_BP={self.N_BP}")

    @property
    def range_resolution(self) -> float:
        """Distance-bin width c/(2B) in metres."""
        return self.c / (2 * self.B)

    @property
    def wavelength(self) -> float:
        return self.c / self.f_o

    def bin_distance(self, ell) -> float:
        return ell * self.range_resolution


@dataclass(frozen=True, eq=False)
class ReflectorTrack:
    """A point reflector sitting in one distance bin.

    ``velocity`` holds one radial velocity [m/s] per segment of
    ``segment_duration`` seconds (positive = moving away); the last value is
    held beyond the end of the profile.
    """

    distance_bin: int
    bp_gain: np.ndarray
    velocity: np.ndarray
    segment_duration: float
    phase0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "bp_gain", np.atleast_1d(np.asarray(self.bp_gain, dtype=np.complex128)))
        object.__setattr__(self, "velocity", np.atleast_1d(np.asarray(self.velocity, dtype=np.float64)))
        if not np.all(np.isfinite(self.bp_gain)):
            raise InputError("bp_gain must be finite")
        if not np.all(np.isfinite(self.velocity)):
            raise InputError("velocity profile must be finite")
        if not self.segment_duration > 0:
            raise InputError("segment_duration must be positive")

    @classmethod
    def constant(cls, distance_bin, bp_gain, velocity=0.0, phase0=0.0):
        return cls(distance_bin, bp_gain, [velocity], 1.0, phase0)

    @property
    def is_static(self) -> bool:
        return not np.any(self.velocity)

    def velocity_at(self, t):
        seg = np.clip(np.floor(np.asarray(t) / self.segment_duration).astype(np.int64), 0, self.velocity.size - 1)
        return self.velocity[seg]

    def displacement(self, t):
        """Integral of the piecewise-constant velocity from 0 to ``t``."""
        t = np.asarray(t, dtype=np.float64)
        D = self.segment_duration
        seg_start = np.concatenate(([0.0], np.cumsum(self.velocity[:-1] * D)))
        seg = np.clip(np.floor(t / D).astype(np.int64), 0, self.velocity.size - 1)
        return seg_start[seg] + self.velocity[seg] * (t - seg * D)


@dataclass(frozen=True, eq=False)
class CirStream:
    """Irregularly timed CIR snapshots.

    ``times`` has shape (N,), ``gains`` has shape (N, L, N_BP).
    """

    times: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64).reshape(-1)
        g = np.asarray(self.gains, dtype=np.complex128)
        if g.ndim != 3 or g.shape[0] != t.size:
            raise InputError(f"gains must have shape (N, L, N_BP) with N={t.size}, got {g.shape}")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise InputError("CIR sample times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "gains", g)

    def __len__(self):
        return self.times.size

    @property
    def L(self) -> int:
        return self.gains.shape[1]

    @property
    def N_BP(self) -> int:
        return self.gains.shape[2]


@dataclass(frozen=True, eq=False)
class TrafficTrace:
    """Packet timestamps [s] and sizes [bytes]."""

    timestamps: np.ndarray
    sizes: np.ndarray = field(default=None)

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=np.float64).reshape(-1)
        s = np.full(t.size, 1500, dtype=np.int64) if self.sizes is None else np.asarray(self.sizes, dtype=np.int64).reshape(-1)
        if s.size != t.size:
            raise InputError("timestamps and sizes differ in length")
        if t.size > 1 and np.any(np.diff(t) < 0):
            raise InputError("packet timestamps must be non-decreasing")
        if np.any(s <= 0):
            raise InputError("packet sizes must be positive")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "sizes", s)

    def __len__(self):
        return self.timestamps.size

    @property
    def total_bits(self) -> int:
        return int(self.sizes.sum()) * 8


def synth_cir(radio: RadioConfig, tracks: Sequence[ReflectorTrack], sample_times, noise_std=0.0, seed=None) -> CirStream:
    """Sample the CIR of a set of reflector tracks at the given instants.

    Each track contributes ``a_b * exp(j*phase0 - j*4*pi*f_o/c*(d_l + x(t)))``
    to its bin, with ``x(t)`` the integrated velocity profile. Circular complex
    Gaussian noise of standard deviation ``noise_std`` is added per cell.
    """
    t = np.asarray(sample_times, dtype=np.float64).reshape(-1)
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise InputError("sample_times must be strictly increasing")
    if noise_std < 0:
        raise InputError("noise_std must be non-negative")
    if not tracks and noise_std == 0:
        raise InputError("need at least one track or a positive noise_std")
    gains = np.zeros((t.size, radio.L, radio.N_BP), dtype=np.complex128)
    k = 4 * np.pi * radio.f_o / radio.c
    for tr in tracks:
        if not 0 <= tr.distance_bin < radio.L:
            raise InputError(f"track bin {tr.distance_bin} outside [0, {radio.L})")
        if tr.bp_gain.size != radio.N_BP:
            raise InputError(f"bp_gain has {tr.bp_gain.size} entries, expected N_BP={radio.N_BP}")
        phase = tr.phase0 - k * (radio.bin_distance(tr.distance_bin) + tr.displacement(t))
        gains[:, tr.distance_bin, :] += np.exp(1j * phase)[:, None] * tr.bp_gain[None, :]
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        scale = noise_std / np.sqrt(2)
        gains += scale * (rng.standard_normal(gains.shape) + 1j * rng.standard_normal(gains.shape))
    return CirStream(t, gains)


class DopplerAxis(NamedTuple):
    dv: float
    v_max: float
    df: float
    fd_max: float


def doppler_axis(radio: RadioConfig, W: int) -> DopplerAxis:
    """Velocity/Doppler resolution and unambiguous limits for windows of W slots."""
    if W < 2:
        raise InputError(f"window length must be >= 2, got {W}")
    v_max = radio.c / (4 * radio.f_o * radio.T_c)
    return DopplerAxis(dv=2 * v_max / W, v_max=v_max, df=1 / (W * radio.T_c), fd_max=1 / (2 * radio.T_c))


def velocity_bins(radio: RadioConfig, W: int) -> np.ndarray:
    """Radial velocity [m/s] of each DFT bin, in natural (unshifted) order.

    With the CIR phase rotating as exp(-j*4*pi*f_o*v*t/c), bin g of the
    window DFT corresponds to velocity -g*dv for signed g in [-W/2, W/2).
    """
    dv = doppler_axis(radio, W).dv
    return -np.fft.fftfreq(W, d=1.0 / W) * dv


def velocity_to_bin(radio: RadioConfig, W: int, v) -> np.ndarray:
    """Nearest DFT bin (natural order) for radial velocity ``v``."""
    dv = doppler_axis(radio, W).dv
    return np.mod(np.rint(-np.asarray(v) / dv).astype(np.int64), W)


GOLAY_LENGTHS = tuple(2**k for k in range(1, 11))


def golay_pair(n: int):
    """Complementary Golay pair of length ``n`` by recursive doubling."""
    if n not in GOLAY_LENGTHS:
        raise InputError(f"Golay length must be a power of two in [2, 1024], got {n}")
    a = np.ones(1, dtype=np.int8)
    b = np.ones(1, dtype=np.int8)
    while a.size < n:
        a, b = np.concatenate((a, b)), np.concatenate((a, -b))
    return a, b


def golay_check(a, b) -> bool:
    """True iff the aperiodic autocorrelations of a and b sum to 2n*delta."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        return False
    total = np.correlate(a, a, "full") + np.correlate(b, b, "full")
    expected = np.zeros_like(total)
    expected[a.size - 1] = 2 * a.size
    return bool(np.array_equal(total, expected))


def load_traffic_trace(path, format: str = "csv"):
    """Read a ``timestamp_seconds,size_bytes`` trace.

    Returns ``(trace, n_out_of_order)``; rows are stably sorted by time and the
    second value counts rows whose timestamp was below the previous row's.
    """
    if format != "csv":
        raise InputError(f"unsupported trace format {format!r}")
    times, sizes = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            try:
                if len(row) != 2:
                    raise ValueError(f"expected 2 fields, got {len(row)}")
                t = float(row[0])
                s = int(row[1])
                if not np.isfinite(t) or s <= 0:
                    raise ValueError("non-finite time or non-positive size")
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: malformed trace row {','.join(row)!r} ({exc})") from None
            times.append(t)
            sizes.append(s)
    if not times:
        raise InputError(f"{path}: trace is empty")
    t = np.asarray(times)
    n_bad = int(np.count_nonzero(np.diff(t) < 0))
    if n_bad:
        logger.warning("%s: %d out-of-order rows, sorting", path, n_bad)
    order = np.argsort(t, kind="stable")
    return TrafficTrace(t[order], np.asarray(sizes)[order]), n_bad


def save_traffic_trace(trace: TrafficTrace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for t, s in zip(trace.timestamps, trace.sizes):
            w.writerow([repr(float(t)), int(s)])
    return Path(path)


def poisson_trace(rate, duration, seed=None, sizes=(64, 1500)) -> TrafficTrace:
    """Poisson packet arrivals with sizes drawn uniformly from ``sizes`` range."""
    rng = np.random.default_rng(seed)
    n = rng.poisson(rate * duration)
    t = np.sort(rng.uniform(0.0, duration, n))
    lo, hi = sizes
    s = rng.integers(lo, hi + 1, n)
    return TrafficTrace(t, s)
