"""Sensing-unit injection on the slot grid and sensing overhead accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .kernels import INJECT, NONE, REUSE
from .kernels._numpy import run_half
from .signal_model import InputError, TrafficTrace

ACTION_NAMES = {NONE: "none", REUSE: "reuse", INJECT: "inject"}

# 802.11ay maximum PPDU sizes in bytes (kB = 1000 B) and the legacy trace PPDU
PPDU_BYTES = {"HT": 65_000, "DMG": 262_000, "VHT": 4_692_000}
PPDU_PDX_BYTES = 1_500
TRN_LEN_BITS = 768
SENSING_UNIT_AIRTIME = 436e-9  # seconds, one TRN field
MS_SWEEP = (4, 8, 16, 24, 32, 64)


@dataclass(frozen=True, eq=False)
class SlotTimeline:
    """Per-slot packet presence on the T_c grid.

    ``counts[k]`` is the number of packets binned into slot k and
    ``first_packet[k]`` the trace index of the first one (-1 if none).
    """

    slots: np.ndarray
    T_c: float = 0.0
    counts: np.ndarray | None = None
    first_packet: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "slots", np.asarray(self.slots, dtype=bool).reshape(-1))

    def __len__(self):
        return self.slots.size


def bin_traffic(trace: TrafficTrace, T_c: float, K: int, origin: float | None = None) -> SlotTimeline:
    """Mark slot k busy iff a packet falls in ``[k*T_c - T_c/2, k*T_c + T_c/2)``."""
    if K <= 0:
        raise InputError(f"slot count must be positive, got {K}")
    counts = np.zeros(K, dtype=np.int64)
    first = np.full(K, -1, dtype=np.int64)
    if len(trace):
        origin = float(trace.timestamps[0]) if origin is None else origin
        k = np.floor((trace.timestamps - origin) / T_c + 0.5).astype(np.int64)
        ok = np.flatnonzero((k >= 0) & (k < K))
        np.add.at(counts, k[ok], 1)
        # timestamps are sorted, so the first hit of each slot is the earliest packet
        ks, idx = np.unique(k[ok], return_index=True)
        first[ks] = ok[idx]
    return SlotTimeline(counts > 0, T_c, counts, first)


@dataclass(frozen=True)
class InjectionState:
    """Outcome of the observation/scheduling phases for window m.

    ``scheduled`` is the slot set chosen in the scheduling phase (burst at the
    end of the second half); it is empty again after the transmission phase.
    """

    m: int
    n_available: int
    n_wanted: int
    scheduled: tuple


def run_window(timeline: SlotTimeline | np.ndarray, m: int, M_s: int, W: int,
               first_half_units: int | None = None):
    """Observation, scheduling and transmission phases for window m.

    Window m spans slots ``[m*W/2, m*W/2 + W)``; the transmission phase walks
    its second half. ``first_half_units`` defaults to the number of packets in
    the first half (pass the true unit count when earlier injections exist).
    Returns ``(state, actions)`` with one action code per second-half slot.
    """
    packets = timeline.slots if isinstance(timeline, SlotTimeline) else np.asarray(timeline, dtype=bool)
    if W < 2 or W % 2:
        raise InputError(f"window length must be even, got {W}")
    if not 0 <= M_s <= W:
        raise InputError(f"M_s must be in [0, W], got {M_s}")
    half = W // 2
    first = (m + 1) * half
    if first + half > packets.size:
        raise InputError(f"window {m} runs past the end of the timeline")
    if first_half_units is None:
        lo = max(first - half, 0)
        first_half_units = int(np.count_nonzero(packets[lo:first]))
    n_wanted = min(max(M_s - first_half_units, 0), half)
    scheduled = tuple(range(first + half - n_wanted, first + half))
    actions = run_half(packets, first, half, first_half_units, M_s)
    return InjectionState(m, first_half_units, n_wanted, scheduled), actions


@dataclass(frozen=True, eq=False)
class InjectionLog:
    """Per-slot actions (0 none, 1 reuse, 2 inject) over a simulated timeline."""

    actions: np.ndarray
    M_s: int
    W: int
    T_c: float = 0.0

    @property
    def n_inj(self) -> int:
        return int(np.count_nonzero(self.actions == INJECT))

    @property
    def n_reuse(self) -> int:
        return int(np.count_nonzero(self.actions == REUSE))

    @property
    def n_windows(self) -> int:
        half = self.W // 2
        return max(self.actions.size // half - 1, 0)

    def units_per_window(self) -> np.ndarray:
        """Sensing units (reused + injected) in each completed window."""
        half = self.W // 2
        n_half = self.actions.size // half
        if n_half < 2:
            return np.zeros(0, dtype=np.int64)
        per_half = np.count_nonzero(self.actions[:n_half * half].reshape(n_half, half), axis=1)
        return per_half[:-1] + per_half[1:]

    def injected_slots(self) -> np.ndarray:
        return np.flatnonzero(self.actions == INJECT)


def simulate_injection(timeline: SlotTimeline | np.ndarray, M_s: int, W: int) -> InjectionLog:
    """Run the injection scheduler over every half-window of the timeline.

    The first half-window is handled as the second half of a virtual window
    that begins before the timeline (no prior units).
    """
    packets = timeline.slots if isinstance(timeline, SlotTimeline) else np.asarray(timeline, dtype=bool)
    T_c = timeline.T_c if isinstance(timeline, SlotTimeline) else 0.0
    if W < 2 or W % 2:
        raise InputError(f"window length must be even, got {W}")
    if not 0 <= M_s <= W:
        raise InputError(f"M_s must be in [0, W], got {M_s}")
    actions = kernels.injection_run(np.ascontiguousarray(packets, dtype=np.bool_), int(M_s), int(W))
    log = InjectionLog(np.asarray(actions, dtype=np.int8), M_s, W, T_c)
    assert not np.any((log.actions == INJECT) & packets), "injection in a slot with a packet"
    return log


@dataclass(frozen=True)
class OverheadReport:
    overhead: float
    exact: Fraction
    n_TRN: int
    TRN_len: int
    PPDU_ay: int
    PPDU_pdx: int
    n_c: int
    n_inj: int
    traffic_bits: int
    rescaled_bits: Fraction = field(repr=False)

    def as_dict(self):
        return {"n_TRN": self.n_TRN, "TRN_len": self.TRN_len, "PPDU_ay": self.PPDU_ay, "PPDU_pdx": self.PPDU_pdx,
                "n_c": self.n_c, "n_inj": self.n_inj, "traffic_bits": self.traffic_bits,
                "rescaled_bits": float(self.rescaled_bits), "OH": self.overhead}


def compute_overhead(n_inj_or_log, trace: TrafficTrace, n_TRN: int = 1, TRN_len: int = TRN_LEN_BITS,
                     PPDU_ay: int = PPDU_BYTES["DMG"], PPDU_pdx: int = PPDU_PDX_BYTES) -> OverheadReport:
    """Sensing bits over rescaled communication bits.

    Every trace packet carries ``n_TRN`` TRN fields and so does each injected
    unit; packet sizes are scaled by ``PPDU_ay / PPDU_pdx``.
    """
    n_inj = n_inj_or_log.n_inj if isinstance(n_inj_or_log, InjectionLog) else int(n_inj_or_log)
    bits = trace.total_bits
    if bits <= 0:
        raise InputError("trace carries no traffic; overhead is undefined")
    if n_TRN < 1 or TRN_len < 1 or PPDU_ay <= 0 or PPDU_pdx <= 0:
        raise InputError("n_TRN, TRN_len and PPDU sizes must be positive")
    n_c = len(trace)
    rescaled = Fraction(PPDU_ay, PPDU_pdx) * bits
    exact = Fraction(n_TRN * (n_c + n_inj) * TRN_len) / rescaled
    return OverheadReport(float(exact), exact, n_TRN, TRN_len, PPDU_ay, PPDU_pdx, n_c, n_inj, bits, rescaled)


def trn_fraction(ppdu_bytes: int, TRN_len: int = TRN_LEN_BITS, n_TRN: int = 1) -> float:
    """Share of one maximum-size PPDU taken by a sensing unit."""
    return n_TRN * TRN_len / (8 * ppdu_bytes)


def slot_occupancy(T_c: float, airtime: float = SENSING_UNIT_AIRTIME, n_TRN: int = 1) -> float:
    return n_TRN * airtime / T_c


def sweep_overhead(trace: TrafficTrace, T_c: float, W: int, ms_values=MS_SWEEP, K: int | None = None,
                   **overhead_kw) -> list[dict]:
    """Injection + overhead for each M_s; one row per value."""
    if K is None:
        span = trace.timestamps[-1] - trace.timestamps[0] if len(trace) else 0.0
        K = int(np.floor(span / T_c + 0.5)) + 1
    half = W // 2
    K = max(K // half, 2) * half
    timeline = bin_traffic(trace, T_c, K)
    rows = []
    for M_s in ms_values:
        log = simulate_injection(timeline, M_s, W)
        units = log.units_per_window()
        rep = compute_overhead(log, trace, **overhead_kw)
        rows.append({"M_s": int(M_s), "n_c": rep.n_c, "n_inj": rep.n_inj,
                     "units_per_window_min": int(units.min()) if units.size else 0,
                     "units_per_window_mean": float(units.mean()) if units.size else 0.0,
                     "OH": rep.overhead})
    return rows
