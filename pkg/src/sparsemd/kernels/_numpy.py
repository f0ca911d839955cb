"""Pure-numpy reference kernels.

These are the fallback path and the reference the numba kernels are checked
against. Array conventions are shared with ``_numba``.
"""

import numpy as np

NONE, REUSE, INJECT = 0, 1, 2


def slot_assign(times, T_c, K):
    """Index of the sample kept in each slot, or -1 for an empty slot."""
    times = np.asarray(times, dtype=np.float64)
    src = np.full(K, -1, dtype=np.int64)
    if times.size == 0:
        return src
    k = np.floor(times / T_c + 0.5).astype(np.int64)
    idx = np.arange(times.size)
    ok = (k >= 0) & (k < K)
    k, idx = k[ok], idx[ok]
    dist = np.abs(k * T_c - times[idx])
    # slot, then distance, then original (time) order for ties
    order = np.lexsort((idx, dist, k))
    k_sorted = k[order]
    first = np.ones(k_sorted.size, dtype=bool)
    first[1:] = k_sorted[1:] != k_sorted[:-1]
    src[k_sorted[first]] = idx[order][first]
    return src


def hard_threshold(x, omega):
    """Keep the ``omega`` largest-magnitude entries along the last axis."""
    mag2 = x.real**2 + x.imag**2
    keep = np.argsort(-mag2, axis=-1, kind="stable")[..., :omega]
    out = np.zeros_like(x)
    np.put_along_axis(out, keep, np.take_along_axis(x, keep, axis=-1), axis=-1)
    return out


def iht_batch(values, masks, omega, eta, xi, n_max, parallel=True):
    """Run IHT on a batch of zero-filled windows.

    values : (B, W) complex, zero where ``masks`` is false
    masks  : (B, W) bool
    Returns coefficients (B, W), iteration counts (B,) and convergence flags (B,).
    ``parallel`` is accepted for signature parity with the numba kernel.
    """
    values = np.asarray(values, dtype=np.complex128)
    masks = np.asarray(masks, dtype=bool)
    B, W = values.shape
    H = np.zeros((B, W), dtype=np.complex128)
    iters = np.zeros(B, dtype=np.int64)
    converged = np.zeros(B, dtype=bool)
    active = masks.any(axis=1)
    y = np.where(masks, values, 0)
    for _ in range(n_max):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        Hr = H[rows]
        resid = np.where(masks[rows], y[rows] - np.fft.ifft(Hr, axis=1, norm="ortho"), 0)
        step = Hr + eta * np.fft.fft(resid, axis=1, norm="ortho")
        Hn = hard_threshold(step, omega)
        diff = Hn - Hr
        gamma = np.sqrt(np.sum(diff.real**2 + diff.imag**2, axis=1))
        H[rows] = Hn
        iters[rows] += 1
        done = gamma < xi
        converged[rows[done]] = True
        active[rows[done]] = False
    return H, iters, converged


def run_half(packets, first, half, n_available, M_s):
    """Scheduling and transmission for one half-window; returns the per-slot actions."""
    n_wanted = min(max(M_s - n_available, 0), half)
    scheduled = list(range(first + half - n_wanted, first + half))
    actions = np.zeros(half, dtype=np.int8)
    for j in range(half):
        q = first + j
        has_packet = bool(packets[q])
        if q in scheduled:
            scheduled.remove(q)
            actions[j] = REUSE if has_packet else INJECT
        elif has_packet:
            actions[j] = REUSE
            if scheduled:
                scheduled.pop(0)
    return actions


def injection_run(packets, M_s, W):
    """Injection over every half-window of a slot timeline.

    The first half-window is treated as the second half of a virtual window
    that starts before the timeline, so it sees zero prior units.
    Slots after the last complete half-window get no injections.
    """
    packets = np.asarray(packets, dtype=bool)
    half = W // 2
    n_halves = packets.size // half
    actions = np.where(packets, REUSE, NONE).astype(np.int8)
    n_available = 0
    for h in range(n_halves):
        first = h * half
        act = run_half(packets, first, half, n_available, M_s)
        actions[first:first + half] = act
        n_available = int(np.count_nonzero(act))
    return actions
