"""numba kernels mirroring ``_numpy`` (same inputs, same outputs)."""

import os

import numpy as np
from numba import config, njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    config.THREADING_LAYER = "workqueue"

NONE, REUSE, INJECT = 0, 1, 2


@njit(cache=True)
def slot_assign(times, T_c, K):
    src = np.full(K, -1, dtype=np.int64)
    best = np.empty(K, dtype=np.float64)
    for i in range(times.size):
        k = np.int64(np.floor(times[i] / T_c + 0.5))
        if k < 0 or k >= K:
            continue
        d = abs(k * T_c - times[i])
        if src[k] < 0 or d < best[k]:
            src[k] = i
            best[k] = d
    return src


def inverse_dft_matrix(W):
    """Unitary inverse DFT matrix, entry (g, i) = exp(j2*pi*g*i/W)/sqrt(W)."""
    gi = np.outer(np.arange(W), np.arange(W)) % W
    return np.exp(2j * np.pi * gi / W) / np.sqrt(W)


@njit(cache=True)
def _top_indices(mag2, omega, out):
    # repeated max scan; strict '>' keeps the lower index on ties
    W = mag2.size
    taken = np.zeros(W, dtype=np.bool_)
    for r in range(omega):
        best = -1
        for g in range(W):
            if taken[g]:
                continue
            if best < 0 or mag2[g] > mag2[best]:
                best = g
        taken[best] = True
        out[r] = best


@njit(cache=True, nogil=True)
def _iht_row(y, mask, E, omega, eta, xi, n_max, H):
    W = y.size
    avail = np.flatnonzero(mask)
    n_avail = avail.size
    supp = np.empty(omega, dtype=np.int64)
    n_supp = 0
    resid = np.empty(n_avail, dtype=np.complex128)
    step = np.empty(W, dtype=np.complex128)
    mag2 = np.empty(W, dtype=np.float64)
    new_supp = np.empty(omega, dtype=np.int64)
    Hn = np.zeros(W, dtype=np.complex128)
    n = 0
    converged = False
    if n_avail == 0:
        return 0, False
    while n < n_max:
        # residual on the available rows; H is nonzero only on supp
        for a in range(n_avail):
            i = avail[a]
            acc = 0j
            for s in range(n_supp):
                g = supp[s]
                acc += E[g, i] * H[g]
            resid[a] = y[i] - acc
        for g in range(W):
            acc = 0j
            for a in range(n_avail):
                i = avail[a]
                acc += np.conj(E[g, i]) * resid[a]
            step[g] = H[g] + eta * acc
            mag2[g] = step[g].real ** 2 + step[g].imag ** 2
        _top_indices(mag2, omega, new_supp)
        for g in range(W):
            Hn[g] = 0j
        for s in range(omega):
            Hn[new_supp[s]] = step[new_supp[s]]
        gamma2 = 0.0
        for g in range(W):
            d = Hn[g] - H[g]
            gamma2 += d.real ** 2 + d.imag ** 2
            H[g] = Hn[g]
        n_supp = 0
        for s in range(omega):
            if H[new_supp[s]] != 0j:
                supp[n_supp] = new_supp[s]
                n_supp += 1
        n += 1
        if np.sqrt(gamma2) < xi:
            converged = True
            break
    return n, converged


@njit(cache=True, parallel=True)
def _iht_batch(values, masks, E, omega, eta, xi, n_max):
    B, W = values.shape
    H = np.zeros((B, W), dtype=np.complex128)
    iters = np.zeros(B, dtype=np.int64)
    conv = np.zeros(B, dtype=np.bool_)
    for b in prange(B):
        n, c = _iht_row(values[b], masks[b], E, omega, eta, xi, n_max, H[b])
        iters[b] = n
        conv[b] = c
    return H, iters, conv


@njit(cache=True, nogil=True)
def _iht_batch_serial(values, masks, E, omega, eta, xi, n_max):
    B, W = values.shape
    H = np.zeros((B, W), dtype=np.complex128)
    iters = np.zeros(B, dtype=np.int64)
    conv = np.zeros(B, dtype=np.bool_)
    for b in range(B):
        n, c = _iht_row(values[b], masks[b], E, omega, eta, xi, n_max, H[b])
        iters[b] = n
        conv[b] = c
    return H, iters, conv


_E_CACHE = {}


def iht_batch(values, masks, omega, eta, xi, n_max, parallel=True):
    """``parallel=False`` releases the GIL instead of using numba's thread pool,
    which must not be entered from several Python threads at once."""
    values = np.ascontiguousarray(values, dtype=np.complex128)
    masks = np.ascontiguousarray(masks, dtype=np.bool_)
    W = values.shape[1]
    E = _E_CACHE.get(W)
    if E is None:
        E = _E_CACHE.setdefault(W, inverse_dft_matrix(W))
    fn = _iht_batch if parallel else _iht_batch_serial
    return fn(values, masks, E, int(omega), float(eta), float(xi), int(n_max))


@njit(cache=True)
def injection_run(packets, M_s, W):
    half = W // 2
    n_halves = packets.size // half
    actions = np.zeros(packets.size, dtype=np.int8)
    for q in range(packets.size):
        if packets[q]:
            actions[q] = REUSE
    scheduled = np.zeros(half, dtype=np.bool_)
    n_available = 0
    for h in range(n_halves):
        first = h * half
        n_wanted = min(max(M_s - n_available, 0), half)
        for j in range(half):
            scheduled[j] = j >= half - n_wanted
        units = 0
        for j in range(half):
            q = first + j
            if scheduled[j]:
                scheduled[j] = False
                actions[q] = REUSE if packets[q] else INJECT
            elif packets[q]:
                actions[q] = REUSE
                for s in range(j + 1, half):
                    if scheduled[s]:
                        scheduled[s] = False
                        break
            if actions[q] != NONE:
                units += 1
        n_available = units
    return actions
