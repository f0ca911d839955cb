"""File formats: CIR streams (CSV and flat binary), grid dumps, spectrograms.

CIR CSV: an optional ``# sparsemd-cir L=<L> N_BP=<N>`` comment, the header
``t,path,bp,re,im`` and one row per nonzero cell. A snapshot whose cells are
all zero is kept as a single ``path=0, bp=0`` row. Without the comment the
shape is inferred from the largest indices.

CIR binary: little-endian float64 throughout. Three header values
``N, L, N_BP`` followed by N records of ``t`` and ``L*N_BP`` (re, im) pairs
in path-major order.

Grid dump: the CIR CSV with an extra ``mask`` column, one or more rows per
slot, timestamps at the slot centres.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .aggregator import Spectrogram
from .resampler import RegularGrid
from .signal_model import CirStream, InputError

CIR_HEADER = ["t", "path", "bp", "re", "im"]
_SHAPE_RE = re.compile(r"L=(\d+)\s+N_BP=(\d+)")


def _f(x) -> str:
    return repr(float(x))


def _cell_rows(t, gains, extra=()):
    nz = np.argwhere(gains != 0)
    if nz.size == 0:
        nz = np.zeros((1, 2), dtype=np.int64)
    for ell, b in nz:
        g = gains[ell, b]
        yield [_f(t), int(ell), int(b), _f(g.real), _f(g.imag), *extra]


def write_cir_csv(stream: CirStream, path):
    with open(path, "w", newline="") as fh:
        fh.write(f"# sparsemd-cir L={stream.L} N_BP={stream.N_BP}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CIR_HEADER)
        for t, g in zip(stream.times, stream.gains):
            w.writerows(_cell_rows(t, g))
    return Path(path)


def _read_cell_csv(path, header):
    shape = None
    rows = []
    with open(path, newline="") as fh:
        seen_header = False
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if row[0].startswith("#"):
                m = _SHAPE_RE.search(",".join(row))
                if m:
                    shape = (int(m.group(1)), int(m.group(2)))
                continue
            if not seen_header:
                if [c.strip() for c in row] != header:
                    raise InputError(f"{path}:{lineno}: expected header {','.join(header)}")
                seen_header = True
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(row[0]), int(row[1]), int(row[2]), float(row[3]), float(row[4]),
                             *[int(v) for v in row[5:]]])
            except ValueError:
                raise InputError(f"{path}:{lineno}: malformed row") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows, dtype=object)
    ell = data[:, 1].astype(np.int64)
    b = data[:, 2].astype(np.int64)
    if shape is None:
        shape = (int(ell.max()) + 1, int(b.max()) + 1)
    return data, shape


def read_cir_csv(path) -> CirStream:
    data, (L, N_BP) = _read_cell_csv(path, CIR_HEADER)
    t = data[:, 0].astype(np.float64)
    times, inv = np.unique(t, return_inverse=True)
    gains = np.zeros((times.size, L, N_BP), dtype=np.complex128)
    gains[inv, data[:, 1].astype(np.int64), data[:, 2].astype(np.int64)] = (
        data[:, 3].astype(np.float64) + 1j * data[:, 4].astype(np.float64))
    return CirStream(times, gains)


def write_cir_bin(stream: CirStream, path):
    N, L, NB = stream.gains.shape
    rec = np.empty((N, 1 + 2 * L * NB), dtype="<f8")
    rec[:, 0] = stream.times
    flat = stream.gains.reshape(N, L * NB)
    rec[:, 1::2] = flat.real
    rec[:, 2::2] = flat.imag
    with open(path, "wb") as fh:
        np.asarray([N, L, NB], dtype="<f8").tofile(fh)
        rec.tofile(fh)
    return Path(path)


def read_cir_bin(path) -> CirStream:
    raw = np.fromfile(path, dtype="<f8")
    if raw.size < 3:
        raise InputError(f"{path}: truncated header")
    N, L, NB = (int(v) for v in raw[:3])
    width = 1 + 2 * L * NB
    if raw.size != 3 + N * width:
        raise InputError(f"{path}: expected {3 + N * width} values, found {raw.size}")
    rec = raw[3:].reshape(N, width)
    gains = (rec[:, 1::2] + 1j * rec[:, 2::2]).reshape(N, L, NB)
    return CirStream(rec[:, 0].copy(), gains)


def read_cir(path) -> CirStream:
    return read_cir_bin(path) if Path(path).suffix in (".bin", ".f64") else read_cir_csv(path)


def write_cir(stream: CirStream, path):
    return write_cir_bin(stream, path) if Path(path).suffix in (".bin", ".f64") else write_cir_csv(stream, path)


def write_grid_csv(grid: RegularGrid, path):
    K, L, NB = grid.values.shape
    with open(path, "w", newline="") as fh:
        fh.write(f"# sparsemd-grid L={L} N_BP={NB} T_c={grid.T_c!r} K={K} origin={grid.origin!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CIR_HEADER + ["mask"])
        for k in range(K):
            t = grid.origin + k * grid.T_c
            w.writerows(_cell_rows(t, grid.values[k], (int(grid.mask[k]),)))
    return Path(path)


def read_grid_csv(path) -> RegularGrid:
    data, (L, N_BP) = _read_cell_csv(path, CIR_HEADER + ["mask"])
    with open(path) as fh:
        first = fh.readline()
    meta = dict(re.findall(r"(\w+)=(\S+)", first))
    if "T_c" not in meta or "K" not in meta:
        raise InputError(f"{path}: missing grid metadata comment")
    T_c, K, origin = float(meta["T_c"]), int(meta["K"]), float(meta.get("origin", 0.0))
    k = np.rint((data[:, 0].astype(np.float64) - origin) / T_c).astype(np.int64)
    values = np.zeros((K, L, N_BP), dtype=np.complex128)
    values[k, data[:, 1].astype(np.int64), data[:, 2].astype(np.int64)] = (
        data[:, 3].astype(np.float64) + 1j * data[:, 4].astype(np.float64))
    mask = np.zeros(K, dtype=bool)
    mask[k] = data[:, 5].astype(np.int64) > 0
    return RegularGrid(T_c, values, mask, origin)


def write_spectrogram_csv(spec: Spectrogram, path):
    """Header row of velocity-bin centres [m/s], then one row per column."""
    vel, cols = spec.shifted()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([_f(v) for v in vel])
        for row in cols:
            w.writerow([_f(v) for v in row])
    return Path(path)


def read_spectrogram_csv(path):
    """Returns (velocities, columns) as written by ``write_spectrogram_csv``."""
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    return arr[0], arr[1:]


def write_spectrogram_pgm(spec: Spectrogram, path):
    """8-bit ASCII PGM: rows are velocity bins (highest at the top), columns time."""
    return write_pgm(spec.shifted()[1], path)


def write_pgm(cols, path):
    """(time, ascending velocity) array in [0, 1] to an 8-bit ASCII PGM."""
    img = np.rint(255 * np.clip(cols, 0, 1)).astype(np.int64).T[::-1]
    h, w = img.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{w} {h}\n255\n")
        for row in img:
            fh.write(" ".join(str(v) for v in row) + "\n")
    return Path(path)


def read_pgm(path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if tokens[0] != "P2":
        raise InputError(f"{path}: not an ASCII PGM")
    w, h, _ = int(tokens[1]), int(tokens[2]), int(tokens[3])
    return np.array(tokens[4:4 + w * h], dtype=np.int64).reshape(h, w)


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return Path(path)
