"""Command-line interface.

Every subcommand takes ``--config FILE`` (``key = value`` lines) plus one
flag per configuration key; flags override the file. Exit status: 0 on
success, 2 for input errors, 3 for numerical failures such as windows that
could not be recovered.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as sio
from ._accel import backend_name
from .injection import MS_SWEEP, PPDU_BYTES, PPDU_PDX_BYTES, TRN_LEN_BITS, sweep_overhead
from .pipeline import PipelineConfig, _rngs, make_scene, process_grid, run_pipeline, sample_times
from .recovery import EmptyWindowError
from .resampler import slotted_resample
from .signal_model import InputError, load_traffic_trace, poisson_trace

logger = logging.getLogger("sparsemd")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

HELP = {
    "T_c": "grid step [s]",
    "W": "window length [slots]",
    "delta": "window shift [slots]",
    "omega": "IHT sparsity level (nonzeros per path)",
    "Q": "number of aggregated distance bins (odd)",
    "M_s": "minimum sensing units per window",
    "eta": "IHT step size",
    "xi": "IHT stop threshold on the iterate change",
    "n_max": "IHT iteration cap",
    "f_o": "carrier frequency [Hz]",
    "B": "bandwidth [Hz]",
    "L": "number of distance bins",
    "N_BP": "number of beam patterns",
    "preset": "scene preset: walking or static",
    "noise_std": "CIR noise standard deviation [linear gain]",
    "n_columns": "spectrogram columns to produce",
    "seed": "root random seed",
    "sampling": "CIR sampling: full, uniform, poisson or trace",
    "per_window": "samples kept per window for sampling=uniform",
    "rate": "packet rate for sampling=poisson [packets/s]",
    "inject": "inject sensing units where traffic is too sparse (true/false)",
    "background_interval": "background averaging interval [slots]; 0 = whole record",
    "workers": "worker threads for per-path recovery",
    "stream": "input CIR stream file (.csv or .bin)",
    "trace": "input traffic trace CSV (timestamp_seconds,size_bytes)",
    "out": "output directory",
}


def _to_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise InputError(f"not a boolean: {text!r}")


def _caster(field):
    t = field.type if isinstance(field.type, str) else field.type.__name__
    if "bool" in t:
        return _to_bool
    if "int" in t:
        return int
    if "float" in t:
        return float
    return str


def read_config_file(path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    parser.read_string("[config]\n" + text)
    return dict(parser["config"])


def build_config(args) -> PipelineConfig:
    values = {}
    fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    if getattr(args, "config", None):
        for key, raw in read_config_file(args.config).items():
            if key not in fields:
                raise InputError(f"unknown config key {key!r}")
            values[key] = raw
    for key in fields:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    try:
        typed = {k: _caster(fields[k])(v) for k, v in values.items()}
    except ValueError as exc:
        raise InputError(f"bad config value: {exc}") from None
    return PipelineConfig(**typed)


def manifest(cfg: PipelineConfig, command: str) -> dict:
    import numba

    return {"command": command, "config": cfg.to_dict(), "seed": cfg.seed,
            "versions": {"sparsemd": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "numba": numba.__version__, "backend": backend_name()}}


def _outdir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_trace(cfg):
    if not cfg.trace:
        return None
    trace, n_bad = load_traffic_trace(cfg.trace)
    if n_bad:
        logger.warning("trace had %d out-of-order rows", n_bad)
    return trace


def cmd_synth(cfg: PipelineConfig, output: str | None = None) -> int:
    seeds = _rngs(cfg.seed)
    scene = make_scene(cfg, seeds["scene"])
    times, _ = sample_times(cfg, seeds["sampling"], _load_trace(cfg))
    stream = scene.sample(times, seed=seeds["noise"])
    out = _outdir(cfg)
    path = Path(output) if output else out / "cir.csv"
    sio.write_cir(stream, path)
    sio.write_json(manifest(cfg, "synth"), out / "manifest.json")
    print(f"wrote {len(stream)} CIR snapshots to {path}")
    return EXIT_OK


def cmd_resample(cfg: PipelineConfig, output: str | None = None) -> int:
    if not cfg.stream:
        raise InputError("resample needs --stream")
    stream = sio.read_cir(cfg.stream)
    grid = slotted_resample(stream, cfg.T_c, cfg.K)
    out = _outdir(cfg)
    path = Path(output) if output else out / "grid.csv"
    sio.write_grid_csv(grid, path)
    print(f"wrote grid of {grid.K} slots ({grid.fill_fraction:.1%} filled) to {path}")
    return EXIT_OK


def _write_spectrograms(out: Path, result_sparse, result_stft, truth=None):
    sio.write_spectrogram_csv(result_sparse, out / "sparse.csv")
    sio.write_spectrogram_pgm(result_sparse, out / "sparse.pgm")
    sio.write_spectrogram_csv(result_stft, out / "stft.csv")
    sio.write_spectrogram_pgm(result_stft, out / "stft.pgm")
    if truth is not None:
        sio.write_spectrogram_csv(truth, out / "truth.csv")
        sio.write_spectrogram_pgm(truth, out / "truth.pgm")


def _report_gaps(empty, allow_gaps) -> int:
    if not empty:
        return EXIT_OK
    err = EmptyWindowError(f"{len(empty)} window(s) had no CIR samples", empty)
    print(f"error: {err} (first: {empty[:10]})", file=sys.stderr)
    return EXIT_OK if allow_gaps else EXIT_NUMERIC


def cmd_recover(cfg: PipelineConfig, allow_gaps=False) -> int:
    if not cfg.stream:
        raise InputError("recover needs --stream")
    stream = sio.read_cir(cfg.stream)
    grid = slotted_resample(stream, cfg.T_c, cfg.K)
    sparse, stft, _, empty = process_grid(grid, cfg)
    out = _outdir(cfg)
    _write_spectrograms(out, sparse, stft)
    sio.write_json({"empty_windows": empty, "n_columns": sparse.n_columns}, out / "metrics.json")
    sio.write_json(manifest(cfg, "recover"), out / "manifest.json")
    return _report_gaps(empty, allow_gaps)


def cmd_pipeline(cfg: PipelineConfig, allow_gaps=False) -> int:
    stream = sio.read_cir(cfg.stream) if cfg.stream else None
    res = run_pipeline(cfg, stream=stream, trace=_load_trace(cfg))
    out = _outdir(cfg)
    _write_spectrograms(out, res.sparse, res.stft, res.truth)
    metrics = dict(res.metrics, empty_window_indices=res.empty_windows)
    sio.write_json(metrics, out / "metrics.json")
    sio.write_json(manifest(cfg, "pipeline"), out / "manifest.json")
    if "rmse_sparse" in metrics:
        print(f"RMSE sparse={metrics['rmse_sparse']:.4f} stft={metrics['rmse_stft']:.4f}")
    return _report_gaps(res.empty_windows, allow_gaps)


def cmd_inject_sim(cfg: PipelineConfig, duration: float = 60.0, n_TRN: int = 1, ppdu: str = "DMG") -> int:
    trace = _load_trace(cfg)
    if trace is None:
        trace = poisson_trace(cfg.rate, duration, seed=cfg.seed)
        if not len(trace):
            raise InputError("synthetic trace is empty; raise --rate or --duration")
    rows = sweep_overhead(trace, cfg.T_c, cfg.W, MS_SWEEP, n_TRN=n_TRN, TRN_len=TRN_LEN_BITS,
                          PPDU_ay=PPDU_BYTES[ppdu], PPDU_pdx=PPDU_PDX_BYTES)
    out = _outdir(cfg)
    sio.write_json({"ppdu_mode": ppdu, "n_TRN": n_TRN, "rows": rows}, out / "overhead.json")
    with open(out / "overhead.csv", "w") as fh:
        keys = list(rows[0])
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(repr(r[k]) for k in keys) + "\n")
    sio.write_json(manifest(cfg, "inject-sim"), out / "manifest.json")
    for r in rows:
        print(f"M_s={r['M_s']:3d}  n_inj={r['n_inj']:8d}  min units/window={r['units_per_window_min']:3d}  "
              f"OH={100 * r['OH']:.3f}%")
    return EXIT_OK


def cmd_export(src: str, dst: str) -> int:
    s, d = Path(src), Path(dst)
    if d.suffix == ".pgm":
        _, cols = sio.read_spectrogram_csv(s)
        sio.write_pgm(cols, d)
    else:
        sio.write_cir(sio.read_cir(s), d)
    print(f"wrote {d}")
    return EXIT_OK


def _add_config_flags(p):
    p.add_argument("--config", help="key = value configuration file")
    for f in dataclasses.fields(PipelineConfig):
        p.add_argument(f"--{f.name}", dest=f.name, default=None, help=f"{HELP.get(f.name, f.name)} (default: {f.default})")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsemd", description="Micro-Doppler spectrograms from sparse CIR samples.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesise a CIR stream from a scene preset")
    _add_config_flags(p)
    p.add_argument("--output", help="stream file (.csv or .bin); default OUT/cir.csv")

    p = sub.add_parser("resample", help="slotted resampling of a CIR stream to a grid dump")
    _add_config_flags(p)
    p.add_argument("--output", help="grid CSV; default OUT/grid.csv")

    for name, hlp in (("recover", "recover spectrograms from a CIR stream file"),
                      ("pipeline", "synthesise or load, recover, and score spectrograms")):
        p = sub.add_parser(name, help=hlp)
        _add_config_flags(p)
        p.add_argument("--allow-gaps", action="store_true", help="exit 0 even if some windows were empty")

    p = sub.add_parser("inject-sim", help="injection and overhead sweep over M_s")
    _add_config_flags(p)
    p.add_argument("--duration", type=float, default=60.0, help="synthetic trace length when no --trace [s]")
    p.add_argument("--n-trn", dest="n_trn", type=int, default=1, help="TRN fields per sensing unit")
    p.add_argument("--ppdu", choices=sorted(PPDU_BYTES), default="DMG", help="802.11ay PPDU size for rescaling")

    p = sub.add_parser("export", help="convert CIR CSV <-> binary, or spectrogram CSV -> PGM")
    p.add_argument("input")
    p.add_argument("output")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "export":
            return cmd_export(args.input, args.output)
        cfg = build_config(args)
        if args.command == "synth":
            return cmd_synth(cfg, args.output)
        if args.command == "resample":
            return cmd_resample(cfg, args.output)
        if args.command == "recover":
            return cmd_recover(cfg, args.allow_gaps)
        if args.command == "pipeline":
            return cmd_pipeline(cfg, args.allow_gaps)
        return cmd_inject_sim(cfg, args.duration, args.n_trn, args.ppdu)
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EmptyWindowError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
