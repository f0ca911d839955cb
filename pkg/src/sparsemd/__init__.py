"""Micro-Doppler spectrograms from irregular, sparse CIR samples."""

__version__ = "0.1.0"

from .aggregator import Spectrogram, aggregate_md, ground_truth, rmse
from .injection import compute_overhead, simulate_injection
from .pipeline import PipelineConfig, run_pipeline
from .recovery import EmptyWindowError, IhtConfig, iht_recover, recover_batch, stft_baseline
from .resampler import RegularGrid, slotted_resample
from .signal_model import CirStream, InputError, RadioConfig, ReflectorTrack, TrafficTrace, synth_cir

__all__ = [
    "CirStream", "EmptyWindowError", "IhtConfig", "InputError", "PipelineConfig", "RadioConfig",
    "ReflectorTrack", "RegularGrid", "Spectrogram", "TrafficTrace", "aggregate_md", "compute_overhead",
    "ground_truth", "iht_recover", "recover_batch", "rmse", "run_pipeline", "simulate_injection",
    "slotted_resample", "stft_baseline", "synth_cir",
]
