"""Scene presets: a walking person and a static room."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signal_model import CirStream, RadioConfig, ReflectorTrack, doppler_axis, synth_cir


@dataclass(frozen=True, eq=False)
class Scene:
    radio: RadioConfig
    tracks: Sequence[ReflectorTrack]
    target_bin: int
    target_bp: int
    noise_std: float
    name: str = "custom"

    @property
    def moving_tracks(self):
        return [t for t in self.tracks if not t.is_static]

    def sample(self, times, seed=None) -> CirStream:
        return synth_cir(self.radio, self.tracks, times, self.noise_std, seed)


def _bp_profile(rng, n_bp, main_bp, level):
    mag = level * rng.uniform(0.05, 0.3, n_bp)
    mag[main_bp] = level
    return mag * np.exp(2j * np.pi * rng.random(n_bp))


def walking_scene(radio: RadioConfig, duration: float, seed=None, W: int = 64,
                  noise_std: float = 0.1, n_clutter: int = 3) -> Scene:
    """Torso with an oscillating radial velocity plus 2-4 weaker limbs.

    Torso: 1.5 m/s peak, ~1 s period. Limbs sit one bin either side of the
    torso, 10-20 dB weaker, and swing 1-2 m/s around the torso velocity.
    Velocities are piecewise constant over segments of ``W * T_c`` seconds
    and kept below 95% of the unambiguous velocity.
    """
    rng = np.random.default_rng(seed)
    seg = W * radio.T_c
    n_seg = int(np.ceil(duration / seg)) + 1
    t_mid = (np.arange(n_seg) + 0.5) * seg
    v_lim = 0.95 * doppler_axis(radio, W).v_max
    period = rng.uniform(0.9, 1.1)
    phi = 2 * np.pi * rng.random()
    torso_v = 1.5 * np.sin(2 * np.pi * t_mid / period + phi)
    torso_bin = radio.L // 2
    target_bp = min(1, radio.N_BP - 1)

    tracks = [ReflectorTrack(torso_bin, _bp_profile(rng, radio.N_BP, target_bp, 1.0), torso_v, seg,
                             2 * np.pi * rng.random())]
    for _ in range(int(rng.integers(2, 5))):
        ell = int(np.clip(torso_bin + rng.choice((-1, 1)), 0, radio.L - 1))
        level = 10 ** (-rng.uniform(10, 20) / 20)
        swing = rng.uniform(1.0, 2.0) * np.sin(2 * np.pi * t_mid / period + phi + rng.uniform(0.5, 2.5))
        v = np.clip(torso_v + swing, -v_lim, v_lim)
        tracks.append(ReflectorTrack(ell, _bp_profile(rng, radio.N_BP, target_bp, level), v, seg,
                                     2 * np.pi * rng.random()))
    for _ in range(n_clutter):
        ell = int(rng.integers(0, radio.L))
        gain = rng.uniform(0.5, 2.0) * np.exp(2j * np.pi * rng.random(radio.N_BP))
        tracks.append(ReflectorTrack.constant(ell, gain, 0.0, 2 * np.pi * rng.random()))
    return Scene(radio, tracks, torso_bin, target_bp, noise_std, "walking")


def static_scene(radio: RadioConfig, noise_std: float = 0.0, seed=None) -> Scene:
    """A single static reflector in the middle bin."""
    rng = np.random.default_rng(seed)
    ell = radio.L // 2
    bp = min(1, radio.N_BP - 1)
    track = ReflectorTrack.constant(ell, _bp_profile(rng, radio.N_BP, bp, 1.0), 0.0, 2 * np.pi * rng.random())
    return Scene(radio, [track], ell, bp, noise_std, "static")


PRESETS = {"walking": walking_scene, "static": static_scene}
