"""Synthetic chamber scenes: FMCW beat-signal cubes and breath-sound audio.

Scenes are declarative (targets with chest motion, static reflectors, an
SNR and a seed) and fully deterministic under their seed, so simulated
captures serve as ground truth for the processing chain.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import butter, get_window, sosfilt

from .audio_dsp import AUDIO_RATE_HZ, AudioTrace
from .config import SPEED_OF_LIGHT_M_S, RadarConfig
from .errors import DurationTooShortError
from .ingest import Datagram, RadarCube, encode_cube, stream_to_datagrams

DEFAULT_CHAMBER_EXTENT_M = 6.0

_BURST_BAND_HZ = (200.0, 2000.0)


@dataclass(frozen=True)
class MotionSpec:
    """Chest-motion model: sinusoidal displacement plus optional second
    harmonic and heart component, around a fixed base range."""

    base_range_m: float
    resp_rate_bpm: float
    resp_amplitude_m: float = 0.001
    harmonic_2_frac: float = 0.0
    heart_rate_bpm: float | None = None
    heart_amplitude_m: float | None = None

    def __post_init__(self) -> None:
        if self.base_range_m <= 0:
            raise ValueError("base_range_m must be positive")
        if self.resp_amplitude_m < 0:
            raise ValueError("resp_amplitude_m must be nonnegative")
        if self.resp_rate_bpm < 0:
            raise ValueError("resp_rate_bpm must be nonnegative")
        if not 0.0 <= self.harmonic_2_frac <= 1.0:
            raise ValueError("harmonic_2_frac must lie in [0, 1]")
        if (self.heart_rate_bpm is None) != (self.heart_amplitude_m is None):
            raise ValueError("heart rate and amplitude must be given together")


@dataclass(frozen=True)
class SceneSpec:
    """Declarative scene: breathing targets and static reflectors inside the
    chamber, white noise at snr_db relative to the strongest scatterer."""

    targets: tuple[tuple[MotionSpec, float], ...] = ()
    static_reflectors: tuple[tuple[float, float], ...] = ()
    snr_db: float | None = None
    seed: int = 0
    chamber_extent_m: float = DEFAULT_CHAMBER_EXTENT_M

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple((m, float(a)) for m, a in self.targets))
        object.__setattr__(
            self,
            "static_reflectors",
            tuple((float(r), float(a)) for r, a in self.static_reflectors),
        )
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        for motion, _ in self.targets:
            if motion.base_range_m > self.chamber_extent_m:
                raise ValueError("target range exceeds the chamber extent")
        for range_m, _ in self.static_reflectors:
            if not 0 < range_m <= self.chamber_extent_m:
                raise ValueError("reflector range outside the chamber extent")

    def reflectivities(self) -> list[float]:
        return [a for _, a in self.targets] + [a for _, a in self.static_reflectors]

    def to_dict(self) -> dict:
        return {
            "targets": [[asdict(m), a] for m, a in self.targets],
            "static_reflectors": [list(pair) for pair in self.static_reflectors],
            "snr_db": self.snr_db,
            "seed": self.seed,
            "chamber_extent_m": self.chamber_extent_m,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        known = {"targets", "static_reflectors", "snr_db", "seed", "chamber_extent_m"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scene fields: {sorted(unknown)}")
        targets = tuple(
            (MotionSpec(**motion), float(refl)) for motion, refl in d.get("targets", [])
        )
        return cls(
            targets=targets,
            static_reflectors=tuple(tuple(p) for p in d.get("static_reflectors", [])),
            snr_db=d.get("snr_db"),
            seed=int(d.get("seed", 0)),
            chamber_extent_m=float(d.get("chamber_extent_m", DEFAULT_CHAMBER_EXTENT_M)),
        )

    @classmethod
    def from_json_file(cls, path) -> "SceneSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class BreathAudioSpec:
    """Breath-sound model: noise bursts at each exhalation (and inhalation
    unless exhale_only) over optional white background noise."""

    resp_rate_bpm: float
    exhale_only: bool = True
    burst_duration_s: float = 0.5
    noise_db: float | None = None  # background level relative to burst amplitude
    seed: int = 0
    burst_amplitude: float = 0.3

    def __post_init__(self) -> None:
        if self.resp_rate_bpm <= 0:
            raise ValueError("resp_rate_bpm must be positive")
        if self.burst_duration_s >= 60.0 / self.resp_rate_bpm:
            raise ValueError("burst_duration_s must be shorter than one breath period")
        if self.burst_duration_s <= 0:
            raise ValueError("burst_duration_s must be positive")
        if self.burst_amplitude < 0:
            raise ValueError("burst_amplitude must be nonnegative")

    @classmethod
    def from_json_file(cls, path) -> "BreathAudioSpec":
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown breath audio fields: {sorted(unknown)}")
        return cls(**d)


def chest_displacement(spec: MotionSpec, t) -> np.ndarray:
    """Chest displacement in metres at time(s) t (seconds, >= 0)."""
    t = np.asarray(t, dtype=np.float64)
    resp_hz = spec.resp_rate_bpm / 60.0
    d = spec.resp_amplitude_m * (
        np.sin(2.0 * np.pi * resp_hz * t)
        + spec.harmonic_2_frac * np.sin(4.0 * np.pi * resp_hz * t)
    )
    if spec.heart_rate_bpm is not None:
        heart_hz = spec.heart_rate_bpm / 60.0
        d = d + spec.heart_amplitude_m * np.sin(2.0 * np.pi * heart_hz * t)
    return d


def synth_cube(scene: SceneSpec, config: RadarConfig, duration_s: float) -> RadarCube:
    """Simulate the beat-signal cube for a scene.

    Each scatterer at instantaneous range R contributes a fast-time tone at
    the beat frequency 2 * slope * R / c with slow-time phase 4*pi*R/lambda.
    Fast time is referenced to the chirp centre, so the carrier phase of a
    range bin reads the two-way path length directly.  Range is held
    constant within a chirp (stop-and-hop) and scatterer amplitude is the
    specified reflectivity, with no range-law decay.

    Complex white Gaussian noise is added at snr_db below the strongest
    scatterer; generation is deterministic under the scene seed.
    """
    n_frames = int(round(duration_s * config.frame_rate_hz))
    if n_frames < 1:
        raise DurationTooShortError("duration covers no complete frame")

    frame_times = np.arange(n_frames) / config.frame_rate_hz
    n_fast = config.samples_per_chirp
    fast_index = np.arange(n_fast) - (n_fast - 1) / 2.0  # chirp-centre reference
    shape = (n_frames, config.chirps_per_frame, n_fast)
    data = np.zeros(shape, dtype=np.complex128)

    scatterers: list[tuple[np.ndarray, float]] = []
    for motion, reflectivity in scene.targets:
        ranges = motion.base_range_m + chest_displacement(motion, frame_times)
        scatterers.append((ranges, reflectivity))
    for range_m, reflectivity in scene.static_reflectors:
        scatterers.append((np.full(n_frames, range_m), reflectivity))

    wavelength = config.wavelength_m
    for ranges, reflectivity in scatterers:
        beat_hz = 2.0 * config.chirp_slope_hz_per_s * ranges / SPEED_OF_LIGHT_M_S
        slow_phase = 4.0 * np.pi * ranges / wavelength
        phase = (
            2.0 * np.pi * beat_hz[:, None] * fast_index[None, :] / config.adc_rate_hz
            + slow_phase[:, None]
        )
        data += reflectivity * np.exp(1j * phase)[:, None, :]

    if scene.snr_db is not None:
        if not scatterers:
            raise ValueError("snr_db is relative to the strongest scatterer; scene is empty")
        strongest = max(abs(a) for _, a in scatterers)
        noise_power = strongest**2 * 10.0 ** (-scene.snr_db / 10.0)
        rng = np.random.default_rng(scene.seed)
        sigma = np.sqrt(noise_power / 2.0)
        data += rng.normal(scale=sigma, size=shape) + 1j * rng.normal(scale=sigma, size=shape)

    return RadarCube(config=config, data=data, frame_timestamps=frame_times)


def synth_audio(
    spec: BreathAudioSpec, duration_s: float, rate_hz: int = AUDIO_RATE_HZ
) -> AudioTrace:
    """Simulate a headset recording of breath sounds.

    Exhalations are band-limited (200-2000 Hz) noise bursts spaced one
    breath period apart; in both-sounds mode inhalation bursts of equal
    amplitude sit midway between them, which doubles the dominant acoustic
    rate.  White background noise is added at noise_db relative to the
    burst amplitude.  Deterministic under the spec seed.
    """
    period_s = 60.0 / spec.resp_rate_bpm
    if duration_s < period_s:
        raise DurationTooShortError("duration covers less than one breath period")

    n = int(round(duration_s * rate_hz))
    x = np.zeros(n)
    rng = np.random.default_rng(spec.seed)

    burst_len = int(round(spec.burst_duration_s * rate_hz))
    if burst_len >= 1 and spec.burst_amplitude > 0:
        sos = butter(4, _BURST_BAND_HZ, btype="bandpass", fs=rate_hz, output="sos")
        burst_window = get_window("hann", burst_len, fftbins=False)

        centres = []
        k = 0
        while True:
            exhale = (k + 0.75) * period_s
            if exhale * rate_hz + burst_len / 2 >= n:
                break
            centres.append(exhale)
            if not spec.exhale_only:
                centres.append((k + 0.25) * period_s)
            k += 1
        for centre_s in sorted(centres):
            noise = rng.standard_normal(burst_len)
            shaped = sosfilt(sos, noise)
            shaped /= max(shaped.std(), 1e-300)
            start = int(round(centre_s * rate_hz - burst_len / 2))
            stop = min(start + burst_len, n)
            if start < 0 or stop <= start:
                continue
            x[start:stop] += spec.burst_amplitude * (burst_window * shaped)[: stop - start]

    if spec.noise_db is not None:
        background_std = spec.burst_amplitude * 10.0 ** (spec.noise_db / 20.0)
        if background_std > 0:
            x += rng.normal(scale=background_std, size=n)

    return AudioTrace(samples=np.clip(x, -1.0, 1.0))


def datagram_stream(cube: RadarCube, full_scale: float | None = None) -> list[Datagram]:
    """The cube's raw sample stream chunked into wire datagrams."""
    return stream_to_datagrams(encode_cube(cube, full_scale=full_scale))


def scene_truth(scene: SceneSpec, config: RadarConfig, duration_s: float):
    """Per-frame ground truth (times, displacement, rate) of the first target."""
    n_frames = int(round(duration_s * config.frame_rate_hz))
    times = np.arange(n_frames) / config.frame_rate_hz
    if scene.targets:
        motion = scene.targets[0][0]
        displacement = chest_displacement(motion, times)
        rates = np.full(n_frames, motion.resp_rate_bpm)
    else:
        displacement = np.zeros(n_frames)
        rates = np.zeros(n_frames)
    return times, displacement, rates
