"""End-to-end processing chains shared by the CLI and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_dsp import AudioTrace, EnvelopeTrace, decimate_to_frame_rate, envelope
from .ingest import RadarCube
from .radar_dsp import (
    PhaseTrace,
    RangeTimeMap,
    clutter_remove,
    detrend_linear,
    extract_unwrapped_phase,
    range_fft,
    select_target_bin,
    variant_b_series,
)
from .spectral import (
    DEFAULT_BAND_BPM,
    RateSeries,
    Spectrogram,
    StftParams,
    extract_rate,
    stft,
)

VARIANTS = ("A", "B")


@dataclass
class RadarRunResult:
    rates: RateSeries
    spectrogram: Spectrogram
    range_map: RangeTimeMap
    target_bin: int
    target_range_m: float
    phase: PhaseTrace | None  # variant A only


def process_radar_cube(
    cube: RadarCube,
    *,
    variant: str = "A",
    stft_params: StftParams | None = None,
    band_bpm: tuple[float, float] = DEFAULT_BAND_BPM,
    min_range_m: float = 0.10,
    max_range_m: float = 0.80,
    detrend: bool = True,
) -> RadarRunResult:
    """Cube -> range FFT -> target bin -> clutter removal -> rate series.

    Variant A unwraps the bin phase (optionally removing a linear drift)
    before the STFT; variant B hands the complex slow-time series to the
    STFT directly.
    """
    variant = variant.upper()
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    rmap = range_fft(cube)
    target_bin = select_target_bin(rmap, min_range_m, max_range_m)
    series = clutter_remove(rmap.bin_series(target_bin))

    phase: PhaseTrace | None = None
    if variant == "A":
        phase = extract_unwrapped_phase(
            series,
            rmap.frame_rate_hz,
            source_bin=target_bin,
            source_range_m=target_bin * rmap.bin_spacing_m,
        )
        trace = detrend_linear(phase.samples) if detrend else phase.samples
    else:
        trace = variant_b_series(series)

    spectrogram = stft(trace, stft_params)
    rates = extract_rate(spectrogram, band_bpm)
    return RadarRunResult(
        rates=rates,
        spectrogram=spectrogram,
        range_map=rmap,
        target_bin=target_bin,
        target_range_m=target_bin * rmap.bin_spacing_m,
        phase=phase,
    )


@dataclass
class AudioRunResult:
    rates: RateSeries
    spectrogram: Spectrogram
    envelope: EnvelopeTrace
    decimated: np.ndarray


def process_audio(
    audio: AudioTrace,
    *,
    stft_params: StftParams | None = None,
    band_bpm: tuple[float, float] = DEFAULT_BAND_BPM,
    multistage: bool = False,
    square: bool = False,
) -> AudioRunResult:
    """Audio -> 20 Hz decimation -> breathing envelope -> rate series."""
    decimated = decimate_to_frame_rate(audio, multistage=multistage)
    env = envelope(decimated, square=square)
    spectrogram = stft(env.samples, stft_params)
    rates = extract_rate(spectrogram, band_bpm)
    return AudioRunResult(
        rates=rates, spectrogram=spectrogram, envelope=env, decimated=decimated
    )
