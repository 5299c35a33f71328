"""Microphone reference pipeline: decimation to the radar frame rate and
extraction of a breathing envelope from the decimated amplitude."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile
from scipy.signal import firwin, kaiser_beta, kaiserord, resample_poly

from .errors import AudioTooShortError, UnsupportedWavError

AUDIO_RATE_HZ = 44100
FRAME_RATE_HZ = 20.0
DECIMATION_FACTOR = 2205  # 44100 / 20

ANTIALIAS_ORDER = 20
ANTIALIAS_CUTOFF_HZ = 10.0

ENVELOPE_PASSBAND_HZ = 1.5
ENVELOPE_STOPBAND_HZ = 3.0
ENVELOPE_ATTENUATION_DB = 60.0


@dataclass
class AudioTrace:
    """Full-scale microphone samples in [-1, 1]."""

    samples: np.ndarray
    rate_hz: int = AUDIO_RATE_HZ

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("audio must be a mono 1-D array")
        if self.samples.size and np.max(np.abs(self.samples)) > 1.0 + 1e-9:
            raise ValueError("audio samples exceed full scale")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.rate_hz


@dataclass
class EnvelopeTrace:
    """Nonnegative breathing-power surrogate at the radar frame rate."""

    samples: np.ndarray
    rate_hz: float = FRAME_RATE_HZ

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size and self.samples.min() < 0:
            raise ValueError("envelope samples must be nonnegative")


def design_antialias_taps() -> np.ndarray:
    """Order-20 Kaiser low-pass (10 Hz cutoff, unity DC gain) used before
    the single-stage 2205x decimation."""
    beta = kaiser_beta(ENVELOPE_ATTENUATION_DB)
    return firwin(
        ANTIALIAS_ORDER + 1,
        ANTIALIAS_CUTOFF_HZ,
        window=("kaiser", beta),
        fs=AUDIO_RATE_HZ,
    )


def design_envelope_taps() -> np.ndarray:
    """Kaiser low-pass for the rectified signal: passband to 1.5 Hz,
    at least 60 dB down from 3 Hz at the 20 Hz rate."""
    nyq = FRAME_RATE_HZ / 2.0
    width = (ENVELOPE_STOPBAND_HZ - ENVELOPE_PASSBAND_HZ) / nyq
    # design 5 dB past the requirement: the Kaiser ripple estimate is exact,
    # leaving no margin at precisely the stopband edge
    numtaps, beta = kaiserord(ENVELOPE_ATTENUATION_DB + 5.0, width)
    numtaps += 1 - numtaps % 2  # symmetric type-I for integer group delay
    cutoff = (ENVELOPE_PASSBAND_HZ + ENVELOPE_STOPBAND_HZ) / 2.0
    return firwin(numtaps, cutoff, window=("kaiser", beta), fs=FRAME_RATE_HZ)


def _fir_centered(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # symmetric taps; full convolution re-centred so y[n] lines up with x[n]
    delay = (len(taps) - 1) // 2
    y = np.convolve(x, taps, mode="full")
    return y[delay : delay + len(x)]


def decimate_to_frame_rate(audio: AudioTrace, *, multistage: bool = False) -> np.ndarray:
    """Reduce 44.1 kHz audio to a 20 Hz series, output length floor(n/2205).

    The default path is the deliberately light order-20 FIR followed by
    keeping every 2205th sample; its alias rejection is weak, which lets
    wideband breath sounds fold into the 20 Hz band as an amplitude trace.
    ``multistage=True`` switches to a clean polyphase chain (21 * 21 * 5)
    for alias-free references.
    """
    if audio.rate_hz != AUDIO_RATE_HZ:
        raise UnsupportedWavError(f"expected {AUDIO_RATE_HZ} Hz audio, got {audio.rate_hz}")
    x = audio.samples
    if x.size < ANTIALIAS_ORDER + 1:
        raise AudioTooShortError(
            f"need at least {ANTIALIAS_ORDER + 1} samples, got {x.size}"
        )
    out_len = x.size // DECIMATION_FACTOR
    if multistage:
        y = x
        for factor in (21, 21, 5):
            y = resample_poly(y, 1, factor)
        return y[:out_len]
    y = _fir_centered(x, design_antialias_taps())
    return y[::DECIMATION_FACTOR][:out_len]


def envelope(series: np.ndarray, *, square: bool = False) -> EnvelopeTrace:
    """Rectify a 20 Hz series and low-pass it into a breathing envelope.

    Rectification is |x| by default; ``square=True`` uses x**2 for a true
    power reading.  The low-pass group delay is compensated and residual
    negatives are clamped to zero.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty series")
    rectified = x**2 if square else np.abs(x)
    smoothed = _fir_centered(rectified, design_envelope_taps())
    return EnvelopeTrace(samples=np.maximum(smoothed, 0.0))


def load_wav(path) -> AudioTrace:
    """Read a WAV file, accepting only PCM 16-bit mono at 44.1 kHz."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise UnsupportedWavError(f"unreadable WAV file: {exc}") from exc
    if data.dtype != np.int16:
        raise UnsupportedWavError(f"expected 16-bit PCM samples, got {data.dtype}")
    if data.ndim != 1:
        raise UnsupportedWavError(f"expected mono audio, got {data.shape[1]} channels")
    if rate != AUDIO_RATE_HZ:
        raise UnsupportedWavError(f"expected {AUDIO_RATE_HZ} Hz, got {rate} Hz")
    return AudioTrace(samples=data.astype(np.float64) / 32768.0)


def save_wav(path, trace: AudioTrace) -> None:
    quantized = np.clip(np.rint(trace.samples * 32767.0), -32768, 32767).astype(np.int16)
    wavfile.write(path, int(trace.rate_hz), quantized)


def envelope_to_csv(env: EnvelopeTrace, path) -> None:
    times = np.arange(env.samples.size) / env.rate_hz
    table = np.column_stack([times, env.samples])
    np.savetxt(
        path, table, delimiter=",", header="time_s,envelope", comments="", fmt="%.10g"
    )
