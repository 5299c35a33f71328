"""Range compression and slow-time phase extraction for chest-motion sensing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import detrend as _scipy_detrend
from scipy.signal import get_window

from .errors import (
    EmptyCubeError,
    TooFewFramesError,
    WindowEmptyError,
    ZeroMagnitudeError,
)
from .ingest import RadarCube


@dataclass
class RangeTimeMap:
    """Complex range profile per frame; bin k sits at k * bin_spacing_m."""

    values: np.ndarray  # (frames, bins)
    bin_spacing_m: float
    frame_rate_hz: float
    frame_times_s: np.ndarray

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]

    def bin_ranges_m(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_spacing_m

    def bin_series(self, bin_index: int) -> np.ndarray:
        """Slow-time complex series of one range bin."""
        return self.values[:, bin_index]


@dataclass
class StaticProfile:
    """Time-averaged power and its relative spread, per range bin."""

    mean_power_db: np.ndarray
    cov: np.ndarray  # std/mean of linear power over frames


@dataclass
class PhaseTrace:
    """Unwrapped phase of one range bin, sampled at the frame rate."""

    samples: np.ndarray
    frame_rate_hz: float
    source_bin: int | None = None
    source_range_m: float | None = None

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size >= 2:
            if np.max(np.abs(np.diff(self.samples))) > np.pi + 1e-9:
                raise ValueError("phase trace is not unwrapped: step exceeds pi")


def range_fft(cube: RadarCube) -> RangeTimeMap:
    """Compress fast time into a complex range profile for every frame.

    Chirps within a frame are averaged coherently, a symmetric Hann window
    is applied over fast time and the full-length FFT is taken.  The beat
    signal is complex, so all samples_per_chirp bins are retained and bin k
    maps to range k * c / (2 * bandwidth).

    The DFT is referenced to the window centre (a fixed per-bin rotation),
    so together with a chirp-centre beat reference the bin phase reads the
    two-way carrier phase 4*pi*R/lambda directly.
    """
    if cube.n_frames == 0 or cube.data.size == 0:
        raise EmptyCubeError("cube holds no frames")
    fast = cube.data.mean(axis=1)  # coherent average over chirps
    n = cube.config.samples_per_chirp
    window = get_window("hann", n, fftbins=False)
    centre_ref = np.exp(1j * np.pi * np.arange(n) * (n - 1) / n)
    values = np.fft.fft(fast * window, axis=1) * centre_ref
    return RangeTimeMap(
        values=values,
        bin_spacing_m=cube.config.range_bin_spacing_m,
        frame_rate_hz=cube.config.frame_rate_hz,
        frame_times_s=cube.frame_timestamps.copy(),
    )


def static_profile(rmap: RangeTimeMap) -> StaticProfile:
    """Characterise how stationary each range bin is over the recording."""
    if rmap.n_frames < 2:
        raise TooFewFramesError("static profile needs at least two frames")
    power = np.abs(rmap.values) ** 2
    mean_power = power.mean(axis=0)
    std_power = power.std(axis=0)
    with np.errstate(divide="ignore"):
        mean_power_db = 10.0 * np.log10(mean_power)
    cov = np.divide(
        std_power,
        mean_power,
        out=np.zeros_like(mean_power),
        where=mean_power > 0,
    )
    return StaticProfile(mean_power_db=mean_power_db, cov=cov)


def select_target_bin(rmap: RangeTimeMap, min_m: float = 0.10, max_m: float = 0.80) -> int:
    """Pick the strongest bin whose centre lies in [min_m, max_m].

    The window keeps distant multipath out of the selection.  Ties break
    toward the smaller bin index (the nearer, direct-path reflection).
    """
    centres = rmap.bin_ranges_m()
    in_window = (centres >= min_m) & (centres <= max_m)
    if not in_window.any():
        raise WindowEmptyError(f"no bin centre falls inside [{min_m}, {max_m}] m")
    candidates = np.nonzero(in_window)[0]
    mean_power = np.mean(np.abs(rmap.values[:, candidates]) ** 2, axis=0)
    return int(candidates[np.argmax(mean_power)])


def clutter_remove(series: np.ndarray) -> np.ndarray:
    """Subtract the complex arithmetic mean (the static/multipath component)."""
    series = np.asarray(series)
    if series.size == 0:
        raise ValueError("empty slow-time series")
    return series - series.mean()


def extract_unwrapped_phase(
    series: np.ndarray,
    frame_rate_hz: float = 20.0,
    *,
    source_bin: int | None = None,
    source_range_m: float | None = None,
) -> PhaseTrace:
    """Per-sample argument, unwrapped across 2*pi discontinuities.

    Assumes the true phase moves less than pi per frame, which holds for
    chest motion at the 20 Hz frame rate.  Zero-magnitude samples have no
    phase and raise ZeroMagnitudeError.
    """
    series = np.asarray(series, dtype=np.complex128)
    if series.size == 0:
        raise ValueError("empty slow-time series")
    if np.any(series == 0):
        if np.all(series == 0):
            raise ZeroMagnitudeError("series is all zero; no reflection to track")
        raise ZeroMagnitudeError("zero-magnitude sample: phase undefined")
    unwrapped = np.unwrap(np.angle(series))
    return PhaseTrace(
        samples=unwrapped,
        frame_rate_hz=frame_rate_hz,
        source_bin=source_bin,
        source_range_m=source_range_m,
    )


def detrend_linear(samples: np.ndarray) -> np.ndarray:
    """Remove the least-squares line; suppresses slow phase drift before STFT."""
    return _scipy_detrend(np.asarray(samples, dtype=np.float64), type="linear")


def variant_b_series(series: np.ndarray) -> np.ndarray:
    """Complex slow-time series for direct time-frequency processing.

    No phase is extracted; the series is de-trended by mean removal and
    handed to the STFT as complex input (signed frequency axis).  Idempotent
    on an already clutter-removed series.
    """
    return clutter_remove(series)


def range_time_map_to_csv(rmap: RangeTimeMap, path) -> None:
    """Export per-frame bin powers in dB (columns: frame_time_s, then bins)."""
    mags = np.abs(rmap.values)
    with np.errstate(divide="ignore"):
        power_db = np.where(mags > 0, 20.0 * np.log10(np.where(mags > 0, mags, 1.0)), -300.0)
    header = "frame_time_s," + ",".join(
        f"db_at_{r:.4f}m" for r in rmap.bin_ranges_m()
    )
    table = np.column_stack([rmap.frame_times_s, power_db])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.8g")


def phase_trace_to_csv(trace: PhaseTrace, path) -> None:
    times = np.arange(trace.samples.size) / trace.frame_rate_hz
    table = np.column_stack([times, trace.samples])
    np.savetxt(
        path,
        table,
        delimiter=",",
        header="frame_time_s,phase_rad",
        comments="",
        fmt="%.10g",
    )
