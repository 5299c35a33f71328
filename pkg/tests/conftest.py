import numpy as np
import pytest

from respiradar import MotionSpec, RadarConfig, SceneSpec


@pytest.fixture(scope="session")
def config():
    return RadarConfig()


def breathing_scene(
    range_m=0.5,
    rate_bpm=15.0,
    amplitude_m=0.001,
    snr_db=30.0,
    seed=0,
    harmonic_2_frac=0.0,
    static_reflectors=(),
):
    motion = MotionSpec(
        base_range_m=range_m,
        resp_rate_bpm=rate_bpm,
        resp_amplitude_m=amplitude_m,
        harmonic_2_frac=harmonic_2_frac,
    )
    return SceneSpec(
        targets=((motion, 1.0),),
        static_reflectors=tuple(static_reflectors),
        snr_db=snr_db,
        seed=seed,
    )


def static_scene(ranges_and_refl, snr_db=None, seed=0):
    return SceneSpec(static_reflectors=tuple(ranges_and_refl), snr_db=snr_db, seed=seed)


def sine_amplitude(x: np.ndarray) -> float:
    """Amplitude of a zero-mean sinusoid-like trace (sqrt(2) * RMS)."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(2.0) * x.std())
