import numpy as np
import pytest
from scipy.io import wavfile
from scipy.signal import freqz, get_window

from respiradar import (
    AudioTrace,
    BreathAudioSpec,
    decimate_to_frame_rate,
    envelope,
    load_wav,
    save_wav,
    synth_audio,
)
from respiradar.audio_dsp import (
    AUDIO_RATE_HZ,
    DECIMATION_FACTOR,
    design_antialias_taps,
    design_envelope_taps,
)
from respiradar.errors import AudioTooShortError, UnsupportedWavError
from respiradar.spectral import StftParams, extract_rate, stft


def fit_sine_amplitude(x, freq_hz, rate_hz):
    t = np.arange(x.size) / rate_hz
    basis = np.column_stack([np.sin(2 * np.pi * freq_hz * t), np.cos(2 * np.pi * freq_hz * t)])
    coef, *_ = np.linalg.lstsq(basis, x, rcond=None)
    return float(np.hypot(*coef))


# --- decimation ---------------------------------------------------------------


def test_decimate_zero_audio_length():
    n = 5 * DECIMATION_FACTOR + 123
    out = decimate_to_frame_rate(AudioTrace(np.zeros(n)))
    assert out.shape == (5,)
    assert np.all(out == 0)


@pytest.mark.parametrize("n", [DECIMATION_FACTOR, 44100, 100_000, 7 * DECIMATION_FACTOR - 1])
def test_decimate_output_length_is_floor(n):
    for multistage in (False, True):
        out = decimate_to_frame_rate(AudioTrace(np.zeros(n)), multistage=multistage)
        assert out.size == n // DECIMATION_FACTOR


def test_decimate_too_short():
    with pytest.raises(AudioTooShortError):
        decimate_to_frame_rate(AudioTrace(np.zeros(20)))


def test_decimate_dc_gain():
    out = decimate_to_frame_rate(AudioTrace(np.full(10 * DECIMATION_FACTOR, 0.5)))
    assert np.allclose(out[1:-1], 0.5, atol=1e-6)


@pytest.mark.parametrize("multistage", [False, True])
def test_decimate_passband_sinusoid_against_resampled_oracle(multistage):
    duration = 20.0
    t_in = np.arange(int(duration * AUDIO_RATE_HZ)) / AUDIO_RATE_HZ
    audio = AudioTrace(0.9 * np.sin(2 * np.pi * 0.25 * t_in))
    out = decimate_to_frame_rate(audio, multistage=multistage)

    t_out = np.arange(out.size) / 20.0
    oracle = 0.9 * np.sin(2 * np.pi * 0.25 * t_out)
    core = slice(40, out.size - 40)  # skip filter edge transients
    amp_out = fit_sine_amplitude(out[core], 0.25, 20.0)
    amp_ref = fit_sine_amplitude(oracle[core], 0.25, 20.0)
    assert amp_out == pytest.approx(amp_ref, rel=0.05)
    assert np.corrcoef(out[core], oracle[core])[0, 1] > 0.999


def test_multistage_rejects_aliases_where_default_leaks():
    t = np.arange(20 * AUDIO_RATE_HZ) / AUDIO_RATE_HZ
    tone = AudioTrace(0.5 * np.sin(2 * np.pi * 1502.3 * t))
    leaked = decimate_to_frame_rate(tone)
    clean = decimate_to_frame_rate(tone, multistage=True)
    assert np.std(clean[40:-40]) < 0.05 * np.std(leaked[40:-40])


# --- filter designs -----------------------------------------------------------


def test_antialias_filter_shape():
    taps = design_antialias_taps()
    assert taps.size == 21  # order 20
    assert np.allclose(taps, taps[::-1])  # linear phase
    assert taps.sum() == pytest.approx(1.0, abs=1e-9)  # unity DC gain


def test_envelope_filter_meets_design_targets():
    taps = design_envelope_taps()
    assert np.allclose(taps, taps[::-1])
    w, h = freqz(taps, worN=8192, fs=20.0)
    mag_db = 20 * np.log10(np.maximum(np.abs(h), 1e-12))
    assert mag_db[w >= 3.0].max() <= -60.0
    assert mag_db[w <= 1.5].min() >= -1.0


# --- envelope -------------------------------------------------------------------


def test_envelope_zero_input():
    env = envelope(np.zeros(100))
    assert np.all(env.samples == 0)


def test_envelope_constant_dc_gain():
    env = envelope(np.full(200, 0.4))
    mid = env.samples[60:-60]
    assert np.allclose(mid, 0.4, atol=0.004)


def test_envelope_nonnegative_and_square_option():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(400)
    env_abs = envelope(x)
    env_sq = envelope(x, square=True)
    assert env_abs.samples.min() >= 0
    assert env_sq.samples.min() >= 0
    # squaring tracks power, rectification tracks amplitude
    assert env_sq.samples.mean() == pytest.approx(np.mean(x**2), rel=0.2)
    assert env_abs.samples.mean() == pytest.approx(np.mean(np.abs(x)), rel=0.2)


def test_envelope_peak_aligns_with_burst_centre():
    series = np.zeros(400)
    bump = get_window("hann", 21, fftbins=False)
    series[190:211] = 0.8 * bump
    env = envelope(series)
    assert abs(int(np.argmax(env.samples)) - 200) <= 2


def test_full_chain_burst_alignment_at_audio_rate():
    n = 20 * AUDIO_RATE_HZ
    audio = np.zeros(n)
    burst_len = AUDIO_RATE_HZ // 2
    centre = 10 * AUDIO_RATE_HZ
    audio[centre - burst_len // 2 : centre + burst_len // 2] = 0.5 * get_window(
        "hann", burst_len, fftbins=False
    )
    env = envelope(decimate_to_frame_rate(AudioTrace(audio)))
    assert abs(int(np.argmax(env.samples)) - 200) <= 2


def test_breath_audio_envelope_rate(config):
    spec = BreathAudioSpec(resp_rate_bpm=15.0, exhale_only=True, noise_db=-40.0, seed=5)
    audio = synth_audio(spec, 180.0)
    env = envelope(decimate_to_frame_rate(audio))
    rates = extract_rate(stft(env.samples, StftParams()))
    assert np.median(rates.rates_bpm) == pytest.approx(15.0, abs=1.0)
    assert np.mean(np.abs(rates.rates_bpm - 15.0) <= 1.0) > 0.95


# --- WAV I/O --------------------------------------------------------------------


def test_wav_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    trace = AudioTrace(np.clip(0.3 * rng.standard_normal(44100), -1, 1))
    path = tmp_path / "x.wav"
    save_wav(path, trace)
    loaded = load_wav(path)
    assert loaded.rate_hz == 44100
    assert np.max(np.abs(loaded.samples - trace.samples)) < 1e-4


def test_wav_rejects_wrong_rate(tmp_path):
    path = tmp_path / "slow.wav"
    wavfile.write(path, 22050, np.zeros(100, dtype=np.int16))
    with pytest.raises(UnsupportedWavError, match="44100"):
        load_wav(path)


def test_wav_rejects_stereo(tmp_path):
    path = tmp_path / "stereo.wav"
    wavfile.write(path, 44100, np.zeros((100, 2), dtype=np.int16))
    with pytest.raises(UnsupportedWavError, match="mono"):
        load_wav(path)


def test_wav_rejects_non_pcm16(tmp_path):
    path = tmp_path / "float.wav"
    wavfile.write(path, 44100, np.zeros(100, dtype=np.float32))
    with pytest.raises(UnsupportedWavError, match="16-bit"):
        load_wav(path)
