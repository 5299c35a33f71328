import json

import numpy as np
import pytest
from scipy.signal import get_window

from conftest import breathing_scene, sine_amplitude, static_scene
from respiradar import (
    BreathAudioSpec,
    MotionSpec,
    SceneSpec,
    chest_displacement,
    datagram_stream,
    decode_cube,
    encode_cube,
    load_capture,
    range_fft,
    reassemble,
    select_target_bin,
    synth_audio,
    synth_cube,
    write_capture,
)
from respiradar.errors import DurationTooShortError
from respiradar.ingest import quantize_cube
from respiradar.pipeline import process_audio
from respiradar.radar_dsp import detrend_linear, extract_unwrapped_phase
from respiradar.spectral import StftParams, extract_rate, stft


# --- chest displacement ---------------------------------------------------------


def test_displacement_zero_amplitude():
    spec = MotionSpec(base_range_m=0.5, resp_rate_bpm=15.0, resp_amplitude_m=0.0)
    t = np.linspace(0, 100, 500)
    assert np.all(chest_displacement(spec, t) == 0.0)


def test_displacement_quarter_period_value():
    spec = MotionSpec(base_range_m=0.5, resp_rate_bpm=15.0, resp_amplitude_m=0.001)
    assert chest_displacement(spec, 1.0) == pytest.approx(0.001)  # sin(pi/2)


def test_displacement_periodicity():
    spec = MotionSpec(
        base_range_m=0.5, resp_rate_bpm=13.0, resp_amplitude_m=0.002, harmonic_2_frac=0.4
    )
    rng = np.random.default_rng(5)
    t = rng.uniform(0, 500, size=100)
    period = 60.0 / 13.0
    assert np.allclose(chest_displacement(spec, t), chest_displacement(spec, t + period))


def test_motion_spec_validation():
    with pytest.raises(ValueError):
        MotionSpec(base_range_m=-1.0, resp_rate_bpm=15.0)
    with pytest.raises(ValueError):
        MotionSpec(base_range_m=0.5, resp_rate_bpm=15.0, heart_rate_bpm=60.0)


def test_scene_rejects_ranges_beyond_chamber():
    with pytest.raises(ValueError):
        SceneSpec(static_reflectors=((7.0, 1.0),))


# --- cube synthesis ---------------------------------------------------------------


def test_empty_scene_snr_off_zero_cube(config):
    cube = synth_cube(SceneSpec(), config, 1.0)
    assert np.all(cube.data == 0)


def test_empty_scene_with_snr_rejected(config):
    with pytest.raises(ValueError):
        synth_cube(SceneSpec(snr_db=30.0), config, 1.0)


def test_duration_too_short(config):
    with pytest.raises(DurationTooShortError):
        synth_cube(SceneSpec(), config, 0.01)


def test_determinism_same_seed_bit_identical(config):
    scene = breathing_scene(seed=77)
    a = synth_cube(scene, config, 10.0)
    b = synth_cube(scene, config, 10.0)
    assert encode_cube(a) == encode_cube(b)
    other = synth_cube(breathing_scene(seed=78), config, 10.0)
    assert encode_cube(a) != encode_cube(other)


def test_static_reflector_matches_closed_form(config):
    sp = config.range_bin_spacing_m
    r = 10 * sp  # bin-centred so the beat lands exactly on bin 10
    cube = synth_cube(static_scene([(r, 1.0)]), config, 2.0)
    rmap = range_fft(cube)
    assert np.all(np.argmax(np.abs(rmap.values), axis=1) == 10)

    # bin phase reads 4*pi*R/lambda and stays constant
    expected = np.angle(np.exp(1j * 4 * np.pi * r / config.wavelength_m))
    phases = np.angle(rmap.values[:, 10])
    assert np.max(np.abs(np.angle(np.exp(1j * (phases - expected))))) < 1e-9

    # bin magnitude equals reflectivity times the window sum (on-bin tone)
    window_sum = get_window("hann", 256, fftbins=False).sum()
    assert np.abs(rmap.values[:, 10]) == pytest.approx(window_sum, rel=1e-9)


def test_breathing_cube_full_chain_phase_and_rate(config):
    cube = synth_cube(breathing_scene(seed=21), config, 180.0)
    rmap = range_fft(cube)
    trace = extract_unwrapped_phase(rmap.bin_series(select_target_bin(rmap)), 20.0)
    recovered = detrend_linear(trace.samples)
    beta = 4 * np.pi * 0.001 / config.wavelength_m
    assert sine_amplitude(recovered) == pytest.approx(beta, rel=0.02)
    rates = extract_rate(stft(recovered, StftParams()))
    assert np.all(np.abs(rates.rates_bpm - 15.0) <= 1.0)


def test_small_motion_phase_fidelity_2pct_rms(config):
    for amplitude_m in (0.0005, 0.001, 0.002):
        scene = breathing_scene(amplitude_m=amplitude_m, snr_db=30.0, seed=9)
        cube = synth_cube(scene, config, 120.0)
        rmap = range_fft(cube)
        trace = extract_unwrapped_phase(rmap.bin_series(select_target_bin(rmap)), 20.0)
        recovered = detrend_linear(trace.samples)
        oracle = detrend_linear(
            4 * np.pi * chest_displacement(scene.targets[0][0], cube.frame_timestamps) / config.wavelength_m
        )
        rel_rms = np.sqrt(np.mean((recovered - oracle) ** 2)) / np.sqrt(np.mean(oracle**2))
        assert rel_rms < 0.02


def test_snr_calibration_within_1db(config):
    sp = config.range_bin_spacing_m
    scene = static_scene([(10 * sp, 1.0)], snr_db=20.0, seed=11)
    cube = synth_cube(scene, config, 60.0)  # 1200 frames
    rmap = range_fft(cube)
    window = get_window("hann", config.samples_per_chirp, fftbins=False)
    coherent_gain_db = 10 * np.log10(window.sum() ** 2 / np.sum(window**2))
    signal_power = np.mean(np.abs(rmap.values[:, 10]) ** 2)
    noise_power = np.mean(np.abs(rmap.values[:, 100]) ** 2)  # signal-free bin
    measured = 10 * np.log10(signal_power / noise_power) - coherent_gain_db
    assert measured == pytest.approx(20.0, abs=1.0)


# --- breath audio -----------------------------------------------------------------


def test_audio_silence_is_zero():
    spec = BreathAudioSpec(resp_rate_bpm=15.0, burst_amplitude=0.0, noise_db=None, seed=0)
    audio = synth_audio(spec, 10.0)
    assert np.all(audio.samples == 0)


def test_audio_duration_too_short():
    spec = BreathAudioSpec(resp_rate_bpm=15.0)
    with pytest.raises(DurationTooShortError):
        synth_audio(spec, 2.0)


def test_audio_determinism():
    spec = BreathAudioSpec(resp_rate_bpm=15.0, noise_db=-30.0, seed=4)
    a = synth_audio(spec, 20.0)
    b = synth_audio(spec, 20.0)
    assert np.array_equal(a.samples, b.samples)


def test_audio_burst_spec_validation():
    with pytest.raises(ValueError):
        BreathAudioSpec(resp_rate_bpm=15.0, burst_duration_s=4.0)  # >= one period


def test_exhale_only_reads_true_rate(config):
    spec = BreathAudioSpec(resp_rate_bpm=15.0, exhale_only=True, noise_db=-40.0, seed=6)
    result = process_audio(synth_audio(spec, 180.0))
    assert np.mean(np.abs(result.rates.rates_bpm - 15.0) <= 1.0) > 0.95


def test_both_sounds_doubles_dominant_rate(config):
    spec = BreathAudioSpec(resp_rate_bpm=15.0, exhale_only=False, noise_db=-40.0, seed=6)
    result = process_audio(synth_audio(spec, 180.0))
    assert np.mean(np.abs(result.rates.rates_bpm - 30.0) <= 1.0) > 0.95


# --- capture writers ---------------------------------------------------------------


def test_write_then_load_round_trip(tmp_path, config):
    cube = synth_cube(breathing_scene(seed=3), config, 5.0)
    path = tmp_path / "sim.rvsc"
    write_capture(cube, path)
    loaded = load_capture(path)
    assert np.array_equal(loaded.data, quantize_cube(cube).data)
    assert np.allclose(loaded.frame_timestamps, cube.frame_timestamps)


def test_datagram_stream_round_trip(config):
    cube = synth_cube(breathing_scene(seed=3), config, 5.0)
    stream, report = reassemble(datagram_stream(cube))
    assert report.gaps == ()
    decoded = decode_cube(stream, config)
    assert np.array_equal(decoded.data, quantize_cube(cube).data)


def test_empty_cube_header_only_file(tmp_path, config):
    from respiradar import RadarCube

    zero = RadarCube(
        config=config,
        data=np.zeros((0, 1, config.samples_per_chirp)),
        frame_timestamps=np.zeros(0),
    )
    path = tmp_path / "empty.rvsc"
    write_capture(zero, path)
    loaded = load_capture(path)
    assert loaded.n_frames == 0


def test_scene_spec_json_round_trip(tmp_path):
    scene = breathing_scene(static_reflectors=((3.0, 5.0),), seed=42)
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(scene.to_dict()), encoding="utf-8")
    loaded = SceneSpec.from_json_file(path)
    assert loaded == scene
