import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prosodike import dsp

SR = 24000


def test_pre_emphasis_examples():
    assert np.allclose(dsp.pre_emphasize([1.0, 1.0, 1.0], 0.97), [1.0, 0.03, 0.03], atol=1e-15)
    x = np.random.default_rng(0).standard_normal(50)
    assert np.array_equal(dsp.pre_emphasize(x, 0.0), x)
    assert np.all(dsp.pre_emphasize(np.zeros(10)) == 0.0)
    with pytest.raises(ValueError):
        dsp.pre_emphasize(x, 1.0)


def test_sine_peak_bin():
    t = np.arange(SR) / SR
    p = dsp.stft_power(np.sin(2 * np.pi * 1000.0 * t), SR, dsp.StftConfig(fft_size=1024))
    assert p.shape[1] == 513
    assert np.all(p.argmax(axis=1) == round(1000 * 1024 / 24000))


def test_zero_signal_and_short_input():
    assert np.all(dsp.stft_power(np.zeros(2400), SR) == 0.0)
    assert dsp.stft_power(np.zeros(100), SR).shape[0] == 0


def test_windowed_parseval():
    x = np.random.default_rng(1).standard_normal(4000)
    cfg = dsp.StftConfig(fft_size=1024)
    win, hop, n_fft = cfg.frame_samples(SR), cfg.hop_samples(SR), cfg.n_fft(SR)
    frames = dsp.frame_signal(x, win, hop) * dsp.hann(win)
    p = dsp.stft_power(x, SR, cfg)
    # full two-sided spectrum from the one-sided one
    two_sided = p.sum(axis=1) * 2 - p[:, 0] - p[:, -1]
    assert np.allclose(two_sided, n_fft * (frames ** 2).sum(axis=1), rtol=1e-6)


def test_energy_db():
    p = np.zeros((3, 4))
    p[1, 0] = 1.0
    p[2, :2] = 1.0
    e = dsp.frame_energy_db(p)
    assert e[0] == pytest.approx(-100.0, abs=1e-12)
    assert e[1] == pytest.approx(0.0, abs=1e-9)
    assert e[2] - e[1] == pytest.approx(10 * np.log10(2), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 3000), st.integers(1, 700), st.integers(1, 300))
def test_frame_count_formula(n, win, hop):
    expected = 0 if n < win else 1 + (n - win) // hop
    assert dsp.frame_count(n, win, hop) == expected
    assert dsp.frame_signal(np.zeros(n), win, hop).shape == (expected, win)


@settings(max_examples=30, deadline=None)
@given(st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3), st.integers(0, 2**32 - 1))
def test_power_scales_quadratically(c, seed):
    x = np.random.default_rng(seed).standard_normal(1500)
    a, b = dsp.stft_power(c * x, SR), c * c * dsp.stft_power(x, SR)
    assert np.linalg.norm(a - b) <= 1e-9 * np.linalg.norm(b)


def sawtooth(f0, seconds, sr=SR):
    t = np.arange(int(seconds * sr)) / sr
    return 2.0 * ((t * f0) % 1.0) - 1.0


def test_pitch_of_sawtooth():
    f = dsp.estimate_pitch_acf(sawtooth(100.0, 0.5), SR)
    assert len(f) > 30
    assert np.all(np.abs(f - 100.0) <= 2.0)


def test_noise_and_silence_unvoiced():
    noise = np.random.default_rng(7).standard_normal(SR // 2)
    f = dsp.estimate_pitch_acf(noise, SR)
    assert np.mean(f == 0.0) >= 0.9
    assert np.all(dsp.estimate_pitch_acf(np.zeros(SR // 4), SR) == 0.0)


def test_pitch_shift_covariance():
    hop = dsp.StftConfig().hop_samples(SR)
    x = sawtooth(137.0, 0.4) * np.hanning(int(0.4 * SR)) ** 0.2
    f0 = dsp.estimate_pitch_acf(x, SR)
    f1 = dsp.estimate_pitch_acf(np.concatenate([np.zeros(hop), x]), SR)
    interior = slice(2, len(f0) - 6)
    assert np.allclose(f1[1:][interior], f0[interior], atol=1e-6)


def test_mel_filterbank_shape_and_range():
    fb = dsp.mel_filterbank(SR, 1024, dsp.MelConfig(num_bands=20))
    assert fb.shape == (20, 513)
    assert np.all(fb >= 0)
    assert np.all(fb.max(axis=1) > 0)
    with pytest.raises(ValueError):
        dsp.mel_filterbank(SR, 1024, dsp.MelConfig(fmin=5000, fmax=4000))
    m = dsp.log_mel_spectrogram(sawtooth(200.0, 0.2), SR, mel=dsp.MelConfig(num_bands=20))
    assert m.shape[1] == 20 and np.all(np.isfinite(m))


def test_config_invariants():
    with pytest.raises(ValueError):
        dsp.StftConfig(frame_length_ms=10, frame_shift_ms=25)
    with pytest.raises(ValueError):
        dsp.StftConfig(fft_size=1000)
    with pytest.raises(ValueError):
        dsp.StftConfig(fft_size=256).n_fft(SR)
