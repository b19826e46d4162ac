"""Frame-level signal features on the 25 ms / 10 ms analysis grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ENERGY_FLOOR = 1e-10


@dataclass(frozen=True)
class StftConfig:
    frame_length_ms: float = 25.0
    frame_shift_ms: float = 10.0
    fft_size: int | None = None  # None: next power of two >= frame samples

    def __post_init__(self) -> None:
        if not 0 < self.frame_shift_ms <= self.frame_length_ms:
            raise ValueError("need 0 < frame_shift_ms <= frame_length_ms")
        if self.fft_size is not None and self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")

    def frame_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_length_ms * sample_rate / 1000.0))

    def hop_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_shift_ms * sample_rate / 1000.0))

    def n_fft(self, sample_rate: int) -> int:
        win = self.frame_samples(sample_rate)
        if self.fft_size is None:
            return 1 << max(0, (win - 1).bit_length())
        if self.fft_size < win:
            raise ValueError(f"fft_size {self.fft_size} shorter than frame ({win} samples)")
        return self.fft_size


@dataclass(frozen=True)
class MelConfig:
    num_bands: int = 80
    fmin: float = 0.0
    fmax: float | None = None  # None: Nyquist

    def check(self, sample_rate: int) -> tuple[float, float]:
        fmax = sample_rate / 2 if self.fmax is None else self.fmax
        if self.num_bands < 1:
            raise ValueError("num_bands must be >= 1")
        if not 0 <= self.fmin < fmax <= sample_rate / 2:
            raise ValueError("need 0 <= fmin < fmax <= sample_rate / 2")
        return self.fmin, fmax


@dataclass(frozen=True)
class PitchConfig:
    fmin: float = 50.0
    fmax: float = 500.0
    voicing_threshold: float = 0.5
    window_ms: float = 40.0


def pre_emphasize(samples: np.ndarray, alpha: float = 0.97) -> np.ndarray:
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    x = np.asarray(samples, dtype=float)
    y = x.copy()
    y[1:] -= alpha * x[:-1]
    return y


def hann(n: int) -> np.ndarray:
    # periodic Hann, the usual choice for spectral analysis
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def frame_count(n_samples: int, frame_samples: int, hop_samples: int) -> int:
    if n_samples < frame_samples:
        return 0
    return 1 + (n_samples - frame_samples) // hop_samples


def frame_signal(x: np.ndarray, frame_samples: int, hop_samples: int) -> np.ndarray:
    n = frame_count(len(x), frame_samples, hop_samples)
    if n == 0:
        return np.zeros((0, frame_samples))
    idx = np.arange(frame_samples)[None, :] + hop_samples * np.arange(n)[:, None]
    return x[idx]


def stft_power(audio: np.ndarray, sample_rate: int, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """Hann-windowed power spectra, shape ``(frames, n_fft // 2 + 1)``."""
    win = cfg.frame_samples(sample_rate)
    hop = cfg.hop_samples(sample_rate)
    n_fft = cfg.n_fft(sample_rate)
    frames = frame_signal(np.asarray(audio, dtype=float), win, hop)
    if len(frames) == 0:
        return np.zeros((0, n_fft // 2 + 1))
    spec = np.fft.rfft(frames * hann(win), n=n_fft, axis=1)
    return spec.real ** 2 + spec.imag ** 2


def frame_energy_db(power_spectra: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.sum(power_spectra, axis=-1) + ENERGY_FLOOR)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, n_fft: int, cfg: MelConfig = MelConfig()) -> np.ndarray:
    """Triangular HTK-style filters, shape ``(num_bands, n_fft // 2 + 1)``."""
    fmin, fmax = cfg.check(sample_rate)
    bin_hz = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), cfg.num_bands + 2))
    fb = np.zeros((cfg.num_bands, len(bin_hz)))
    for b in range(cfg.num_bands):
        lo, mid, hi = edges[b], edges[b + 1], edges[b + 2]
        rise = (bin_hz - lo) / (mid - lo)
        fall = (hi - bin_hz) / (hi - mid)
        fb[b] = np.clip(np.minimum(rise, fall), 0.0, None)
    return fb


def log_mel_spectrogram(
    audio: np.ndarray,
    sample_rate: int,
    stft: StftConfig = StftConfig(),
    mel: MelConfig = MelConfig(),
    alpha: float = 0.97,
) -> np.ndarray:
    power = stft_power(pre_emphasize(audio, alpha), sample_rate, stft)
    fb = mel_filterbank(sample_rate, stft.n_fft(sample_rate), mel)
    return np.log(power @ fb.T + ENERGY_FLOOR)


def _normalized_acf(frame: np.ndarray, min_lag: int, max_lag: int) -> np.ndarray:
    """r[k] for lags ``min_lag..max_lag`` over the overlapping part of the frame."""
    n = len(frame)
    spec = np.fft.rfft(frame, 2 * n)
    acf = np.fft.irfft(spec.real ** 2 + spec.imag ** 2)[: max_lag + 1]
    sq = np.concatenate([[0.0], np.cumsum(frame ** 2)])
    lags = np.arange(min_lag, max_lag + 1)
    e_head = sq[n - lags]  # sum x[0 : n-lag]^2
    e_tail = sq[n] - sq[lags]  # sum x[lag : n]^2
    denom = np.sqrt(e_head * e_tail)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(denom > 1e-12, acf[lags] / denom, 0.0)
    return r


def estimate_pitch_acf(
    audio: np.ndarray,
    sample_rate: int,
    stft: StftConfig = StftConfig(),
    cfg: PitchConfig = PitchConfig(),
) -> np.ndarray:
    """Autocorrelation pitch per analysis frame; 0.0 marks unvoiced frames.

    Frame ``i`` starts at ``i * hop`` like :func:`stft_power`, but the
    correlation window is ``cfg.window_ms`` long (zero-padded at the tail) so
    that two periods of the lowest pitch fit.
    """
    x = np.asarray(audio, dtype=float)
    hop = stft.hop_samples(sample_rate)
    n_frames = frame_count(len(x), stft.frame_samples(sample_rate), hop)
    win = max(int(round(cfg.window_ms * sample_rate / 1000.0)), stft.frame_samples(sample_rate))
    min_lag = max(1, int(np.floor(sample_rate / cfg.fmax)))
    max_lag = min(win - 2, int(np.ceil(sample_rate / cfg.fmin)))
    padded = np.concatenate([x, np.zeros(win)])
    out = np.zeros(n_frames)
    for i in range(n_frames):
        frame = padded[i * hop: i * hop + win]
        frame = frame - frame.mean()
        r = _normalized_acf(frame, min_lag, max_lag)
        if len(r) < 3:
            continue
        best = float(r.max())
        if best < cfg.voicing_threshold:
            continue
        # earliest strong local peak, which avoids picking a multiple of the period
        peaks = np.flatnonzero((r[1:-1] >= r[:-2]) & (r[1:-1] >= r[2:]) & (r[1:-1] >= 0.9 * best)) + 1
        k = int(peaks[0]) if len(peaks) else int(np.argmax(r))
        shift = 0.0
        if 0 < k < len(r) - 1:
            a, b, c = r[k - 1], r[k], r[k + 1]
            denom = a - 2 * b + c
            if denom < 0:
                shift = 0.5 * (a - c) / denom
        out[i] = sample_rate / (min_lag + k + shift)
    return out
