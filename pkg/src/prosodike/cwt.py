"""Wavelet prominence: composite prosody signal, Ricker scaleogram, LoMA lines.

The composite signal is a weighted sum of three z-scored frame streams
(log-pitch, energy, phone log-duration).  Its Mexican-hat scaleogram is
reduced to lines of maximum amplitude: local maxima chained from the finest
scale to coarser ones.  A word's prominence is read off the lines anchored
inside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .datamodel import AlignedUtterance

SUPPORT = 5.0  # kernel half-width in units of the scale


class CompositeError(ValueError):
    pass


class SignalTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class CwtConfig:
    weights: tuple[float, float, float] = (0.5, 0.25, 0.25)  # pitch, energy, duration
    num_scales: int = 10
    base_scale: float = 4.0  # frames
    octave_step: float = 0.5
    smoothing: int = 5  # frames, moving average over the duration stream
    aggregation: str = "max"  # or "sum"

    def __post_init__(self) -> None:
        if len(self.weights) != 3 or any(w < 0 for w in self.weights):
            raise ValueError("composite weights must be three non-negative numbers")
        if self.num_scales < 2:
            raise ValueError("num_scales must be >= 2")
        if self.aggregation not in ("max", "sum"):
            raise ValueError("aggregation must be 'max' or 'sum'")
        if self.smoothing < 1:
            raise ValueError("smoothing must be >= 1 frame")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def scales(self) -> np.ndarray:
        return scale_widths(self.num_scales, self.base_scale, self.octave_step)


@dataclass(frozen=True, eq=False)
class CompositeSignal:
    values: np.ndarray
    weights: tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class Scaleogram:
    coefficients: np.ndarray  # scales x frames
    scales: np.ndarray


@dataclass(frozen=True)
class ProminenceLine:
    points: tuple[tuple[int, int, float], ...]  # (scale index, frame, coefficient)
    strength: float = field(init=False)
    anchor_frame: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "strength", float(sum(p[2] for p in self.points)))
        object.__setattr__(self, "anchor_frame", int(self.points[0][1]))


def scale_widths(num_scales: int, base_scale: float = 4.0, octave_step: float = 0.5) -> np.ndarray:
    return base_scale * 2.0 ** (octave_step * np.arange(num_scales))


def zscore(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return x.copy()
    sd = x.std()
    if sd < 1e-12 * max(1.0, float(np.abs(x).max())):
        return np.zeros_like(x)
    return (x - x.mean()) / sd


def moving_average(x: np.ndarray, width: int) -> np.ndarray:
    """Centred moving average with edge values held; even widths lean left."""
    if width <= 1 or len(x) == 0:
        return np.asarray(x, dtype=float).copy()
    left = width // 2
    right = width - 1 - left
    padded = np.concatenate([np.full(left, x[0]), x, np.full(right, x[-1])])
    c = np.concatenate([[0.0], np.cumsum(padded)])
    return (c[width:] - c[:-width]) / width


def interpolated_log_pitch(utt: AlignedUtterance) -> np.ndarray:
    pitch = utt.pitch_hz
    voiced = np.flatnonzero(pitch > 0)
    if len(voiced) == 0:
        raise CompositeError(f"utterance {utt.id!r} has no voiced frames")
    frames = np.arange(len(pitch))
    return np.interp(frames, voiced, np.log(pitch[voiced]))


def pitch_stream(utt: AlignedUtterance) -> np.ndarray:
    return zscore(interpolated_log_pitch(utt))


def energy_stream(utt: AlignedUtterance) -> np.ndarray:
    return zscore(utt.energy_db)


def duration_stream(utt: AlignedUtterance, smoothing: int = 5) -> np.ndarray:
    """Per frame, the z-scored log-duration of the active phone.

    Only phones inside words enter the z-score; other frames stay at 0.
    """
    out = np.zeros(len(utt.pitch_hz))
    owner = utt.word_of_phone()
    in_word = [i for i in range(len(utt.phones)) if owner[i] >= 0]
    if in_word:
        z = zscore(np.log([utt.phones[i].num_frames for i in in_word]))
        for zi, i in zip(z, in_word):
            p = utt.phones[i]
            out[p.start_frame:p.end_frame] = zi
    return moving_average(out, smoothing)


def build_composite(
    utt: AlignedUtterance,
    weights: Sequence[float] = (0.5, 0.25, 0.25),
    smoothing: int = 5,
) -> CompositeSignal:
    w = tuple(float(v) for v in weights)
    if len(w) != 3 or any(v < 0 for v in w):
        raise ValueError("composite weights must be three non-negative numbers")
    values = (
        w[0] * pitch_stream(utt)
        + w[1] * energy_stream(utt)
        + w[2] * duration_stream(utt, smoothing)
    )
    return CompositeSignal(values, w)  # type: ignore[arg-type]


def ricker(t: np.ndarray) -> np.ndarray:
    t2 = np.asarray(t, dtype=float) ** 2
    return 2.0 / (math.sqrt(3.0) * math.pi ** 0.25) * (1.0 - t2) * np.exp(-t2 / 2.0)


def _half_support(scale: float) -> int:
    return int(math.ceil(SUPPORT * scale))


def cwt_transform(
    signal: np.ndarray,
    num_scales: int = 10,
    base_scale_frames: float = 4.0,
    octave_step: float = 0.5,
) -> Scaleogram:
    """Ricker-wavelet scaleogram at scales ``base * 2**(octave_step * k)``.

    The signal is mirror-padded by half the largest kernel support on each
    side; row ``k`` is scaled by ``s_k ** -0.5``.  Each row only sees its own
    kernel support, so a transform with fewer scales equals the leading rows
    of one with more.
    """
    x = np.asarray(signal, dtype=float)
    if num_scales < 2:
        raise ValueError("num_scales must be >= 2")
    scales = scale_widths(num_scales, base_scale_frames, octave_step)
    n = len(x)
    if n < scales[-1]:
        raise SignalTooShortError(
            f"signal of {n} frames is shorter than the largest scale; "
            f"need at least {int(math.ceil(scales[-1]))} frames"
        )
    pad = _half_support(scales[-1])
    padded = np.pad(x, pad, mode="symmetric")
    coef = np.empty((num_scales, n))
    for k, s in enumerate(scales):
        h = _half_support(s)
        kernel = ricker(np.arange(-h, h + 1) / s) / math.sqrt(s)
        seg = padded[pad - h: pad + n + h]
        coef[k] = np.convolve(seg, kernel[::-1], mode="valid")
    return Scaleogram(coef, scales)


def local_maxima(row: np.ndarray, rel_floor: float = 1e-6) -> np.ndarray:
    """Interior frames that beat the left neighbour and tie-or-beat the right.

    Only positive peaks above ``rel_floor * max|row|`` count, which keeps
    numerical ripple on flat stretches out.
    """
    return np.flatnonzero(_maxima_mask(np.asarray(row, dtype=float)[None, :], rel_floor)[0])


def _maxima_mask(coef: np.ndarray, rel_floor: float) -> np.ndarray:
    mask = np.zeros(coef.shape, dtype=bool)
    if coef.shape[1] < 3:
        return mask
    floor = rel_floor * np.abs(coef).max(axis=1, keepdims=True)
    mid = coef[:, 1:-1]
    mask[:, 1:-1] = (mid > coef[:, :-2]) & (mid >= coef[:, 2:]) & (mid > floor) & (floor > 0)
    return mask


def trace_lines(sg: Scaleogram, rel_floor: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Chain maxima fine to coarse.

    From each maximum of the finest row, a line moves to the nearest maximum
    of the next row if it lies within half that row's scale; otherwise the
    line stops.  Several lines may share a coarse maximum.

    Returns ``(frames, values)``, both ``lines x scales``; entries past the
    point where a line stopped are ``-1`` / ``0.0``.
    """
    coef, scales = sg.coefficients, sg.scales
    mask = _maxima_mask(coef, rel_floor)
    starts = np.flatnonzero(mask[0])
    n_lines, n_scales = len(starts), len(scales)
    frames = np.full((n_lines, n_scales), -1, dtype=int)
    values = np.zeros((n_lines, n_scales))
    if n_lines == 0:
        return frames, values
    frames[:, 0] = starts
    values[:, 0] = coef[0, starts]
    active = np.arange(n_lines)
    pos = starts
    for k in range(1, n_scales):
        cand = np.flatnonzero(mask[k])
        if len(cand) == 0:
            break
        last = len(cand) - 1
        j = np.searchsorted(cand, pos)
        left = cand[np.maximum(j - 1, 0)]
        right = cand[np.minimum(j, last)]
        dl = np.abs(pos - left)
        dr = np.abs(right - pos)
        row = coef[k]
        take_left = (dl < dr) | ((dl == dr) & (row[left] >= row[right]))
        best = np.where(take_left, left, right)
        keep = np.minimum(dl, dr) <= scales[k] / 2.0
        active = active[keep]
        if len(active) == 0:
            break
        pos = best[keep]
        frames[active, k] = pos
        values[active, k] = row[pos]
    return frames, values


def extract_loma(sg: Scaleogram, rel_floor: float = 1e-6) -> list[ProminenceLine]:
    frames, values = trace_lines(sg, rel_floor)
    lines = []
    for f_row, v_row in zip(frames, values):
        pts = tuple((k, int(f), float(v)) for k, (f, v) in enumerate(zip(f_row, v_row)) if f >= 0)
        lines.append(ProminenceLine(pts))
    return lines


def word_prominence(
    lines: Sequence[ProminenceLine],
    utt: AlignedUtterance,
    aggregation: str = "max",
) -> np.ndarray:
    """Per-word value from the lines anchored inside each word (0 if none)."""
    anchors = np.array([ln.anchor_frame for ln in lines], dtype=int)
    strengths = np.array([ln.strength for ln in lines], dtype=float)
    return _aggregate(anchors, strengths, utt, aggregation)


def _aggregate(anchors: np.ndarray, strengths: np.ndarray, utt: AlignedUtterance, aggregation: str) -> np.ndarray:
    out = np.zeros(len(utt.words))
    owner = utt.frame_owner
    inside = (anchors >= 0) & (anchors < len(owner))
    idx = owner[anchors[inside]]
    keep = idx >= 0
    idx, vals = idx[keep], strengths[inside][keep]
    if aggregation == "max":
        out[:] = -np.inf
        np.maximum.at(out, idx, vals)
        out[np.isneginf(out)] = 0.0
    else:
        np.add.at(out, idx, vals)
    return out


def word_prominence_from_trace(
    frames: np.ndarray,
    values: np.ndarray,
    utt: AlignedUtterance,
    num_scales: int,
    aggregation: str = "max",
) -> np.ndarray:
    """Like :func:`word_prominence` for the first ``num_scales`` rows of a trace."""
    if len(frames) == 0:
        return np.zeros(len(utt.words))
    return _aggregate(frames[:, 0], values[:, :num_scales].sum(axis=1), utt, aggregation)


def wavelet_prominence(utt: AlignedUtterance, cfg: CwtConfig = CwtConfig()) -> np.ndarray:
    """Composite -> scaleogram -> lines -> per-word raw prominence."""
    comp = build_composite(utt, cfg.weights, cfg.smoothing)
    sg = cwt_transform(comp.values, cfg.num_scales, cfg.base_scale, cfg.octave_step)
    return word_prominence(extract_loma(sg), utt, cfg.aggregation)
