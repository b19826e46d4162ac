"""Word-level emphasis features and their corpus normalization.

Three families are produced per word:

* ``pitch_var`` / ``dur_var``: word-minus-sentence log-pitch spread
  (P95 - P5) and mean phone duration in frames;
* ``wavelet``: LoMA prominence of the composite prosody signal;
* ``combined``: a convex combination of the three normalized values.

Normalization maps ``[-3 s, 3 s]`` onto ``[-1, 1]`` where ``s`` is the
training variance of the feature (``norm_exponent=2``, the default) or its
standard deviation (``norm_exponent=1``).  Values are not clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import cwt
from .datamodel import (
    FEATURE_NAMES,
    AlignedUtterance,
    EmphasisFeatures,
    FeatureStats,
    WordFeatures,
)
from .detector import f_score, kmeans2


class FeatureError(ValueError):
    pass


class DegenerateFeatureError(FeatureError):
    """A feature has zero variance and cannot be normalized."""


def log_pitch_spread(log_f0: np.ndarray) -> float:
    if len(log_f0) < 2:
        return 0.0
    p5, p95 = np.percentile(log_f0, [5.0, 95.0])
    return float(p95 - p5)


def variance_features(utt: AlignedUtterance) -> tuple[np.ndarray, np.ndarray]:
    """Per-word ``(pitch_var, dur_var)``.

    Sentence-level terms use the phones and frames that belong to words, so
    leading/trailing silence does not dilute them.
    """
    owner_phone = utt.word_of_phone()
    owner_frame = utt.word_of_frame()
    dur = utt.phone_durations()
    pitch = utt.pitch_hz
    voiced = pitch > 0

    sent_voiced = voiced & (owner_frame >= 0)
    if not sent_voiced.any():
        raise FeatureError(f"utterance {utt.id!r} has no voiced frames inside words")
    s_f0 = log_pitch_spread(np.log(pitch[sent_voiced]))
    in_word = owner_phone >= 0
    s_dur = float(dur[in_word].mean()) if in_word.any() else 0.0

    n = len(utt.words)
    pitch_var = np.zeros(n)
    dur_var = np.zeros(n)
    for i, w in enumerate(utt.words):
        dur_var[i] = dur[w.phone_start:w.phone_end].mean() - s_dur
        sel = voiced & (owner_frame == i)
        pitch_var[i] = log_pitch_spread(np.log(pitch[sel])) - s_f0
    return pitch_var, dur_var


def wavelet_feature(utt: AlignedUtterance, cfg: cwt.CwtConfig = cwt.CwtConfig()) -> np.ndarray:
    return cwt.wavelet_prominence(utt, cfg)


def raw_features(utt: AlignedUtterance, cfg: cwt.CwtConfig = cwt.CwtConfig()) -> EmphasisFeatures:
    pv, dv = variance_features(utt)
    wv = wavelet_feature(utt, cfg)
    per_word = tuple(WordFeatures(float(a), float(b), float(c)) for a, b, c in zip(pv, dv, wv))
    return EmphasisFeatures(utt.id, per_word, raw=True)


def fit_stats(corpus: Sequence[EmphasisFeatures], config_hash: str = "") -> FeatureStats:
    """Population mean and variance of each raw feature over all words."""
    if not corpus:
        raise FeatureError("cannot fit statistics on an empty corpus")
    cols = {name: np.concatenate([f.column(name) for f in corpus]) for name in FEATURE_NAMES}
    n = len(cols[FEATURE_NAMES[0]])
    if n < 2:
        raise FeatureError("need at least two words to fit statistics")
    means = {k: math.fsum(v) / n for k, v in cols.items()}
    variances = {k: math.fsum((v - means[k]) ** 2) / n for k, v in cols.items()}
    return FeatureStats(means, variances, n, config_hash)


def normalize(raw_value, variance: float, norm_exponent: int = 2):
    """Linear map of ``[-3 s, 3 s]`` onto ``[-1, 1]``; ``s`` = variance or std."""
    if not variance > 0:
        raise DegenerateFeatureError("feature variance is zero; normalization undefined")
    if norm_exponent == 2:
        scale = 3.0 * variance
    elif norm_exponent == 1:
        scale = 3.0 * math.sqrt(variance)
    else:
        raise ValueError("norm_exponent must be 1 or 2")
    return np.asarray(raw_value, dtype=float) / scale if np.ndim(raw_value) else raw_value / scale


@dataclass(frozen=True)
class CombinedWeights:
    w: tuple[float, float, float]  # pitch_var, dur_var, wavelet

    def __post_init__(self) -> None:
        if len(self.w) != 3 or any(x < 0 for x in self.w) or abs(sum(self.w) - 1.0) > 1e-9:
            raise ValueError(f"combined weights must lie on the simplex, got {self.w}")
        object.__setattr__(self, "w", tuple(float(x) for x in self.w))


def normalized_matrix(features: EmphasisFeatures, stats: FeatureStats, norm_exponent: int = 2) -> np.ndarray:
    """``words x 3`` matrix of normalized (pitch_var, dur_var, wavelet)."""
    return np.stack(
        [normalize(features.column(name), stats.variances[name], norm_exponent) for name in FEATURE_NAMES],
        axis=1,
    ).reshape(len(features.per_word), 3)


def combined_feature(normalized: np.ndarray, weights: CombinedWeights) -> np.ndarray:
    """Convex combination of already-normalized ``(pitch_var, dur_var, wavelet)`` rows."""
    return np.asarray(normalized, dtype=float) @ np.asarray(weights.w)


def normalize_features(
    features: EmphasisFeatures,
    stats: FeatureStats,
    weights: CombinedWeights | None = None,
    norm_exponent: int = 2,
) -> EmphasisFeatures:
    m = normalized_matrix(features, stats, norm_exponent)
    comb = combined_feature(m, weights) if weights is not None else np.zeros(len(m))
    per_word = tuple(WordFeatures(*map(float, row), float(c)) for row, c in zip(m, comb))
    return EmphasisFeatures(features.utterance_id, per_word, raw=False)


def variance_score(normalized: np.ndarray) -> np.ndarray:
    """Single detection score for the two-feature family: their mean."""
    return np.asarray(normalized)[:, :2].mean(axis=1)


def _simplex_points(steps: int) -> list[tuple[int, int, int]]:
    return [(a, b, steps - a - b) for a in range(steps + 1) for b in range(steps + 1 - a)]


def _best_on_grid(
    x: np.ndarray, y: np.ndarray, labelled: np.ndarray, points: Iterable[tuple[int, int, int]], steps: int
) -> tuple[float, tuple[int, int, int]]:
    best_f, best_p = -1.0, None
    for p in sorted(points):  # lexicographic order: first maximum wins ties
        w = np.array(p, dtype=float) / steps
        try:
            preds = kmeans2(x @ w).predictions
        except ValueError:
            continue
        f = f_score(preds[labelled], y)["f1"]
        if f > best_f:
            best_f, best_p = f, p
    if best_p is None:
        raise FeatureError("no weight vector gives a non-degenerate combined feature")
    return best_f, best_p


def fit_combined_weights(
    normalized: np.ndarray,
    annotations: Sequence[bool | None],
    coarse_step: float = 0.05,
    fine_step: float = 0.01,
) -> tuple[CombinedWeights, float]:
    """F-score-maximizing simplex weights for the combined feature.

    Exhaustive search over a coarse simplex lattice, then over the fine
    lattice within one coarse step of the coarse winner.  Ties go to the
    lexicographically smallest weight vector.  Returns ``(weights, f1)``.
    """
    x = np.asarray(normalized, dtype=float)
    labelled = np.array([a is not None for a in annotations])
    y = np.array([bool(a) for a in annotations if a is not None])
    if len(set(y.tolist())) < 2:
        raise FeatureError("annotations must contain both emphasized and plain words")

    coarse = int(round(1.0 / coarse_step))
    fine = int(round(1.0 / fine_step))
    ratio = fine // coarse
    f_c, p_c = _best_on_grid(x, y, labelled, _simplex_points(coarse), coarse)
    centre = [v * ratio for v in p_c]
    local = [
        p for p in _simplex_points(fine) if all(abs(p[i] - centre[i]) <= ratio for i in range(3))
    ]
    f_f, p_f = _best_on_grid(x, y, labelled, local, fine)
    cand = [(f_c, tuple(v / coarse for v in p_c)), (f_f, tuple(v / fine for v in p_f))]
    best_f = max(c[0] for c in cand)
    w = min(c[1] for c in cand if c[0] == best_f)
    return CombinedWeights(w), best_f  # type: ignore[arg-type]
