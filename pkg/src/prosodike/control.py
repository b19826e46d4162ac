"""Inference-time emphasis control and the before/after delta analysis.

A directive adds a bias to the predicted emphasis of every phone in the
chosen words.  :func:`analyze_deltas` measures how the predicted pitch,
energy and duration of those phones move, per bias level.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .datamodel import AlignedUtterance, WordSpan
from .neural.model import PredictorModel, infer

DEFAULT_BIASES = (-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0)
DELTA_STREAMS = ("pitch", "energy", "duration")
CSV_COLUMNS = ("bias", "stream", "delta_mean", "delta_std", "n_words")


class DirectiveError(ValueError):
    pass


@dataclass(frozen=True)
class EmphasisDirective:
    word_indices: tuple[int, ...]
    bias: float | tuple[float, ...] = 0.0  # scalar, or one value per emphasis feature

    def __post_init__(self) -> None:
        object.__setattr__(self, "word_indices", tuple(int(i) for i in self.word_indices))
        b = self.bias
        if isinstance(b, (list, tuple, np.ndarray)):
            object.__setattr__(self, "bias", tuple(float(x) for x in b))
        else:
            object.__setattr__(self, "bias", float(b))

    def bias_vector(self, dim: int) -> np.ndarray:
        if isinstance(self.bias, tuple):
            if len(self.bias) != dim:
                raise DirectiveError(f"bias has {len(self.bias)} values but emphasis has {dim} feature(s)")
            return np.array(self.bias)
        return np.full(dim, self.bias)


def apply_bias(emphasis: np.ndarray, words: Sequence[WordSpan], directive: EmphasisDirective) -> np.ndarray:
    """Add the directive's bias to every phone of the listed words.

    A scalar bias moves every emphasis feature by the same amount.
    """
    e = np.asarray(emphasis, dtype=float)
    squeeze = e.ndim == 1
    out = (e[:, None] if squeeze else e).copy()
    b = directive.bias_vector(out.shape[1])
    for i in directive.word_indices:
        if not 0 <= i < len(words):
            raise DirectiveError(f"word index {i} out of range for {len(words)} words")
        w = words[i]
        out[w.phone_start:w.phone_end] += b
    return out[:, 0] if squeeze else out


@dataclass(frozen=True)
class DeltaRow:
    bias: float
    stream: str
    delta_mean: float
    delta_std: float
    n_words: int


@dataclass(frozen=True)
class DeltaReport:
    bias: float
    rows: tuple[DeltaRow, ...]

    def row(self, stream: str) -> DeltaRow:
        return next(r for r in self.rows if r.stream == stream)


TARGET_POLICIES = ("neutral", "annotated")


def target_words(utt: AlignedUtterance, policy: str = "neutral") -> list[int]:
    """Words a directive is aimed at during the delta analysis.

    ``neutral``: the word closest to the middle among those not annotated as
    emphasized (earlier word on ties), i.e. a word the model should render
    plainly.  ``annotated``: the annotated emphasized words.  Either policy
    falls back to the middle word when nothing qualifies.
    """
    if policy not in TARGET_POLICIES:
        raise DirectiveError(f"target policy must be one of {TARGET_POLICIES}")
    n = len(utt.words)
    if policy == "annotated":
        marked = [i for i, w in enumerate(utt.words) if w.emphasized]
        return marked if marked else [n // 2]
    plain = [i for i, w in enumerate(utt.words) if not w.emphasized]
    if not plain:
        return [n // 2]
    mid = (n - 1) / 2.0
    return [min(plain, key=lambda i: (abs(i - mid), i))]


def _streams(result) -> dict[str, np.ndarray]:
    return {"pitch": result.pitch_hz, "energy": result.energy_db, "duration": result.duration}


def analyze_deltas(
    model: PredictorModel,
    corpus: Sequence[AlignedUtterance],
    biases: Iterable[float] = DEFAULT_BIASES,
    target: str = "neutral",
) -> list[DeltaReport]:
    """Per bias, corpus-averaged change of mean and std over the biased phones.

    Streams are pitch in Hz, energy in dB and continuous duration in frames.
    """
    biases = [float(b) for b in biases]
    sums = {b: {s: np.zeros(2) for s in DELTA_STREAMS} for b in biases}
    n_words = 0
    n_utts = 0
    for utt in corpus:
        if not utt.words:
            continue
        idx = target_words(utt, target)
        ids = model.encode_labels([p.label for p in utt.phones])
        phones = np.concatenate([np.arange(utt.words[i].phone_start, utt.words[i].phone_end) for i in idx])
        before = _streams(infer(ids, model))
        n_words += len(idx)
        n_utts += 1
        for b in biases:
            after = _streams(infer(ids, model, utt.words, EmphasisDirective(idx, b)))
            for s in DELTA_STREAMS:
                x0, x1 = before[s][phones], after[s][phones]
                sums[b][s] += (x1.mean() - x0.mean(), x1.std() - x0.std())
    reports = []
    for b in biases:
        rows = []
        for s in DELTA_STREAMS:
            dm, ds = sums[b][s] / max(n_utts, 1)
            rows.append(DeltaRow(b, s, float(dm), float(ds), n_words))
        reports.append(DeltaReport(b, tuple(rows)))
    return reports


def deltas_csv(reports: Sequence[DeltaReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        for r in rep.rows:
            w.writerow([repr(r.bias), r.stream, repr(r.delta_mean), repr(r.delta_std), r.n_words])
    return buf.getvalue()


def read_deltas_csv(text: str) -> list[DeltaReport]:
    by_bias: dict[float, list[DeltaRow]] = {}
    for rec in csv.DictReader(io.StringIO(text)):
        b = float(rec["bias"])
        by_bias.setdefault(b, []).append(
            DeltaRow(b, rec["stream"], float(rec["delta_mean"]), float(rec["delta_std"]), int(rec["n_words"]))
        )
    return [DeltaReport(b, tuple(rows)) for b, rows in by_bias.items()]
