"""Binary emphasis detection: 2-means quantization, F-score and the tuner."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from . import cwt
from .datamodel import AlignedUtterance


class DegenerateValuesError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DetectorResult:
    predictions: np.ndarray
    centroids: tuple[float, float]
    threshold: float


def kmeans2(values: Sequence[float]) -> DetectorResult:
    """1-D k-means with two clusters, started from the 5th/95th percentiles.

    Runs Lloyd steps until the partition stops changing.  Works on the sorted
    values, so the result does not depend on input order.
    """
    x = np.asarray(values, dtype=float).reshape(-1)
    if len(x) < 2 or x.min() == x.max():
        raise DegenerateValuesError("need at least two distinct values")
    s = np.sort(x)
    csum = np.concatenate([[0.0], np.cumsum(s)])
    lo, hi = np.percentile(s, [5.0, 95.0])
    if lo == hi:
        lo, hi = s[0], s[-1]
    k = -1
    while True:
        thr = (lo + hi) / 2.0
        k_new = int(np.searchsorted(s, thr, side="left"))
        if k_new == k:
            break
        k = k_new
        lo = csum[k] / k
        hi = (csum[-1] - csum[k]) / (len(s) - k)
    return DetectorResult(x >= thr, (float(lo), float(hi)), float(thr))


def f_score(predictions: Sequence[bool], annotations: Sequence[bool]) -> dict[str, float]:
    p = np.asarray(predictions, dtype=bool)
    a = np.asarray(annotations, dtype=bool)
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.shape[0]} predictions vs {a.shape[0]} annotations")
    tp = int(np.sum(p & a))
    fp = int(np.sum(p & ~a))
    fn = int(np.sum(~p & a))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def detect(values: Sequence[float], annotations: Sequence[bool | None]) -> tuple[DetectorResult, dict[str, float]]:
    """Quantize all values, score against the labelled subset."""
    res = kmeans2(values)
    labelled = np.array([a is not None for a in annotations])
    truth = np.array([bool(a) for a in annotations if a is not None])
    return res, f_score(res.predictions[labelled], truth)


# ---------------------------------------------------------------------------
# hyper-parameter tuner for the wavelet feature
# ---------------------------------------------------------------------------


def simplex_grid(step: float) -> list[tuple[float, float, float]]:
    """Simplex lattice, pitch-heavy corners first."""
    n = int(round(1.0 / step))
    pts = []
    for a in range(n, -1, -1):
        for b in range(n - a, -1, -1):
            pts.append((a / n, b / n, (n - a - b) / n))
    return pts


@dataclass(frozen=True)
class TuneGrid:
    weights: tuple[tuple[float, float, float], ...] = tuple(simplex_grid(0.25))
    num_scales: tuple[int, ...] = (6, 10)
    smoothing: tuple[int, ...] = (3, 5, 9)
    aggregation: tuple[str, ...] = ("max", "sum")
    base_scale: float = 4.0
    octave_step: float = 0.5

    def configs(self) -> list[cwt.CwtConfig]:
        out = []
        for w, ns, sm, agg in itertools.product(self.weights, self.num_scales, self.smoothing, self.aggregation):
            out.append(cwt.CwtConfig(tuple(w), ns, self.base_scale, self.octave_step, sm, agg))
        return out

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["weights"] = [list(w) for w in self.weights]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TuneGrid":
        d = dict(d)
        if "weights_step" in d:
            d["weights"] = simplex_grid(float(d.pop("weights_step")))
        if "weights" in d:
            d["weights"] = tuple(tuple(float(v) for v in w) for w in d["weights"])
        for key in ("num_scales", "smoothing", "aggregation"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def config_to_dict(cfg: cwt.CwtConfig) -> dict[str, Any]:
    d = asdict(cfg)
    d["weights"] = list(cfg.weights)
    return d


@dataclass
class TuneReport:
    rows: list[dict[str, Any]] = field(default_factory=list)  # {"config": ..., "f1": ...}
    best_index: int = -1

    @property
    def best_config(self) -> cwt.CwtConfig:
        c = dict(self.rows[self.best_index]["config"])
        c["weights"] = tuple(c["weights"])
        return cwt.CwtConfig(**c)

    @property
    def best_f1(self) -> float:
        return float(self.rows[self.best_index]["f1"])

    def to_dict(self, config_hash: str = "") -> dict[str, Any]:
        return {
            "config_hash": config_hash,
            "best_index": self.best_index,
            "best_config": self.rows[self.best_index]["config"],
            "best_f1": self.best_f1,
            "grid": self.rows,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TuneReport":
        return cls(rows=list(d["grid"]), best_index=int(d["best_index"]))


class _UtteranceCache:
    """Per-utterance stream scaleograms; the transform is linear, so any
    composite weighting is a weighted sum of these."""

    def __init__(self, utt: AlignedUtterance, grid: TuneGrid):
        n_scales = max(grid.num_scales)

        def sg(x: np.ndarray) -> np.ndarray:
            return cwt.cwt_transform(x, n_scales, grid.base_scale, grid.octave_step).coefficients

        self.utt = utt
        self.scales = cwt.scale_widths(n_scales, grid.base_scale, grid.octave_step)
        self.pitch = sg(cwt.pitch_stream(utt))
        self.energy = sg(cwt.energy_stream(utt))
        self.duration = {m: sg(cwt.duration_stream(utt, m)) for m in grid.smoothing}


def tune(corpus: Sequence[AlignedUtterance], grid: TuneGrid = TuneGrid()) -> TuneReport:
    """Exhaustive search for the wavelet configuration with the best F1.

    Every configuration quantizes the per-word prominence of the whole
    corpus with :func:`kmeans2` and is scored on the annotated words.
    Ties keep the earlier grid position.
    """
    annotations = [w.emphasized for u in corpus for w in u.words]
    truth = [a for a in annotations if a is not None]
    if len(set(truth)) < 2:
        raise ValueError("annotations must contain both emphasized and plain words")
    configs = grid.configs()
    caches = [_UtteranceCache(u, grid) for u in corpus]

    # values[(weights, smoothing)][(num_scales, aggregation)] -> per-word values
    values: dict[tuple, dict[tuple, list[np.ndarray]]] = {}
    for w in grid.weights:
        for sm in grid.smoothing:
            per = {(ns, agg): [] for ns in grid.num_scales for agg in grid.aggregation}
            for c in caches:
                coef = w[0] * c.pitch + w[1] * c.energy + w[2] * c.duration[sm]
                frames, vals = cwt.trace_lines(cwt.Scaleogram(coef, c.scales))
                for ns, agg in per:
                    per[(ns, agg)].append(cwt.word_prominence_from_trace(frames, vals, c.utt, ns, agg))
            values[(tuple(w), sm)] = per

    report = TuneReport()
    best = -1.0
    for i, cfg in enumerate(configs):
        v = np.concatenate(values[(cfg.weights, cfg.smoothing)][(cfg.num_scales, cfg.aggregation)])
        try:
            _, scores = detect(v, annotations)
            f1 = scores["f1"]
        except DegenerateValuesError:
            f1 = 0.0
        report.rows.append({"config": config_to_dict(cfg), "f1": f1})
        if f1 > best:
            best = f1
            report.best_index = i
    return report
