"""Core corpus records shared by every stage of the toolkit.

All time quantities live on one frame grid (10 ms by default).  Unvoiced
pitch frames are stored as ``0.0`` in ``pitch_hz``; there is no separate
voicing mask.  Phones labelled ``sil`` (or ``sp``) may sit outside every
word span; all other phones must belong to exactly one word.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

SILENCE_LABELS = frozenset({"sil", "sp"})
MIN_VOICED_HZ = 40.0
MAX_VOICED_HZ = 800.0


class CorpusFormatError(ValueError):
    """A corpus record could not be decoded."""


@dataclass(frozen=True)
class PhoneSegment:
    label: str
    start_frame: int
    num_frames: int

    @property
    def end_frame(self) -> int:
        return self.start_frame + self.num_frames


@dataclass(frozen=True)
class WordSpan:
    text: str
    phone_start: int
    phone_end: int
    emphasized: bool | None = None


def _frozen_array(values: Any) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class AlignedUtterance:
    """One utterance: phone/word alignment plus per-frame pitch and energy."""

    id: str
    phones: tuple[PhoneSegment, ...]
    words: tuple[WordSpan, ...]
    pitch_hz: np.ndarray
    energy_db: np.ndarray
    sample_rate_hz: int = 24000
    frame_shift_ms: float = 10.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "phones", tuple(self.phones))
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "pitch_hz", _frozen_array(self.pitch_hz))
        object.__setattr__(self, "energy_db", _frozen_array(self.energy_db))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AlignedUtterance):
            return NotImplemented
        return (
            self.id == other.id
            and self.sample_rate_hz == other.sample_rate_hz
            and self.frame_shift_ms == other.frame_shift_ms
            and self.phones == other.phones
            and self.words == other.words
            and np.array_equal(self.pitch_hz, other.pitch_hz)
            and np.array_equal(self.energy_db, other.energy_db)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def num_frames(self) -> int:
        """Frames covered by the phone segments."""
        if not self.phones:
            return 0
        return self.phones[-1].end_frame

    def phone_durations(self) -> np.ndarray:
        return np.array([p.num_frames for p in self.phones], dtype=float)

    def word_frame_span(self, word_index: int) -> tuple[int, int]:
        w = self.words[word_index]
        return self.phones[w.phone_start].start_frame, self.phones[w.phone_end - 1].end_frame

    def word_of_phone(self) -> np.ndarray:
        """Word index for every phone, ``-1`` for phones outside all words."""
        owner = np.full(len(self.phones), -1, dtype=int)
        for i, w in enumerate(self.words):
            owner[w.phone_start:w.phone_end] = i
        return owner

    def word_of_frame(self) -> np.ndarray:
        """Word index for every frame of ``pitch_hz``, ``-1`` outside words."""
        owner = np.full(len(self.pitch_hz), -1, dtype=int)
        for i in range(len(self.words)):
            a, b = self.word_frame_span(i)
            owner[a:b] = i
        return owner

    @cached_property
    def frame_owner(self) -> np.ndarray:
        """Cached, read-only :meth:`word_of_frame`."""
        owner = self.word_of_frame()
        owner.flags.writeable = False
        return owner

    def annotations(self) -> list[bool | None]:
        return [w.emphasized for w in self.words]

    def replace(self, **changes: Any) -> "AlignedUtterance":
        fields = dict(
            id=self.id,
            phones=self.phones,
            words=self.words,
            pitch_hz=self.pitch_hz,
            energy_db=self.energy_db,
            sample_rate_hz=self.sample_rate_hz,
            frame_shift_ms=self.frame_shift_ms,
        )
        fields.update(changes)
        return AlignedUtterance(**fields)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "sample_rate_hz": self.sample_rate_hz,
            "frame_shift_ms": self.frame_shift_ms,
            "phones": [
                {"label": p.label, "start_frame": p.start_frame, "num_frames": p.num_frames}
                for p in self.phones
            ],
            "words": [
                {
                    "text": w.text,
                    "phone_start": w.phone_start,
                    "phone_end": w.phone_end,
                    "emphasized": w.emphasized,
                }
                for w in self.words
            ],
            "pitch_hz": [float(v) for v in self.pitch_hz],
            "energy_db": [float(v) for v in self.energy_db],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AlignedUtterance":
        try:
            phones = tuple(
                PhoneSegment(str(p["label"]), int(p["start_frame"]), int(p["num_frames"]))
                for p in data["phones"]
            )
            words = tuple(
                WordSpan(
                    str(w["text"]),
                    int(w["phone_start"]),
                    int(w["phone_end"]),
                    None if w.get("emphasized") is None else bool(w["emphasized"]),
                )
                for w in data["words"]
            )
            return cls(
                id=str(data["id"]),
                phones=phones,
                words=words,
                pitch_hz=data["pitch_hz"],
                energy_db=data["energy_db"],
                sample_rate_hz=int(data.get("sample_rate_hz", 24000)),
                frame_shift_ms=float(data.get("frame_shift_ms", 10.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"bad utterance record: {exc!r}") from exc


def serialize(utt: AlignedUtterance) -> str:
    """One JSON line (no trailing newline)."""
    return json.dumps(utt.to_dict(), ensure_ascii=False, allow_nan=False)


def parse(line: str) -> AlignedUtterance:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(str(exc)) from exc
    if not isinstance(data, dict):
        raise CorpusFormatError("utterance record must be a JSON object")
    return AlignedUtterance.from_dict(data)


def dumps_corpus(corpus: Iterable[AlignedUtterance]) -> str:
    return "".join(serialize(u) + "\n" for u in corpus)


def loads_corpus(text: str) -> list[AlignedUtterance]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(parse(line))
        except CorpusFormatError as exc:
            raise CorpusFormatError(f"line {lineno}: {exc}") from exc
    return out


def read_corpus(path: str | Path) -> list[AlignedUtterance]:
    return loads_corpus(Path(path).read_text(encoding="utf-8"))


def write_corpus(path: str | Path, corpus: Iterable[AlignedUtterance]) -> None:
    Path(path).write_text(dumps_corpus(corpus), encoding="utf-8")


def iter_annotated_words(corpus: Sequence[AlignedUtterance]) -> Iterator[tuple[int, int, bool]]:
    """Yield ``(utterance index, word index, label)`` for labelled words only."""
    for ui, utt in enumerate(corpus):
        for wi, w in enumerate(utt.words):
            if w.emphasized is not None:
                yield ui, wi, w.emphasized


def validate(utt: Any) -> list[str]:
    """Return a list of invariant violations; empty when the record is sound.

    Never raises, whatever ``utt`` is.
    """
    try:
        return _validate(utt)
    except Exception as exc:  # noqa: BLE001 - validation is total by contract
        return [f"record: unreadable ({exc!r})"]


def _get(obj: Any, name: str) -> Any:
    if isinstance(obj, Mapping):
        return obj[name]
    return getattr(obj, name)


def _validate(utt: Any) -> list[str]:
    problems: list[str] = []
    if isinstance(utt, Mapping):
        try:
            utt = AlignedUtterance.from_dict(utt)
        except CorpusFormatError as exc:
            return [f"record: {exc}"]
    for name in ("phones", "words", "pitch_hz", "energy_db", "frame_shift_ms"):
        try:
            _get(utt, name)
        except (KeyError, AttributeError):
            problems.append(f"{name}: missing")
    if problems:
        return problems

    shift = _get(utt, "frame_shift_ms")
    if not isinstance(shift, (int, float)) or not shift > 0:
        problems.append(f"frame_shift_ms: must be > 0, got {shift!r}")

    phones = list(_get(utt, "phones"))
    expected_start = None
    for i, p in enumerate(phones):
        try:
            start, n = int(p.start_frame), int(p.num_frames)
        except Exception:  # noqa: BLE001
            problems.append(f"phones[{i}]: malformed segment {p!r}")
            expected_start = None
            continue
        if n < 1:
            problems.append(f"phones[{i}].num_frames: must be >= 1, got {n}")
        if i == 0 and start < 0:
            problems.append(f"phones[0].start_frame: must be >= 0, got {start}")
        if expected_start is not None and start != expected_start:
            problems.append(
                f"phones[{i}].start_frame: expected {expected_start} (contiguity), got {start}"
            )
        expected_start = start + n
    total = expected_start if expected_start is not None else 0

    words = list(_get(utt, "words"))
    covered = [False] * len(phones)
    prev_end = 0
    for i, w in enumerate(words):
        try:
            a, b = int(w.phone_start), int(w.phone_end)
        except Exception:  # noqa: BLE001
            problems.append(f"words[{i}]: malformed span {w!r}")
            continue
        if not a < b:
            problems.append(f"words[{i}]: phone_start {a} must be < phone_end {b}")
            continue
        if a < 0 or b > len(phones):
            problems.append(f"words[{i}]: phones {a}..{b - 1} outside phone list of {len(phones)}")
            continue
        if a < prev_end:
            problems.append(f"words[{i}]: overlaps previous word at phones {a}..{prev_end - 1}")
        prev_end = max(prev_end, b)
        for j in range(a, b):
            covered[j] = True
        emph = getattr(w, "emphasized", None)
        if emph is not None and not isinstance(emph, (bool, np.bool_)):
            problems.append(f"words[{i}].emphasized: must be true, false or absent")

    j = 0
    while j < len(phones):
        if covered[j] or getattr(phones[j], "label", None) in SILENCE_LABELS:
            j += 1
            continue
        k = j
        while k + 1 < len(phones) and not covered[k + 1] and phones[k + 1].label not in SILENCE_LABELS:
            k += 1
        problems.append(f"words: phones {j}..{k} not covered by any word")
        j = k + 1

    pitch = np.asarray(_get(utt, "pitch_hz"), dtype=float).reshape(-1)
    energy = np.asarray(_get(utt, "energy_db"), dtype=float).reshape(-1)
    short = False
    for name, arr in (("pitch_hz", pitch), ("energy_db", energy)):
        if len(arr) < total:
            problems.append(f"{name}: length {len(arr)} < {total} frames covered by phones")
            short = True
    if not short and len(pitch) != len(energy):
        problems.append(f"pitch_hz/energy_db: lengths differ ({len(pitch)} vs {len(energy)})")
    for i, v in enumerate(pitch):
        if not math.isfinite(v):
            problems.append(f"pitch_hz[{i}]: not finite")
        elif v != 0.0 and not (MIN_VOICED_HZ < v < MAX_VOICED_HZ):
            problems.append(f"pitch_hz[{i}]: voiced value {v} outside ({MIN_VOICED_HZ}, {MAX_VOICED_HZ})")
    for i, v in enumerate(energy):
        if not math.isfinite(v):
            problems.append(f"energy_db[{i}]: not finite")
    return problems


@dataclass(frozen=True)
class WordFeatures:
    pitch_var: float
    dur_var: float
    wavelet: float
    combined: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {
            "pitch_var": self.pitch_var,
            "dur_var": self.dur_var,
            "wavelet": self.wavelet,
            "combined": self.combined,
        }


@dataclass(frozen=True)
class EmphasisFeatures:
    """Per-word emphasis features of one utterance."""

    utterance_id: str
    per_word: tuple[WordFeatures, ...]
    raw: bool = True

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(w, name) for w in self.per_word], dtype=float)

    def to_dict(self) -> dict[str, Any]:
        return {
            "utterance_id": self.utterance_id,
            "raw": self.raw,
            "per_word": [w.as_dict() for w in self.per_word],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EmphasisFeatures":
        return cls(
            utterance_id=str(data["utterance_id"]),
            per_word=tuple(
                WordFeatures(
                    float(w["pitch_var"]),
                    float(w["dur_var"]),
                    float(w["wavelet"]),
                    float(w.get("combined", 0.0)),
                )
                for w in data["per_word"]
            ),
            raw=bool(data.get("raw", False)),
        )


FEATURE_NAMES = ("pitch_var", "dur_var", "wavelet")


@dataclass(frozen=True)
class FeatureStats:
    """Corpus statistics of the raw word features (population moments)."""

    means: dict[str, float]
    variances: dict[str, float]
    corpus_size: int
    config_hash: str = ""

    def __post_init__(self) -> None:
        if self.corpus_size < 1:
            raise ValueError("corpus_size must be >= 1")
        for name, v in self.variances.items():
            if v < 0:
                raise ValueError(f"variance of {name} is negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "means": dict(self.means),
            "variances": dict(self.variances),
            "corpus_size": self.corpus_size,
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FeatureStats":
        return cls(
            means={k: float(v) for k, v in data["means"].items()},
            variances={k: float(v) for k, v in data["variances"].items()},
            corpus_size=int(data["corpus_size"]),
            config_hash=str(data.get("config_hash", "")),
        )


__all__ = [
    "AlignedUtterance",
    "CorpusFormatError",
    "EmphasisFeatures",
    "FEATURE_NAMES",
    "FeatureStats",
    "PhoneSegment",
    "SILENCE_LABELS",
    "WordFeatures",
    "WordSpan",
    "dumps_corpus",
    "iter_annotated_words",
    "loads_corpus",
    "parse",
    "read_corpus",
    "serialize",
    "validate",
    "write_corpus",
]
