"""Synthetic aligned corpus with one emphasized word per utterance.

Emphasis is realised the way the features expect it: phones of the focus
word are 1.4x longer, carry a rising-falling +4 semitone pitch excursion and
+2 dB of energy.  The focus word is the only word with a primary-stressed
vowel (``AA1`` etc.), so a text-side model can learn where emphasis goes.
"""

from __future__ import annotations

import numpy as np

from ..datamodel import AlignedUtterance, PhoneSegment, WordSpan

VOICELESS = ("p", "t", "k", "s", "f", "sh")
VOICED = ("b", "d", "g", "m", "n", "l", "r", "z", "v")
VOWELS = ("aa", "iy", "uw", "eh", "ah")
CONSONANTS = VOICELESS + VOICED

BASE_FRAMES = 8.0
DURATION_SIGMA = 0.25
EMPHASIS_STRETCH = 1.4
EXCURSION_ST = 4.0
EMPHASIS_DB = 2.0
DECLINATION_ST_PER_S = -2.0
JITTER_ST = 0.1
MIN_FRAMES = 100  # room for the default wavelet scales


def phone_inventory() -> list[str]:
    labels = ["sil"] + list(CONSONANTS)
    labels += [v.upper() + "0" for v in VOWELS] + [v.upper() + "1" for v in VOWELS]
    return labels


def _is_vowel(label: str) -> bool:
    return label[-1] in "01"


def _word_phones(rng: np.random.Generator, focus: bool) -> list[str]:
    n = int(rng.integers(2, 6))
    vowel_first = bool(rng.integers(0, 2))
    labels = []
    for j in range(n):
        if (j % 2 == 0) == vowel_first:
            labels.append(VOWELS[int(rng.integers(len(VOWELS)))].upper() + "0")
        else:
            labels.append(CONSONANTS[int(rng.integers(len(CONSONANTS)))])
    if focus:
        first_vowel = next(j for j, p in enumerate(labels) if _is_vowel(p))
        labels[first_vowel] = labels[first_vowel][:-1] + "1"
    return labels


def _semitones(st: np.ndarray) -> np.ndarray:
    return 2.0 ** (st / 12.0)


def make_utterance(rng: np.random.Generator, uid: str, frame_shift_ms: float = 10.0) -> AlignedUtterance:
    n_words = int(rng.integers(3, 9))
    focus = int(rng.integers(n_words))
    word_labels = [_word_phones(rng, w == focus) for w in range(n_words)]

    phones: list[PhoneSegment] = []
    words: list[WordSpan] = []
    lead = int(rng.integers(20, 31))
    phones.append(PhoneSegment("sil", 0, lead))
    frame = lead
    for w, labels in enumerate(word_labels):
        start = len(phones)
        for lab in labels:
            d = BASE_FRAMES * np.exp(DURATION_SIGMA * rng.standard_normal())
            if w == focus:
                d *= EMPHASIS_STRETCH
            n = max(1, int(round(d)))
            phones.append(PhoneSegment(lab, frame, n))
            frame += n
        text = "".join(p.rstrip("01").lower() for p in labels)
        words.append(WordSpan(text, start, len(phones), w == focus))
    trail = max(int(rng.integers(20, 31)), MIN_FRAMES - frame)
    phones.append(PhoneSegment("sil", frame, trail))
    total = frame + trail

    t = np.arange(total) * frame_shift_ms / 1000.0
    st = rng.uniform(-1.0, 1.0) + DECLINATION_ST_PER_S * t + JITTER_ST * rng.standard_normal(total)
    energy = np.empty(total)
    voiced = np.ones(total, dtype=bool)
    for p in phones:
        sl = slice(p.start_frame, p.end_frame)
        if p.label == "sil":
            energy[sl] = 30.0
            voiced[sl] = False
        elif p.label in VOICELESS:
            energy[sl] = 56.0
            voiced[sl] = False
        elif _is_vowel(p.label):
            energy[sl] = 66.0
        else:
            energy[sl] = 60.0
    for w, span in enumerate(words):
        a = phones[span.phone_start].start_frame
        b = phones[span.phone_end - 1].end_frame
        if w == focus:
            st[a:b] += EXCURSION_ST * np.sin(np.pi * (np.arange(b - a) + 0.5) / (b - a))
            energy[a:b] += EMPHASIS_DB
    energy += 0.5 * rng.standard_normal(total)
    pitch = np.where(voiced, 120.0 * _semitones(st), 0.0)
    return AlignedUtterance(
        id=uid,
        phones=tuple(phones),
        words=tuple(words),
        pitch_hz=pitch,
        energy_db=energy,
        frame_shift_ms=frame_shift_ms,
    )


def make_synthetic_corpus(seed: int, n_utterances: int) -> list[AlignedUtterance]:
    if n_utterances < 1:
        raise ValueError("n_utterances must be >= 1")
    rng = np.random.default_rng(seed)
    return [make_utterance(rng, f"synth-{seed}-{i:05d}") for i in range(n_utterances)]
