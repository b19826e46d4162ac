"""Shared builders for small hand-made utterances."""

from __future__ import annotations

import numpy as np

from prosodike.datamodel import AlignedUtterance, PhoneSegment, WordSpan


def make_utt(
    word_durations,
    pitch=None,
    energy=None,
    emphasized=None,
    uid="u",
    lead_sil=0,
    tail_sil=0,
):
    """Utterance with one word per entry of ``word_durations`` (phone frame counts).

    ``lead_sil``/``tail_sil`` add silence phones of that many frames.
    Pitch defaults to a constant 120 Hz, energy to 60 dB.
    """
    phones, words = [], []
    frame = 0
    if lead_sil:
        phones.append(PhoneSegment("sil", 0, lead_sil))
        frame = lead_sil
    for wi, durs in enumerate(word_durations):
        start = len(phones)
        for d in durs:
            phones.append(PhoneSegment("aa" if len(phones) % 2 else "t", frame, int(d)))
            frame += int(d)
        emph = None if emphasized is None else emphasized[wi]
        words.append(WordSpan(f"w{wi}", start, len(phones), emph))
    if tail_sil:
        phones.append(PhoneSegment("sil", frame, tail_sil))
        frame += tail_sil
    if pitch is None:
        pitch = np.full(frame, 120.0)
    if energy is None:
        energy = np.full(frame, 60.0)
    return AlignedUtterance(uid, tuple(phones), tuple(words), pitch, energy)


def random_textgrid(rng: np.random.Generator):
    """Random interval-only document with awkward labels and float times."""
    from prosodike.ingestion import Interval, TextGridDocument, Tier

    alphabet = list('abcxyz ñé"\'#_') + ["", "sil", "ə"]
    tiers = []
    end = float(rng.uniform(0.5, 5.0))
    for t in range(int(rng.integers(1, 4))):
        n = int(rng.integers(0, 8))
        cuts = np.sort(rng.uniform(0.0, end, size=n))
        edges = np.unique(np.concatenate([[0.0], cuts, [end]]))
        ivs = []
        for a, b in zip(edges[:-1], edges[1:]):
            text = "".join(rng.choice(alphabet) for _ in range(int(rng.integers(0, 5))))
            ivs.append(Interval(float(a), float(b), text))
        tiers.append(Tier(f"tier {t} \"q\"", tuple(ivs), 0.0, end))
    return TextGridDocument(tuple(tiers), 0.0, end)


FWHM = 2.0 * np.sqrt(2.0 * np.log(2.0))


def gaussian_bump(n: int, center: float, width: float) -> np.ndarray:
    """Gaussian of full width at half maximum ``width`` frames."""
    sigma = width / FWHM
    t = np.arange(n)
    return np.exp(-0.5 * ((t - center) / sigma) ** 2)


def bump_localized(n_frames: int, center: float, width: float, cfg) -> bool:
    """Argmax of the scaleogram within one octave of ``width`` and 2 frames of ``center``."""
    from prosodike.cwt import cwt_transform

    sg = cwt_transform(gaussian_bump(n_frames, center, width), cfg.num_scales, cfg.base_scale, cfg.octave_step)
    k, f = np.unravel_index(np.argmax(sg.coefficients), sg.coefficients.shape)
    return abs(np.log2(sg.scales[k] / width)) <= 1.0 and abs(f - center) <= 2


def _percentile(values, q):
    xs = sorted(values)
    pos = (len(xs) - 1) * q / 100.0
    lo = int(pos)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - lo)


def _spread(values):
    if len(values) < 2:
        return 0.0
    return _percentile(values, 95.0) - _percentile(values, 5.0)


def brute_force_variance_features(utt):
    """Word-minus-sentence log-pitch spread and mean phone duration, flat loops."""
    import math

    word_of_frame = {}
    word_durs = []
    sent_durs = []
    for wi, w in enumerate(utt.words):
        durs = []
        for pi in range(w.phone_start, w.phone_end):
            p = utt.phones[pi]
            durs.append(p.num_frames)
            sent_durs.append(p.num_frames)
            for f in range(p.start_frame, p.start_frame + p.num_frames):
                word_of_frame[f] = wi
        word_durs.append(durs)
    sent_lp = []
    word_lp = [[] for _ in utt.words]
    for f in range(len(utt.pitch_hz)):
        hz = float(utt.pitch_hz[f])
        if hz > 0 and f in word_of_frame:
            sent_lp.append(math.log(hz))
            word_lp[word_of_frame[f]].append(math.log(hz))
    s_dur = sum(sent_durs) / len(sent_durs)
    s_f0 = _spread(sent_lp)
    pitch_var = [_spread(word_lp[i]) - s_f0 for i in range(len(utt.words))]
    dur_var = [sum(d) / len(d) - s_dur for d in word_durs]
    return pitch_var, dur_var


def normalized_corpus_features(corpus, norm_exponent=1, weights=(1 / 3, 1 / 3, 1 / 3)):
    from prosodike import emphfeat as ef

    raw = [ef.raw_features(u) for u in corpus]
    stats = ef.fit_stats(raw)
    w = ef.CombinedWeights((weights[0], weights[1], 1.0 - weights[0] - weights[1]))
    return [ef.normalize_features(f, stats, w, norm_exponent) for f in raw]


def tiny_setup(mode="wavelet", n=4, dim=8, dropout=0.0, seed=0, attention=True):
    """Small model with fitted normalization and a pinned batch of the first two utterances."""
    from prosodike.neural import model as nm
    from prosodike.neural.synth import make_synthetic_corpus

    corpus = make_synthetic_corpus(seed, n)
    feats = normalized_corpus_features(corpus)
    cfg = nm.ModelConfig(dim=dim, mode=mode, dropout=dropout, seed=seed, attention=attention)
    model = nm.PredictorModel(cfg, nm.build_vocab(corpus))
    examples = nm.make_examples(model, corpus, feats)
    nm.fit_normalization(model, examples)
    return model, corpus, feats, nm.collate(examples[:2], model.norm)


def random_utterance(rng: np.random.Generator, uid: str = "r"):
    """Random valid utterance: silences, unvoiced runs and mixed annotations."""
    n_words = int(rng.integers(1, 7))
    durs = [rng.integers(1, 21, size=int(rng.integers(1, 6))).tolist() for _ in range(n_words)]
    lead, tail = (int(v) for v in rng.integers(0, 15, size=2))
    n = lead + tail + sum(map(sum, durs))
    pitch = np.exp(rng.uniform(np.log(60.0), np.log(400.0), size=n))
    pitch[rng.random(n) < 0.25] = 0.0
    pitch[lead if lead < n else 0] = 150.0
    energy = rng.normal(55.0, 8.0, size=n)
    emphasized = [None if r < 0.2 else bool(r < 0.5) for r in rng.random(n_words)]
    return make_utt(durs, pitch, energy, emphasized, uid=uid, lead_sil=lead, tail_sil=tail)


ACCEPTANCE_LINES: list[str] = []


def verdict(criterion: int, ok: bool, detail: str) -> bool:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def info(criterion: int, detail: str) -> None:
    line = f"criterion {criterion:2d}: INFO  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
