"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line (plus INFO lines for context); the
lines are repeated in the terminal summary under "acceptance criteria".
"""

import time

import numpy as np
import pytest

from prosodike import control as ctl
from prosodike import cwt, datamodel as dm, detector, emphfeat as ef
from prosodike.ingestion import parse_textgrid, serialize_textgrid
from prosodike.neural import gradcheck as gc
from prosodike.neural import model as nm
from prosodike.neural.synth import make_synthetic_corpus

from helpers import (
    brute_force_variance_features,
    bump_localized,
    gaussian_bump,
    info,
    make_utt,
    normalized_corpus_features,
    random_textgrid,
    random_utterance,
    tiny_setup,
    verdict,
)

pytestmark = pytest.mark.slow

SYNTH_SEED = 0
SYNTH_SIZE = 1000
TRAIN_SIZE = 800
STEPS = 2000
BIASES = (-0.5, 0.0, 0.5, 1.0)


@pytest.fixture(scope="module")
def corpus():
    return make_synthetic_corpus(SYNTH_SEED, SYNTH_SIZE)


@pytest.fixture(scope="module")
def features(corpus):
    return normalized_corpus_features(corpus, norm_exponent=1)


@pytest.fixture(scope="module")
def wavelet_runs(corpus, features):
    cfg = nm.ModelConfig(mode="wavelet", steps=STEPS, seed=SYNTH_SEED)
    runs, seconds = [], []
    for _ in range(2):
        t0 = time.perf_counter()
        runs.append(nm.train(corpus[:TRAIN_SIZE], features[:TRAIN_SIZE], cfg))
        seconds.append(time.perf_counter() - t0)
    return runs, seconds


@pytest.fixture(scope="module")
def variance_model(corpus, features):
    cfg = nm.ModelConfig(mode="variance", steps=STEPS, seed=SYNTH_SEED)
    return nm.train(corpus[:TRAIN_SIZE], features[:TRAIN_SIZE], cfg)[0]


def test_criterion_01_variance_feature_oracle():
    rng = np.random.default_rng(1)
    utts = [random_utterance(rng, f"r{i}") for i in range(200)]
    t0 = time.perf_counter()
    ours = [ef.variance_features(u) for u in utts]
    elapsed = time.perf_counter() - t0
    worst, ok = 0.0, True
    for u, (pv, dv) in zip(utts, ours):
        bp, bd = brute_force_variance_features(u)
        for a, b in ((pv, bp), (dv, bd)):
            b = np.asarray(b)
            ok &= bool(np.allclose(a, b, rtol=1e-9, atol=1e-12))
            big = np.abs(b) > 1e-9
            if big.any():
                worst = max(worst, float(np.max(np.abs(a[big] - b[big]) / np.abs(b[big]))))
    ok &= elapsed < 5.0
    assert verdict(1, ok, f"200 utterances, max rel err {worst:.2e}, {elapsed:.2f} s")


def test_criterion_02_normalization_endpoints():
    errs = []
    for var in (0.013, 1.0, 7.5, 240.0):
        raw = np.array([-3 * var ** 2, 0.0, 3 * var ** 2])
        out = ef.normalize(raw, var ** 2, norm_exponent=2)
        errs.append(float(np.max(np.abs(out - [-1.0, 0.0, 1.0]))))
    assert verdict(2, max(errs) <= 1e-12, f"max endpoint error {max(errs):.1e}")


def test_criterion_03_cwt_properties():
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal(400), rng.standard_normal(400)
    a, b = 2.5, -0.75
    lhs = cwt.cwt_transform(a * x + b * y).coefficients
    rhs = a * cwt.cwt_transform(x).coefficients + b * cwt.cwt_transform(y).coefficients
    lin = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
    zero = not np.any(cwt.cwt_transform(np.zeros(400)).coefficients)
    cfg = cwt.CwtConfig()
    hits = 0
    for _ in range(50):
        width = float(rng.uniform(6.0, 40.0))
        center = float(rng.uniform(100.0, 300.0))
        hits += bump_localized(400, center, width, cfg)
    ok = lin <= 1e-9 and zero and hits >= 0.95 * 50
    assert verdict(3, ok, f"linearity rel err {lin:.1e}, zero->zero {zero}, bumps localized {hits}/50")


def test_criterion_04_loma_word_attribution():
    x = gaussian_bump(600, 200.0, 12.0) + gaussian_bump(600, 399.0, 12.0)
    lines = cwt.extract_loma(cwt.cwt_transform(x))
    s = sorted(ln.strength for ln in lines)
    sym = len(s) == 2 and abs(s[0] - s[1]) <= 1e-6 * abs(s[1])
    rel = abs(s[-1] - s[0]) / abs(s[-1])
    rng = np.random.default_rng(4)
    correct = 0
    for _ in range(200):
        n_words = int(rng.integers(2, 7))
        durs = [rng.integers(4, 13, size=int(rng.integers(2, 5))).tolist() for _ in range(n_words)]
        utt = make_utt(durs, lead_sil=60, tail_sil=60)
        target = int(rng.integers(n_words))
        w = utt.words[target]
        start = utt.phones[w.phone_start].start_frame
        end = utt.phones[w.phone_end - 1].end_frame
        center = float(rng.uniform(start + 0.25 * (end - start), end - 0.25 * (end - start)))
        width = float(rng.uniform(0.3, 1.0) * (end - start))
        prom = cwt.word_prominence(cwt.extract_loma(cwt.cwt_transform(gaussian_bump(utt.num_frames, center, width))), utt)
        correct += int(np.argmax(prom)) == target and prom[target] > 0
    ok = sym and correct >= 0.95 * 200
    assert verdict(4, ok, f"two-bump strength rel diff {rel:.1e}, attribution {correct}/200")


def test_criterion_05_detector(corpus):
    t0 = time.perf_counter()
    report = detector.tune(corpus)
    best = report.best_config
    raw = [ef.raw_features(u, best) for u in corpus]
    stats = ef.fit_stats(raw)
    annotations = [w.emphasized for u in corpus for w in u.words]
    f_var = {}
    for p in (1, 2):
        m = np.concatenate([ef.normalized_matrix(f, stats, p) for f in raw])
        f_var[p] = detector.detect(ef.variance_score(m), annotations)[1]["f1"]
    m = np.concatenate([ef.normalized_matrix(f, stats, 1) for f in raw])
    weights, f_comb = ef.fit_combined_weights(m, annotations)
    elapsed = time.perf_counter() - t0
    w = np.array(weights.w)
    simplex = abs(w.sum() - 1.0) <= 1e-9 and bool(np.all(w >= 0))
    f_wav = report.best_f1
    info(5, f"tuned wavelet {detector.config_to_dict(best)}")
    info(5, f"variance F1 with the squared-spread mapping {f_var[2]:.3f}")
    checks = {
        "wavelet": f_wav >= 0.90,
        "variance": f_var[1] >= 0.90,
        "combined": simplex and f_comb >= max(f_wav, f_var[1]) - 0.02,
        "runtime": elapsed < 120.0,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (f"wavelet F1 {f_wav:.3f}, variance F1 {f_var[1]:.3f}, combined F1 {f_comb:.3f} "
              f"w={tuple(round(float(v), 2) for v in w)}, {elapsed:.1f} s" + (f"; failed: {', '.join(failed)}" if failed else ""))
    assert verdict(5, not failed, detail)


def test_criterion_06_gradients():
    layers = gc.check_all_layers(seed=0)
    worst_layer = max(e for errs in layers.values() for e in errs.values())
    model, _, _, batch = tiny_setup("combined", dim=8)
    check = gc.check_model(model, batch)
    checked = sum(p.size - check.skipped[k] for k, p in model.parameters().items())
    total = sum(p.size for p in model.parameters().values())
    info(6, f"full model: {checked}/{total} entries away from ReLU kinks compared")
    ok = worst_layer <= 1e-4 and check.max_error <= 1e-4
    assert verdict(6, ok, f"layer max rel err {worst_layer:.1e}, full model max rel err {check.max_error:.1e}")


def test_criterion_07_toy_training(wavelet_runs):
    (ma, ha), (mb, hb) = wavelet_runs[0]
    seconds = wavelet_runs[1]
    first = ha[0]["total"]
    late = float(np.mean([h["total"] for h in ha[-50:]]))
    identical = ma.to_json() == mb.to_json() and ha == hb
    ok = late <= 0.5 * first and identical and max(seconds) < 600
    assert verdict(7, ok, f"loss {first:.3f} -> {late:.3f} over {STEPS} steps, "
                          f"checkpoints identical {identical}, {max(seconds):.0f} s per run")


def test_criterion_08_fig2_directions(corpus, wavelet_runs, variance_model):
    held_out = corpus[TRAIN_SIZE:]
    wav = {r.bias: r for r in ctl.analyze_deltas(wavelet_runs[0][0][0], held_out, BIASES)}
    var = {r.bias: r for r in ctl.analyze_deltas(variance_model, held_out, BIASES)}
    for name, reps in (("wavelet", wav), ("variance", var)):
        for b in BIASES:
            row = "  ".join(f"{s} {reps[b].row(s).delta_mean:+.3f}/{reps[b].row(s).delta_std:+.3f}" for s in ctl.DELTA_STREAMS)
            info(8, f"{name} bias {b:+.1f}: {row}")
    mono = all(
        np.all(np.diff([wav[b].row(s).delta_mean for b in BIASES]) >= 0) for s in ("pitch", "duration")
    )
    zero = all(wav[0.0].row(s).delta_mean == 0.0 == wav[0.0].row(s).delta_std for s in ctl.DELTA_STREAMS)
    dsd_var, dsd_wav = var[1.0].row("duration").delta_std, wav[1.0].row("duration").delta_std
    ok = bool(mono) and zero and dsd_var > dsd_wav
    assert verdict(8, ok, f"monotone pitch/duration means {mono}, zero row exact {zero}, "
                          f"duration std delta at +1.0 variance {dsd_var:+.3f} vs wavelet {dsd_wav:+.3f}")


def test_criterion_09_locality(corpus, wavelet_runs, variance_model):
    rng = np.random.default_rng(9)
    cases = bad = 0
    for model in (wavelet_runs[0][0][0], variance_model):
        for utt in corpus[TRAIN_SIZE:TRAIN_SIZE + 60]:
            ids = model.encode_labels([p.label for p in utt.phones])
            base = nm.infer(ids, model)
            k = int(rng.integers(1, len(utt.words) + 1))
            targets = sorted(rng.choice(len(utt.words), size=k, replace=False).tolist())
            bias = float(rng.uniform(-2.0, 2.0))
            out = nm.infer(ids, model, utt.words, ctl.EmphasisDirective(targets, bias))
            touched = np.zeros(len(utt.phones), dtype=bool)
            for i in targets:
                touched[utt.words[i].phone_start:utt.words[i].phone_end] = True
            for field in ("log_duration", "log_pitch", "energy_db"):
                a, b = getattr(base, field)[~touched], getattr(out, field)[~touched]
                bad += a.tobytes() != b.tobytes()
            cases += 1
    assert verdict(9, bad == 0, f"{cases} directives, {bad} non-target streams changed")


def test_criterion_10_round_trips():
    rng = np.random.default_rng(10)
    failures = 0
    for i in range(50):
        doc = random_textgrid(rng)
        for short in (False, True):
            text = serialize_textgrid(doc, short=short)
            again = parse_textgrid(text)
            failures += again != doc or serialize_textgrid(again, short=short) != text
        utts = [random_utterance(rng, f"f{i}-{j}") for j in range(int(rng.integers(1, 4)))]
        text = dm.dumps_corpus(utts)
        failures += dm.dumps_corpus(dm.loads_corpus(text)) != text
    assert verdict(10, failures == 0, f"50 fuzz files, {failures} unstable round-trips")
