import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prosodike import emphfeat as ef
from prosodike.datamodel import EmphasisFeatures, WordFeatures
from prosodike.neural.synth import make_synthetic_corpus

from helpers import brute_force_variance_features, make_utt


def test_flat_utterance_has_zero_variance_features():
    pv, dv = ef.variance_features(make_utt([[8, 8], [8, 8, 8]]))
    assert np.all(pv == 0.0) and np.all(dv == 0.0)


def test_duration_example():
    _, dv = ef.variance_features(make_utt([[10, 10], [20, 20]]))
    assert dv.tolist() == [-5.0, 5.0]


def test_uniform_grid_spread():
    grid = np.linspace(0.0, 1.0, 101)
    assert ef.log_pitch_spread(grid) == pytest.approx(0.90, abs=1e-12)
    pitch = np.exp(grid + 5.0)  # one word, all 101 frames voiced
    u = make_utt([[50, 51]], pitch=pitch)
    pv, _ = ef.variance_features(u)
    assert pv[0] == pytest.approx(0.0, abs=1e-12)


def test_word_without_voicing_gets_minus_sentence_spread():
    pitch = np.exp(np.linspace(4.5, 5.5, 40))
    pitch[:20] = 0.0
    pv, _ = ef.variance_features(make_utt([[10, 10], [10, 10]], pitch=pitch))
    assert pv[0] == pytest.approx(-ef.log_pitch_spread(np.log(pitch[20:])))


def test_no_voicing_is_an_error():
    u = make_utt([[5, 5]])
    with pytest.raises(ef.FeatureError):
        ef.variance_features(u.replace(pitch_hz=np.zeros(10)))


def test_matches_brute_force_on_synthetic():
    for u in make_synthetic_corpus(11, 20):
        pv, dv = ef.variance_features(u)
        bp, bd = brute_force_variance_features(u)
        assert np.allclose(pv, bp, rtol=1e-9, atol=1e-12)
        assert np.allclose(dv, bd, rtol=1e-9, atol=1e-12)


@st.composite
def utterances(draw):
    n_words = draw(st.integers(1, 5))
    durs = [draw(st.lists(st.integers(1, 15), min_size=1, max_size=5)) for _ in range(n_words)]
    n = sum(map(sum, durs))
    pitch = draw(st.lists(st.one_of(st.just(0.0), st.floats(50.0, 400.0)), min_size=n, max_size=n))
    pitch[0] = 150.0
    return make_utt(durs, np.array(pitch))


@settings(max_examples=80, deadline=None)
@given(utterances())
def test_duration_deviations_cancel(u):
    _, dv = ef.variance_features(u)
    counts = np.array([w.phone_end - w.phone_start for w in u.words])
    assert abs(np.sum(counts * dv)) <= 1e-6


def _features(*cols):
    per_word = tuple(WordFeatures(*row) for row in zip(*cols))
    return EmphasisFeatures("u", per_word)


def test_fit_stats_examples():
    st_ = ef.fit_stats([_features([-1.0, 1.0, -1.0, 1.0], [2, 2, 2, 2], [0, 1, 2, 3])])
    assert st_.variances["pitch_var"] == 1.0
    assert st_.variances["dur_var"] == 0.0
    assert st_.corpus_size == 4
    with pytest.raises(ef.DegenerateFeatureError):
        ef.normalize(1.0, st_.variances["dur_var"])
    with pytest.raises(ef.FeatureError):
        ef.fit_stats([])


def test_fit_stats_against_two_pass_loop():
    f = ef.raw_features(make_synthetic_corpus(4, 1)[0])
    stats = ef.fit_stats([f])
    for name in ("pitch_var", "dur_var", "wavelet"):
        vals = [getattr(w, name) for w in f.per_word]
        m = 0.0
        for v in vals:
            m += v
        m /= len(vals)
        var = 0.0
        for v in vals:
            var += (v - m) ** 2
        var /= len(vals)
        assert stats.means[name] == pytest.approx(m, rel=1e-12, abs=1e-15)
        assert stats.variances[name] == pytest.approx(var, rel=1e-12)


@pytest.mark.parametrize("var", [0.01, 0.7, 3.0, 12.5])
def test_normalize_endpoints(var):
    assert ef.normalize(3 * var, var) == pytest.approx(1.0, abs=1e-12)
    assert ef.normalize(0.0, var) == 0.0
    assert ef.normalize(-3 * var, var) == pytest.approx(-1.0, abs=1e-12)
    sd = np.sqrt(var)
    assert ef.normalize(3 * sd, var, norm_exponent=1) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-1e6, 1e6), st.floats(1e-6, 1e6))
def test_normalize_is_odd_and_unclamped(x, var):
    assert ef.normalize(-x, var) == -ef.normalize(x, var)
    assert ef.normalize(10 * var, var) > 1.0


def test_combined_examples():
    m = np.array([[0.3, 0.6, 0.9], [-0.2, 0.5, 0.1]])
    assert np.array_equal(ef.combined_feature(m, ef.CombinedWeights((1.0, 0.0, 0.0))), m[:, 0])
    third = ef.CombinedWeights((1 / 3, 1 / 3, 1 - 2 / 3))
    assert ef.combined_feature(m[:1], third)[0] == pytest.approx(0.6, abs=1e-12)


simplex_w = st.tuples(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1)).filter(lambda w: sum(w) > 1e-3).map(
    lambda w: tuple(np.array(w) / sum(w))
)


@given(simplex_w, st.floats(-5, 5))
def test_combined_of_equal_features(w, v):
    assert ef.combined_feature(np.array([[v, v, v]]), ef.CombinedWeights(w))[0] == pytest.approx(v, abs=1e-12)


@given(simplex_w, st.integers(0, 2), st.floats(0.01, 3))
def test_combined_monotone(w, i, step):
    wts = ef.CombinedWeights(w)
    x = np.array([[0.1, -0.2, 0.3]])
    y = x.copy()
    y[0, i] += step
    a, b = ef.combined_feature(x, wts)[0], ef.combined_feature(y, wts)[0]
    assert b >= a
    if wts.w[i] > 0:
        assert b > a or wts.w[i] * step < 1e-15


def test_invalid_weights_rejected():
    for w in [(0.5, 0.5, 0.5), (1.2, -0.2, 0.0), (0.5, 0.5)]:
        with pytest.raises(ValueError):
            ef.CombinedWeights(w)


def _pitch_informative(seed=0, n=300):
    """Labels separated by pitch_var alone; the other two columns are loud noise."""
    rng = np.random.default_rng(seed)
    labels = rng.random(n) < 0.25
    x = 10.0 * rng.standard_normal((n, 3))
    x[:, 0] = 3.0 * labels + 0.1 * rng.standard_normal(n)
    return x, [bool(v) for v in labels]


def test_fit_concentrates_on_informative_feature():
    x, labels = _pitch_informative()
    w, f1 = ef.fit_combined_weights(x, labels)
    assert w.w[0] >= 0.9
    assert abs(sum(w.w) - 1.0) <= 1e-9 and min(w.w) >= 0
    assert f1 > 0.8


def test_identical_features_tie_break():
    v = np.random.default_rng(1).standard_normal(50)
    x = np.stack([v, v, v], axis=1)
    w, _ = ef.fit_combined_weights(x, [bool(t) for t in v > 0.5])
    assert w.w == (0.0, 0.0, 1.0)


def test_fit_is_order_invariant():
    x, labels = _pitch_informative(2, 120)
    x[:, 1] += 0.5 * np.array(labels)
    perm = np.random.default_rng(3).permutation(len(x))
    a = ef.fit_combined_weights(x, labels)
    b = ef.fit_combined_weights(x[perm], [labels[i] for i in perm])
    assert a[0].w == b[0].w and a[1] == b[1]


def test_fit_requires_both_classes():
    x, _ = _pitch_informative()
    with pytest.raises(ef.FeatureError):
        ef.fit_combined_weights(x, [False] * len(x))


def test_unlabelled_words_are_ignored():
    x, labels = _pitch_informative(4, 200)
    partial = [None if i % 3 == 0 else lab for i, lab in enumerate(labels)]
    w, f1 = ef.fit_combined_weights(x, partial)
    assert 0.0 <= f1 <= 1.0 and abs(sum(w.w) - 1) <= 1e-9


def test_normalize_features_and_score():
    corpus = make_synthetic_corpus(9, 6)
    raw = [ef.raw_features(u) for u in corpus]
    stats = ef.fit_stats(raw)
    normed = [ef.normalize_features(f, stats, ef.CombinedWeights((0.2, 0.3, 0.5))) for f in raw]
    for f, n in zip(raw, normed):
        assert not n.raw
        m = ef.normalized_matrix(f, stats)
        assert np.allclose(n.column("combined"), m @ np.array([0.2, 0.3, 0.5]))
        assert np.array_equal(ef.variance_score(m), m[:, :2].mean(axis=1))
