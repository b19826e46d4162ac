import json

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from prosodike import datamodel as dm
from prosodike.datamodel import AlignedUtterance, PhoneSegment, WordSpan

from helpers import make_utt


def test_well_formed_utterance_has_no_violations(two_word_utt):
    assert dm.validate(two_word_utt) == []


def test_uncovered_phones_named():
    u = make_utt([[3, 3, 3, 3, 3]])
    u = u.replace(words=(WordSpan("a", 0, 4),))
    problems = dm.validate(u)
    assert len(problems) == 1
    assert "phones 4..4" in problems[0]


def test_short_pitch_reports_length():
    u = make_utt([[5, 5], [4]])
    total = u.num_frames
    u = u.replace(pitch_hz=u.pitch_hz[:-1])
    problems = dm.validate(u)
    assert len(problems) == 1
    assert problems[0].startswith("pitch_hz")
    assert f"length {total - 1} < {total}" in problems[0]


def test_silence_outside_words_is_allowed():
    u = make_utt([[4, 4]], lead_sil=10, tail_sil=7)
    assert dm.validate(u) == []


def test_contiguity_and_voicing_violations():
    u = make_utt([[4, 4]])
    bad = u.replace(phones=(PhoneSegment("t", 0, 4), PhoneSegment("aa", 5, 3)))
    assert any("contiguity" in p for p in dm.validate(bad))
    pitch = u.pitch_hz.copy()
    pitch[2] = 900.0
    assert any("pitch_hz[2]" in p for p in dm.validate(u.replace(pitch_hz=pitch)))


def test_round_trip_and_corpus_text(two_word_utt):
    line = dm.serialize(two_word_utt)
    assert dm.parse(line) == two_word_utt
    text = dm.dumps_corpus([two_word_utt, two_word_utt.replace(id="v")])
    assert dm.dumps_corpus(dm.loads_corpus(text)) == text


def test_unlabelled_is_distinct_from_false():
    u = make_utt([[3], [3]], emphasized=[None, False])
    back = dm.parse(dm.serialize(u))
    assert [w.emphasized for w in back.words] == [None, False]
    assert list(dm.iter_annotated_words([back])) == [(0, 1, False)]


def test_bad_line_raises_with_line_number():
    try:
        dm.loads_corpus('{"id": "a"}\n')
    except dm.CorpusFormatError as exc:
        assert "line 1" in str(exc)
    else:
        raise AssertionError("expected CorpusFormatError")


finite = st.floats(-1e6, 1e6, allow_nan=False)


@st.composite
def utterances(draw):
    n_words = draw(st.integers(1, 4))
    durs = [draw(st.lists(st.integers(1, 12), min_size=1, max_size=4)) for _ in range(n_words)]
    emph = draw(st.lists(st.sampled_from([None, True, False]), min_size=n_words, max_size=n_words))
    n = sum(map(sum, durs))
    pitch = draw(st.lists(st.one_of(st.just(0.0), st.floats(41.0, 799.0)), min_size=n, max_size=n))
    energy = draw(st.lists(finite, min_size=n, max_size=n))
    return make_utt(durs, np.array(pitch), np.array(energy), emph, uid=draw(st.text(max_size=8)))


@settings(max_examples=60, deadline=None)
@given(utterances())
def test_round_trip_property(u):
    assert dm.validate(u) == []
    assert dm.parse(dm.serialize(u)) == u


json_values = st.recursive(
    st.none() | st.booleans() | st.integers() | st.floats(allow_nan=False) | st.text(max_size=5),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=8), inner, max_size=4),
    max_leaves=20,
)


@settings(max_examples=150, deadline=None)
@given(json_values)
def test_validate_is_total(obj):
    out = dm.validate(obj)
    assert isinstance(out, list)


@settings(max_examples=60, deadline=None)
@given(utterances(), st.sampled_from(["phones", "words", "pitch_hz", "energy_db"]), json_values)
def test_validate_total_on_mangled_records(u, key, value):
    d = u.to_dict()
    d[key] = value
    assert isinstance(dm.validate(d), list)
    assert isinstance(dm.validate(json.loads(json.dumps(d))), list)
