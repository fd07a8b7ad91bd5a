import pytest
from hypothesis import given, settings, strategies as st

from lowasr.lexicon import (
    Corpus,
    LexEntry,
    Lexicon,
    LexiconParseError,
    filter_oov,
    make_lexicon,
    oov_words,
    parse_corpus,
    parse_lexicon,
    serialize_corpus,
    serialize_lexicon,
)

token = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zs", "Zl", "Zp")), min_size=1, max_size=6
).filter(lambda s: not any(c.isspace() for c in s) and not s.startswith(";;"))
entries = st.builds(
    LexEntry,
    token,
    st.lists(token, min_size=1, max_size=5).map(tuple),
    st.one_of(st.none(), st.floats(min_value=1e-300, max_value=1.0, exclude_min=True)),
)


def test_parse_empty():
    assert len(parse_lexicon("")) == 0


def test_parse_single_entry():
    lex = parse_lexicon("cat\tk ae t\n")
    (e,) = lex.entries
    assert (e.word, e.pron, e.prob) == ("cat", ("k", "ae", "t"), None)


def test_duplicate_lines_collapse():
    assert len(parse_lexicon("a\tah\na\tah\n")) == 1


def test_homographs_kept_and_prob_column():
    lex = parse_lexicon("read\t0.6\tr iy d\nread\t0.4\tr eh d\n")
    assert [e.prob for e in lex] == [0.6, 0.4]


@pytest.mark.parametrize(
    "raw, lineno",
    [
        ("ok\to k\nbroken\n", 2),
        ("a\t0.5\tx\tjunk\n", 1),
        ("a\thigh\tah\n", 1),
        ("a\t1.5\tah\n", 1),
        ("a\t \n", 1),
    ],
)
def test_malformed_lines_report_line_number(raw, lineno):
    with pytest.raises(LexiconParseError) as exc:
        parse_lexicon(raw)
    assert exc.value.lineno == lineno


def test_comments_and_blank_lines_ignored():
    lex = parse_lexicon(";; produced by something\n\ncat\tk ae t\n")
    assert len(lex) == 1


@settings(max_examples=150, deadline=None)
@given(st.lists(entries, max_size=12))
def test_round_trip(es):
    lex = Lexicon(tuple(es))
    assert parse_lexicon(serialize_lexicon(lex, header="hdr")) == lex


def test_oov_examples():
    lex = make_lexicon([("cat", ["k", "ae", "t"])])
    assert oov_words(Corpus((("u", ("cat",)),)), lex) == set()
    assert oov_words(Corpus((("u", ("cat", "dog")),)), lex) == {"dog"}
    # case-insensitive by default; case-sensitive on request
    assert oov_words(Corpus((("u", ("Cat",)),)), lex) == set()
    assert oov_words(Corpus((("u", ("Cat",)),)), lex, case_sensitive=True) == {"Cat"}


def test_filter_examples():
    lex = make_lexicon([("a", ["ah"])])
    c = Corpus((("u1", ("a", "b", "a")), ("u2", ("b",))))
    assert filter_oov(c, lex).utterances == (("u1", ("a", "a")), ("u2", ()))
    assert filter_oov(c, Lexicon()).utterances == (("u1", ()), ("u2", ()))
    same = Corpus((("u", ("a", "a")),))
    assert filter_oov(same, lex) == same


words = st.sampled_from(["a", "A", "b", "cat", "Cat", "dog"])
corpora = st.lists(st.lists(words, max_size=5), max_size=5).map(
    lambda uts: Corpus(tuple((f"u{i}", tuple(w)) for i, w in enumerate(uts)))
)
lexica = st.sets(words, max_size=4).map(lambda ws: make_lexicon([(w, ["x"]) for w in sorted(ws)]))


@settings(max_examples=100, deadline=None)
@given(corpora, lexica, st.booleans())
def test_oov_partitions_word_types(c, lex, cs):
    oov = oov_words(c, lex, case_sensitive=cs)
    inv = {w for w in c.word_types() if w not in oov}
    assert oov | inv == c.word_types()
    assert not (oov & filter_oov(c, lex, case_sensitive=cs).word_types())
    once = filter_oov(c, lex, case_sensitive=cs)
    assert filter_oov(once, lex, case_sensitive=cs) == once


def test_corpus_round_trip_and_duplicate_ids():
    c = parse_corpus("u1 a b\nu2\n")
    assert c.utterances == (("u1", ("a", "b")), ("u2", ()))
    assert parse_corpus(serialize_corpus(c)) == c
    with pytest.raises(ValueError):
        parse_corpus("u1 a\nu1 b\n")
