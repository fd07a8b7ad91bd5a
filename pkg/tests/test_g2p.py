import math
import string
import time

import pytest
from hypothesis import given, settings, strategies as st

from lowasr import g2p, ngram
from lowasr.g2p import G2PError, Graphone
from lowasr.lexicon import letters, make_lexicon


@pytest.fixture(scope="module")
def bijective():
    lex = make_lexicon([(c, [c.upper()]) for c in string.ascii_lowercase])
    return g2p.train_g2p(lex, gmax=1, pmax=1)


def test_bijective_inventory(bijective):
    assert bijective.graphones == {Graphone((c,), (c.upper(),)) for c in string.ascii_lowercase}


@pytest.mark.parametrize("word", ["cat", "dog", "zebra", "quartz", "jinx", "kiwi"])
def test_bijective_decodes_both_ways(bijective, word):
    phones = [c.upper() for c in word]
    (h,) = g2p.apply_g2p(bijective, list(word), nbest=3)
    assert list(h.symbols) == phones
    assert math.isfinite(h.logprob) and h.logprob <= 0
    back = g2p.apply_p2g(bijective, list(h.symbols))
    assert "".join(back[0].symbols) == word


def test_training_word_decodes_to_training_pron():
    lex = make_lexicon([("ab", ["A", "B"]), ("ba", ["B", "A"]), ("abba", ["A", "B", "B", "A"])])
    m = g2p.train_g2p(lex, gmax=1, pmax=1)
    for e in lex:
        assert g2p.apply_g2p(m, letters(e.word))[0].symbols == e.pron


def test_single_entry_converges_to_one_graphone():
    lex = make_lexicon([("a", ["ah"])])
    probs, _ = g2p.em_align([(("a",), ("ah",))], em_iters=200, tol=0.0)
    assert probs[Graphone(("a",), ("ah",))] >= 0.999
    m = g2p.train_g2p(lex)
    assert m.graphones == {Graphone(("a",), ("ah",))}


def test_zero_em_iterations_is_uniform():
    probs, hist = g2p.em_align([(("a", "b"), ("x",)), (("c",), ("y", "z"))], gmax=2, pmax=2, em_iters=0)
    assert len(hist) == 1
    vals = set(probs.values())
    assert len(vals) == 1
    assert vals.pop() == pytest.approx(1 / len(probs))


def test_graphone_token_round_trip():
    for gr in [Graphone(("a", "b"), ("x",)), Graphone((), ("y",)), Graphone(("c",), ())]:
        assert Graphone.from_token(gr.token) == gr


def test_input_errors(bijective):
    with pytest.raises(G2PError):
        g2p.apply_p2g(bijective, [])
    with pytest.raises(G2PError, match="unalignable"):
        g2p.apply_g2p(bijective, ["7"])
    with pytest.raises(G2PError):
        g2p.apply_g2p(bijective, ["a"], nbest=0)


def test_save_load_round_trip(tmp_path, bijective):
    path = tmp_path / "m.g2p"
    g2p.save_model(bijective, path, command="unit test")
    back = g2p.load_model(path)
    assert back.graphones == bijective.graphones
    # ARPA stores six decimals
    a, b = g2p.apply_g2p(back, list("hello"))[0], g2p.apply_g2p(bijective, list("hello"))[0]
    assert a.symbols == b.symbols and a.logprob == pytest.approx(b.logprob, abs=1e-5)
    text = path.read_text()
    path.write_text(text.replace("version=1", "version=9", 1))
    with pytest.raises(G2PError):
        g2p.load_model(path)


# --- brute-force decoding oracle ------------------------------------------

AMBIGUOUS = make_lexicon(
    [
        ("ax", ["AH", "K", "S"]),
        ("xa", ["K", "S", "AH"]),
        ("ab", ["AH", "B"]),
        ("ba", ["B", "AH"]),
        ("bab", ["B", "AH", "B"]),
        ("x", ["K", "S"]),
        ("bb", ["B"]),
        ("abx", ["AH", "B", "K", "S"]),
    ]
)


def brute_force(model, inputs, side):
    """Enumerate every graphone path, allowing at most one consecutive empty-input graphone."""
    by_in = {}
    for gr in model.graphones:
        key, out = (gr.gseq, gr.pseq) if side == "g" else (gr.pseq, gr.gseq)
        by_in.setdefault(key, []).append((gr.token, out))
    lm = model.lm
    amax = model.gmax if side == "g" else model.pmax
    best = {}

    def walk(i, hist, prev_eps, out, sc):
        if sc == -math.inf:
            return
        if i == len(inputs) and out:
            total = sc + lm.logprob(hist, ngram.EOS)
            if total > best.get(out, -math.inf):
                best[out] = total
        if not prev_eps:
            for tok, o in by_in.get((), []):
                walk(i, lm.advance(hist, tok), True, out + o, sc + lm.logprob(hist, tok))
        for a in range(1, amax + 1):
            for tok, o in by_in.get(tuple(inputs[i:i + a]), []) if i + a <= len(inputs) else []:
                walk(i + a, lm.advance(hist, tok), False, out + o, sc + lm.logprob(hist, tok))

    walk(0, lm.start, False, (), 0.0)
    return sorted(((out, sc) for out, sc in best.items() if sc > -math.inf), key=lambda t: (-t[1], t[0]))


@pytest.fixture(scope="module")
def ambiguous():
    return g2p.train_g2p(AMBIGUOUS, gmax=2, pmax=2, lm_order=3)


@pytest.mark.parametrize("word", ["ax", "bab", "xab", "abba", "xx", "b"])
def test_g2p_matches_brute_force(ambiguous, word):
    got = g2p.apply_g2p(ambiguous, list(word), nbest=None, beam=None)
    want = brute_force(ambiguous, list(word), "g")
    assert [h.symbols for h in got] == [o for o, _ in want]
    assert [h.logprob for h in got] == pytest.approx([s for _, s in want], abs=1e-9)
    top = g2p.apply_g2p(ambiguous, list(word), nbest=2)
    assert top == got[:2]


@pytest.mark.parametrize("phones", ["AH K S", "B AH B", "K S AH B", "B"])
def test_p2g_matches_brute_force(ambiguous, phones):
    seq = phones.split()
    got = g2p.apply_p2g(ambiguous, seq, nbest=None, beam=None)
    want = brute_force(ambiguous, seq, "p")
    assert [h.symbols for h in got] == [o for o, _ in want]
    assert [h.logprob for h in got] == pytest.approx([s for _, s in want], abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(
        st.tuples(st.text("abc", min_size=1, max_size=4), st.lists(st.sampled_from("XYZ"), min_size=1, max_size=4)),
        min_size=1,
        max_size=6,
    )
)
def test_em_likelihood_never_decreases(pairs):
    data = [(tuple(w), tuple(p)) for w, p in pairs]
    _, hist = g2p.em_align(data, gmax=2, pmax=2, em_iters=15, tol=0.0)
    for prev, cur in zip(hist, hist[1:]):
        assert cur >= prev - 1e-9 * abs(prev)


@settings(max_examples=25, deadline=None)
@given(st.text("abx", min_size=1, max_size=5))
def test_hypotheses_sorted_finite_and_non_positive(ambiguous, word):
    hyps = g2p.apply_g2p(ambiguous, list(word), nbest=5)
    lps = [h.logprob for h in hyps]
    assert all(math.isfinite(lp) and lp <= 0 for lp in lps)
    assert lps == sorted(lps, reverse=True)
    assert len({h.symbols for h in hyps}) == len(hyps)


def test_bijective_training_is_fast():
    lex = make_lexicon([(c, [c.upper()]) for c in string.ascii_lowercase])
    t0 = time.perf_counter()
    g2p.train_g2p(lex, gmax=1, pmax=1)
    assert time.perf_counter() - t0 < 10


@pytest.fixture(scope="module")
def with_nulls():
    # hand-built graphone corpus containing empty-grapheme and empty-phone units
    seqs = [
        ["a}A", "_}H"],
        ["_}H", "a}A", "b}B"],
        ["b}B", "e}_"],
        ["a}A", "b}B", "e}_"],
        ["a|b}A|B"],
        ["_}H", "e}_", "b}B"],
    ]
    lm = ngram.train_ngram(seqs, order=3)
    graphones = frozenset(Graphone.from_token(t) for t in lm.vocab if t not in (ngram.BOS, ngram.EOS))
    return g2p.G2PModel(graphones, lm, gmax=2, pmax=2)


@pytest.mark.parametrize("word", ["a", "ab", "abe", "eb", "bae"])
def test_null_graphones_match_brute_force_g2p(with_nulls, word):
    got = g2p.apply_g2p(with_nulls, list(word), nbest=None, beam=None)
    want = brute_force(with_nulls, list(word), "g")
    assert want and [h.symbols for h in got] == [o for o, _ in want]
    assert [h.logprob for h in got] == pytest.approx([s for _, s in want], abs=1e-9)


@pytest.mark.parametrize("phones", ["A", "H A B", "B", "A B"])
def test_null_graphones_match_brute_force_p2g(with_nulls, phones):
    got = g2p.apply_p2g(with_nulls, phones.split(), nbest=None, beam=None)
    want = brute_force(with_nulls, phones.split(), "p")
    assert want and [h.symbols for h in got] == [o for o, _ in want]
    assert [h.logprob for h in got] == pytest.approx([s for _, s in want], abs=1e-9)
