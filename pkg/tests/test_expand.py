import itertools
import math

import pytest

from lowasr import expand, g2p, ngram, synth
from lowasr.expand import ExpansionConfig, expand_lexicon
from lowasr.lexicon import make_lexicon, serialize_lexicon


@pytest.fixture(scope="module")
def toy():
    base = synth.toy_lexicon(20, alphabet="abde", min_len=2, max_len=4, seed=1)
    return base, g2p.train_g2p(base, gmax=1, pmax=1, lm_order=3)


def test_paper_scale_defaults():
    cfg = ExpansionConfig()
    assert (cfg.n_generate, cfg.n_keep, cfg.lm_order) == (12_000_000, 1_000_000, 3)
    assert expand.SMOKE_CONFIG.n_generate // expand.SMOKE_CONFIG.n_keep == 12


def test_matches_brute_force_oracle(toy):
    base, model = toy
    cfg = ExpansionConfig(n_generate=100, n_keep=10, min_len=2, max_len=4)
    lex, rep = expand_lexicon(base, model, cfg)

    lm = ngram.train_ngram([e.pron for e in base], order=3)
    phones = sorted(base.phone_set)
    scored = []
    for n in range(2, 5):
        for seq in itertools.product(phones, repeat=n):
            scored.append((-ngram.score(lm, seq), seq))
    scored.sort()
    top = [seq for _, seq in scored[:100]]
    fresh = [s for s in top if s not in base.prons()][:10]

    new = lex.entries[len(base):]
    assert [e.pron for e in new] == fresh
    # the toy phones are upper-cased letters, so the spelling rule is lower-casing
    assert [e.word for e in new] == ["".join(fresh_p).lower() for fresh_p in fresh]
    assert rep.n_generated == 100 and rep.n_new_entries == 10
    probs = [e.prob for e in new]
    assert probs[0] == 1.0
    assert all(a >= b for a, b in zip(probs, probs[1:]))
    assert not {e.pron for e in new} & base.prons()


def test_n_keep_zero_returns_base(toy):
    base, model = toy
    lex, rep = expand_lexicon(base, model, ExpansionConfig(n_generate=10, n_keep=0))
    assert lex == base and rep.n_new_entries == 0


def test_exhaustion_reports_fewer_generated():
    base = make_lexicon([("ab", ["A", "B"]), ("ba", ["B", "A"])])
    model = g2p.train_g2p(base, gmax=1, pmax=1)
    cfg = ExpansionConfig(n_generate=1000, n_keep=5, min_len=2, max_len=2)
    lex, rep = expand_lexicon(base, model, cfg)
    assert rep.n_generated == 4  # AA AB BA BB
    assert sorted(e.word for e in lex.entries[2:]) == ["aa", "bb"]


def test_unknown_phone_is_an_error(toy):
    base, model = toy
    bigger = base.extend(make_lexicon([("zz", ["Q", "Q"])]))
    with pytest.raises(g2p.G2PError):
        expand_lexicon(bigger, model, ExpansionConfig(n_generate=10, n_keep=1))


def test_sample_mode_is_seeded(toy):
    base, model = toy
    cfg = ExpansionConfig(n_generate=300, n_keep=20, mode="sample", seed=4, min_len=2, max_len=6)
    a, ra = expand_lexicon(base, model, cfg)
    b, _ = expand_lexicon(base, model, cfg)
    assert serialize_lexicon(a) == serialize_lexicon(b)
    assert ra.n_generated == 300
    new = a.entries[len(base):]
    scores = [math.log10(e.prob) for e in new]
    assert scores == sorted(scores, reverse=True)


@pytest.mark.parametrize("kw", [dict(n_keep=5, n_generate=1), dict(mode="beam"), dict(min_len=5, max_len=2)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ExpansionConfig(**kw)
