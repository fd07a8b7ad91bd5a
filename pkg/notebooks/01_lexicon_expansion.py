# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Growing a pronunciation lexicon
#
# A small lexicon leaves many words out of vocabulary. Here we train a
# graphone G2P model, fit a trigram model over the known pronunciations,
# take its most probable unseen phone strings and spell them back with P2G.

# %%
from lowasr import expand, g2p, ngram, synth
from lowasr.lexicon import serialize_lexicon

base = synth.toy_lexicon(200, seed=0)
print(len(base), "entries, e.g.", base.entries[:3])

# %% [markdown]
# With one letter per phone the aligner has nothing to disambiguate, so
# `gmax = pmax = 1` is enough.

# %%
model = g2p.train_g2p(base, gmax=1, pmax=1)
print(len(model.graphones), "graphones")
print(g2p.apply_g2p(model, list("dismal"), nbest=3))
print(g2p.apply_p2g(model, "S O L I D".split()))

# %% [markdown]
# The phone model on its own already ranks candidate strings.

# %%
lm = ngram.train_ngram([e.pron for e in base], order=3)
for s in ngram.generate_topk(lm, 5, min_len=2, max_len=12):
    print(f"{s.logprob:8.3f}  {' '.join(s.symbols)}")

# %% [markdown]
# Full expansion at desk scale (12k candidates, keep 1k). The production
# default asks for 12M and keeps 1M.

# %%
lex, report = expand.expand_lexicon(base, model, expand.SMOKE_CONFIG)
print(report.to_json())
print(serialize_lexicon(lex).splitlines()[200:205])
