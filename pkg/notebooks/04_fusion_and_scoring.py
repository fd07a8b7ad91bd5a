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
# # Voting over several recognisers, then scoring
#
# Three systems disagree in different places; a word transition network lines
# them up and each slot is decided by vote.

# %%
from lowasr import fusion, scoring
from lowasr.fusion import Hypothesis, VoteConfig

hyps = [
    Hypothesis.from_words("u1", "the cat sat on the mat".split()),
    Hypothesis.from_words("u1", "the cat sat on a mat".split()),
    Hypothesis.from_words("u1", "a cat sat the mat".split()),
]
wtn = fusion.align_hypotheses(hyps)
for k, slot in enumerate(wtn.slots):
    print(k, [(a.word, a.system) for a in slot])
print(" ".join(fusion.vote(wtn).words))

# %% [markdown]
# With confidences, `alpha` trades vote counts against mean confidence.

# %%
confident = [
    Hypothesis.from_words("u", ["a"], [0.9]),
    Hypothesis.from_words("u", ["b"], [0.2]),
    Hypothesis.from_words("u", ["b"], [0.3]),
]
for alpha in (1.0, 0.5, 0.0):
    print(alpha, fusion.rover(confident, VoteConfig(alpha=alpha)).words)

# %%
ref = "The cat sat on the mat".split()
hyp = "the cat sat on a mat".split()
for case in ("cis", "css"):
    p = scoring.NormPolicy(case=case)
    print(case, scoring.wer(scoring.normalize(ref, p), scoring.normalize(hyp, p)).line())
print(scoring.align(ref, hyp))

# %% [markdown]
# The whole chain on synthetic data:

# %%
from lowasr.demo import format_summary, run_demo

print(format_summary(run_demo(seed=0)))
