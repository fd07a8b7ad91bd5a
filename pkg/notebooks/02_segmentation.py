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
# # Speech activity detection with order-statistic filters
#
# A synthetic recording: a quiet noise floor with three speech-shaped bursts
# 20 dB above it.

# %%
import numpy as np

from lowasr import synth, vad
from lowasr.vad import OsfVadConfig

truth = [(1.0, 2.5), (3.5, 5.0), (6.0, 8.0)]
buf = synth.floor_and_bursts(9.5, truth, sr=8000, seed=0)

# %%
ltsd, speech = vad.ltsd_decisions(buf, OsfVadConfig())
print("LTSD range (dB):", np.round(ltsd.min(), 1), "to", np.round(ltsd.max(), 1))
print("speech frames:", int(speech.sum()), "of", len(speech))

# %%
segs = vad.osf_vad(buf, recording_id="demo")
for s in segs:
    print(f"{s.start:6.2f} {s.end:6.2f}")
print(vad.format_segments([segs]))

# %% [markdown]
# Lowering `max_seg` forces long regions to be cut at the quietest frame.

# %%
print(vad.osf_vad(buf, OsfVadConfig(max_seg=1.0)).segments)

# %% [markdown]
# Several segmenters can be combined frame by frame.

# %%
a = vad.osf_vad(buf, recording_id="demo")
b = vad.osf_vad(buf, OsfVadConfig(threshold_db=10.0), recording_id="demo")
c = vad.osf_vad(buf, OsfVadConfig(osf_window=4), recording_id="demo")
for policy in ("union", "majority", "intersection"):
    print(policy, vad.fuse_segmentations([a, b, c], policy).segments)
