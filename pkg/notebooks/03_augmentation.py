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
# # Data augmentation
#
# Speed, volume, additive noise, reverberation and SpecAugment on a test tone.

# %%
import numpy as np

from lowasr import augment, dsp, synth
from lowasr.dsp import AudioBuffer

x = dsp.resample(synth.sine(1000, 1.0), 8000)
for f in augment.AugmentSpec().speed_factors:
    y = augment.speed_perturb(x, f)
    print(f, len(y), augment.augmented_id("utt1", "speed", f))

# %%
rng = np.random.default_rng(0)
noise = AudioBuffer(rng.standard_normal(3000), 8000)
for snr in (0, 10, 20):
    n = augment.scaled_noise(x, noise, snr, seed=1)
    print(snr, "dB ->", round(10 * np.log10(np.mean(x.samples ** 2) / np.mean(n ** 2)), 3))

# %%
rir = AudioBuffer(np.exp(-np.arange(800) / 100.0) * rng.standard_normal(800), 8000)
wet = augment.apply_rir(x, rir)
print("rms in/out", np.sqrt(np.mean(x.samples ** 2)), np.sqrt(np.mean(wet.samples ** 2)))

# %%
feats = dsp.logmel(x)
masked, masks = augment.spec_augment(feats, augment.SpecAugmentSpec(seed=3), return_masks=True)
print(feats.shape, masks)
