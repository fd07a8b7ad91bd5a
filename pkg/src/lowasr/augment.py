"""Speed/volume perturbation, additive noise at a target SNR, RIR reverberation, SpecAugment."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

from .dsp import AudioBuffer, FeatureMatrix, resample_ratio

__all__ = [
    "AugmentSpec",
    "SpecAugmentSpec",
    "AugmentError",
    "NOISE_KINDS",
    "speed_perturb",
    "volume_perturb",
    "scaled_noise",
    "mix_noise",
    "apply_rir",
    "spec_augment",
    "augmented_id",
]

NOISE_KINDS = ("babble", "music", "noise", "reverb")


class AugmentError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentSpec:
    speed_factors: tuple = (0.9, 1.0, 1.1)
    volume_range: tuple = (0.125, 2.0)
    snr_db: float = 10.0
    noise_kind: str = "noise"
    seed: int = 0

    def __post_init__(self):
        if any(f <= 0 for f in self.speed_factors):
            raise ValueError("speed factors must be positive")
        lo, hi = self.volume_range
        if not 0 < lo <= hi:
            raise ValueError("volume_range must satisfy 0 < lo <= hi")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")


@dataclass(frozen=True)
class SpecAugmentSpec:
    n_freq_masks: int = 2
    max_freq_width: int = 8
    n_time_masks: int = 2
    max_time_width: int = 20
    mask_value: str = "mean"
    seed: int = 0

    def __post_init__(self):
        if min(self.n_freq_masks, self.max_freq_width, self.n_time_masks, self.max_time_width) < 0:
            raise ValueError("mask counts and widths must be non-negative")
        if self.mask_value not in ("zero", "mean"):
            raise ValueError("mask_value must be 'zero' or 'mean'")


def _clip(x):
    return np.clip(x, -1.0, 1.0)


def _power(x):
    return float(np.mean(np.square(x))) if len(x) else 0.0


def speed_perturb(buf: AudioBuffer, factor: float) -> AudioBuffer:
    """Play ``factor`` times faster: duration ``n / factor``, pitch shifted, same rate label."""
    if factor <= 0:
        raise AugmentError("speed factor must be positive")
    if factor == 1.0:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate)
    r = Fraction(factor).limit_denominator(1000)
    # resample from sr to sr/factor, then relabel as sr
    y = resample_ratio(buf.samples, r.denominator, r.numerator)
    return AudioBuffer(_clip(y), buf.sample_rate)


def volume_perturb(buf: AudioBuffer, gain: float) -> AudioBuffer:
    if gain <= 0:
        raise AugmentError("gain must be positive")
    return AudioBuffer(_clip(buf.samples * gain), buf.sample_rate)


def scaled_noise(buf: AudioBuffer, noise: AudioBuffer, snr_db: float, seed: int = 0) -> np.ndarray:
    """Noise looped from a seeded offset to ``len(buf)`` and scaled to ``snr_db``.

    SNR is measured on full-buffer mean power of both components.
    """
    if noise.sample_rate != buf.sample_rate:
        raise AugmentError(f"sample rate mismatch: {buf.sample_rate} vs {noise.sample_rate}")
    ps = _power(buf.samples)
    if ps == 0.0:
        raise AugmentError("signal has zero power")
    if len(noise) == 0 or _power(noise.samples) == 0.0:
        raise AugmentError("noise has zero power")
    rng = np.random.default_rng(seed)
    offset = int(rng.integers(len(noise)))
    idx = (offset + np.arange(len(buf))) % len(noise)
    n = noise.samples[idx]
    pn = _power(n)
    if pn == 0.0:
        raise AugmentError("noise excerpt has zero power")
    return n * np.sqrt(ps / (pn * 10.0 ** (snr_db / 10.0)))


def mix_noise(buf: AudioBuffer, noise: AudioBuffer, snr_db: float, seed: int = 0) -> AudioBuffer:
    n = scaled_noise(buf, noise, snr_db, seed)
    return AudioBuffer(_clip(buf.samples + n), buf.sample_rate)


def apply_rir(buf: AudioBuffer, rir: AudioBuffer) -> AudioBuffer:
    """Convolve with a room impulse response, keep the input length and RMS."""
    if len(rir) == 0:
        raise AugmentError("empty impulse response")
    if rir.sample_rate != buf.sample_rate:
        raise AugmentError(f"sample rate mismatch: {buf.sample_rate} vs {rir.sample_rate}")
    if len(buf) == 0:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate)
    y = signal.oaconvolve(buf.samples, rir.samples)[: len(buf)]
    p_in, p_out = _power(buf.samples), _power(y)
    if p_out > 0.0:
        y = y * np.sqrt(p_in / p_out)
    return AudioBuffer(_clip(y), buf.sample_rate)


def spec_augment(feat: FeatureMatrix, spec: SpecAugmentSpec, return_masks: bool = False):
    """Frequency and time masking on a T x F matrix; the input is not modified.

    With ``return_masks`` the drawn masks are returned as a list of
    ``(axis, start, width)`` with axis ``"freq"`` or ``"time"``.
    """
    x = np.array(feat.frames, dtype=np.float64, copy=True)
    masks = []
    t, f = x.shape if x.ndim == 2 else (0, 0)
    if t == 0:
        out = FeatureMatrix(x, feat.frame_shift, feat.feature_kind)
        return (out, masks) if return_masks else out
    value = float(np.mean(x)) if spec.mask_value == "mean" and x.size else 0.0
    rng = np.random.default_rng(spec.seed)
    for _ in range(spec.n_freq_masks):
        w = int(rng.integers(0, min(spec.max_freq_width, f) + 1))
        s = int(rng.integers(0, f - w + 1))
        x[:, s:s + w] = value
        masks.append(("freq", s, w))
    for _ in range(spec.n_time_masks):
        w = int(rng.integers(0, min(spec.max_time_width, t) + 1))
        s = int(rng.integers(0, t - w + 1))
        x[s:s + w, :] = value
        masks.append(("time", s, w))
    out = FeatureMatrix(x, feat.frame_shift, feat.feature_kind)
    return (out, masks) if return_masks else out


def augmented_id(utt_id: str, kind: str, value=None) -> str:
    """Manifest id suffix, e.g. ``utt-sp0.9``, ``utt-noise``, ``utt-reverb``."""
    if kind == "speed":
        return f"{utt_id}-sp{value:g}"
    if kind == "volume":
        return f"{utt_id}-vol{value:g}"
    return f"{utt_id}-{kind}"
