"""Synthetic signals and toy data with known ground truth."""

from __future__ import annotations

import numpy as np
from scipy import signal

from .dsp import AudioBuffer
from .lexicon import LexEntry, Lexicon

__all__ = ["speech_shaped_noise", "floor_and_bursts", "sine", "toy_lexicon"]


def speech_shaped_noise(n: int, sr: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-power noise band-limited to 200-3400 Hz with a 1/f tilt."""
    x = rng.standard_normal(n + sr // 10)
    sos = signal.butter(4, [200.0, 3400.0], btype="bandpass", fs=sr, output="sos")
    y = signal.sosfilt(sos, x)
    y = signal.lfilter([1.0], [1.0, -0.9], y)[sr // 10:]
    return y / np.sqrt(np.mean(y ** 2))


def floor_and_bursts(
    duration: float,
    bursts,
    sr: int = 8000,
    burst_snr_db: float = 20.0,
    floor_level: float = 1e-3,
    seed: int = 0,
) -> AudioBuffer:
    """White-noise floor (RMS ``floor_level``) with speech-shaped bursts.

    ``bursts`` is a list of ``(start, end)`` seconds; each burst's RMS is
    ``burst_snr_db`` above the floor.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration * sr))
    x = floor_level * rng.standard_normal(n)
    gain = floor_level * 10.0 ** (burst_snr_db / 20.0)
    for start, end in bursts:
        a, b = int(round(start * sr)), int(round(end * sr))
        x[a:b] += gain * speech_shaped_noise(b - a, sr, rng)
    return AudioBuffer(np.clip(x, -1.0, 1.0), sr)


def sine(freq: float, duration: float, sr: int = 16000, amp: float = 0.5) -> AudioBuffer:
    t = np.arange(int(round(duration * sr))) / sr
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), sr)


def toy_lexicon(n_words: int = 200, alphabet: str = "abdegiklmnostu", min_len: int = 3, max_len: int = 7, seed: int = 0) -> Lexicon:
    """Random words with a bijective letter -> upper-case phone pronunciation."""
    rng = np.random.default_rng(seed)
    letters = list(alphabet)
    if len(letters) ** max_len < n_words:
        raise ValueError("alphabet too small for the requested number of words")
    words = set()
    while len(words) < n_words:
        k = int(rng.integers(min_len, max_len + 1))
        words.add("".join(rng.choice(letters, size=k)))
    return Lexicon(tuple(LexEntry(w, tuple(c.upper() for c in w)) for w in sorted(words)))
