"""Signal plumbing: WAV I/O, rational resampling, framing, power spectra, log-mel."""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

__all__ = [
    "AudioBuffer",
    "FeatureMatrix",
    "AudioFormatError",
    "SUPPORTED_RATES",
    "read_wav",
    "write_wav",
    "resample",
    "resample_ratio",
    "frame_signal",
    "power_spectrum",
    "mel_filterbank",
    "logmel",
    "LOG_FLOOR",
]

SUPPORTED_RATES = (8000, 16000, 44100, 48000)
LOG_FLOOR = 1e-10
TAPS_PER_PHASE = 64
KAISER_BETA = 8.6
CUTOFF = 0.95


class AudioFormatError(ValueError):
    pass


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("AudioBuffer holds a single channel")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite samples")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class FeatureMatrix:
    frames: np.ndarray  # T x F
    frame_shift: float
    feature_kind: str = "logmel"

    @property
    def shape(self):
        return self.frames.shape


def read_wav(path, channel: int = 0) -> AudioBuffer:
    """Read one channel of a 16-bit PCM WAV file, scaled by 1/32768."""
    try:
        with wave.open(str(path), "rb") as w:
            nch, width, rate, nframes = w.getnchannels(), w.getsampwidth(), w.getframerate(), w.getnframes()
            raw = w.readframes(nframes)
    except wave.Error as exc:
        raise AudioFormatError(f"{path}: {exc}") from None
    except EOFError:
        raise AudioFormatError(f"{path}: truncated WAV file") from None
    if width != 2:
        raise AudioFormatError(f"{path}: unsupported sample width {8 * width} bits (need 16)")
    if rate not in SUPPORTED_RATES:
        raise AudioFormatError(f"{path}: unsupported sample rate {rate}")
    if not 0 <= channel < nch:
        raise AudioFormatError(f"{path}: channel {channel} out of range ({nch} channels)")
    data = np.frombuffer(raw, dtype="<i2").reshape(-1, nch)[:, channel]
    return AudioBuffer(data.astype(np.float64) / 32768.0, rate)


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    q = np.round(np.asarray(samples) * 32768.0)
    return np.clip(q, -32768, 32767).astype("<i2")


def write_wav(buf: AudioBuffer, path) -> None:
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buf.sample_rate)
        w.writeframes(to_pcm16(buf.samples).tobytes())


def _lowpass(up, down):
    taps = 2 * (TAPS_PER_PHASE // 2) * max(up, down) + 1
    cutoff = CUTOFF / max(up, down)  # relative to the upsampled Nyquist
    return signal.firwin(taps, cutoff, window=("kaiser", KAISER_BETA))


def resample_ratio(x: np.ndarray, up: int, down: int) -> np.ndarray:
    """Polyphase resampling of ``x`` by ``up/down`` with a Kaiser-sinc filter."""
    if up == down:
        return np.array(x, dtype=np.float64, copy=True)
    if len(x) == 0:
        return np.zeros(0)
    g = math.gcd(up, down)
    up, down = up // g, down // g
    return signal.resample_poly(x, up, down, window=_lowpass(up, down))


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    if target_rate < 4000:
        raise ValueError("target_rate must be >= 4000 Hz")
    if target_rate == buf.sample_rate:
        return AudioBuffer(buf.samples.copy(), buf.sample_rate)
    r = Fraction(int(target_rate), buf.sample_rate)
    y = resample_ratio(buf.samples, r.numerator, r.denominator)
    return AudioBuffer(y, target_rate)


def frame_signal(x: np.ndarray, frame_len: int, shift: int) -> np.ndarray:
    """Frames as rows; trailing samples that do not fill a frame are dropped."""
    n = len(x)
    if n < frame_len:
        return np.zeros((0, frame_len))
    count = 1 + (n - frame_len) // shift
    return np.lib.stride_tricks.sliding_window_view(x, frame_len)[::shift][:count]


def _frame_params(sr, frame_len, frame_shift):
    flen = int(round(frame_len * sr))
    fshift = int(round(frame_shift * sr))
    nfft = 1 << max(0, (flen - 1).bit_length())
    return flen, fshift, nfft


def power_spectrum(buf: AudioBuffer, frame_len: float = 0.025, frame_shift: float = 0.010) -> FeatureMatrix:
    """Hamming-windowed one-sided ``|FFT|^2`` per frame (no scaling)."""
    flen, fshift, nfft = _frame_params(buf.sample_rate, frame_len, frame_shift)
    frames = frame_signal(buf.samples, flen, fshift) * np.hamming(flen)
    spec = np.abs(np.fft.rfft(frames, n=nfft, axis=1)) ** 2
    return FeatureMatrix(spec.reshape(-1, nfft // 2 + 1), frame_shift, "power_spectrum")


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, nfft: int, sr: int, fmin: float = 0.0, fmax=None) -> np.ndarray:
    """Triangular HTK-mel filters, shape ``(n_mels, nfft // 2 + 1)``."""
    fmax = sr / 2.0 if fmax is None else fmax
    edges = _mel_to_hz(np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2))
    freqs = np.arange(nfft // 2 + 1) * sr / nfft
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (freqs - lo) / (mid - lo)
    down = (hi - freqs) / (hi - mid)
    fb = np.maximum(0.0, np.minimum(up, down))
    # filters narrower than a bin still pick up their nearest bin
    for k in np.flatnonzero(fb.sum(axis=1) == 0):
        fb[k, int(np.argmin(np.abs(freqs - mid[k, 0])))] = 1.0
    return fb


def logmel(buf: AudioBuffer, frame_len: float = 0.025, frame_shift: float = 0.010, n_mels: int = 40) -> FeatureMatrix:
    if len(buf) == 0:
        raise ValueError("empty buffer")
    _, _, nfft = _frame_params(buf.sample_rate, frame_len, frame_shift)
    spec = power_spectrum(buf, frame_len, frame_shift).frames
    fb = mel_filterbank(n_mels, nfft, buf.sample_rate)
    mel = spec @ fb.T
    return FeatureMatrix(np.log(np.maximum(mel, LOG_FLOOR)), frame_shift, "logmel")
