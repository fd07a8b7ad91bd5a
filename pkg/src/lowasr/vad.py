"""Subband order-statistic-filter VAD and segmentation fusion.

Each frame's subband amplitudes are smoothed into a long-term envelope by
taking a percentile over a symmetric window of neighbouring frames. The
long-term spectral divergence (LTSD) compares that envelope with a running
noise estimate; frames above the threshold are speech.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dsp import AudioBuffer, power_spectrum

__all__ = [
    "Segment",
    "Segmentation",
    "OsfVadConfig",
    "VadError",
    "subband_amplitudes",
    "osf_envelope",
    "ltsd_decisions",
    "osf_vad",
    "apply_post_rules",
    "fuse_segmentations",
    "rasterize",
    "read_segments",
    "write_segments",
    "format_segments",
    "parse_segments",
]

log = logging.getLogger(__name__)

_TINY = 1e-12


class VadError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Segment:
    start: float
    end: float

    def __post_init__(self):
        if not (0.0 <= self.start < self.end):
            raise ValueError(f"invalid segment [{self.start}, {self.end}]")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Segmentation:
    recording_id: str
    segments: tuple = ()

    def __post_init__(self):
        segs = tuple(self.segments)
        for a, b in zip(segs, segs[1:]):
            if b.start < a.end:
                raise ValueError(f"{self.recording_id}: segments overlap or are unsorted at {b.start}")
        object.__setattr__(self, "segments", segs)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)


@dataclass(frozen=True)
class OsfVadConfig:
    n_subbands: int = 6
    osf_window: int = 8  # frames on each side
    percentile: float = 0.9
    threshold_db: float = 6.0
    noise_init: float = 0.1
    noise_update: float = 0.98
    hangover: float = 0.0
    min_seg: float = 0.3
    max_gap: float = 0.3
    max_seg: float = 30.0
    frame_len: float = 0.025
    frame_shift: float = 0.010

    def __post_init__(self):
        if self.n_subbands < 1 or self.osf_window < 0:
            raise ValueError("n_subbands must be >= 1 and osf_window >= 0")
        if not 0.0 <= self.percentile <= 1.0:
            raise ValueError("percentile must lie in [0, 1]")
        if not 0.0 < self.noise_update < 1.0:
            raise ValueError("noise_update must lie in (0, 1)")
        if self.hangover < 0 or self.min_seg < 0 or self.max_gap < 0:
            raise ValueError("durations must be non-negative")
        if self.max_seg <= self.min_seg:
            raise ValueError("max_seg must exceed min_seg")


# ---------------------------------------------------------------------------
# frame-level analysis


def subband_amplitudes(buf: AudioBuffer, cfg: OsfVadConfig) -> np.ndarray:
    """RMS magnitude of K linearly spaced subbands (DC excluded), shape T x K."""
    spec = power_spectrum(buf, cfg.frame_len, cfg.frame_shift).frames
    bands = np.array_split(np.arange(1, spec.shape[1]), cfg.n_subbands)
    return np.sqrt(np.stack([spec[:, b].mean(axis=1) for b in bands], axis=1))


def osf_envelope(amp: np.ndarray, half_window: int, percentile: float) -> np.ndarray:
    """Per-subband order statistic over frames ``t-N .. t+N`` (truncated at the edges)."""
    if len(amp) == 0:
        return amp.copy()
    n = half_window
    padded = np.pad(amp, ((n, n), (0, 0)), constant_values=np.nan)
    win = np.lib.stride_tricks.sliding_window_view(padded, 2 * n + 1, axis=0)
    return np.nanquantile(win, percentile, axis=-1)


def ltsd_decisions(buf: AudioBuffer, cfg: OsfVadConfig):
    """Per-frame ``(ltsd_db, is_speech)`` with the adaptive noise estimate."""
    amp = subband_amplitudes(buf, cfg)
    n_init = max(1, int(round(cfg.noise_init / cfg.frame_shift)))
    if buf.duration < cfg.noise_init or len(amp) < n_init:
        raise VadError(
            f"buffer of {buf.duration:.3f} s is shorter than the {cfg.noise_init} s noise initialisation"
        )
    env = np.maximum(osf_envelope(amp, cfg.osf_window, cfg.percentile), _TINY)
    noise = np.maximum(np.sqrt(np.mean(amp[:n_init] ** 2, axis=0)), _TINY)
    alpha = cfg.noise_update
    ltsd = np.empty(len(amp))
    speech = np.zeros(len(amp), dtype=bool)
    for t in range(len(amp)):
        ltsd[t] = 10.0 * math.log10(np.mean(env[t] ** 2 / noise ** 2))
        if ltsd[t] > cfg.threshold_db:
            speech[t] = True
        else:
            noise = np.maximum(alpha * noise + (1.0 - alpha) * amp[t], _TINY)
    return ltsd, speech


def _runs(mask):
    """(first, last) index pairs of True runs."""
    if len(mask) == 0:
        return []
    d = np.diff(np.concatenate(([0], mask.astype(np.int8), [0])))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


# ---------------------------------------------------------------------------
# segment post-processing


def apply_post_rules(segments, min_seg=0.3, max_gap=0.3, max_seg=None, split_at=None):
    """Merge gaps shorter than ``max_gap``, drop segments shorter than ``min_seg``,
    then split segments longer than ``max_seg``.

    ``split_at(seg)`` returns the cut time for an over-long segment; by default
    it is cut in the middle. Pieces of a split abut each other.
    """
    merged = []
    for s in sorted(segments):
        if merged and s.start - merged[-1].end < max_gap:
            merged[-1] = Segment(merged[-1].start, max(merged[-1].end, s.end))
        else:
            merged.append(s)
    kept = [s for s in merged if s.duration >= min_seg]
    if max_seg is None:
        return kept
    out = []
    stack = list(reversed(kept))
    while stack:
        s = stack.pop()
        if s.duration <= max_seg:
            out.append(s)
            continue
        cut = split_at(s) if split_at else 0.5 * (s.start + s.end)
        lo, hi = s.start + min_seg, s.end - min_seg
        cut = min(max(cut, lo), hi)
        stack.append(Segment(cut, s.end))
        stack.append(Segment(s.start, cut))
    return out


def osf_vad(buf: AudioBuffer, cfg: Optional[OsfVadConfig] = None, recording_id: str = "rec") -> Segmentation:
    cfg = cfg or OsfVadConfig()
    if buf.sample_rate not in (8000, 16000):
        raise VadError(f"OSF VAD expects 8 or 16 kHz audio, got {buf.sample_rate}")
    ltsd, speech = ltsd_decisions(buf, cfg)
    shift = cfg.frame_shift
    hang = int(round(cfg.hangover / shift))
    if hang:
        for first, last in _runs(speech):
            speech[last + 1:last + 1 + hang] = True

    half = cfg.frame_len / 2.0
    dur = buf.duration
    segs = []
    for first, last in _runs(speech):
        start = max(0.0, first * shift + half - shift / 2)
        end = min(dur, last * shift + half + shift / 2)
        if end > start:
            segs.append(Segment(start, end))

    def split_at(seg):
        lo = int(math.ceil((seg.start + cfg.min_seg - half) / shift))
        hi = int(math.floor((seg.end - cfg.min_seg - half) / shift))
        lo, hi = max(lo, 0), min(hi, len(ltsd) - 1)
        if hi < lo:
            return 0.5 * (seg.start + seg.end)
        t = lo + int(np.argmin(ltsd[lo:hi + 1]))
        return t * shift + half

    segs = apply_post_rules(segs, cfg.min_seg, cfg.max_gap, cfg.max_seg, split_at)
    return Segmentation(recording_id, tuple(segs))


# ---------------------------------------------------------------------------
# fusion


def rasterize(seg: Segmentation, n_frames: int, frame: float = 0.01) -> np.ndarray:
    """Frame ``i`` is speech when its centre ``(i + 0.5) * frame`` lies in a segment."""
    centres = (np.arange(n_frames) + 0.5) * frame
    mask = np.zeros(n_frames, dtype=bool)
    for s in seg:
        mask |= (centres >= s.start) & (centres < s.end)
    return mask


def fuse_segmentations(
    segs: Sequence[Segmentation],
    policy: str = "majority",
    frame: float = 0.01,
    min_seg: float = 0.3,
    max_gap: float = 0.3,
) -> Segmentation:
    """Frame-level vote over several segmenters' outputs for one recording.

    ``majority`` requires strictly more than half of the inputs.
    """
    if not segs:
        raise VadError("need at least one segmentation")
    rec = segs[0].recording_id
    for s in segs:
        if s.recording_id != rec:
            raise VadError(f"recording id mismatch: {rec!r} vs {s.recording_id!r}")
    if policy not in ("union", "intersection", "majority"):
        raise VadError(f"unknown fusion policy {policy!r}")
    end = max((x.end for s in segs for x in s), default=0.0)
    n_frames = int(math.ceil(end / frame)) + 1
    votes = np.sum([rasterize(s, n_frames, frame) for s in segs], axis=0)
    if policy == "union":
        mask = votes >= 1
    elif policy == "intersection":
        mask = votes == len(segs)
    else:
        mask = 2 * votes > len(segs)
    out = [Segment(first * frame, (last + 1) * frame) for first, last in _runs(mask)]
    return Segmentation(rec, tuple(apply_post_rules(out, min_seg, max_gap)))


# ---------------------------------------------------------------------------
# Kaldi segments files: "seg_id rec_id start end"


def segment_id(rec: str, seg: Segment) -> str:
    return f"{rec}_{int(round(seg.start * 1000)):07d}_{int(round(seg.end * 1000)):07d}"


def format_segments(segmentations: Sequence[Segmentation]) -> str:
    lines = []
    for s in segmentations:
        for seg in s:
            lines.append(f"{segment_id(s.recording_id, seg)} {s.recording_id} {seg.start:.3f} {seg.end:.3f}")
    return "".join(line + "\n" for line in lines)


def parse_segments(text: str) -> list:
    by_rec = defaultdict(list)
    order = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise VadError(f"segments line {lineno}: expected 'seg_id rec_id start end'")
        _, rec, start, end = parts
        if rec not in by_rec:
            order.append(rec)
        try:
            by_rec[rec].append(Segment(float(start), float(end)))
        except ValueError as exc:
            raise VadError(f"segments line {lineno}: {exc}") from None
    return [Segmentation(rec, tuple(sorted(by_rec[rec]))) for rec in order]


def read_segments(path) -> list:
    with open(path, encoding="utf-8") as f:
        return parse_segments(f.read())


def write_segments(segmentations, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_segments(segmentations))
