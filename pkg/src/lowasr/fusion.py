"""ROVER: align N transcripts into a word transition network and vote per slot."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

__all__ = [
    "Token",
    "Arc",
    "Hypothesis",
    "WordTransitionNetwork",
    "VoteConfig",
    "FusionError",
    "align_hypotheses",
    "vote",
    "rover",
    "parse_text_hyps",
    "format_text_hyps",
    "parse_ctm",
    "format_ctm",
]


class FusionError(ValueError):
    pass


class Token(NamedTuple):
    word: str
    conf: Optional[float] = None
    start: Optional[float] = None
    dur: Optional[float] = None


class Arc(NamedTuple):
    word: Optional[str]  # None is the NULL arc
    conf: Optional[float]
    system: int
    token: Optional[Token] = None


@dataclass(frozen=True)
class Hypothesis:
    utt_id: str
    tokens: tuple = ()
    channel: Optional[str] = None

    def __post_init__(self):
        toks = tuple(t if isinstance(t, Token) else Token(*t) if isinstance(t, tuple) else Token(t) for t in self.tokens)
        for t in toks:
            if not t.word or any(c.isspace() for c in t.word):
                raise FusionError(f"{self.utt_id}: invalid word {t.word!r}")
            if t.conf is not None and not 0.0 <= t.conf <= 1.0:
                raise FusionError(f"{self.utt_id}: confidence {t.conf} outside [0, 1]")
        object.__setattr__(self, "tokens", toks)

    @property
    def words(self) -> list:
        return [t.word for t in self.tokens]

    @classmethod
    def from_words(cls, utt_id, words, confs=None):
        confs = confs if confs is not None else [None] * len(words)
        return cls(utt_id, tuple(Token(w, c) for w, c in zip(words, confs)))


@dataclass
class WordTransitionNetwork:
    utt_id: str
    n_systems: int = 0
    slots: list = field(default_factory=list)

    def check(self):
        for k, slot in enumerate(self.slots):
            systems = sorted(a.system for a in slot)
            if systems != list(range(self.n_systems)):
                raise FusionError(f"slot {k} has arcs for systems {systems}, expected 0..{self.n_systems - 1}")

    def slot_words(self, k) -> set:
        return {a.word for a in self.slots[k]}


@dataclass(frozen=True)
class VoteConfig:
    alpha: float = 1.0
    null_conf: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


def _add_system(wtn: WordTransitionNetwork, hyp: Hypothesis):
    sysidx = wtn.n_systems
    toks = hyp.tokens
    n_slots, n_words = len(wtn.slots), len(toks)
    slot_sets = [wtn.slot_words(k) for k in range(n_slots)]

    # cost[i][j]: align first i slots with first j words
    inf = float("inf")
    cost = [[inf] * (n_words + 1) for _ in range(n_slots + 1)]
    cost[0][0] = 0
    for i in range(n_slots + 1):
        for j in range(n_words + 1):
            c = cost[i][j]
            if i and j:
                sub = 0 if toks[j - 1].word in slot_sets[i - 1] else 1
                c = min(c, cost[i - 1][j - 1] + sub)
            if j:
                c = min(c, cost[i][j - 1] + 1)
            if i:
                c = min(c, cost[i - 1][j] + (0 if None in slot_sets[i - 1] else 1))
            cost[i][j] = c

    # backtrace; at equal cost prefer match > substitution > insertion > deletion
    ops = []
    i, j = n_slots, n_words
    while i or j:
        c = cost[i][j]
        if i and j:
            hit = toks[j - 1].word in slot_sets[i - 1]
            if hit and cost[i - 1][j - 1] == c:
                ops.append(("diag", i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        cands = []
        if i and j and cost[i - 1][j - 1] + 1 == c and toks[j - 1].word not in slot_sets[i - 1]:
            cands.append(("diag", i - 1, j - 1))
        if j and cost[i][j - 1] + 1 == c:
            cands.append(("ins", i, j - 1))
        if i and cost[i - 1][j] + (0 if None in slot_sets[i - 1] else 1) == c:
            cands.append(("del", i - 1, j))
        op = cands[0]
        ops.append(op)
        _, i, j = op
    ops.reverse()

    new_slots = []
    for op, i, j in ops:
        if op == "diag":
            t = toks[j]
            new_slots.append(wtn.slots[i] + [Arc(t.word, t.conf, sysidx, t)])
        elif op == "del":
            new_slots.append(wtn.slots[i] + [Arc(None, None, sysidx)])
        else:
            t = toks[j]
            slot = [Arc(None, None, s) for s in range(sysidx)]
            new_slots.append(slot + [Arc(t.word, t.conf, sysidx, t)])
    wtn.slots = new_slots
    wtn.n_systems += 1
    wtn.check()


def align_hypotheses(hyps: Sequence[Hypothesis]) -> WordTransitionNetwork:
    """Build a WTN by aligning each hypothesis in turn against the network so far.

    Input order matters: the first hypothesis seeds the network.
    """
    if not hyps:
        raise FusionError("need at least one hypothesis")
    utt = hyps[0].utt_id
    for h in hyps:
        if h.utt_id != utt:
            raise FusionError(f"mixed utterance ids: {utt!r} vs {h.utt_id!r}")
    wtn = WordTransitionNetwork(utt)
    for h in hyps:
        _add_system(wtn, h)
    return wtn


def vote(wtn: WordTransitionNetwork, cfg: VoteConfig = VoteConfig(), channel=None) -> Hypothesis:
    """Per slot pick the word maximising ``alpha * freq + (1 - alpha) * mean_conf``."""
    n = wtn.n_systems
    out = []
    for slot in wtn.slots:
        groups = defaultdict(list)
        for arc in slot:
            groups[arc.word].append(arc)
        if cfg.alpha < 1.0 and any(a.word is not None and a.conf is None for a in slot):
            raise FusionError("confidence-weighted voting (alpha < 1) needs confidences on every word; use alpha=1")
        ranked = []
        for word, arcs in groups.items():
            if word is None:
                mconf = cfg.null_conf
            else:
                mconf = sum(a.conf or 0.0 for a in arcs) / len(arcs)
            sc = cfg.alpha * (len(arcs) / n) + (1.0 - cfg.alpha) * mconf
            first = min(a.system for a in arcs)
            # ties: non-NULL first, higher mean confidence, lexicographic, lowest system;
            # at alpha=1 confidences are ignored outright, tie-break included
            tie_conf = -mconf if cfg.alpha < 1.0 else 0.0
            ranked.append(((-sc, word is None, tie_conf, word or "", first), word, arcs))
        ranked.sort(key=lambda r: r[0])
        _, word, arcs = ranked[0]
        if word is None:
            continue
        base = min(arcs, key=lambda a: a.system).token
        confs = [a.conf for a in arcs if a.conf is not None]
        conf = sum(confs) / len(confs) if len(confs) == len(arcs) else None
        out.append(Token(word, conf, base.start if base else None, base.dur if base else None))
    return Hypothesis(wtn.utt_id, tuple(out), channel)


def rover(hyps: Sequence[Hypothesis], cfg: VoteConfig = VoteConfig()) -> Hypothesis:
    return vote(align_hypotheses(hyps), cfg, channel=hyps[0].channel)


# ---------------------------------------------------------------------------
# file formats


def parse_text_hyps(text: str) -> dict:
    """Kaldi text: ``utt_id w1 w2 ...`` -> ``{utt_id: Hypothesis}``."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] in out:
            raise FusionError(f"line {lineno}: duplicate utterance id {parts[0]!r}")
        out[parts[0]] = Hypothesis.from_words(parts[0], parts[1:])
    return out


def format_text_hyps(hyps) -> str:
    return "".join(" ".join([h.utt_id] + h.words) + "\n" for h in hyps)


def parse_ctm(text: str) -> dict:
    """CTM ``rec chan start dur word [conf]`` grouped by ``(rec, chan)``; ``;;`` lines are comments."""
    groups = defaultdict(list)
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith(";;"):
            continue
        parts = line.split()
        if not parts:
            continue
        if len(parts) not in (5, 6):
            raise FusionError(f"CTM line {lineno}: expected 5 or 6 fields")
        rec, chan, start, dur, word = parts[:5]
        try:
            conf = float(parts[5]) if len(parts) == 6 else None
            groups[(rec, chan)].append(Token(word, conf, float(start), float(dur)))
        except ValueError as exc:
            raise FusionError(f"CTM line {lineno}: {exc}") from None
    out = {}
    for (rec, chan), toks in groups.items():
        toks.sort(key=lambda t: t.start)
        out[(rec, chan)] = Hypothesis(rec, tuple(toks), chan)
    return out


def format_ctm(hyps, header: Optional[str] = None) -> str:
    lines = [f";; {header}"] if header else []
    for h in hyps:
        chan = h.channel or "1"
        for t in h.tokens:
            start = 0.0 if t.start is None else t.start
            dur = 0.0 if t.dur is None else t.dur
            row = f"{h.utt_id} {chan} {start:.3f} {dur:.3f} {t.word}"
            if t.conf is not None:
                row += f" {t.conf:.4f}"
            lines.append(row)
    return "".join(line + "\n" for line in lines)
