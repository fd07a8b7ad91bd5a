"""Transcript normalization and WER/CER with substitution/deletion/insertion counts."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .lexicon import Corpus

__all__ = [
    "NormPolicy",
    "ScoreReport",
    "ScoringError",
    "normalize",
    "align",
    "wer",
    "score_corpus",
]

log = logging.getLogger(__name__)

# <noise>, <hes>, [laughter]-style tags and ((...)) unintelligible spans
_NONSPEECH = re.compile(r"^(<[^<>]*>|\(\(.*\)\))$")


class ScoringError(ValueError):
    pass


@dataclass(frozen=True)
class NormPolicy:
    case: str = "cis"
    unit: str = "word"
    drop_tokens: frozenset = frozenset()
    drop_bracketed: bool = True

    def __post_init__(self):
        if self.case not in ("cis", "css"):
            raise ValueError("case must be 'cis' or 'css'")
        if self.unit not in ("word", "char"):
            raise ValueError("unit must be 'word' or 'char'")
        drop = frozenset(self.drop_tokens)
        if any(not t or any(c.isspace() for c in t) for t in drop):
            raise ValueError("drop tokens must be non-empty and whitespace-free")
        object.__setattr__(self, "drop_tokens", drop)


@dataclass
class ScoreReport:
    n_ref: int = 0
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    error_rate: float = 0.0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "ScoreReport") -> "ScoreReport":
        return _report(
            self.n_ref + other.n_ref,
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
        )

    def line(self, label: str = "WER") -> str:
        return (
            f"%{label} {100.0 * self.error_rate:.2f} "
            f"[ S={self.substitutions} D={self.deletions} I={self.insertions} N={self.n_ref} ]"
        )


def _report(n, s, d, i):
    if n > 0:
        rate = (s + d + i) / n
    else:
        rate = float(i)
        if i:
            log.warning("empty reference with %d inserted tokens; rate reported as I/1", i)
    return ScoreReport(n, s, d, i, rate)


def normalize(tokens: Sequence[str], policy: NormPolicy = NormPolicy()) -> list:
    out = []
    for t in tokens:
        if t in policy.drop_tokens or (policy.drop_bracketed and _NONSPEECH.match(t)):
            continue
        out.append(t.casefold() if policy.case == "cis" else t)
    if policy.unit == "char":
        out = [c for t in out for c in t if not c.isspace()]
    return out


def align(ref: Sequence[str], hyp: Sequence[str]):
    """Unit-cost Levenshtein alignment.

    Returns a list of ``(op, ref_tok, hyp_tok)`` with op in
    ``{"=", "S", "D", "I"}``. Among minimum-cost paths the backtrace takes
    a diagonal step (match or substitution) whenever it is optimal, so
    substitutions are preferred over deletion+insertion pairs.
    """
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        d[i][0] = i
    for j in range(1, m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        r = ref[i - 1]
        row, prev = d[i], d[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (r != hyp[j - 1]), prev[j] + 1, row[j - 1] + 1)
    ops = []
    i, j = n, m
    while i or j:
        if i and j and d[i][j] == d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            ops.append(("=" if ref[i - 1] == hyp[j - 1] else "S", ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i and d[i][j] == d[i - 1][j] + 1:
            ops.append(("D", ref[i - 1], None))
            i -= 1
        else:
            ops.append(("I", None, hyp[j - 1]))
            j -= 1
    ops.reverse()
    return ops


def wer(ref: Sequence[str], hyp: Sequence[str]) -> ScoreReport:
    s = d = i = 0
    for op, _, _ in align(ref, hyp):
        if op == "S":
            s += 1
        elif op == "D":
            d += 1
        elif op == "I":
            i += 1
    return _report(len(ref), s, d, i)


def score_corpus(refs: Corpus, hyps: Corpus, policy: NormPolicy = NormPolicy(), per_utt: Optional[list] = None) -> ScoreReport:
    """Pooled error counts over utterances matched by id.

    A reference without a hypothesis counts all its tokens as deletions.
    ``per_utt``, when given, receives ``(utt_id, ScoreReport)`` rows.
    """
    ref_map = refs.as_dict()
    hyp_map = hyps.as_dict()
    extra = sorted(set(hyp_map) - set(ref_map))
    if extra:
        raise ScoringError(f"hypothesis utterance(s) without reference: {', '.join(extra[:5])}")
    total = ScoreReport()
    for utt, words in refs.utterances:
        r = normalize(words, policy)
        h = normalize(hyp_map.get(utt, ()), policy)
        rep = wer(r, h)
        if per_utt is not None:
            per_utt.append((utt, rep))
        total = total + rep
    return total
