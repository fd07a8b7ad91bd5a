"""Pronunciation lexicons and Kaldi-style text corpora.

Lexicon lines are ``word<TAB>[prob<TAB>]p1 p2 ...``; lines starting with
``;;`` are comments. Corpus lines are ``utt_id w1 w2 ...``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

__all__ = [
    "LexEntry",
    "Lexicon",
    "Corpus",
    "LexiconParseError",
    "DEFAULT_CASE_SENSITIVE",
    "parse_lexicon",
    "serialize_lexicon",
    "read_lexicon",
    "write_lexicon",
    "parse_corpus",
    "serialize_corpus",
    "read_corpus",
    "oov_words",
    "filter_oov",
]

#: Word matching policy. False folds case (CIS datasets), True matches
#: exactly (CSS datasets). Individual calls may override it.
DEFAULT_CASE_SENSITIVE = False

COMMENT_PREFIX = ";;"


class LexiconParseError(ValueError):
    """Malformed lexicon or corpus text."""

    def __init__(self, msg, lineno=None):
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)
        self.lineno = lineno


def _has_space(s: str) -> bool:
    return any(c.isspace() for c in s)


@dataclass(frozen=True)
class LexEntry:
    word: str
    pron: tuple[str, ...]
    prob: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "pron", tuple(self.pron))
        if not self.word or _has_space(self.word) or self.word.startswith(COMMENT_PREFIX):
            raise ValueError(f"invalid word {self.word!r}")
        if not self.pron:
            raise ValueError(f"empty pronunciation for {self.word!r}")
        for p in self.pron:
            if not p or _has_space(p):
                raise ValueError(f"invalid phone {p!r} in entry {self.word!r}")
        if self.prob is not None:
            if not (0.0 < self.prob <= 1.0) or math.isnan(self.prob):
                raise ValueError(f"probability {self.prob} of {self.word!r} not in (0, 1]")


@dataclass(frozen=True)
class Lexicon:
    """Ordered, duplicate-free collection of :class:`LexEntry`.

    Duplicate ``(word, pron)`` pairs are collapsed, keeping the first
    occurrence. Homographs (same word, different pronunciation) are kept.
    """

    entries: tuple[LexEntry, ...] = ()
    phone_set: frozenset = field(init=False, compare=False)

    def __post_init__(self):
        seen = set()
        kept = []
        for e in self.entries:
            key = (e.word, e.pron)
            if key in seen:
                continue
            seen.add(key)
            kept.append(e)
        object.__setattr__(self, "entries", tuple(kept))
        object.__setattr__(
            self, "phone_set", frozenset(p for e in kept for p in e.pron)
        )

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def words(self, case_sensitive: Optional[bool] = None) -> set[str]:
        fold = _folder(case_sensitive)
        return {fold(e.word) for e in self.entries}

    def prons(self) -> set[tuple[str, ...]]:
        return {e.pron for e in self.entries}

    def extend(self, entries: Iterable[LexEntry]) -> "Lexicon":
        return Lexicon(self.entries + tuple(entries))


@dataclass(frozen=True)
class Corpus:
    utterances: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self):
        utts = tuple((u, tuple(ws)) for u, ws in self.utterances)
        ids = [u for u, _ in utts]
        if len(set(ids)) != len(ids):
            dup = next(u for u in ids if ids.count(u) > 1)
            raise ValueError(f"duplicate utterance id {dup!r}")
        object.__setattr__(self, "utterances", utts)

    def __len__(self):
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def as_dict(self) -> dict[str, tuple[str, ...]]:
        return dict(self.utterances)

    def word_types(self) -> set[str]:
        return {w for _, ws in self.utterances for w in ws}


def _folder(case_sensitive):
    if case_sensitive is None:
        case_sensitive = DEFAULT_CASE_SENSITIVE
    return (lambda w: w) if case_sensitive else str.casefold


def parse_lexicon(raw: str) -> Lexicon:
    entries = []
    for lineno, line in enumerate(raw.splitlines(), 1):
        if not line.strip() or line.startswith(COMMENT_PREFIX):
            continue
        fields = line.rstrip("\r").split("\t")
        if len(fields) < 2:
            raise LexiconParseError("expected word<TAB>[prob<TAB>]phones", lineno)
        if len(fields) > 3:
            raise LexiconParseError(f"too many fields ({len(fields)})", lineno)
        word, prob = fields[0], None
        if len(fields) == 3:
            try:
                prob = float(fields[1])
            except ValueError:
                raise LexiconParseError(f"non-numeric probability {fields[1]!r}", lineno) from None
        pron = fields[-1].split()
        try:
            entries.append(LexEntry(word, tuple(pron), prob))
        except ValueError as exc:
            raise LexiconParseError(str(exc), lineno) from None
    return Lexicon(tuple(entries))


def serialize_lexicon(lex: Lexicon, header: Optional[str] = None) -> str:
    lines = []
    if header:
        lines.append(f"{COMMENT_PREFIX} {header}")
    for e in lex.entries:
        if e.prob is None:
            lines.append(f"{e.word}\t{' '.join(e.pron)}")
        else:
            lines.append(f"{e.word}\t{e.prob!r}\t{' '.join(e.pron)}")
    return "".join(line + "\n" for line in lines)


def read_lexicon(path) -> Lexicon:
    with open(path, encoding="utf-8") as f:
        return parse_lexicon(f.read())


def write_lexicon(lex: Lexicon, path, header: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize_lexicon(lex, header))


def parse_corpus(raw: str) -> Corpus:
    utts = []
    ids = set()
    for lineno, line in enumerate(raw.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] in ids:
            raise LexiconParseError(f"duplicate utterance id {parts[0]!r}", lineno)
        ids.add(parts[0])
        utts.append((parts[0], tuple(parts[1:])))
    return Corpus(tuple(utts))


def serialize_corpus(corpus: Corpus) -> str:
    return "".join(
        " ".join((utt,) + words) + "\n" for utt, words in corpus.utterances
    )


def read_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as f:
        return parse_corpus(f.read())


def oov_words(corpus: Corpus, lex: Lexicon, case_sensitive: Optional[bool] = None) -> set[str]:
    """Corpus word types with no lexicon entry under the case policy.

    Returned words keep their corpus spelling.
    """
    fold = _folder(case_sensitive)
    vocab = lex.words(case_sensitive)
    return {w for w in corpus.word_types() if fold(w) not in vocab}


def filter_oov(corpus: Corpus, lex: Lexicon, case_sensitive: Optional[bool] = None) -> Corpus:
    """Drop out-of-vocabulary words; emptied utterances are retained."""
    fold = _folder(case_sensitive)
    vocab = lex.words(case_sensitive)
    return Corpus(
        tuple(
            (utt, tuple(w for w in words if fold(w) in vocab))
            for utt, words in corpus.utterances
        )
    )


def letters(word: str) -> list[str]:
    """Default grapheme split: one symbol per character."""
    return list(word)


def make_lexicon(pairs: Sequence[tuple[str, Sequence[str]]]) -> Lexicon:
    return Lexicon(tuple(LexEntry(w, tuple(p)) for w, p in pairs))
