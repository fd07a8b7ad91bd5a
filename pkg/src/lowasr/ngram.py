"""Backoff n-gram language models over arbitrary symbol sequences.

Probabilities are stored ARPA-style as log10 values with log10 backoff
weights, so a query for ``P(w | h)`` is::

    probs[(h, w)]                          if present
    backoffs[h] + P(w | h[1:])             otherwise

Three estimators are provided: maximum likelihood, Katz (Good-Turing
discounts with backoff), and interpolated Kneser-Ney converted to backoff
form. Every stored history is normalized over the predictable vocabulary
(all symbols plus ``</s>``, excluding ``<s>``).
"""

from __future__ import annotations

import heapq
import math
from collections import Counter, defaultdict
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "BOS",
    "EOS",
    "UNK",
    "NGramError",
    "NGramModel",
    "ScoredSequence",
    "train_ngram",
    "score",
    "generate_topk",
    "sample_sequences",
    "to_arpa",
    "from_arpa",
    "read_arpa",
    "write_arpa",
]

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

SMOOTHING = ("mle", "katz", "kneser_ney")
DEFAULT_DISCOUNT = 0.75
KATZ_MAX_COUNT = 5
ARPA_LOG_ZERO = -99.0


class NGramError(ValueError):
    pass


class ScoredSequence(NamedTuple):
    symbols: tuple
    logprob: float


class NGramModel:
    """Immutable-by-convention backoff n-gram model.

    Parameters
    ----------
    order : int
        Maximum n-gram length.
    vocab : iterable of str
        Symbols known to the model, including ``<s>`` and ``</s>``.
    probs : dict
        ``(history_tuple, symbol) -> log10 P``.
    backoffs : dict
        ``history_tuple -> log10 backoff weight``.
    """

    def __init__(self, order, vocab, probs, backoffs, smoothing="kneser_ney", discounts=None):
        if order < 1:
            raise NGramError("order must be >= 1")
        self.order = int(order)
        self.vocab = frozenset(vocab) | {BOS, EOS}
        self.probs = dict(probs)
        self.backoffs = dict(backoffs)
        self.smoothing = smoothing
        self.discounts = dict(discounts or {})
        self.unk = UNK in self.vocab
        # predictable symbols, sorted for deterministic iteration
        self.predictable = tuple(sorted(self.vocab - {BOS}))
        self._succ_cache = {}

    def __repr__(self):
        return (
            f"NGramModel(order={self.order}, vocab={len(self.vocab)}, "
            f"ngrams={len(self.probs)}, smoothing={self.smoothing!r})"
        )

    @property
    def start(self) -> tuple:
        return (BOS,)[-(self.order - 1):] if self.order > 1 else ()

    def advance(self, history: tuple, sym: str) -> tuple:
        if self.order == 1:
            return ()
        return (history + (sym,))[-(self.order - 1):]

    def logprob(self, history: Sequence[str], sym: str) -> float:
        """log10 P(sym | history) with backoff; history is truncated."""
        h = tuple(history)[-(self.order - 1):] if self.order > 1 else ()
        acc = 0.0
        while True:
            lp = self.probs.get((h, sym))
            if lp is not None:
                return acc + lp
            if not h:
                if sym in self.vocab and sym != BOS:
                    return -math.inf
                raise NGramError(f"symbol {sym!r} not in model vocabulary")
            acc += self.backoffs.get(h, 0.0)
            h = h[1:]

    def successors(self, history: tuple) -> list:
        """Cached ``[(sym, log10 P), ...]`` over predictable symbols with P > 0."""
        out = self._succ_cache.get(history)
        if out is None:
            out = []
            for sym in self.predictable:
                lp = self.logprob(history, sym)
                if lp > -math.inf:
                    out.append((sym, lp))
            self._succ_cache[history] = out
        return out

    def map_symbol(self, sym: str) -> str:
        if sym in self.vocab and sym not in (BOS, EOS):
            return sym
        if sym in (BOS, EOS):
            raise NGramError(f"reserved symbol {sym!r} inside a sequence")
        if self.unk:
            return UNK
        raise NGramError(f"out-of-vocabulary symbol {sym!r} (model has no {UNK} class)")


# ---------------------------------------------------------------------------
# training


def _count_ngrams(seqs, order):
    counts = [None] + [Counter() for _ in range(order)]
    for seq in seqs:
        toks = (BOS,) + tuple(seq) + (EOS,)
        for i in range(1, len(toks)):
            for m in range(1, order + 1):
                j = i - m + 1
                if j < 0:
                    break
                counts[m][toks[j:i + 1]] += 1
    return counts


def _kn_discount(adj_counts):
    coc = Counter(adj_counts.values())
    n1, n2 = coc.get(1, 0), coc.get(2, 0)
    if n1 > 0 and n2 > 0:
        return n1 / (n1 + 2 * n2)
    return DEFAULT_DISCOUNT


def _katz_ratios(counts, k=KATZ_MAX_COUNT):
    """Good-Turing discount ratio d_r for r <= k; absolute fallback if unusable."""
    coc = Counter(counts.values())
    fallback = {r: (r - DEFAULT_DISCOUNT) / r for r in range(1, k + 1)}
    n1 = coc.get(1, 0)
    if n1 == 0:
        return fallback
    big_a = (k + 1) * coc.get(k + 1, 0) / n1
    ratios = {}
    for r in range(1, k + 1):
        nr = coc.get(r, 0)
        if nr == 0:
            return fallback
        rstar = (r + 1) * coc.get(r + 1, 0) / nr
        if big_a >= 1.0:
            return fallback
        d = (rstar / r - big_a) / (1.0 - big_a)
        if not (0.0 < d < 1.0):
            return fallback
        ratios[r] = d
    return ratios


def train_ngram(
    seqs: Iterable[Sequence[str]],
    order: int = 3,
    smoothing: str = "kneser_ney",
    discount: Optional[float] = None,
    unk: bool = False,
) -> NGramModel:
    """Estimate a backoff n-gram model from symbol sequences.

    Each sequence contributes one ``</s>`` event. Kneser-Ney uses a per-order
    discount ``n1 / (n1 + 2 n2)`` estimated from count-of-counts, falling
    back to 0.75 when singletons or doubletons are absent; ``discount``
    forces a fixed value. ``unk=True`` reserves probability mass for
    ``<unk>`` via the uniform floor of the Kneser-Ney unigram level.
    """
    if order < 1:
        raise NGramError("order must be >= 1")
    if smoothing not in SMOOTHING:
        raise NGramError(f"unknown smoothing {smoothing!r}; choose from {SMOOTHING}")
    seqs = [tuple(s) for s in seqs]
    if not seqs:
        raise NGramError("cannot train on an empty corpus")
    if unk and smoothing != "kneser_ney":
        raise NGramError("an unknown-symbol class requires kneser_ney smoothing")
    for s in seqs:
        for sym in s:
            if sym in (BOS, EOS):
                raise NGramError(f"reserved symbol {sym!r} inside training sequence")

    counts = _count_ngrams(seqs, order)
    vocab = {g[0] for g in counts[1]} | {BOS, EOS}
    if unk:
        vocab.add(UNK)
    predictable = sorted(vocab - {BOS})

    if smoothing == "kneser_ney":
        stats = [None] + [Counter() for _ in range(order)]
        stats[order] = counts[order]
        for m in range(1, order):
            ext = Counter(g[1:] for g in counts[m + 1])
            for g, c in counts[m].items():
                stats[m][g] = c if g[0] == BOS else ext[g]
    else:
        stats = counts

    probs = {}
    backoffs = {}
    discounts = {}
    model = NGramModel(order, vocab, probs, backoffs, smoothing)
    # the model object reads probs/backoffs live while levels are filled in
    model.probs = probs
    model.backoffs = backoffs

    for m in range(1, order + 1):
        by_hist = defaultdict(dict)
        for g, c in stats[m].items():
            by_hist[g[:-1]][g[-1]] = c

        if smoothing == "kneser_ney":
            d = discount if discount is not None else _kn_discount(stats[m])
            discounts[m] = d
        elif smoothing == "katz" and m > 1:
            ratios = _katz_ratios(stats[m])
            discounts[m] = ratios

        for h in sorted(by_hist):
            succ = by_hist[h]
            total = sum(succ.values())
            if m == 1:
                if smoothing == "kneser_ney":
                    gamma = discounts[1] * len(succ) / total
                    floor = gamma / len(predictable)
                    for w in predictable:
                        c = succ.get(w, 0)
                        p = max(c - discounts[1], 0.0) / total + floor
                        probs[((), w)] = math.log10(p)
                else:
                    for w, c in succ.items():
                        probs[((), w)] = math.log10(c / total)
                continue

            lower = h[1:]
            if smoothing == "kneser_ney":
                d = discounts[m]
                gamma = d * len(succ) / total
                for w, c in succ.items():
                    p_low = 10.0 ** model.logprob(lower, w)
                    probs[(h, w)] = math.log10(max(c - d, 0.0) / total + gamma * p_low)
                backoffs[h] = math.log10(gamma) if gamma > 0 else -math.inf
            else:
                mass = 0.0
                low_mass = 0.0
                for w, c in succ.items():
                    if smoothing == "katz" and c <= KATZ_MAX_COUNT:
                        c = c * discounts[m][c]
                    p = c / total
                    probs[(h, w)] = math.log10(p)
                    mass += p
                    low_mass += 10.0 ** model.logprob(lower, w)
                left = 1.0 - mass
                if left <= 1e-12:
                    backoffs[h] = -math.inf
                elif low_mass >= 1.0 - 1e-12:
                    # nothing left to back off to: spread the discount back
                    for w in succ:
                        probs[(h, w)] -= math.log10(mass)
                    backoffs[h] = -math.inf
                else:
                    backoffs[h] = math.log10(left / (1.0 - low_mass))

    return NGramModel(order, vocab, probs, backoffs, smoothing, discounts)


# ---------------------------------------------------------------------------
# scoring and generation


def score(model: NGramModel, seq: Sequence[str]) -> float:
    """Total log10 probability of ``seq`` followed by ``</s>``."""
    h = model.start
    total = 0.0
    for sym in seq:
        sym = model.map_symbol(sym)
        total += model.logprob(h, sym)
        h = model.advance(h, sym)
    total += model.logprob(h, EOS)
    return total


def generate_topk(model: NGramModel, k: int, min_len: int = 0, max_len: int = 20) -> list:
    """The ``k`` most probable complete sequences with length in bounds.

    Uniform-cost best-first search: every extension adds a non-positive
    log probability, so complete sequences leave the queue in
    non-increasing score order. Equal scores come out in lexicographic
    order. Exact; returns fewer than ``k`` when the space is exhausted.
    """
    if k < 1:
        raise NGramError("k must be >= 1")
    if not 0 <= min_len <= max_len:
        raise NGramError("need 0 <= min_len <= max_len")
    out = []
    # (neg_logprob, symbols, kind, history); kind 0 = complete, 1 = partial
    heap = [(0.0, (), 1, model.start)]
    while heap:
        neg, seq, kind, hist = heapq.heappop(heap)
        if kind == 0:
            out.append(ScoredSequence(seq, -neg))
            if len(out) >= k:
                break
            continue
        cur = -neg
        n = len(seq)
        for sym, lp in model.successors(hist):
            new = cur + lp
            if sym == EOS:
                if n >= min_len:
                    heapq.heappush(heap, (-new, seq, 0, None))
            elif n < max_len:
                heapq.heappush(heap, (-new, seq + (sym,), 1, model.advance(hist, sym)))
    return out


def sample_sequences(
    model: NGramModel,
    n: int,
    min_len: int = 0,
    max_len: int = 20,
    seed: int = 0,
    max_attempts: int = 10_000,
) -> list:
    """Ancestral samples with rejection outside ``[min_len, max_len]``."""
    if n < 1:
        raise NGramError("n must be >= 1")
    rng = np.random.default_rng(seed)
    tables = {}

    def table(hist):
        t = tables.get(hist)
        if t is None:
            succ = model.successors(hist)
            syms = [s for s, _ in succ]
            lps = [lp for _, lp in succ]
            cum = np.cumsum([10.0 ** lp for lp in lps])
            t = tables[hist] = (syms, lps, cum)
        return t

    out = []
    for _ in range(n):
        for _attempt in range(max_attempts):
            hist = model.start
            seq = []
            total = 0.0
            ok = True
            while True:
                syms, lps, cum = table(hist)
                i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
                i = min(i, len(syms) - 1)
                total += lps[i]
                if syms[i] == EOS:
                    break
                seq.append(syms[i])
                if len(seq) > max_len:
                    ok = False
                    break
                hist = model.advance(hist, syms[i])
            if ok and len(seq) >= min_len:
                out.append(ScoredSequence(tuple(seq), total))
                break
        else:
            raise NGramError(
                f"no sample within length bounds [{min_len}, {max_len}] after {max_attempts} attempts"
            )
    return out


# ---------------------------------------------------------------------------
# ARPA I/O


def _fmt(x):
    if x == -math.inf or x <= ARPA_LOG_ZERO:
        return f"{ARPA_LOG_ZERO:.6f}"
    return f"{x:.6f}"


def to_arpa(model: NGramModel, header: Optional[str] = None) -> str:
    levels = defaultdict(list)
    for (h, w), lp in model.probs.items():
        levels[len(h) + 1].append((h + (w,), lp))
    # <s> is a unigram that is never predicted
    if (BOS,) not in {g for g, _ in levels[1]}:
        levels[1].append(((BOS,), -math.inf))
    lines = []
    if header:
        lines.append(header)
        lines.append("")
    lines.append("\\data\\")
    for m in range(1, model.order + 1):
        lines.append(f"ngram {m}={len(levels[m])}")
    for m in range(1, model.order + 1):
        lines.append("")
        lines.append(f"\\{m}-grams:")
        for g, lp in sorted(levels[m]):
            row = f"{_fmt(lp)}\t{' '.join(g)}"
            if m < model.order and g in model.backoffs:
                row += f"\t{_fmt(model.backoffs[g])}"
            lines.append(row)
    lines.append("")
    lines.append("\\end\\")
    return "\n".join(lines) + "\n"


def _parse_logp(s):
    x = float(s)
    return -math.inf if x <= ARPA_LOG_ZERO else x


def from_arpa(text: str) -> NGramModel:
    probs = {}
    backoffs = {}
    vocab = set()
    order = 0
    section = None
    in_data = False
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line == "\\data\\":
            in_data = True
            section = "data"
            continue
        if not in_data:
            continue
        if line == "\\end\\":
            break
        if line.startswith("\\") and line.endswith("-grams:"):
            section = int(line[1:-len("-grams:")])
            continue
        if section == "data":
            if line.startswith("ngram "):
                m = int(line[6:].split("=")[0])
                order = max(order, m)
            continue
        fields = line.split("\t") if "\t" in line else line.split()
        if "\t" in line:
            lp, words = fields[0], fields[1].split()
            bow = fields[2] if len(fields) > 2 else None
        else:
            m = section
            lp, words = fields[0], fields[1:1 + m]
            bow = fields[1 + m] if len(fields) > 1 + m else None
        if len(words) != section:
            raise NGramError(f"ARPA line {lineno}: expected {section}-gram")
        g = tuple(words)
        vocab.update(g)
        if not (section == 1 and g == (BOS,)):
            probs[(g[:-1], g[-1])] = _parse_logp(lp)
        if bow is not None:
            backoffs[g] = _parse_logp(bow)
    if order == 0:
        raise NGramError("no \\data\\ section found")
    return NGramModel(order, vocab, probs, backoffs, smoothing="arpa")


def read_arpa(path) -> NGramModel:
    with open(path, encoding="utf-8") as f:
        return from_arpa(f.read())


def write_arpa(model: NGramModel, path, header: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(to_arpa(model, header))
