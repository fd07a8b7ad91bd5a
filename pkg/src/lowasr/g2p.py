"""Joint-sequence (graphone) grapheme/phoneme conversion.

Training aligns every (spelling, pronunciation) pair into graphones with
unigram EM over all monotone segmentations, Viterbi-aligns each pair with
the converged probabilities, and fits an n-gram model over the resulting
graphone strings. The same joint model decodes in either direction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

from . import ngram
from .lexicon import Lexicon, letters
from .ngram import EOS, NGramModel

__all__ = [
    "Graphone",
    "G2PModel",
    "G2PError",
    "PronHypothesis",
    "em_align",
    "viterbi_align",
    "train_g2p",
    "apply_g2p",
    "apply_p2g",
    "save_model",
    "dump_model",
    "load_model",
    "FORMAT_VERSION",
]

log = logging.getLogger(__name__)

FORMAT_VERSION = "1"
MAGIC = "#lowasr-g2p"
EPS = "_"
SYM_SEP = "|"
SIDE_SEP = "}"


class G2PError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Graphone:
    gseq: tuple = ()
    pseq: tuple = ()

    def __post_init__(self):
        if not self.gseq and not self.pseq:
            raise ValueError("graphone with both sides empty")

    @property
    def token(self) -> str:
        g = SYM_SEP.join(self.gseq) or EPS
        p = SYM_SEP.join(self.pseq) or EPS
        return f"{g}{SIDE_SEP}{p}"

    @classmethod
    def from_token(cls, tok: str) -> "Graphone":
        g, _, p = tok.partition(SIDE_SEP)
        gseq = () if g == EPS else tuple(g.split(SYM_SEP))
        pseq = () if p == EPS else tuple(p.split(SYM_SEP))
        return cls(gseq, pseq)

    def __str__(self):
        return self.token


class PronHypothesis(NamedTuple):
    symbols: tuple
    logprob: float


def _check_symbols(seq, what):
    for s in seq:
        if not s or s == EPS or SYM_SEP in s or SIDE_SEP in s or s in (ngram.BOS, ngram.EOS):
            raise G2PError(f"{what} symbol {s!r} is reserved or empty")


# ---------------------------------------------------------------------------
# EM alignment


def _lattice(n, m, gmax, pmax):
    """Edges (src, dst, a, b, i, j) of the segmentation DAG in topological order."""
    edges = []
    width = m + 1
    for i in range(n + 1):
        for j in range(m + 1):
            for a in range(0, gmax + 1):
                if i + a > n:
                    break
                for b in range(0, pmax + 1):
                    if j + b > m:
                        break
                    if a == 0 and b == 0:
                        continue
                    edges.append((i * width + j, (i + a) * width + j + b, i, a, j, b))
    return edges


class _Pair:
    __slots__ = ("edges", "ids", "n_nodes")

    def __init__(self, g, p, gmax, pmax, intern):
        self.n_nodes = (len(g) + 1) * (len(p) + 1)
        self.edges = []
        self.ids = []
        for src, dst, i, a, j, b in _lattice(len(g), len(p), gmax, pmax):
            gid = intern(Graphone(tuple(g[i:i + a]), tuple(p[j:j + b])))
            self.edges.append((src, dst))
            self.ids.append(gid)

    def forward(self, q):
        alpha = [0.0] * self.n_nodes
        alpha[0] = 1.0
        for (src, dst), gid in zip(self.edges, self.ids):
            alpha[dst] += alpha[src] * q[gid]
        return alpha

    def backward(self, q):
        beta = [0.0] * self.n_nodes
        beta[-1] = 1.0
        for k in range(len(self.edges) - 1, -1, -1):
            src, dst = self.edges[k]
            beta[src] += q[self.ids[k]] * beta[dst]
        return beta


def em_align(pairs, gmax: int = 2, pmax: int = 2, em_iters: int = 20, tol: float = 1e-4):
    """Unigram graphone EM over all segmentations of each pair.

    Returns ``(probs, loglik)`` where ``probs`` maps :class:`Graphone` to
    probability and ``loglik[t]`` is the natural-log training likelihood
    after ``t`` updates (``loglik[0]`` is the uniform initialization).
    Iteration stops early once the per-pair gain drops below ``tol``.
    """
    if gmax < 1 or pmax < 1:
        raise G2PError("gmax and pmax must be >= 1")
    inventory = []
    index = {}

    def intern(gr):
        gid = index.get(gr)
        if gid is None:
            gid = index[gr] = len(inventory)
            inventory.append(gr)
        return gid

    lattices = [_Pair(g, p, gmax, pmax, intern) for g, p in pairs]
    if not lattices:
        raise G2PError("no alignable pairs")
    q = [1.0 / len(inventory)] * len(inventory)

    def loglik(q):
        return math.fsum(math.log(lat.forward(q)[-1]) for lat in lattices)

    history = [loglik(q)]
    for _ in range(em_iters):
        counts = [0.0] * len(inventory)
        for lat in lattices:
            alpha = lat.forward(q)
            beta = lat.backward(q)
            z = alpha[-1]
            for (src, dst), gid in zip(lat.edges, lat.ids):
                counts[gid] += alpha[src] * q[gid] * beta[dst] / z
        total = math.fsum(counts)
        # graphones never used get zero mass and drop out of every lattice
        q = [c / total for c in counts]
        history.append(loglik(q))
        gain = history[-1] - history[-2]
        if gain < -1e-9 * abs(history[-2]):
            log.warning("EM likelihood decreased by %g", -gain)
        if gain / len(lattices) < tol:
            break
    probs = {gr: q[i] for i, gr in enumerate(inventory) if q[i] > 0.0}
    return probs, history


def viterbi_align(g, p, probs, gmax: int = 2, pmax: int = 2):
    """Most probable graphone segmentation of one pair, or None."""
    n, m = len(g), len(p)
    width = m + 1
    best = [-math.inf] * ((n + 1) * width)
    back = [None] * len(best)
    best[0] = 0.0
    for src, dst, i, a, j, b in _lattice(n, m, gmax, pmax):
        if best[src] == -math.inf:
            continue
        gr = Graphone(tuple(g[i:i + a]), tuple(p[j:j + b]))
        pr = probs.get(gr, 0.0)
        if pr <= 0.0:
            continue
        s = best[src] + math.log(pr)
        if s > best[dst]:
            best[dst] = s
            back[dst] = (src, gr)
    if best[-1] == -math.inf:
        return None
    out = []
    node = len(best) - 1
    while node != 0:
        node, gr = back[node]
        out.append(gr)
    return out[::-1]


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class G2PModel:
    graphones: frozenset
    lm: NGramModel
    gmax: int = 2
    pmax: int = 2
    version: str = FORMAT_VERSION
    n_skipped: int = 0

    @cached_property
    def _by_grapheme(self):
        return _index(self.graphones, "g")

    @cached_property
    def _by_phone(self):
        return _index(self.graphones, "p")

    @property
    def graphemes(self) -> set:
        return {s for gr in self.graphones for s in gr.gseq}

    @property
    def phones(self) -> set:
        return {s for gr in self.graphones for s in gr.pseq}


def _index(graphones, side):
    idx = {}
    for gr in sorted(graphones):
        key, out = (gr.gseq, gr.pseq) if side == "g" else (gr.pseq, gr.gseq)
        idx.setdefault(key, []).append((gr.token, out))
    return idx


def train_g2p(
    lex: Lexicon,
    gmax: int = 2,
    pmax: int = 2,
    em_iters: int = 20,
    lm_order: int = 5,
    smoothing: str = "kneser_ney",
    splitter=letters,
) -> G2PModel:
    """Fit a joint-sequence model to a lexicon.

    ``splitter`` turns a word into grapheme symbols (characters by default).
    Entries whose spelling or pronunciation is empty are skipped and
    counted in ``model.n_skipped``.
    """
    if len(lex) == 0:
        raise G2PError("cannot train on an empty lexicon")
    if lm_order < 1:
        raise G2PError("lm_order must be >= 1")
    pairs = []
    skipped = 0
    for e in lex:
        g = tuple(splitter(e.word))
        p = tuple(e.pron)
        if not g or not p:
            skipped += 1
            continue
        _check_symbols(g, "grapheme")
        _check_symbols(p, "phone")
        pairs.append((g, p))
    if not pairs:
        raise G2PError("no usable entries in lexicon")

    probs, history = em_align(pairs, gmax, pmax, em_iters)
    log.info("EM: %d graphones, loglik %s", len(probs), [round(x, 3) for x in history])

    seqs = []
    for g, p in pairs:
        path = viterbi_align(g, p, probs, gmax, pmax)
        if path is None:
            skipped += 1
            continue
        seqs.append([gr.token for gr in path])
    if skipped:
        log.warning("skipped %d unalignable lexicon entries", skipped)
    lm = ngram.train_ngram(seqs, order=lm_order, smoothing=smoothing)
    graphones = frozenset(Graphone.from_token(t) for t in lm.vocab if t not in (ngram.BOS, ngram.EOS))
    return G2PModel(graphones, lm, gmax, pmax, FORMAT_VERSION, skipped)


# ---------------------------------------------------------------------------
# decoding


def _decode(model: G2PModel, inputs, side, nbest, beam):
    inputs = tuple(inputs)
    if not inputs:
        raise G2PError("empty input sequence")
    if nbest is not None and nbest < 1:
        raise G2PError("nbest must be >= 1")
    index = model._by_grapheme if side == "g" else model._by_phone
    known = {s for key in index for s in key}
    for s in inputs:
        if s not in known:
            raise G2PError(f"unalignable symbol {s!r}: never seen on the input side of any graphone")
    lm = model.lm
    amax = model.gmax if side == "g" else model.pmax
    eps_arcs = index.get((), [])
    n = len(inputs)
    neg_inf = -math.inf

    def relax(table, key, sc):
        if sc > table.get(key, neg_inf):
            table[key] = sc

    layers = [dict() for _ in range(n + 1)]
    layers[0][(lm.start, False, ())] = 0.0
    finals = {}
    for i in range(n + 1):
        cur = layers[i]
        if eps_arcs:
            extra = {}
            for (hist, flag, out), sc in cur.items():
                if flag:
                    continue
                for tok, o in eps_arcs:
                    lp = lm.logprob(hist, tok)
                    if lp > neg_inf:
                        relax(extra, (lm.advance(hist, tok), True, out + o), sc + lp)
            for key, sc in extra.items():
                relax(cur, key, sc)
        if beam is not None and len(cur) > beam:
            ranked = sorted(cur.items(), key=lambda kv: (-kv[1], kv[0][2], kv[0][0], kv[0][1]))
            cur = dict(ranked[:beam])
        if i == n:
            for (hist, _flag, out), sc in cur.items():
                if out:
                    relax(finals, out, sc + lm.logprob(hist, EOS))
            break
        for (hist, _flag, out), sc in cur.items():
            for a in range(1, min(amax, n - i) + 1):
                for tok, o in index.get(inputs[i:i + a], ()):
                    lp = lm.logprob(hist, tok)
                    if lp > neg_inf:
                        relax(layers[i + a], (lm.advance(hist, tok), False, out + o), sc + lp)
        layers[i] = None
    hyps = sorted(
        (PronHypothesis(out, sc) for out, sc in finals.items() if sc > neg_inf),
        key=lambda h: (-h.logprob, h.symbols),
    )
    return hyps if nbest is None else hyps[:nbest]


def apply_g2p(model: G2PModel, graphemes: Sequence[str], nbest: Optional[int] = 1, beam: Optional[int] = 500):
    """N-best pronunciations for a grapheme sequence.

    ``nbest=None`` / ``beam=None`` disable the respective limits. A
    hypothesis score is the best single segmentation producing that
    output, including the end-of-sequence probability (log10).
    """
    return _decode(model, graphemes, "g", nbest, beam)


def apply_p2g(model: G2PModel, phones: Sequence[str], nbest: Optional[int] = 1, beam: Optional[int] = 500):
    """N-best spellings for a phone sequence; mirror image of :func:`apply_g2p`."""
    return _decode(model, phones, "p", nbest, beam)


# ---------------------------------------------------------------------------
# serialization


def dump_model(model: G2PModel, command: Optional[str] = None) -> str:
    header = (
        f"{MAGIC} version={model.version} gmax={model.gmax} pmax={model.pmax} "
        f"order={model.lm.order} smoothing={model.lm.smoothing}"
    )
    body = ngram.to_arpa(model.lm, header=f"# {command}" if command else None)
    return header + "\n" + body


def save_model(model: G2PModel, path, command: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dump_model(model, command))


def load_model(path) -> G2PModel:
    with open(path, encoding="utf-8") as f:
        first = f.readline().strip()
        rest = f.read()
    if not first.startswith(MAGIC):
        raise G2PError(f"{path}: not a G2P model file")
    meta = dict(kv.split("=", 1) for kv in first.split()[1:])
    if meta.get("version") != FORMAT_VERSION:
        raise G2PError(f"{path}: unsupported model version {meta.get('version')!r}")
    lm = ngram.from_arpa(rest)
    if lm.order != int(meta["order"]):
        raise G2PError(f"{path}: header order {meta['order']} disagrees with n-gram tables")
    graphones = frozenset(Graphone.from_token(t) for t in lm.vocab if t not in (ngram.BOS, ngram.EOS))
    return G2PModel(graphones, lm, int(meta["gmax"]), int(meta["pmax"]), meta["version"])
