"""Lexicon expansion: phone LM -> candidate prons -> dedup -> top-K -> P2G spelling."""

from __future__ import annotations

import json
import logging
import sys
import time
from dataclasses import asdict, dataclass
from typing import Optional

from . import ngram
from .g2p import G2PError, G2PModel, apply_p2g
from .lexicon import LexEntry, Lexicon

__all__ = ["ExpansionConfig", "ExpansionReport", "SMOKE_CONFIG", "expand_lexicon"]

log = logging.getLogger(__name__)

# smallest positive double; keeps very improbable entries inside (0, 1]
_MIN_PROB = sys.float_info.min


@dataclass(frozen=True)
class ExpansionConfig:
    n_generate: int = 12_000_000
    n_keep: int = 1_000_000
    lm_order: int = 3
    min_len: int = 2
    max_len: int = 12
    p2g_nbest: int = 1
    p2g_beam: int = 500
    mode: str = "enumerate"
    seed: int = 0
    smoothing: str = "kneser_ney"

    def __post_init__(self):
        if self.n_keep < 0 or self.n_generate < 0:
            raise ValueError("counts must be non-negative")
        if self.n_keep > self.n_generate:
            raise ValueError("n_keep must not exceed n_generate")
        if self.lm_order < 1:
            raise ValueError("lm_order must be >= 1")
        if not 0 <= self.min_len <= self.max_len:
            raise ValueError("need 0 <= min_len <= max_len")
        if self.mode not in ("enumerate", "sample"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.p2g_nbest < 1:
            raise ValueError("p2g_nbest must be >= 1")


# desk-scale smoke setting with the same 12:1 ratio
SMOKE_CONFIG = ExpansionConfig(n_generate=12_000, n_keep=1_000)


@dataclass
class ExpansionReport:
    n_generated: int = 0
    n_dedup_removed: int = 0
    n_kept: int = 0
    n_spelling_failures: int = 0
    n_new_entries: int = 0
    wall_time: float = 0.0

    def to_json(self) -> str:
        d = asdict(self)
        d["wall_time"] = round(d["wall_time"], 3)
        return json.dumps(d, sort_keys=True)


def expand_lexicon(base: Lexicon, g2p: G2PModel, cfg: ExpansionConfig = SMOKE_CONFIG):
    """Grow ``base`` with spellings for the most probable unseen phone strings.

    Returns ``(lexicon, report)``. New entries follow the base entries,
    ordered by descending phone-LM score, each carrying
    ``10 ** (score - best_score)`` as its probability.
    """
    t0 = time.perf_counter()
    if len(base) == 0:
        raise ValueError("base lexicon is empty")
    report = ExpansionReport()
    if cfg.n_keep == 0:
        report.wall_time = time.perf_counter() - t0
        return base, report

    missing = sorted(base.phone_set - g2p.phones)
    if missing:
        raise G2PError(f"phone {missing[0]!r} of the base lexicon is unknown to the G2P model")

    prons = [e.pron for e in base]
    lm = ngram.train_ngram(prons, order=cfg.lm_order, smoothing=cfg.smoothing)

    if cfg.mode == "enumerate":
        cands = ngram.generate_topk(lm, cfg.n_generate, cfg.min_len, cfg.max_len)
    else:
        cands = ngram.sample_sequences(lm, cfg.n_generate, cfg.min_len, cfg.max_len, seed=cfg.seed)
    report.n_generated = len(cands)

    existing = base.prons()
    unique = {}
    for c in cands:
        if c.symbols in existing or c.symbols in unique:
            report.n_dedup_removed += 1
            continue
        unique[c.symbols] = c.logprob
    ranked = sorted(unique.items(), key=lambda kv: (-kv[1], kv[0]))[: cfg.n_keep]
    report.n_kept = len(ranked)

    new = []
    best = ranked[0][1] if ranked else 0.0
    for pron, lp in ranked:
        hyps = apply_p2g(g2p, pron, nbest=cfg.p2g_nbest, beam=cfg.p2g_beam)
        if not hyps:
            report.n_spelling_failures += 1
            continue
        prob = max(10.0 ** (lp - best), _MIN_PROB)
        for h in hyps:
            if len(new) >= cfg.n_keep:
                break
            new.append(LexEntry("".join(h.symbols), pron, prob))
    report.n_new_entries = len(new)
    report.wall_time = time.perf_counter() - t0
    log.info("lexicon expansion: %s", report.to_json())
    return base.extend(new), report
