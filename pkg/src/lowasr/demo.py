"""Synthetic end-to-end run: lexicon -> expansion -> audio -> VAD -> augmentation -> ROVER -> scoring."""

from __future__ import annotations

import time

import numpy as np

from . import augment, dsp, expand, fusion, g2p, scoring, synth, vad
from .lexicon import Corpus

__all__ = ["run_demo", "simulate_system", "format_summary"]


def simulate_system(ref_words, vocab, rng, p_sub=0.2, p_del=0.02, p_ins=0.02):
    """Corrupt a transcript; a substituted word becomes its fixed confusable neighbour."""
    idx = {w: i for i, w in enumerate(vocab)}
    out = []
    for w in ref_words:
        u = rng.random()
        if u < p_del:
            continue
        if u < p_del + p_sub:
            out.append(vocab[(idx[w] + 1) % len(vocab)])
        else:
            out.append(w)
        if rng.random() < p_ins:
            out.append(vocab[int(rng.integers(len(vocab)))])
    return out


def run_demo(seed: int = 0, n_words: int = 80, n_utts: int = 40, utt_len: int = 12) -> dict:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    summary = {"seed": seed}

    # lexicon, G2P, expansion
    base = synth.toy_lexicon(n_words, seed=seed)
    model = g2p.train_g2p(base, gmax=1, pmax=1, lm_order=3)
    cfg = expand.ExpansionConfig(n_generate=1200, n_keep=100, seed=seed)
    lex, rep = expand.expand_lexicon(base, model, cfg)
    summary["lexicon"] = {"base": len(base), "expanded": len(lex), "new": rep.n_new_entries}

    # audio with three speech bursts
    bursts = [(1.0, 2.5), (3.5, 5.0), (6.0, 8.0)]
    buf = synth.floor_and_bursts(9.5, bursts, sr=8000, seed=seed)
    segs = vad.osf_vad(buf, recording_id="demo")
    summary["vad"] = {"truth": bursts, "found": [(round(s.start, 2), round(s.end, 2)) for s in segs]}

    # augmentation
    noise = dsp.AudioBuffer(rng.standard_normal(4000) * 0.1, 8000)
    rir = dsp.AudioBuffer(np.exp(-np.arange(800) / 120.0) * rng.standard_normal(800), 8000)
    rir.samples[0] = 1.0
    lengths = {f: len(augment.speed_perturb(buf, f)) for f in (0.9, 1.0, 1.1)}
    noisy = augment.mix_noise(buf, noise, 10.0, seed=seed)
    reverb = augment.apply_rir(buf, rir)
    feats = dsp.logmel(noisy)
    masked, masks = augment.spec_augment(feats, augment.SpecAugmentSpec(seed=seed), return_masks=True)
    summary["augment"] = {
        "speed_lengths": lengths,
        "noisy_rms": float(np.sqrt(np.mean(noisy.samples ** 2))),
        "reverb_rms": float(np.sqrt(np.mean(reverb.samples ** 2))),
        "feature_shape": list(feats.shape),
        "masks": len(masks),
    }

    # three simulated recognisers over transcripts drawn from the expanded lexicon
    vocab = sorted({e.word for e in lex})
    refs = []
    systems = [[], [], []]
    for u in range(n_utts):
        utt = f"demo_{u:03d}"
        words = [vocab[int(i)] for i in rng.integers(len(vocab), size=utt_len)]
        refs.append((utt, tuple(words)))
        for s in systems:
            s.append((utt, tuple(simulate_system(words, vocab, rng))))
    ref_corpus = Corpus(tuple(refs))
    single = [scoring.score_corpus(ref_corpus, Corpus(tuple(s))).error_rate for s in systems]
    fused = []
    for k, (utt, _) in enumerate(refs):
        hyps = [fusion.Hypothesis.from_words(utt, list(s[k][1])) for s in systems]
        fused.append((utt, tuple(fusion.rover(hyps).words)))
    fused_rate = scoring.score_corpus(ref_corpus, Corpus(tuple(fused))).error_rate
    summary["rover"] = {"single": single, "mean_single": float(np.mean(single)), "fused": fused_rate}
    summary["wall_time"] = time.perf_counter() - t0
    return summary


def format_summary(s: dict) -> str:
    lines = [
        f"seed                {s['seed']}",
        f"lexicon             base={s['lexicon']['base']} expanded={s['lexicon']['expanded']} new={s['lexicon']['new']}",
        f"vad segments        {s['vad']['found']} (truth {s['vad']['truth']})",
        f"speed lengths       {s['augment']['speed_lengths']}",
        f"spec-augment masks  {s['augment']['masks']} on {s['augment']['feature_shape']}",
        "single-system WER   " + " ".join(f"{100 * r:.2f}" for r in s["rover"]["single"]),
        f"mean single WER     {100 * s['rover']['mean_single']:.2f}",
        f"fused WER           {100 * s['rover']['fused']:.2f}",
    ]
    return "\n".join(lines)
