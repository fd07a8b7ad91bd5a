"""Command-line entry point: ``lowasr <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors and 2 on data or parse
errors. An optional TOML ``--config`` file supplies per-subcommand
defaults in a table named after the subcommand; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

COMMANDS = (
    "g2p-train", "g2p-apply", "lm-train", "lm-topk", "lex-expand", "vad",
    "vad-fuse", "resample", "augment", "rover", "score", "demo",
)
STOCHASTIC = {"augment", "lex-expand", "demo"}
# config keys whose values are input paths that must exist
PATH_KEYS = {"lexicon", "model", "lm", "text", "noise_dir", "rir_dir", "ref", "hyp", "spec"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# output helpers


def command_line(argv) -> str:
    return "lowasr " + " ".join(shlex.quote(a) for a in argv)


def write_text(path, text: str) -> None:
    """Write atomically (temp file + rename); ``-`` means standard output."""
    if str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_wav_atomic(buf, path) -> None:
    from .dsp import write_wav

    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".wav")
    os.close(fd)
    try:
        write_wav(buf, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pmap(func, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(func, items, chunksize=max(1, len(items) // (4 * jobs))))
    return [func(x) for x in items]


# ---------------------------------------------------------------------------
# subcommands


def cmd_g2p_train(args):
    from .g2p import dump_model, train_g2p
    from .lexicon import read_lexicon

    lex = read_lexicon(args.lexicon)
    model = train_g2p(lex, args.gmax, args.pmax, args.em_iters, args.order)
    write_text(args.out, dump_model(model, command=args.command_line))
    print(f"g2p-train: {len(model.graphones)} graphones, {model.n_skipped} skipped", file=sys.stderr)


class _Decoder:
    def __init__(self, model, direction, nbest, beam):
        self.model, self.direction, self.nbest, self.beam = model, direction, nbest, beam

    def __call__(self, item):
        from .g2p import G2PError, apply_g2p, apply_p2g

        if self.direction == "g2p":
            fn, seq = apply_g2p, list(item)
        else:
            fn, seq = apply_p2g, item.split()
        try:
            return fn(self.model, seq, self.nbest, self.beam), None
        except G2PError as exc:
            return [], str(exc)


def cmd_g2p_apply(args):
    from .g2p import load_model

    model = load_model(args.model)
    with open(args.input, encoding="utf-8") as f:
        items = [line.strip() for line in f if line.strip()]
    results = _pmap(_Decoder(model, args.direction, args.nbest, args.beam), items, args.jobs)
    lines = [f";; {args.command_line}"]
    failed = 0
    for item, (hyps, err) in zip(items, results):
        if err:
            failed += 1
            print(f"g2p-apply: {item!r}: {err}", file=sys.stderr)
            continue
        if not hyps:
            failed += 1
            continue
        best = hyps[0].logprob
        for h in hyps:
            prob = max(10.0 ** (h.logprob - best), sys.float_info.min)
            if args.direction == "g2p":
                lines.append(f"{item}\t{prob!r}\t{' '.join(h.symbols)}")
            else:
                lines.append(f"{''.join(h.symbols)}\t{prob!r}\t{item}")
    write_text(args.out, "\n".join(lines) + "\n")
    if failed:
        print(f"g2p-apply: {failed} of {len(items)} inputs had no hypothesis", file=sys.stderr)


def cmd_lm_train(args):
    from . import ngram

    with open(args.text, encoding="utf-8") as f:
        seqs = [line.split() for line in f if line.strip() or args.keep_empty]
    model = ngram.train_ngram(seqs, args.order, args.smoothing)
    write_text(args.out, ngram.to_arpa(model, header=f"# {args.command_line}"))


def cmd_lm_topk(args):
    from . import ngram

    model = ngram.read_arpa(args.lm)
    res = ngram.generate_topk(model, args.k, args.min_len, args.max_len)
    write_text(args.out, "".join(f"{r.logprob:.6f}\t{' '.join(r.symbols)}\n" for r in res))


def cmd_lex_expand(args):
    from .expand import ExpansionConfig, expand_lexicon
    from .g2p import load_model, train_g2p
    from .lexicon import serialize_lexicon, read_lexicon

    base = read_lexicon(args.lexicon)
    model = load_model(args.g2p) if args.g2p else train_g2p(base, args.gmax, args.pmax)
    cfg = ExpansionConfig(
        n_generate=args.n_generate, n_keep=args.n_keep, lm_order=args.lm_order,
        min_len=args.min_len, max_len=args.max_len, mode=args.mode, seed=args.seed,
    )
    lex, report = expand_lexicon(base, model, cfg)
    write_text(args.out, serialize_lexicon(lex, header=args.command_line))
    stream = sys.stderr if str(args.out) == "-" else sys.stdout
    print(report.to_json(), file=stream)


def _vad_config(args):
    from .vad import OsfVadConfig

    return OsfVadConfig(
        n_subbands=args.n_subbands, osf_window=args.osf_window, percentile=args.percentile,
        threshold_db=args.threshold_db, noise_init=args.noise_init, noise_update=args.noise_update,
        hangover=args.hangover, min_seg=args.min_seg, max_gap=args.max_gap, max_seg=args.max_seg,
    )


class _VadJob:
    def __init__(self, cfg, channel):
        self.cfg, self.channel = cfg, channel

    def __call__(self, path):
        from .dsp import read_wav
        from .vad import osf_vad

        return osf_vad(read_wav(path, self.channel), self.cfg, recording_id=Path(path).stem)


def cmd_vad(args):
    from .vad import format_segments

    segs = _pmap(_VadJob(_vad_config(args), args.channel), list(args.wavs), args.jobs)
    write_text(args.out, format_segments(segs))


def cmd_vad_fuse(args):
    from .vad import format_segments, fuse_segmentations, read_segments

    by_rec = {}
    order = []
    for path in args.segments:
        for s in read_segments(path):
            if s.recording_id not in by_rec:
                order.append(s.recording_id)
            by_rec.setdefault(s.recording_id, []).append(s)
    fused = [
        fuse_segmentations(by_rec[r], args.policy, args.frame, args.min_seg, args.max_gap)
        for r in order
    ]
    write_text(args.out, format_segments(fused))


def cmd_resample(args):
    from .dsp import read_wav, resample

    write_wav_atomic(resample(read_wav(args.input, args.channel), args.rate), args.output)


def _list_wavs(d):
    files = sorted(Path(d).glob("*.wav"))
    if not files:
        raise ValueError(f"no .wav files in {d}")
    return files


def cmd_augment(args):
    import numpy as np

    from . import augment
    from .dsp import read_wav

    buf = read_wav(args.input, args.channel)
    utt = args.utt_id or Path(args.input).stem
    rng = np.random.default_rng(args.seed)
    if args.speed is not None and args.speed != 1.0:
        buf = augment.speed_perturb(buf, args.speed)
        utt = augment.augmented_id(utt, "speed", args.speed)
    if args.volume is not None:
        if args.volume == "random":
            lo, hi = args.volume_range
            gain = float(rng.uniform(lo, hi))
        else:
            gain = float(args.volume)
        buf = augment.volume_perturb(buf, gain)
    if args.noise_dir:
        noises = _list_wavs(args.noise_dir)
        noise = read_wav(noises[int(rng.integers(len(noises)))])
        buf = augment.mix_noise(buf, noise, args.snr_db, seed=int(rng.integers(2 ** 31)))
        utt = augment.augmented_id(utt, args.noise_kind if args.noise_kind != "reverb" else "noise")
    if args.rir_dir:
        rirs = _list_wavs(args.rir_dir)
        buf = augment.apply_rir(buf, read_wav(rirs[int(rng.integers(len(rirs)))]))
        utt = augment.augmented_id(utt, "reverb")
    write_wav_atomic(buf, args.output)
    print(f"{utt} {args.output}")


def _read_hyps(path):
    from .fusion import parse_ctm, parse_text_hyps

    with open(path, encoding="utf-8") as f:
        text = f.read()
    if str(path).endswith(".ctm"):
        return "ctm", parse_ctm(text)
    return "text", parse_text_hyps(text)


def cmd_rover(args):
    from .fusion import Hypothesis, VoteConfig, format_ctm, format_text_hyps, rover

    cfg = VoteConfig(args.alpha, args.null_conf)
    loaded = [_read_hyps(p) for p in args.systems]
    kinds = {k for k, _ in loaded}
    if len(kinds) != 1:
        raise ValueError("all systems must share one format (text or .ctm)")
    kind = kinds.pop()
    keys = []
    for _, d in loaded:
        for key in d:
            if key not in keys:
                keys.append(key)
    fused = []
    for key in keys:
        utt = key[0] if kind == "ctm" else key
        chan = key[1] if kind == "ctm" else None
        hyps = [d.get(key, Hypothesis(utt, (), chan)) for _, d in loaded]
        fused.append(rover(hyps, cfg))
    text = format_ctm(fused, header=args.command_line) if kind == "ctm" else format_text_hyps(fused)
    write_text(args.out, text)


def cmd_score(args):
    from .lexicon import read_corpus
    from .scoring import NormPolicy, score_corpus

    drop = frozenset(args.drop.split(",")) if args.drop else frozenset()
    policy = NormPolicy(case=args.case, unit=args.unit, drop_tokens=drop)
    rows = []
    rep = score_corpus(read_corpus(args.ref), read_corpus(args.hyp), policy, per_utt=rows)
    print(rep.line("CER" if args.unit == "char" else "WER"))
    if args.per_utt:
        tsv = "utt_id\terror_rate\tS\tD\tI\tN\n" + "".join(
            f"{u}\t{r.error_rate:.6f}\t{r.substitutions}\t{r.deletions}\t{r.insertions}\t{r.n_ref}\n"
            for u, r in rows
        )
        write_text(args.per_utt, tsv)


def cmd_demo(args):
    from .demo import format_summary, run_demo

    s = run_demo(seed=args.seed)
    print(format_summary(s))
    if args.json:
        write_text(args.json, json.dumps(s, indent=2, sort_keys=True, default=str) + "\n")


# ---------------------------------------------------------------------------
# parser


def _required(sp, flag, **kw):
    # checked after config defaults are merged, so a config file may supply it
    action = sp.add_argument(flag, default=None, help="required (flag or config)", **kw)
    sp.set_defaults(_required=sp.get_default("_required") + (action.dest,))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lowasr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lowasr {__version__}")
    sub = p.add_subparsers(dest="cmd", metavar="SUBCOMMAND", parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func, _required=())
        sp.add_argument("--config", help="TOML file with a [%s] table of defaults" % name)
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers")
        if name in STOCHASTIC:
            sp.add_argument("--seed", type=int, default=0)
        return sp

    sp = add("g2p-train", cmd_g2p_train, "train a graphone G2P model from a lexicon")
    _required(sp, "--lexicon")
    _required(sp, "--out")
    sp.add_argument("--gmax", type=int, default=2)
    sp.add_argument("--pmax", type=int, default=2)
    sp.add_argument("--em-iters", type=int, default=20)
    sp.add_argument("--order", type=int, default=5)

    sp = add("g2p-apply", cmd_g2p_apply, "decode words (g2p) or phone strings (p2g)")
    _required(sp, "--model")
    sp.add_argument("--direction", choices=("g2p", "p2g"), default="g2p")
    sp.add_argument("--nbest", type=int, default=1)
    sp.add_argument("--beam", type=int, default=500)
    sp.add_argument("--out", default="-")
    sp.add_argument("input", help="one word (g2p) or space-separated phone string (p2g) per line")

    sp = add("lm-train", cmd_lm_train, "train an n-gram model on space-separated sequences")
    _required(sp, "--text")
    sp.add_argument("--order", type=int, default=3)
    sp.add_argument("--smoothing", choices=("mle", "katz", "kneser_ney"), default="kneser_ney")
    sp.add_argument("--keep-empty", action="store_true", help="count empty lines as empty sequences")
    sp.add_argument("--out", default="-")

    sp = add("lm-topk", cmd_lm_topk, "exact k most probable sequences of an ARPA model")
    _required(sp, "--lm")
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--min-len", type=int, default=0)
    sp.add_argument("--max-len", type=int, default=20)
    sp.add_argument("--out", default="-")

    sp = add("lex-expand", cmd_lex_expand, "expand a lexicon with generated entries")
    _required(sp, "--lexicon")
    _required(sp, "--out")
    sp.add_argument("--g2p", help="trained model; trained from --lexicon when omitted")
    sp.add_argument("--gmax", type=int, default=2)
    sp.add_argument("--pmax", type=int, default=2)
    sp.add_argument("--n-generate", type=int, default=12_000_000)
    sp.add_argument("--n-keep", type=int, default=1_000_000)
    sp.add_argument("--lm-order", type=int, default=3)
    sp.add_argument("--min-len", type=int, default=2)
    sp.add_argument("--max-len", type=int, default=12)
    sp.add_argument("--mode", choices=("enumerate", "sample"), default="enumerate")

    sp = add("vad", cmd_vad, "order-statistic-filter VAD to a Kaldi segments file")
    sp.add_argument("wavs", nargs="+")
    sp.add_argument("--out", default="-")
    sp.add_argument("--channel", type=int, default=0)
    sp.add_argument("--n-subbands", type=int, default=6)
    sp.add_argument("--osf-window", type=int, default=8)
    sp.add_argument("--percentile", type=float, default=0.9)
    sp.add_argument("--threshold-db", type=float, default=6.0)
    sp.add_argument("--noise-init", type=float, default=0.1)
    sp.add_argument("--noise-update", type=float, default=0.98)
    sp.add_argument("--hangover", type=float, default=0.0)
    sp.add_argument("--min-seg", type=float, default=0.3)
    sp.add_argument("--max-gap", type=float, default=0.3)
    sp.add_argument("--max-seg", type=float, default=30.0)

    sp = add("vad-fuse", cmd_vad_fuse, "combine several segments files")
    sp.add_argument("segments", nargs="+")
    sp.add_argument("--policy", choices=("union", "intersection", "majority"), default="majority")
    sp.add_argument("--frame", type=float, default=0.01)
    sp.add_argument("--min-seg", type=float, default=0.3)
    sp.add_argument("--max-gap", type=float, default=0.3)
    sp.add_argument("--out", default="-")

    sp = add("resample", cmd_resample, "resample a 16-bit PCM WAV file")
    _required(sp, "--rate", type=int)
    sp.add_argument("--channel", type=int, default=0)
    sp.add_argument("input")
    sp.add_argument("output")

    sp = add("augment", cmd_augment, "speed/volume/noise/reverb augmentation of one WAV file")
    sp.add_argument("--spec", help="TOML file with augmentation settings (same keys as the flags)")
    sp.add_argument("--speed", type=float)
    sp.add_argument("--volume", help="gain, or 'random' to draw from --volume-range")
    sp.add_argument("--volume-range", type=float, nargs=2, default=(0.125, 2.0))
    sp.add_argument("--noise-dir")
    sp.add_argument("--noise-kind", choices=("babble", "music", "noise", "reverb"), default="noise")
    sp.add_argument("--snr-db", type=float, default=10.0)
    sp.add_argument("--rir-dir")
    sp.add_argument("--channel", type=int, default=0)
    sp.add_argument("--utt-id")
    sp.add_argument("input")
    sp.add_argument("output")

    sp = add("rover", cmd_rover, "ROVER fusion of Kaldi text or CTM hypotheses (first file seeds the alignment)")
    sp.add_argument("systems", nargs="+")
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--null-conf", type=float, default=0.0)
    sp.add_argument("--out", default="-")

    sp = add("score", cmd_score, "WER/CER of hypotheses against references")
    _required(sp, "--ref")
    _required(sp, "--hyp")
    sp.add_argument("--case", choices=("cis", "css"), default="cis")
    sp.add_argument("--unit", choices=("word", "char"), default="word")
    sp.add_argument("--drop", help="comma-separated extra tokens to drop (e.g. hesitations)")
    sp.add_argument("--per-utt", help="write per-utterance TSV here")

    sp = add("demo", cmd_demo, "synthetic end-to-end pipeline")
    sp.add_argument("--json", help="also write the summary as JSON")
    return p


def _load_config(path, subparser, section):
    with open(path, "rb") as f:
        tree = tomllib.load(f)
    unknown = sorted(set(tree) - set(COMMANDS))
    if unknown:
        raise UsageError(f"{path}: unknown config table(s): {', '.join(unknown)}")
    values = {}
    for key, val in tree.get(section, {}).items():
        values[key.replace("-", "_")] = val
    return _check_keys(values, subparser, path)


def _check_keys(values, subparser, source):
    known = {a.dest for a in subparser._actions} - {"help", "config"}
    bad = sorted(set(values) - known)
    if bad:
        raise UsageError(f"{source}: unknown key(s): {', '.join(bad)}")
    for key in PATH_KEYS & set(values):
        if not Path(values[key]).exists():
            raise FileNotFoundError(f"{source}: {key} path {values[key]!r} does not exist")
    return values


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="lowasr: %(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.cmd:
            raise UsageError("a subcommand is required")
        sp = _subparser(parser, args.cmd)
        overrides = {}
        if args.config:
            overrides.update(_load_config(args.config, sp, args.cmd))
        if getattr(args, "spec", None):
            with open(args.spec, "rb") as f:
                overrides.update(_check_keys(
                    {k.replace("-", "_"): v for k, v in tomllib.load(f).items()}, sp, args.spec))
        if overrides:
            sp.set_defaults(**overrides)
            args = parser.parse_args(argv)
        missing = [d for d in args._required if getattr(args, d) is None]
        if missing:
            flags = ", ".join("--" + d.replace("_", "-") for d in missing)
            raise UsageError(f"lowasr {args.cmd}: missing required {flags}")
    except UsageError as exc:
        cmd = next((a for a in argv if a in COMMANDS), None)
        (_subparser(parser, cmd) if cmd else parser).print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (OSError, ValueError) as exc:
        print(f"lowasr: error: {exc}", file=sys.stderr)
        return 2

    args.command_line = command_line(argv)
    if args.cmd in STOCHASTIC:
        print(f"{args.cmd}: seed {args.seed}", file=sys.stderr)
    try:
        args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        mod = type(exc).__module__
        where = mod.rsplit(".", 1)[-1] if mod.startswith("lowasr") else args.cmd
        print(f"lowasr {args.cmd}: error [{where}]: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
