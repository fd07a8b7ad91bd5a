import json

import numpy as np
import pytest

from lowasr import __version__, dsp, synth
from lowasr.cli import main
from lowasr.lexicon import read_lexicon, write_lexicon


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def work(tmp_path):
    write_lexicon(synth.toy_lexicon(40, seed=2), tmp_path / "lex.txt")
    (tmp_path / "ref.txt").write_text("u1 the Cat sat\nu2 on <noise> a mat\n")
    (tmp_path / "h1.txt").write_text("u1 the cat sat\nu2 on a hat\n")
    (tmp_path / "h2.txt").write_text("u1 a cat sat\nu2 on a mat\n")
    (tmp_path / "h3.txt").write_text("u1 the cat\nu2 on a mat\n")
    return tmp_path


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and __version__ in out


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["score", "--ref"], ["score", "--hyp", "x", "--bogus", "1"]])
def test_usage_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "usage" in err


def test_score_identical_and_case_modes(capsys, work):
    code, out, _ = run(capsys, "score", "--ref", work / "ref.txt", "--hyp", work / "ref.txt")
    assert code == 0 and out.startswith("%WER 0.00 ")
    code, out, _ = run(capsys, "score", "--ref", work / "ref.txt", "--hyp", work / "h1.txt")
    assert out.strip() == "%WER 16.67 [ S=1 D=0 I=0 N=6 ]"  # <noise> is dropped
    code, out, _ = run(capsys, "score", "--ref", work / "ref.txt", "--hyp", work / "h1.txt", "--case", "css")
    assert out.strip() == "%WER 33.33 [ S=2 D=0 I=0 N=6 ]"
    code, out, _ = run(capsys, "score", "--ref", work / "ref.txt", "--hyp", work / "h1.txt", "--unit", "char",
                       "--per-utt", work / "pu.tsv")
    assert out.startswith("%CER ")
    assert (work / "pu.tsv").read_text().splitlines()[0].startswith("utt_id\t")


def test_data_errors_exit_2(capsys, work):
    code, _, err = run(capsys, "score", "--ref", work / "ref.txt", "--hyp", work / "missing.txt")
    assert code == 2 and "error" in err
    (work / "bad.lex").write_text("word\n")
    code, _, err = run(capsys, "g2p-train", "--lexicon", work / "bad.lex", "--out", work / "m")
    assert code == 2 and "line 1" in err
    assert not (work / "m").exists()


def test_config_file(capsys, work):
    cfg = work / "c.toml"
    cfg.write_text(f'[score]\ncase = "css"\nref = "{work / "ref.txt"}"\n')
    code, out, _ = run(capsys, "score", "--config", cfg, "--hyp", work / "h1.txt")
    assert code == 0 and "S=2" in out
    # explicit flags override the file
    code, out, _ = run(capsys, "score", "--config", cfg, "--hyp", work / "h1.txt", "--case", "cis")
    assert "S=1" in out
    cfg.write_text("[score]\ncolour = 3\n")
    assert run(capsys, "score", "--config", cfg, "--ref", "a", "--hyp", "b")[0] == 1
    cfg.write_text("[nonsense]\n")
    assert run(capsys, "score", "--config", cfg, "--ref", "a", "--hyp", "b")[0] == 1
    cfg.write_text('[score]\nref = "/no/such/file"\n')
    assert run(capsys, "score", "--config", cfg, "--hyp", "b")[0] == 2


def test_g2p_and_expansion_pipeline(capsys, work):
    model = work / "m.g2p"
    assert run(capsys, "g2p-train", "--lexicon", work / "lex.txt", "--out", model, "--gmax", 1, "--pmax", 1)[0] == 0
    assert "g2p-train" in model.read_text().splitlines()[1]
    (work / "words.txt").write_text("bad\nkite\nx7\n")
    code, out, err = run(capsys, "g2p-apply", "--model", model, work / "words.txt", "--nbest", 2)
    assert code == 0
    rows = [line.split("\t") for line in out.splitlines() if not line.startswith(";;")]
    assert ["bad", "1.0", "B A D"] in rows and ["kite", "1.0", "K I T E"] in rows
    assert "x7" in err
    (work / "prons.txt").write_text("K A T\n")
    code, out, _ = run(capsys, "g2p-apply", "--model", model, "--direction", "p2g", work / "prons.txt")
    assert out.splitlines()[1] == "kat\t1.0\tK A T"

    outs = []
    for name in ("big1.lex", "big2.lex"):
        code, out, err = run(capsys, "lex-expand", "--lexicon", work / "lex.txt", "--g2p", model,
                             "--out", work / name, "--n-generate", 600, "--n-keep", 50)
        assert code == 0 and "seed 0" in err
        report = json.loads(out)
        assert report["n_new_entries"] == 50 and report["n_generated"] == 600
        outs.append((work / name).read_text().split("\n", 1)[1])  # drop the header line
    assert outs[0] == outs[1]
    assert len(read_lexicon(work / "big1.lex")) == 90


def test_lm_train_and_topk(capsys, work):
    (work / "seqs.txt").write_text("a b\na\nb b a\n")
    assert run(capsys, "lm-train", "--text", work / "seqs.txt", "--order", 2, "--out", work / "lm.arpa")[0] == 0
    assert (work / "lm.arpa").read_text().startswith("# lowasr lm-train")
    code, out, _ = run(capsys, "lm-topk", "--lm", work / "lm.arpa", "--k", 3)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 3
    lps = [float(line.split("\t")[0]) for line in lines]
    assert lps == sorted(lps, reverse=True)


def test_vad_resample_and_fuse(capsys, work):
    dsp.write_wav(synth.floor_and_bursts(6.0, [(1.0, 2.5), (3.5, 5.0)], sr=16000, seed=1), work / "a.wav")
    assert run(capsys, "resample", "--rate", 8000, work / "a.wav", work / "a8.wav")[0] == 0
    assert dsp.read_wav(work / "a8.wav").sample_rate == 8000
    code, out, _ = run(capsys, "vad", work / "a.wav", work / "a8.wav", "--out", "-")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 4 and lines[0].split()[1] == "a" and lines[2].split()[1] == "a8"
    code, out2, _ = run(capsys, "vad", work / "a.wav", work / "a8.wav", "--jobs", 2)
    assert out2 == out
    (work / "s1").write_text("\n".join(lines[:2]) + "\n")
    code, out, _ = run(capsys, "vad-fuse", work / "s1", work / "s1", "--policy", "intersection")
    assert code == 0 and len(out.splitlines()) == 2


def test_augment_is_seeded(capsys, work):
    dsp.write_wav(synth.sine(440, 1.0), work / "t.wav")
    (work / "noise").mkdir()
    dsp.write_wav(dsp.AudioBuffer(np.random.default_rng(0).uniform(-0.3, 0.3, 4000), 16000), work / "noise" / "n.wav")
    (work / "rir").mkdir()
    dsp.write_wav(dsp.AudioBuffer(np.r_[1.0, np.zeros(50), 0.5, np.zeros(50), 0.25] * 0.9, 16000), work / "rir" / "r.wav")
    spec = work / "aug.toml"
    spec.write_text(f'speed = 0.9\nsnr_db = 5.0\nnoise_dir = "{work / "noise"}"\n')
    ids = []
    for name in ("o1.wav", "o2.wav"):
        code, out, err = run(capsys, "augment", "--spec", spec, "--rir-dir", work / "rir", "--seed", 3,
                             work / "t.wav", work / name)
        assert code == 0 and "seed 3" in err
        ids.append(out.split()[0])
    assert ids[0] == "t-sp0.9-noise-reverb"
    assert (work / "o1.wav").read_bytes() == (work / "o2.wav").read_bytes()
    assert abs(len(dsp.read_wav(work / "o1.wav")) - round(16000 / 0.9)) <= 1


def test_rover_text_and_ctm(capsys, work):
    code, out, _ = run(capsys, "rover", work / "h1.txt", work / "h2.txt", work / "h3.txt")
    assert code == 0 and out == "u1 the cat sat\nu2 on a mat\n"
    for k, words in enumerate(["hi there", "hi their", "hi there"]):
        rows = [f"rec 1 {0.5 * i:.2f} 0.40 {w} 0.9" for i, w in enumerate(words.split())]
        (work / f"s{k}.ctm").write_text("\n".join(rows) + "\n")
    code, out, _ = run(capsys, "rover", work / "s0.ctm", work / "s1.ctm", work / "s2.ctm", "--alpha", 0.5)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith(";; lowasr rover")
    assert [line.split()[4] for line in lines[1:]] == ["hi", "there"]
    code, _, _ = run(capsys, "rover", work / "s0.ctm", work / "h1.txt")
    assert code == 2


def test_demo(capsys):
    code, out, err = run(capsys, "demo", "--seed", 0)
    assert code == 0 and "seed 0" in err
    vals = {line[:20].strip(): line[20:].strip() for line in out.splitlines()}
    assert float(vals["fused WER"]) < float(vals["mean single WER"])
