import json

import pytest

from cvetag import cli
from cvetag.corpus import parse_conll2000, parse_crf_conll
from cvetag.embeddings import load_text

from synth import cve_corpus, pattern_corpus
from cvetag.corpus import write_conll2000

SAMPLE_JSON = {
    "nvd": [
        {"tokens": ["Apple", "QuickTime", "before", "7.7", "allows"],
         "labels": ["B-vendor", "B-application", "B-version", "I-version",
                    "O"]},
        {"tokens": ["to", "execute"], "labels": ["O", "O"]},
    ],
    "msb": [
        {"tokens": ["Windows", "kernel"], "labels": ["B-os", "O"]},
    ],
}


def run(argv):
    try:
        return cli.main(argv)
    except SystemExit as exc:  # argparse paths
        return exc.code if isinstance(exc.code, int) else 0


@pytest.fixture
def json_corpus(tmp_path):
    path = tmp_path / "corpus.json"
    path.write_text(json.dumps(SAMPLE_JSON), encoding="utf-8")
    return path


@pytest.fixture
def conll_corpus(tmp_path):
    path = tmp_path / "corpus.conll"
    path.write_text(write_conll2000(cve_corpus(10, seed=1, rare_total=1)),
                    encoding="utf-8")
    return path


class TestConvert:
    def test_json_to_conll2000(self, json_corpus, tmp_path):
        out = tmp_path / "out.conll"
        assert run(["convert", str(json_corpus), str(out)]) == 0
        text = out.read_text(encoding="utf-8")
        assert text.startswith("Apple B-vendor\nQuickTime B-application\n")
        assert len(parse_conll2000(text)) == 3

    def test_json_to_crf4col(self, json_corpus, tmp_path):
        out = tmp_path / "out.crf"
        assert run(["convert", str(json_corpus), str(out),
                    "--format", "crf4col"]) == 0
        text = out.read_text(encoding="utf-8")
        assert text.splitlines()[0] == "B-vendor Apple NNP O"
        assert "I-version 7.7 CD O" in text
        assert len(parse_crf_conll(text)) == 3

    def test_empty_json_gives_empty_file(self, tmp_path):
        src = tmp_path / "empty.json"
        src.write_text("{}", encoding="utf-8")
        out = tmp_path / "out.conll"
        assert run(["convert", str(src), str(out)]) == 0
        assert out.read_text(encoding="utf-8") == ""

    def test_missing_input_exits_2(self, tmp_path, capsys):
        rc = run(["convert", str(tmp_path / "nope.json"),
                  str(tmp_path / "o")])
        assert rc == 2
        assert "error" in capsys.readouterr().err


class TestSplit:
    def test_sizes_and_dir_creation(self, conll_corpus, tmp_path):
        out_dir = tmp_path / "made" / "splits"
        assert run(["split", str(conll_corpus), str(out_dir),
                    "--seed", "4"]) == 0
        sizes = {name: len(parse_conll2000(
            (out_dir / f"{name}.conll").read_text(encoding="utf-8")))
            for name in ("train", "dev", "test")}
        assert sizes == {"train": 7, "dev": 1, "test": 2}

    def test_same_seed_reproduces_bytes(self, conll_corpus, tmp_path):
        outs = []
        for run_dir in ("a", "b"):
            out_dir = tmp_path / run_dir
            assert run(["split", str(conll_corpus), str(out_dir),
                        "--seed", "9"]) == 0
            outs.append((out_dir / "train.conll").read_bytes())
        assert outs[0] == outs[1]

    def test_too_small_corpus_exits_2(self, tmp_path):
        small = tmp_path / "small.conll"
        small.write_text("a O\n\nb O\n", encoding="utf-8")
        assert run(["split", str(small), str(tmp_path / "d")]) == 2


class TestTrainEmbeddings:
    def test_writes_loadable_table(self, conll_corpus, tmp_path):
        out = tmp_path / "vecs.txt"
        assert run(["train-embeddings", str(conll_corpus), str(out),
                    "--dim", "8", "--epochs", "1", "--window", "2",
                    "--negatives", "2"]) == 0
        table = load_text(out.read_text(encoding="utf-8"))
        assert table.dim == 8


def train_args(train, dev, out, arch, extra=()):
    return ["train", str(train), str(dev), "--arch", arch, "--out", str(out),
            "--dim", "6", "--hidden", "5", "--epochs", "2",
            "--seed", "11"] + list(extra)


@pytest.fixture
def split_files(tmp_path):
    corpus = cve_corpus(14, seed=7, rare_total=0)
    train = tmp_path / "train.conll"
    dev = tmp_path / "dev.conll"
    train.write_text(write_conll2000(corpus[:10]), encoding="utf-8")
    dev.write_text(write_conll2000(corpus[10:]), encoding="utf-8")
    return train, dev


class TestTrain:
    def test_epoch_log_lines(self, split_files, tmp_path, capsys):
        train, dev = split_files
        out = tmp_path / "m.ckpt"
        assert run(train_args(train, dev, out, cli.ARCH_LSTM)) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        assert all(len(line.split()) == 4 for line in lines)
        assert out.exists()

    def test_epochs_zero_writes_initial_checkpoint(self, split_files,
                                                   tmp_path, capsys):
        train, dev = split_files
        out = tmp_path / "m0.ckpt"
        argv = ["train", str(train), str(dev), "--out", str(out),
                "--dim", "6", "--hidden", "5", "--epochs", "0"]
        assert run(argv) == 0
        assert capsys.readouterr().out == ""
        assert out.exists()

    def test_determinism_both_archs(self, split_files, tmp_path, capsys):
        train, dev = split_files
        for arch in (cli.ARCH_LSTM, cli.ARCH_BASELINE):
            blobs, logs = [], []
            for name in ("a", "b"):
                out = tmp_path / f"{arch}-{name}.ckpt"
                assert run(train_args(train, dev, out, arch)) == 0
                logs.append(capsys.readouterr().out)
                blobs.append(out.read_bytes())
            assert blobs[0] == blobs[1], arch
            assert logs[0] == logs[1], arch

    def test_unknown_arch_exits_1(self, split_files, tmp_path, capsys):
        train, dev = split_files
        rc = run(["train", str(train), str(dev), "--arch", "transformer",
                  "--out", str(tmp_path / "x")])
        assert rc == 1
        capsys.readouterr()

    def test_dev_tag_outside_train_exits_2(self, tmp_path, capsys):
        corpus = cve_corpus(14, seed=7, rare_total=1)
        train = tmp_path / "t2.conll"
        dev = tmp_path / "d2.conll"
        train.write_text(write_conll2000(corpus[:10]), encoding="utf-8")
        dev.write_text(write_conll2000(corpus[10:]), encoding="utf-8")
        rc = run(train_args(train, dev, tmp_path / "m2.ckpt", cli.ARCH_LSTM))
        assert rc == 2
        assert "hardware" in capsys.readouterr().err

    def test_pretrained_embeddings_flow(self, split_files, tmp_path, capsys):
        train, dev = split_files
        vecs = tmp_path / "vecs.txt"
        assert run(["train-embeddings", str(train), str(vecs), "--dim", "6",
                    "--epochs", "1", "--window", "2", "--negatives", "2"]) == 0
        out = tmp_path / "pre.ckpt"
        assert run(train_args(train, dev, out, cli.ARCH_LSTM,
                              ["--pretrained", str(vecs)])) == 0
        capsys.readouterr()


class TestTagAndEval:
    def _train_model(self, tmp_path, capsys, arch=cli.ARCH_LSTM):
        corpus = pattern_corpus(60, seed=13)
        train = tmp_path / "t.conll"
        dev = tmp_path / "d.conll"
        train.write_text(write_conll2000(corpus[:50]), encoding="utf-8")
        dev.write_text(write_conll2000(corpus[50:]), encoding="utf-8")
        out = tmp_path / "model.ckpt"
        argv = ["train", str(train), str(dev), "--arch", arch,
                "--out", str(out), "--dim", "6", "--hidden", "5",
                "--epochs", "3", "--seed", "2"]
        if arch == cli.ARCH_LSTM:
            argv += ["--dropout", "0.0", "--unk-dropout", "0.0",
                     "--lr", "0.1"]
        assert run(argv) == 0
        capsys.readouterr()
        return out, train, dev

    def test_tag_output_shape(self, tmp_path, capsys):
        model, train, dev = self._train_model(tmp_path, capsys)
        tagged = tmp_path / "tagged.conll"
        assert run(["tag", str(model), str(dev), str(tagged)]) == 0
        gold = parse_conll2000(dev.read_text(encoding="utf-8"))
        pred = parse_conll2000(tagged.read_text(encoding="utf-8"))
        assert [s.words for s in pred] == [s.words for s in gold]

    def test_tag_plain_token_input(self, tmp_path, capsys):
        model, train, dev = self._train_model(tmp_path, capsys)
        plain = tmp_path / "plain.txt"
        plain.write_text("veko\nanta\n\nmund\n", encoding="utf-8")
        out = tmp_path / "out.conll"
        assert run(["tag", str(model), str(plain), str(out)]) == 0
        pred = parse_conll2000(out.read_text(encoding="utf-8"))
        assert [len(s) for s in pred] == [2, 1]

    def test_tag_deterministic(self, tmp_path, capsys):
        model, train, dev = self._train_model(tmp_path, capsys)
        outs = []
        for name in ("x", "y"):
            out = tmp_path / f"{name}.conll"
            assert run(["tag", str(model), str(dev), str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_tag_with_baseline_checkpoint(self, tmp_path, capsys):
        model, train, dev = self._train_model(tmp_path, capsys,
                                              arch=cli.ARCH_BASELINE)
        out = tmp_path / "tagged.conll"
        assert run(["tag", str(model), str(dev), str(out)]) == 0

    def test_tag_then_eval_on_memorized_train_set(self, tmp_path, capsys):
        model, train, dev = self._train_model(tmp_path, capsys,
                                              arch=cli.ARCH_BASELINE)
        tagged = tmp_path / "train-tagged.conll"
        assert run(["tag", str(model), str(train), str(tagged)]) == 0
        assert run(["eval", str(train), str(tagged)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("Token accuracy: 100.0")

    def test_eval_identical_files_all_100(self, tmp_path, capsys):
        corpus = pattern_corpus(20, seed=17)
        gold = tmp_path / "g.conll"
        gold.write_text(write_conll2000(corpus), encoding="utf-8")
        assert run(["eval", str(gold), str(gold)]) == 0
        out = capsys.readouterr().out
        assert "Token accuracy: 100.0" in out
        assert "100.0" in out and "Average" in out

    def test_eval_restricted_types_row_count(self, tmp_path, capsys):
        corpus = cve_corpus(40, seed=19, rare_total=4)
        gold = tmp_path / "g.conll"
        gold.write_text(write_conll2000(corpus), encoding="utf-8")
        types = "vendor,application,version,edition,os,hardware,file"
        assert run(["eval", str(gold), str(gold), "--types", types]) == 0
        lines = capsys.readouterr().out.splitlines()
        rows = lines[3:]  # after accuracy line, header, rule
        assert len(rows) == 8  # 7 types + Average
        assert rows[0].startswith("vendor")
        assert rows[-1].startswith("Average")

    def test_eval_misaligned_exits_2(self, tmp_path, capsys):
        corpus = pattern_corpus(10, seed=23)
        gold = tmp_path / "g.conll"
        pred = tmp_path / "p.conll"
        gold.write_text(write_conll2000(corpus), encoding="utf-8")
        pred.write_text(write_conll2000(corpus[:5]), encoding="utf-8")
        assert run(["eval", str(gold), str(pred)]) == 2
        capsys.readouterr()

    def test_eval_kv_output(self, tmp_path, capsys):
        corpus = pattern_corpus(10, seed=29)
        gold = tmp_path / "g.conll"
        gold.write_text(write_conll2000(corpus), encoding="utf-8")
        assert run(["eval", str(gold), str(gold), "--kv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == ["token_accuracy", "100.0"]


class TestGradcheck:
    def test_crf_only_passes(self, capsys):
        assert run(["gradcheck", "--arch", "crf", "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out.replace(
            "gradcheck: PASS", "")

    def test_full_suite_passes(self, capsys):
        assert run(["gradcheck", "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert out.strip().endswith("gradcheck: PASS")


class TestUsage:
    def test_help_exits_zero_everywhere(self, capsys):
        for sub in ["convert", "split", "train-embeddings", "train", "tag",
                    "eval", "gradcheck"]:
            assert run([sub, "--help"]) == 0
            assert "usage" in capsys.readouterr().out

    def test_unknown_flag_exits_1(self, capsys):
        assert run(["split", "--frobnicate"]) == 1
        capsys.readouterr()

    def test_no_command_exits_1(self, capsys):
        assert run([]) == 1
        capsys.readouterr()
