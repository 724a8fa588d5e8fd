"""Command-line surface for the whole pipeline.

Subcommands: convert, split, train-embeddings, train, tag, eval,
gradcheck. Every command is deterministic given its flags and seed.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal check
failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import crf as _crf
from . import tagger as _tagger
from .corpus import (Sentence, TagSet, convert_json_corpus,
                     heuristic_pos_tag, parse_conll2000, parse_crf_conll,
                     split_corpus, write_conll2000, write_crf_conll)
from .embeddings import load_text, save_text, train_skipgram
from .metrics import build_report, render_keyvalue, render_table
from .numerics import finite_diff_check
from .serialize import read_container

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK = 3

ARCH_LSTM = "lstm-crf"
ARCH_BASELINE = "crf-baseline"


class _Parser(argparse.ArgumentParser):
    """argparse, but usage problems exit with code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _cmd_convert(args) -> int:
    sentences = convert_json_corpus(_read(args.input))
    if args.format == "conll2000":
        _write(args.output, write_conll2000(sentences))
    else:
        _write(args.output, write_crf_conll(
            [heuristic_pos_tag(s) for s in sentences]))
    return EXIT_OK


def _cmd_split(args) -> int:
    corpus = parse_conll2000(_read(args.input))
    split = split_corpus(corpus, args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, part in (("train", split.train), ("dev", split.dev),
                       ("test", split.test)):
        _write(os.path.join(args.out_dir, f"{name}.conll"),
               write_conll2000(part))
    return EXIT_OK


def _cmd_train_embeddings(args) -> int:
    corpus = parse_conll2000(_read(args.input))
    table = train_skipgram(corpus, args.dim, args.window, args.negatives,
                           args.epochs, args.seed, args.lr)
    _write(args.output, save_text(table))
    return EXIT_OK


def _stream_record(record) -> None:
    print(record.log_line(), flush=True)


def _cmd_train(args) -> int:
    train_set = parse_conll2000(_read(args.train))
    dev_set = parse_conll2000(_read(args.dev))
    pretrained = load_text(_read(args.pretrained)) if args.pretrained else None
    if args.arch == ARCH_LSTM:
        model, _ = _tagger.fit_tagger(
            train_set, dev_set, dim=args.dim, hidden=args.hidden,
            epochs=args.epochs, learning_rate=args.lr,
            clip_threshold=args.clip, dropout=args.dropout,
            unk_dropout=args.unk_dropout, pretrained=pretrained,
            seed=args.seed, on_epoch=_stream_record)
        _tagger.save_checkpoint(model, args.out)
    else:
        model, _ = _crf.fit_baseline(
            train_set, dev_set, l2=args.l2, epochs=args.epochs,
            learning_rate=args.lr, clip_threshold=args.clip, dim=args.dim,
            pretrained=pretrained, seed=args.seed, on_epoch=_stream_record)
        _crf.save_baseline(model, args.out)
    return EXIT_OK


def _load_any_model(path: str):
    header, _ = read_container(path)
    kind = header.get("kind")
    if kind == _tagger.CHECKPOINT_KIND:
        model = _tagger.load_checkpoint(path)
        return lambda sent: _tagger.predict_tags(model, sent)
    if kind == _crf.BASELINE_KIND:
        model = _crf.load_baseline(path)
        return model.predict
    raise ValueError(f"unknown model kind {kind!r} in {path}")


def _parse_tagging_input(text: str) -> list:
    for line in text.splitlines():
        if line.strip():
            width = len(line.split())
            break
    else:
        return []
    if width == 1:
        sentences, words = [], []
        for line in text.splitlines():
            if not line.strip():
                if words:
                    sentences.append(Sentence.from_pairs(words, ["O"] * len(words)))
                    words = []
            else:
                words.append(line.strip())
        if words:
            sentences.append(Sentence.from_pairs(words, ["O"] * len(words)))
        return sentences
    if width == 2:
        return parse_conll2000(text)
    if width == 4:
        return parse_crf_conll(text)
    raise ValueError(f"cannot infer the input format from {width} columns")


def _cmd_tag(args) -> int:
    predict = _load_any_model(args.model)
    sentences = _parse_tagging_input(_read(args.input))
    tagged = [Sentence.from_pairs(s.words, predict(s)) for s in sentences]
    _write(args.output, write_conll2000(tagged))
    return EXIT_OK


def _cmd_eval(args) -> int:
    gold = parse_conll2000(_read(args.gold))
    pred = parse_conll2000(_read(args.pred))
    tagset = TagSet.from_corpus(gold + pred)
    types = args.types.split(",") if args.types else None
    report = build_report(gold, pred, tagset, selected_types=types,
                          mode=args.mode)
    out = render_keyvalue(report) if args.kv else render_table(report)
    print(out, end="")
    return EXIT_OK


def _gradcheck_crf(seed: int):
    from .crf import ChainCrfParams, nll_and_gradient

    rng = np.random.Generator(np.random.PCG64(seed))
    lines, ok = [], True
    for trial in range(3):
        t = int(rng.integers(2, 5))
        n = int(rng.integers(2, 6))
        # moderate magnitudes keep every gradient entry resolvable by
        # central differences at the 1e-6 relative tolerance
        params = ChainCrfParams(rng.uniform(-1, 1, t),
                                rng.uniform(-1, 1, (t, t)),
                                rng.uniform(-1, 1, t))
        lattice = rng.uniform(-1, 1, (n, t))
        gold = rng.integers(0, t, n)
        _, grads = nll_and_gradient(params, lattice, gold)
        report = finite_diff_check(
            lambda: nll_and_gradient(params, lattice, gold)[0],
            {"start": params.start, "trans": params.trans,
             "end": params.end, "emissions": lattice},
            {"start": grads.start, "trans": grads.trans,
             "end": grads.end, "emissions": grads.emissions},
            epsilon=1e-5, tolerance=1e-6)
        for entry in report.entries:
            status = "PASS" if entry.passed else "FAIL"
            lines.append(f"crf[{trial}].{entry.name:<10} "
                         f"{entry.max_rel_error:.3e} {status}")
        ok &= report.passed
    return ok, lines


def _gradcheck_tagger(seed: int):
    words = ["buffer", "overflow", "in", "Server", "2.0", "allows",
             "remote", "code", "run", "via"]
    tags = ["O", "B-application", "I-application", "B-version"]
    rng = np.random.Generator(np.random.PCG64(seed))
    sentences = []
    for _ in range(2):
        n = int(rng.integers(4, 7))
        ws = [words[int(rng.integers(0, len(words)))] for _ in range(n)]
        ts = ["O"] * n
        ts[0] = "B-application"
        ts[-1] = "B-version"
        sentences.append(Sentence.from_pairs(ws, ts))
    model, _ = _tagger.fit_tagger(sentences, sentences, dim=3, hidden=4,
                                  epochs=0, seed=seed)
    _, analytic = _tagger.loss_and_gradients(model, sentences)
    params = model.parameter_blocks()
    report = finite_diff_check(
        lambda: _tagger.corpus_loss(model, sentences),
        params, analytic, epsilon=1e-5, tolerance=1e-4)
    lines = []
    for entry in report.entries:
        status = "PASS" if entry.passed else "FAIL"
        lines.append(f"lstm-crf.{entry.name:<12} "
                     f"{entry.max_rel_error:.3e} {status}")
    return report.passed, lines


def _cmd_gradcheck(args) -> int:
    ok = True
    if args.arch in (ARCH_BASELINE, "crf", "both"):
        crf_ok, lines = _gradcheck_crf(args.seed)
        ok &= crf_ok
        print("\n".join(lines))
    if args.arch in (ARCH_LSTM, "both"):
        lstm_ok, lines = _gradcheck_tagger(args.seed)
        ok &= lstm_ok
        print("\n".join(lines))
    print("gradcheck:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cvetag",
                     description="Sequence tagging workbench for "
                                 "vulnerability descriptions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[], help="JSON corpus to CoNLL")
    p.add_argument("input", help="JSON corpus file")
    p.add_argument("output", help="destination file")
    p.add_argument("--format", choices=["conll2000", "crf4col"],
                   default="conll2000",
                   help="output layout (default: %(default)s)")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("split", help="shuffle and cut 70/10/20")
    p.add_argument("input", help="two-column corpus file")
    p.add_argument("out_dir", help="directory for train/dev/test.conll")
    p.add_argument("--seed", type=int, default=42,
                   help="shuffle seed (default: %(default)s)")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train-embeddings",
                       help="skip-gram pretraining on a corpus file")
    p.add_argument("input", help="two-column corpus file")
    p.add_argument("output", help="embedding text file to write")
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_train_embeddings)

    p = sub.add_parser("train", help="train a tagger, write a checkpoint")
    p.add_argument("train", help="training corpus (two-column)")
    p.add_argument("dev", help="held-out corpus for model selection")
    p.add_argument("--arch", choices=[ARCH_LSTM, ARCH_BASELINE],
                   default=ARCH_LSTM)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--dim", type=int, default=100,
                   help="embedding dimension (default: %(default)s)")
    p.add_argument("--hidden", type=int, default=100,
                   help="LSTM units per direction (default: %(default)s)")
    p.add_argument("--lr", type=float, default=None,
                   help="learning rate (default: 0.01 lstm-crf, "
                        "0.1 crf-baseline)")
    p.add_argument("--clip", type=float, default=5.0,
                   help="global gradient norm cap (default: %(default)s)")
    p.add_argument("--dropout", type=float, default=0.5,
                   help="embedding dropout rate (default: %(default)s)")
    p.add_argument("--unk-dropout", type=float, default=0.5,
                   help="singleton-to-UNK rate (default: %(default)s)")
    p.add_argument("--l2", type=float, default=1e-4,
                   help="L2 strength for the baseline (default: %(default)s)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--pretrained", default=None,
                   help="embedding text file to initialize from")
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("tag", help="tag a file with a trained model")
    p.add_argument("model", help="checkpoint written by train")
    p.add_argument("input", help="two-column, four-column, or one-token-per-"
                                 "line file")
    p.add_argument("output", help="two-column file with predicted tags")
    p.set_defaults(func=_cmd_tag)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("gold", help="gold two-column file")
    p.add_argument("pred", help="predicted two-column file")
    p.add_argument("--types", default=None,
                   help="comma-separated entity types to report "
                        "(e.g. vendor,application,version,edition,os,"
                        "hardware,file); default: all")
    p.add_argument("--mode", choices=["entity", "token"], default="entity")
    p.add_argument("--kv", action="store_true",
                   help="machine-readable key-value lines instead of a table")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gradcheck",
                       help="finite-difference check of all gradients")
    p.add_argument("--arch", choices=[ARCH_LSTM, ARCH_BASELINE, "crf", "both"],
                   default="both")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "lr", None) is None and args.command == "train":
        args.lr = 0.01 if args.arch == ARCH_LSTM else 0.1
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"cvetag {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
