"""Embedding -> BiLSTM -> projection -> chain CRF tagger.

Training is per-sentence stochastic gradient with a global norm clip;
one epoch is one shuffled pass over the training sentences. After every
epoch the dev set is scored and the parameters of the best dev macro-F1
epoch are the ones returned (ties go to the earlier epoch).

Two regularizers run during training only: inverted dropout on the
embedding output and UNK-dropout, which replaces words seen exactly
once in the vocabulary by the unknown sentinel with probability 0.5.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, asdict

import numpy as np

from .bilstm import BiLstmParams, LstmCellParams, bilstm_forward, bptt_backward
from .corpus import Sentence, TagSet
from .crf import (ChainCrfParams, forward_logZ, nll_and_gradient,
                  score_sequence, viterbi_decode)
from .embeddings import EmbeddingTable, Vocabulary, build_vocab
from .numerics import (ClippedSgd, DEFAULT_DROPOUT, DEFAULT_EMBEDDING_DIM,
                       DEFAULT_HIDDEN_SIZE, default_rng, init_matrix)
from .serialize import CheckpointError, read_container, write_container
from .training import EpochRecord, TrainLog, dev_scores


@dataclass(frozen=True)
class TaggerConfig:
    dim: int = DEFAULT_EMBEDDING_DIM
    hidden: int = DEFAULT_HIDDEN_SIZE
    dropout: float = DEFAULT_DROPOUT
    unk_dropout: float = 0.5
    seed: int = 42


@dataclass
class TaggerModel:
    table: EmbeddingTable       # trainable embeddings
    lstm: BiLstmParams
    proj_w: np.ndarray          # 2H x T
    proj_b: np.ndarray          # T
    crf: ChainCrfParams
    tagset: TagSet
    config: TaggerConfig

    def __post_init__(self):
        two_h = 2 * self.lstm.hidden_size
        t = len(self.tagset)
        if self.proj_w.shape != (two_h, t) or self.proj_b.shape != (t,):
            raise ValueError("projection shape does not match hidden size / tags")
        if self.crf.num_tags != t:
            raise ValueError("CRF tag count does not match the tag set")
        if self.table.dim != self.lstm.forward.input_dim:
            raise ValueError("embedding dim does not match the LSTM input dim")

    def copy(self) -> "TaggerModel":
        return copy.deepcopy(self)

    def parameter_blocks(self) -> dict:
        """Every trainable array, in checkpoint order."""
        blocks = {"embeddings": self.table.vectors}
        blocks.update(self.lstm.blocks())
        blocks.update({"proj_w": self.proj_w, "proj_b": self.proj_b,
                       "crf.start": self.crf.start, "crf.trans": self.crf.trans,
                       "crf.end": self.crf.end})
        return blocks


def build_model(tagset: TagSet, vocab_or_pretrained, dim: int = DEFAULT_EMBEDDING_DIM,
                hidden: int = DEFAULT_HIDDEN_SIZE, seed: int = 42,
                dropout: float = DEFAULT_DROPOUT,
                unk_dropout: float = 0.5) -> TaggerModel:
    """Initialize all parameters from the seed.

    ``vocab_or_pretrained`` is either a Vocabulary (embeddings drawn
    fresh) or an EmbeddingTable whose rows are copied in verbatim, in
    which case its dimension wins.
    """
    if len(tagset) == 0:
        raise ValueError("empty tag set")
    rng = default_rng(seed)
    if isinstance(vocab_or_pretrained, EmbeddingTable):
        table = EmbeddingTable(vocab_or_pretrained.vocab,
                               vocab_or_pretrained.vectors.copy())
        dim = table.dim
    elif isinstance(vocab_or_pretrained, Vocabulary):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        table = EmbeddingTable(vocab_or_pretrained,
                               init_matrix(len(vocab_or_pretrained), dim, rng))
    else:
        raise TypeError("expected a Vocabulary or an EmbeddingTable")
    if hidden < 1:
        raise ValueError("hidden must be >= 1")
    lstm = BiLstmParams.init(dim, hidden, rng)
    proj_w = init_matrix(2 * hidden, len(tagset), rng)
    proj_b = np.zeros(len(tagset))
    crf = ChainCrfParams.zeros(len(tagset))
    cfg = TaggerConfig(dim, hidden, dropout, unk_dropout, seed)
    return TaggerModel(table, lstm, proj_w, proj_b, crf, tagset, cfg)


@dataclass
class _ForwardCache:
    row_ids: list      # embedding row per position (after UNK-dropout)
    masks: list | None  # scaled dropout masks, or None outside training
    hmat: np.ndarray   # n x 2H BiLSTM outputs
    trace: object


def _forward(model: TaggerModel, sentence: Sentence, training: bool,
             rng: np.random.Generator | None):
    vocab = model.table.vocab
    row_ids = []
    for tok in sentence:
        row = vocab.index(tok.word)
        if (training and model.config.unk_dropout > 0 and row != 0
                and vocab.counts[row] == 1
                and rng.random() < model.config.unk_dropout):
            row = 0
        row_ids.append(row)
    xs = [model.table.vectors[r].copy() for r in row_ids]
    masks = None
    if training and model.config.dropout > 0:
        keep = 1.0 - model.config.dropout
        masks = [(rng.random(model.table.dim) >= model.config.dropout) / keep
                 for _ in xs]
        xs = [x * m for x, m in zip(xs, masks)]
    outputs, trace = bilstm_forward(model.lstm, xs)
    hmat = np.asarray(outputs)
    lattice = hmat @ model.proj_w + model.proj_b
    return lattice, _ForwardCache(row_ids, masks, hmat, trace)


def forward_lattice(model: TaggerModel, sentence: Sentence,
                    training: bool = False,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Emission scores (n x T). The training flag enables the dropouts."""
    if training and rng is None:
        raise ValueError("training-mode forward needs an rng")
    lattice, _ = _forward(model, sentence, training, rng)
    return lattice


def _backward(model: TaggerModel, cache: _ForwardCache, d_lattice: np.ndarray):
    """Gradients of the sentence loss given the emission gradient."""
    d_proj_w = cache.hmat.T @ d_lattice
    d_proj_b = d_lattice.sum(axis=0)
    d_hs = d_lattice @ model.proj_w.T
    lstm_grads, d_xs = bptt_backward(model.lstm, cache.trace, list(d_hs))
    emb_rows = {}
    for t, dx in enumerate(d_xs):
        if cache.masks is not None:
            dx = dx * cache.masks[t]
        row = cache.row_ids[t]
        if row in emb_rows:
            emb_rows[row] += dx
        else:
            emb_rows[row] = dx.copy()
    return lstm_grads, d_proj_w, d_proj_b, emb_rows


def _gold_ids(sentence: Sentence, tagset: TagSet) -> np.ndarray:
    ids = []
    for tok in sentence:
        if tok.tag not in tagset:
            raise ValueError(f"tag {tok.tag!r} is not in the model's tag set")
        ids.append(tagset.id_of(tok.tag))
    return np.asarray(ids, dtype=np.intp)


def predict_tags(model: TaggerModel, sentence: Sentence) -> list:
    """Viterbi labels for one sentence (deterministic, dropout off)."""
    lattice = forward_lattice(model, sentence, training=False)
    path, _ = viterbi_decode(model.crf, lattice)
    return [model.tagset.label_of(t) for t in path]


def train(model: TaggerModel, train_set, dev_set, epochs: int,
          optimizer: ClippedSgd | None = None, seed: int = 42,
          on_epoch=None):
    """Train in place; returns (best-dev-F1 model copy, TrainLog).

    The passed model ends up at the final epoch's parameters; the
    returned model is the snapshot of the best epoch.
    """
    train_set, dev_set = list(train_set), list(dev_set)
    if not train_set or not dev_set:
        raise ValueError("training needs non-empty train and dev sets")
    for sent in train_set + dev_set:
        _gold_ids(sent, model.tagset)
    if epochs == 0:
        return model, TrainLog()
    opt = optimizer or ClippedSgd()
    rng = default_rng(seed)
    log = TrainLog()
    best_model, best_f1 = None, -1.0

    static_names = list(model.lstm.blocks().keys())
    for epoch in range(1, epochs + 1):
        t0 = time.perf_counter()
        epoch_loss = 0.0
        for si in rng.permutation(len(train_set)):
            sent = train_set[si]
            lattice, cache = _forward(model, sent, True, rng)
            loss, grads = nll_and_gradient(model.crf, lattice,
                                           _gold_ids(sent, model.tagset))
            epoch_loss += loss
            lstm_grads, d_pw, d_pb, emb_rows = _backward(model, cache,
                                                         grads.emissions)
            rows = sorted(emb_rows)
            row_block = model.table.vectors[rows]
            lstm_blocks = model.lstm.blocks()
            grad_blocks = lstm_grads.blocks()
            params = [row_block] + [lstm_blocks[n] for n in static_names] + [
                model.proj_w, model.proj_b, model.crf.start,
                model.crf.trans, model.crf.end]
            gradients = [np.asarray([emb_rows[r] for r in rows])] + [
                grad_blocks[n] for n in static_names] + [
                d_pw, d_pb, grads.start, grads.trans, grads.end]
            opt.step(params, gradients)
            model.table.vectors[rows] = row_block

        acc, f1 = dev_scores(lambda s: predict_tags(model, s), dev_set,
                             model.tagset)
        record = EpochRecord(epoch, epoch_loss, acc, f1,
                             time.perf_counter() - t0)
        log.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if f1 > best_f1:
            best_f1 = f1
            best_model = model.copy()
    return best_model, log


def fit_tagger(train_set, dev_set, dim: int = DEFAULT_EMBEDDING_DIM,
               hidden: int = DEFAULT_HIDDEN_SIZE, epochs: int = 100,
               learning_rate: float = 0.01, clip_threshold: float = 5.0,
               dropout: float = DEFAULT_DROPOUT, unk_dropout: float = 0.5,
               min_count: int = 1, pretrained: EmbeddingTable | None = None,
               seed: int = 42, on_epoch=None):
    """Vocabulary/tag set construction plus training, in one call.

    The single entry point shared by the CLI and the estimator so both
    produce identical models for identical inputs and seeds.
    """
    train_set, dev_set = list(train_set), list(dev_set)
    if not train_set:
        raise ValueError("empty training corpus")
    tagset = TagSet.from_corpus(train_set)
    source = pretrained if pretrained is not None else build_vocab(train_set,
                                                                   min_count)
    model = build_model(tagset, source, dim, hidden, seed, dropout,
                        unk_dropout)
    if epochs == 0:
        return model, TrainLog()
    best, log = train(model, train_set, dev_set, epochs,
                      ClippedSgd(learning_rate, clip_threshold), seed,
                      on_epoch=on_epoch)
    return best, log


def corpus_loss(model: TaggerModel, sentences) -> float:
    """Total dropout-free NLL over ``sentences`` (no gradients)."""
    total = 0.0
    for sent in sentences:
        lattice = forward_lattice(model, sent, training=False)
        gold = _gold_ids(sent, model.tagset)
        total += forward_logZ(model.crf, lattice) - score_sequence(
            model.crf, lattice, gold)
    return total


def loss_and_gradients(model: TaggerModel, sentences):
    """Total NLL over ``sentences`` and analytic gradients per block.

    Dropout-free path used by the finite-difference suites; the
    embedding gradient comes back as a full |V| x d matrix.
    """
    total = 0.0
    acc = {name: np.zeros_like(arr)
           for name, arr in model.parameter_blocks().items()}
    for sent in sentences:
        lattice, cache = _forward(model, sent, False, None)
        loss, grads = nll_and_gradient(model.crf, lattice,
                                       _gold_ids(sent, model.tagset))
        total += loss
        lstm_grads, d_pw, d_pb, emb_rows = _backward(model, cache,
                                                     grads.emissions)
        for row, g in emb_rows.items():
            acc["embeddings"][row] += g
        for name, g in lstm_grads.blocks().items():
            acc[name] += g
        acc["proj_w"] += d_pw
        acc["proj_b"] += d_pb
        acc["crf.start"] += grads.start
        acc["crf.trans"] += grads.trans
        acc["crf.end"] += grads.end
    return total, acc


CHECKPOINT_KIND = "bilstm-crf"


def save_checkpoint(model: TaggerModel, path) -> None:
    header = {
        "kind": CHECKPOINT_KIND,
        "config": asdict(model.config),
        "tagset": list(model.tagset.labels),
        "vocab_words": list(model.table.vocab.words),
        "vocab_counts": list(model.table.vocab.counts),
    }
    write_container(path, header, model.parameter_blocks())


def load_checkpoint(path) -> TaggerModel:
    header, arrays = read_container(path)
    if header.get("kind") != CHECKPOINT_KIND:
        raise CheckpointError(f"checkpoint holds a {header.get('kind')!r} "
                              f"model, expected {CHECKPOINT_KIND!r}")
    cfg = TaggerConfig(**header["config"])
    tagset = TagSet(header["tagset"])
    vocab = Vocabulary(tuple(header["vocab_words"]),
                       tuple(int(c) for c in header["vocab_counts"]))
    table = EmbeddingTable(vocab, arrays["embeddings"])
    fwd_blocks = {k[4:]: v for k, v in arrays.items() if k.startswith("fwd.")}
    bwd_blocks = {k[4:]: v for k, v in arrays.items() if k.startswith("bwd.")}
    lstm = BiLstmParams(LstmCellParams(**fwd_blocks),
                        LstmCellParams(**bwd_blocks))
    crf = ChainCrfParams(arrays["crf.start"], arrays["crf.trans"],
                         arrays["crf.end"])
    return TaggerModel(table, lstm, arrays["proj_w"], arrays["proj_b"],
                       crf, tagset, cfg)
