"""Linear-chain CRF engine and the feature-template baseline tagger.

The engine scores tag sequences as

    start[t_1] + sum_i emissions[i, t_i] + sum_i trans[t_i, t_{i+1}] + end[t_n]

and provides the forward partition, Viterbi decoding, posterior
marginals, and exact negative-log-likelihood gradients (including the
gradient w.r.t. the emission lattice, which is what the neural tagger
backpropagates through). Emission lattices are plain ``n x T`` float
arrays.

The same engine drives the standalone baseline: a linear model over
sparse feature templates plus a dense word-embedding block.
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import Sentence, TagSet, heuristic_pos
from .embeddings import EmbeddingTable, Vocabulary, build_vocab, lookup
from .numerics import ClippedSgd, default_rng, log_sum_exp
from .serialize import CheckpointError, read_container, write_container
from .training import EpochRecord, TrainLog, dev_scores


@dataclass
class ChainCrfParams:
    """Start/transition/end scores over a tag inventory of size T."""

    start: np.ndarray  # T
    trans: np.ndarray  # T x T; trans[i, j] scores the move i -> j
    end: np.ndarray    # T

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=np.float64)
        self.trans = np.asarray(self.trans, dtype=np.float64)
        self.end = np.asarray(self.end, dtype=np.float64)
        t = self.start.shape[0]
        if self.trans.shape != (t, t) or self.end.shape != (t,):
            raise ValueError("inconsistent CRF parameter shapes")

    @property
    def num_tags(self) -> int:
        return self.start.shape[0]

    @classmethod
    def zeros(cls, num_tags: int) -> "ChainCrfParams":
        return cls(np.zeros(num_tags), np.zeros((num_tags, num_tags)),
                   np.zeros(num_tags))

    def copy(self) -> "ChainCrfParams":
        return ChainCrfParams(self.start.copy(), self.trans.copy(),
                              self.end.copy())


def _check_lattice(params: ChainCrfParams, lattice) -> np.ndarray:
    lattice = np.asarray(lattice, dtype=np.float64)
    if lattice.ndim != 2 or lattice.shape[0] < 1:
        raise ValueError("lattice must be n x T with n >= 1")
    if lattice.shape[1] != params.num_tags:
        raise ValueError(f"lattice has {lattice.shape[1]} tags, "
                         f"params have {params.num_tags}")
    return lattice


def score_sequence(params: ChainCrfParams, lattice, tags) -> float:
    """Unnormalized score of one tag path through the lattice."""
    lattice = _check_lattice(params, lattice)
    tags = np.asarray(tags, dtype=np.intp)
    if tags.shape != (lattice.shape[0],):
        raise ValueError(f"path length {tags.shape} does not match "
                         f"lattice length {lattice.shape[0]}")
    score = params.start[tags[0]] + lattice[np.arange(len(tags)), tags].sum()
    score += params.trans[tags[:-1], tags[1:]].sum()
    score += params.end[tags[-1]]
    return float(score)


def _forward_alphas(params: ChainCrfParams, lattice: np.ndarray) -> np.ndarray:
    n = lattice.shape[0]
    alphas = np.empty_like(lattice)
    alphas[0] = params.start + lattice[0]
    for i in range(1, n):
        alphas[i] = log_sum_exp(alphas[i - 1][:, None] + params.trans,
                                axis=0) + lattice[i]
    return alphas


def _backward_betas(params: ChainCrfParams, lattice: np.ndarray) -> np.ndarray:
    n = lattice.shape[0]
    betas = np.empty_like(lattice)
    betas[n - 1] = params.end
    for i in range(n - 2, -1, -1):
        betas[i] = log_sum_exp(
            params.trans + (lattice[i + 1] + betas[i + 1])[None, :], axis=1)
    return betas


def forward_logZ(params: ChainCrfParams, lattice) -> float:
    """Log of the summed exponentiated scores of every tag path."""
    lattice = _check_lattice(params, lattice)
    alphas = _forward_alphas(params, lattice)
    return float(log_sum_exp(alphas[-1] + params.end))


def viterbi_decode(params: ChainCrfParams, lattice) -> tuple:
    """Highest-scoring path and its score.

    Ties break toward the lower tag id at every backtrack step (argmax
    returns the first maximum).
    """
    lattice = _check_lattice(params, lattice)
    n, t = lattice.shape
    delta = params.start + lattice[0]
    backptr = np.empty((n, t), dtype=np.intp)
    for i in range(1, n):
        cand = delta[:, None] + params.trans
        backptr[i] = np.argmax(cand, axis=0)
        delta = cand[backptr[i], np.arange(t)] + lattice[i]
    final = delta + params.end
    best_last = int(np.argmax(final))
    path = [best_last]
    for i in range(n - 1, 0, -1):
        path.append(int(backptr[i, path[-1]]))
    path.reverse()
    return path, float(final[best_last])


def posterior_marginals(params: ChainCrfParams, lattice) -> np.ndarray:
    """P(tag at position i = t | lattice) for every position; rows sum to 1."""
    lattice = _check_lattice(params, lattice)
    alphas = _forward_alphas(params, lattice)
    betas = _backward_betas(params, lattice)
    log_z = log_sum_exp(alphas[-1] + params.end)
    return np.exp(alphas + betas - log_z)


@dataclass
class ChainCrfGradients:
    start: np.ndarray
    trans: np.ndarray
    end: np.ndarray
    emissions: np.ndarray


def nll_and_gradient(params: ChainCrfParams, lattice, gold_tags):
    """Negative log-likelihood of the gold path and its exact gradients.

    loss = logZ - score(gold); each gradient is the posterior expected
    count minus the empirical count, so the emission gradient is the
    marginal matrix minus the gold indicator matrix.
    """
    lattice = _check_lattice(params, lattice)
    gold = np.asarray(gold_tags, dtype=np.intp)
    n, t = lattice.shape
    if gold.shape != (n,):
        raise ValueError("gold path length does not match lattice")
    alphas = _forward_alphas(params, lattice)
    betas = _backward_betas(params, lattice)
    log_z = float(log_sum_exp(alphas[-1] + params.end))
    loss = log_z - score_sequence(params, lattice, gold)

    marginals = np.exp(alphas + betas - log_z)
    d_emissions = marginals.copy()
    d_emissions[np.arange(n), gold] -= 1.0

    d_start = marginals[0].copy()
    d_start[gold[0]] -= 1.0
    d_end = marginals[-1].copy()
    d_end[gold[-1]] -= 1.0

    d_trans = np.zeros((t, t))
    for i in range(n - 1):
        pair = np.exp(alphas[i][:, None] + params.trans
                      + (lattice[i + 1] + betas[i + 1])[None, :] - log_z)
        d_trans += pair
        d_trans[gold[i], gold[i + 1]] -= 1.0

    return loss, ChainCrfGradients(d_start, d_trans, d_end, d_emissions)


# ---------------------------------------------------------------------------
# Feature-template baseline
# ---------------------------------------------------------------------------

BOS = "<S>"
EOS = "</S>"


def word_shape(word: str) -> str:
    """Collapse characters to X (upper), x (lower), 0 (digit), . (other)."""
    return "".join("X" if c.isupper() else
                   "x" if c.islower() else
                   "0" if c.isdigit() else "." for c in word)


@dataclass
class FeatureVector:
    """Sparse binary template hits plus the dense embedding block."""

    sparse: dict
    dense: np.ndarray


def extract_features(sentence: Sentence, position: int,
                     table: EmbeddingTable) -> FeatureVector:
    """Generic NER template set for one position.

    Emits word identity at offsets -2..2, word shape and POS at -1..1,
    prefixes/suffixes of length 1-3, the two adjacent word bigrams, a
    bias, and the embedding of the current word. Out-of-range offsets
    use the boundary sentinels.
    """
    toks = sentence.tokens
    n = len(toks)
    if not 0 <= position < n:
        raise IndexError(f"position {position} out of range for length {n}")

    def word_at(off: int) -> str:
        i = position + off
        if i < 0:
            return BOS
        if i >= n:
            return EOS
        return toks[i].word.lower()

    def shape_at(off: int) -> str:
        i = position + off
        if i < 0:
            return BOS
        if i >= n:
            return EOS
        return word_shape(toks[i].word)

    def pos_at(off: int) -> str:
        i = position + off
        if i < 0:
            return BOS
        if i >= n:
            return EOS
        return toks[i].pos if toks[i].pos is not None else heuristic_pos(toks[i].word)

    sparse = {"bias": 1.0}
    for off in (-2, -1, 0, 1, 2):
        sparse[f"w{off}={word_at(off)}"] = 1.0
    for off in (-1, 0, 1):
        sparse[f"shape{off}={shape_at(off)}"] = 1.0
        sparse[f"pos{off}={pos_at(off)}"] = 1.0
    lower = toks[position].word.lower()
    for k in (1, 2, 3):
        if len(lower) >= k:
            sparse[f"pre{k}={lower[:k]}"] = 1.0
            sparse[f"suf{k}={lower[-k:]}"] = 1.0
    sparse[f"w-1|w0={word_at(-1)}|{word_at(0)}"] = 1.0
    sparse[f"w0|w1={word_at(0)}|{word_at(1)}"] = 1.0
    return FeatureVector(sparse, lookup(table, toks[position].word))


@dataclass
class FeatureCrfModel:
    """Linear CRF over template features and a dense embedding block."""

    tagset: TagSet
    feature_index: dict          # feature string -> row of sparse_weights
    sparse_weights: np.ndarray   # F x T
    dense_weights: np.ndarray    # d x T
    crf: ChainCrfParams
    table: EmbeddingTable
    config: dict = field(default_factory=dict)

    def _feature_ids(self, sentence: Sentence) -> list:
        ids = []
        for pos in range(len(sentence)):
            fv = extract_features(sentence, pos, self.table)
            known = [self.feature_index[f] for f in fv.sparse
                     if f in self.feature_index]
            ids.append(np.asarray(known, dtype=np.intp))
        return ids

    def _dense_block(self, sentence: Sentence) -> np.ndarray:
        idx = [self.table.vocab.index(t.word) for t in sentence]
        return self.table.vectors[idx]

    def emissions(self, sentence: Sentence) -> np.ndarray:
        ids = self._feature_ids(sentence)
        return _assemble_emissions(ids, self._dense_block(sentence),
                                   self.sparse_weights, self.dense_weights)

    def predict(self, sentence: Sentence) -> list:
        path, _ = viterbi_decode(self.crf, self.emissions(sentence))
        return [self.tagset.label_of(t) for t in path]


def _assemble_emissions(ids, dense_block, sparse_weights, dense_weights):
    n = len(ids)
    emis = dense_block @ dense_weights
    for i, row_ids in enumerate(ids):
        if len(row_ids):
            emis[i] += sparse_weights[row_ids].sum(axis=0)
    return emis


def _prepare(sentences, tagset: TagSet, table: EmbeddingTable,
             feature_index=None):
    """Cache feature ids, dense blocks and gold ids for repeated epochs.

    When ``feature_index`` is None a fresh index is built (training set);
    otherwise unknown features are dropped (dev set).
    """
    building = feature_index is None
    if building:
        feature_index = {}
    prepared = []
    for sent in sentences:
        tok_ids = []
        for pos in range(len(sent)):
            fv = extract_features(sent, pos, table)
            row = []
            for f in fv.sparse:
                if building:
                    row.append(feature_index.setdefault(f, len(feature_index)))
                elif f in feature_index:
                    row.append(feature_index[f])
            tok_ids.append(np.asarray(row, dtype=np.intp))
        dense = np.array([lookup(table, t.word) for t in sent])
        gold = np.asarray([tagset.id_of(t.tag) for t in sent], dtype=np.intp)
        prepared.append((tok_ids, dense, gold))
    return prepared, feature_index


def _check_tags_known(sentences, tagset: TagSet, which: str) -> None:
    for sent in sentences:
        for tok in sent:
            if tok.tag not in tagset:
                raise ValueError(
                    f"tag {tok.tag!r} in the {which} set is not in the tag set")


def train_baseline(train, dev, table: EmbeddingTable, l2: float = 1e-4,
                   epochs: int = 100, seed: int = 42,
                   learning_rate: float = 0.1,
                   clip_threshold: float = 5.0, on_epoch=None):
    """SGD training of the feature CRF on the L2-regularized NLL.

    Returns ``(model, log)`` where the model carries the parameters of
    the epoch with the best dev macro F1. The L2 term is applied to the
    feature rows active in each update plus the dense and transition
    blocks.
    """
    train, dev = list(train), list(dev)
    if not train:
        raise ValueError("empty training corpus")
    tagset = TagSet.from_corpus(train)
    _check_tags_known(dev, tagset, "dev")

    prep_train, feature_index = _prepare(train, tagset, table)
    model = FeatureCrfModel(
        tagset=tagset,
        feature_index=feature_index,
        sparse_weights=np.zeros((len(feature_index), len(tagset))),
        dense_weights=np.zeros((table.dim, len(tagset))),
        crf=ChainCrfParams.zeros(len(tagset)),
        table=table,
        config={"l2": l2, "epochs": epochs, "seed": seed,
                "learning_rate": learning_rate,
                "clip_threshold": clip_threshold, "dim": table.dim},
    )

    rng = default_rng(seed)
    opt = ClippedSgd(learning_rate, clip_threshold)
    log = TrainLog()
    best = (model.sparse_weights.copy(), model.dense_weights.copy(),
            model.crf.copy())
    best_f1 = -1.0

    for epoch in range(1, epochs + 1):
        t0 = time.perf_counter()
        epoch_loss = 0.0
        for si in rng.permutation(len(train)):
            tok_ids, dense, gold = prep_train[si]
            emis = _assemble_emissions(tok_ids, dense, model.sparse_weights,
                                       model.dense_weights)
            loss, grads = nll_and_gradient(model.crf, emis, gold)
            epoch_loss += loss

            flat_ids = np.concatenate(tok_ids)
            counts = [len(r) for r in tok_ids]
            flat_upd = np.repeat(grads.emissions, counts, axis=0)
            uniq, inverse = np.unique(flat_ids, return_inverse=True)
            g_rows = np.zeros((len(uniq), len(tagset)))
            np.add.at(g_rows, inverse, flat_upd)
            g_rows += l2 * model.sparse_weights[uniq]
            g_dense = dense.T @ grads.emissions + l2 * model.dense_weights
            g_trans = grads.trans + l2 * model.crf.trans

            rows = model.sparse_weights[uniq]
            opt.step(
                [rows, model.dense_weights, model.crf.start,
                 model.crf.trans, model.crf.end],
                [g_rows, g_dense, grads.start, g_trans, grads.end])
            model.sparse_weights[uniq] = rows

        acc, f1 = dev_scores(model.predict, dev, tagset)
        record = EpochRecord(epoch, epoch_loss, acc, f1,
                             time.perf_counter() - t0)
        log.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if f1 > best_f1:
            best_f1 = f1
            best = (model.sparse_weights.copy(), model.dense_weights.copy(),
                    model.crf.copy())

    model.sparse_weights, model.dense_weights, model.crf = (
        best[0], best[1], best[2])
    return model, log


def clone_baseline(model: FeatureCrfModel) -> FeatureCrfModel:
    return copy.deepcopy(model)


def fit_baseline(train, dev, l2: float = 1e-4, epochs: int = 100,
                 learning_rate: float = 0.1, clip_threshold: float = 5.0,
                 dim: int = 25, pretrained: EmbeddingTable | None = None,
                 min_count: int = 1, seed: int = 42, on_epoch=None):
    """Build the embedding table (random unless pretrained) and train."""
    train = list(train)
    if not train:
        raise ValueError("empty training corpus")
    if pretrained is not None:
        table = pretrained
    else:
        table = EmbeddingTable.random(build_vocab(train, min_count), dim, seed)
    return train_baseline(train, dev, table, l2, epochs, seed,
                          learning_rate, clip_threshold, on_epoch=on_epoch)


BASELINE_KIND = "feature-crf"


def save_baseline(model: FeatureCrfModel, path) -> None:
    """Write the baseline to the versioned container (embeddings included)."""
    features = [None] * len(model.feature_index)
    for feat, idx in model.feature_index.items():
        features[idx] = feat
    header = {
        "kind": BASELINE_KIND,
        "config": model.config,
        "tagset": list(model.tagset.labels),
        "features": features,
        "vocab_words": list(model.table.vocab.words),
        "vocab_counts": list(model.table.vocab.counts),
    }
    arrays = {
        "sparse_weights": model.sparse_weights,
        "dense_weights": model.dense_weights,
        "crf.start": model.crf.start,
        "crf.trans": model.crf.trans,
        "crf.end": model.crf.end,
        "embeddings": model.table.vectors,
    }
    write_container(path, header, arrays)


def load_baseline(path) -> FeatureCrfModel:
    header, arrays = read_container(path)
    if header.get("kind") != BASELINE_KIND:
        raise CheckpointError(f"checkpoint holds a {header.get('kind')!r} "
                              f"model, expected {BASELINE_KIND!r}")
    vocab = Vocabulary(tuple(header["vocab_words"]),
                       tuple(int(c) for c in header["vocab_counts"]))
    table = EmbeddingTable(vocab, arrays["embeddings"])
    return FeatureCrfModel(
        tagset=TagSet(header["tagset"]),
        feature_index={f: i for i, f in enumerate(header["features"])},
        sparse_weights=arrays["sparse_weights"],
        dense_weights=arrays["dense_weights"],
        crf=ChainCrfParams(arrays["crf.start"], arrays["crf.trans"],
                           arrays["crf.end"]),
        table=table,
        config=header["config"],
    )
