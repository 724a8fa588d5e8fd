"""Word vocabulary, embedding table, and a skip-gram pretrainer.

Words are digit-normalized (every ASCII digit becomes ``0``) but never
case-folded: capitalization carries entity signal in this genre, while
version strings generalize once their digits collapse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .corpus import Sentence
from .numerics import default_rng, init_matrix, sigmoid

UNK = "<UNK>"


def normalize_word(word: str) -> str:
    return "".join("0" if c.isdigit() and c.isascii() else c for c in word)


def _word_sequences(corpus) -> list:
    seqs = []
    for item in corpus:
        seqs.append(item.words if isinstance(item, Sentence) else list(item))
    return seqs


@dataclass(frozen=True)
class Vocabulary:
    """Normalized word inventory; index 0 is the UNK sentinel."""

    words: tuple
    counts: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "counts", tuple(self.counts))
        if not self.words or self.words[0] != UNK:
            raise ValueError(f"index 0 must be {UNK}")
        if len(self.words) != len(self.counts):
            raise ValueError("words and counts differ in length")
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})
        if len(self._index) != len(self.words):
            raise ValueError("duplicate words")

    def index(self, word: str) -> int:
        """Id of the normalized word, falling back to UNK."""
        return self._index.get(normalize_word(word), 0)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return normalize_word(word) in self._index


def build_vocab(corpus, min_count: int = 1) -> Vocabulary:
    """Count normalized words and keep those seen at least ``min_count`` times.

    Kept words are ordered by count (descending) then text (ascending); the
    dropped mass is credited to UNK.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = {}
    for words in _word_sequences(corpus):
        for w in words:
            norm = normalize_word(w)
            counts[norm] = counts.get(norm, 0) + 1
    kept = sorted((w for w, c in counts.items() if c >= min_count),
                  key=lambda w: (-counts[w], w))
    dropped_total = sum(c for w, c in counts.items() if c < min_count)
    return Vocabulary((UNK,) + tuple(kept),
                      (dropped_total,) + tuple(counts[w] for w in kept))


@dataclass
class EmbeddingTable:
    vocab: Vocabulary
    vectors: np.ndarray  # |V| x d

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.vocab):
            raise ValueError("vectors must be |V| x d")
        if self.vectors.shape[1] < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def random(cls, vocab: Vocabulary, dim: int, seed: int) -> "EmbeddingTable":
        return cls(vocab, init_matrix(len(vocab), dim, default_rng(seed)))


def lookup(table: EmbeddingTable, word: str) -> np.ndarray:
    """Vector of the word (UNK row when unseen); returned as a copy."""
    return table.vectors[table.vocab.index(word)].copy()


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("cosine needs two vectors of equal nonzero length")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine of a zero vector is undefined")
    return float(np.dot(a, b) / (na * nb))


def save_text(table: EmbeddingTable) -> str:
    """word2vec-style text layout: header ``|V| d`` then one word per line."""
    lines = [f"{len(table.vocab)} {table.dim}\n"]
    for word, row in zip(table.vocab.words, table.vectors):
        values = " ".join(repr(float(v)) for v in row)
        lines.append(f"{word} {values}\n")
    return "".join(lines)


def load_text(stream) -> EmbeddingTable:
    lines = stream.splitlines() if isinstance(stream, str) else list(stream)
    if not lines:
        raise ValueError("line 1: missing header")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError("line 1: header must be '|V| d'")
    try:
        n, dim = int(header[0]), int(header[1])
    except ValueError:
        raise ValueError("line 1: non-integer header") from None
    words, vectors = [], np.empty((n, dim), dtype=np.float64)
    row = 0
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        fields = line.split()
        if len(fields) != dim + 1:
            raise ValueError(f"line {lineno}: expected {dim + 1} columns, got {len(fields)}")
        if row >= n:
            raise ValueError(f"line {lineno}: more rows than the header declares")
        words.append(fields[0])
        vectors[row] = [float(v) for v in fields[1:]]
        row += 1
    if row != n:
        raise ValueError(f"header declares {n} rows, file has {row}")
    if words[0] != UNK:
        # External word2vec files have no sentinel; give UNK a zero row.
        words.insert(0, UNK)
        vectors = np.vstack([np.zeros((1, dim)), vectors])
    vocab = Vocabulary(tuple(words), tuple(0 for _ in words))
    return EmbeddingTable(vocab, vectors)


def skipgram_pairs(words: list, window: int) -> list:
    """(center, context) index pairs within the window, in scan order."""
    pairs = []
    n = len(words)
    for i in range(n):
        for j in range(max(0, i - window), min(n, i + window + 1)):
            if j != i:
                pairs.append((i, j))
    return pairs


def pair_loss_and_grads(v_center, u_context, u_negatives):
    """Negative-sampling logistic loss for one pair and its gradients.

    loss = -ln sigmoid(u_ctx . v) - sum_k ln sigmoid(-u_k . v)
    Returns (loss, grad_v, grad_u_context, grad_u_negatives).
    """
    s_pos = sigmoid(np.dot(u_context, v_center))
    loss = -np.log(s_pos)
    grad_v = (s_pos - 1.0) * u_context
    grad_ctx = (s_pos - 1.0) * v_center
    grad_negs = np.zeros_like(u_negatives)
    for k in range(u_negatives.shape[0]):
        s_neg = sigmoid(np.dot(u_negatives[k], v_center))
        loss -= np.log(1.0 - s_neg)
        grad_v += s_neg * u_negatives[k]
        grad_negs[k] = s_neg * v_center
    return float(loss), grad_v, grad_ctx, grad_negs


class SkipGramTrainer:
    """Incremental skip-gram trainer exposing a from-scratch loss pass.

    Negatives are sampled proportionally to count^0.75. Training walks the
    corpus in order, one epoch per ``train_epoch`` call, so a fixed seed is
    bit-reproducible.
    """

    def __init__(self, corpus, dim: int, window: int, negatives: int,
                 seed: int, learning_rate: float = 0.025, min_count: int = 1):
        if dim < 1 or window < 1 or negatives < 1:
            raise ValueError("dim, window and negatives must all be >= 1")
        seqs = _word_sequences(corpus)
        if not seqs:
            raise ValueError("empty corpus")
        self.vocab = build_vocab(seqs, min_count)
        self.window = window
        self.negatives = negatives
        self.learning_rate = learning_rate
        self._rng = default_rng(seed)
        self.vectors_in = init_matrix(len(self.vocab), dim, self._rng)
        self.vectors_out = np.zeros((len(self.vocab), dim))
        self._ids = [np.array([self.vocab.index(w) for w in words]) for words in seqs]
        weights = np.asarray(self.vocab.counts, dtype=np.float64) ** 0.75
        if weights.sum() == 0.0:
            weights[:] = 1.0
        self._cumdist = np.cumsum(weights / weights.sum())

    def _sample_negatives(self, rng, count: int) -> np.ndarray:
        idx = np.searchsorted(self._cumdist, rng.random(count))
        return np.minimum(idx, len(self._cumdist) - 1)

    def train_epoch(self) -> None:
        lr = self.learning_rate
        for ids in self._ids:
            for i, j in skipgram_pairs(ids, self.window):
                center, ctx = ids[i], ids[j]
                negs = self._sample_negatives(self._rng, self.negatives)
                _, gv, gc, gn = pair_loss_and_grads(
                    self.vectors_in[center], self.vectors_out[ctx],
                    self.vectors_out[negs])
                self.vectors_in[center] -= lr * gv
                self.vectors_out[ctx] -= lr * gc
                for k, neg in enumerate(negs):
                    self.vectors_out[neg] -= lr * gn[k]

    def corpus_loss(self, seed: int = 0) -> float:
        """Total pair loss over the corpus, negatives drawn from a fresh rng."""
        rng = default_rng(seed)
        total = 0.0
        for ids in self._ids:
            for i, j in skipgram_pairs(ids, self.window):
                negs = self._sample_negatives(rng, self.negatives)
                loss, _, _, _ = pair_loss_and_grads(
                    self.vectors_in[ids[i]], self.vectors_out[ids[j]],
                    self.vectors_out[negs])
                total += loss
        return total

    def table(self) -> EmbeddingTable:
        return EmbeddingTable(self.vocab, self.vectors_in.copy())


def train_skipgram(corpus, dim: int, window: int, negatives: int,
                   epochs: int, seed: int, learning_rate: float = 0.025,
                   min_count: int = 1) -> EmbeddingTable:
    """Train word vectors with skip-gram + negative sampling."""
    trainer = SkipGramTrainer(corpus, dim, window, negatives, seed,
                              learning_rate, min_count)
    for _ in range(epochs):
        trainer.train_epoch()
    return trainer.table()
