"""scikit-learn style front ends.

``X`` is a list of token lists (or Sentence objects) and ``y`` a parallel
list of IOB2 tag lists, the sklearn-crfsuite convention. Hyperparameters
live in ``__init__`` so ``get_params``/``set_params``/``clone`` work;
fitted state ends in trailing-underscore attributes.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import crf as _crf
from . import tagger as _tagger
from .embeddings import lookup, train_skipgram
from .metrics import token_accuracy
from .validation import as_sentences, check_token_lists


class SkipGramEmbeddings(BaseEstimator, TransformerMixin):
    """Trains word vectors on tokenized sentences; transform maps tokens to rows."""

    def __init__(self, dim=100, window=5, negatives=5, epochs=5,
                 learning_rate=0.025, min_count=1, seed=42):
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.min_count = min_count
        self.seed = seed

    def fit(self, X, y=None):
        X = check_token_lists(X)
        self.table_ = train_skipgram(
            X, self.dim, self.window, self.negatives, self.epochs,
            self.seed, self.learning_rate, self.min_count)
        return self

    def transform(self, X):
        check_is_fitted(self, "table_")
        X = check_token_lists(X)
        sents = as_sentences(X)
        return [[lookup(self.table_, w) for w in sent.words] for sent in sents]


class _TaggerMixin:
    def predict(self, X):
        check_is_fitted(self, "model_")
        return [self._predict_one(sent) for sent in as_sentences(X)]

    def score(self, X, y):
        """Token accuracy of the predictions against ``y``."""
        gold = as_sentences(X, y)
        return token_accuracy(gold, self.predict(X))


class BiLstmCrfTagger(BaseEstimator, _TaggerMixin):
    """Embedding -> bidirectional LSTM -> chain CRF sequence tagger.

    ``fit`` accepts an optional held-out set for best-epoch selection;
    without one the training set doubles as the dev set.
    """

    def __init__(self, embedding_dim=100, hidden_size=100, epochs=100,
                 learning_rate=0.01, clip_threshold=5.0, dropout=0.5,
                 unk_dropout=0.5, min_count=1, pretrained=None, seed=42):
        self.embedding_dim = embedding_dim
        self.hidden_size = hidden_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.clip_threshold = clip_threshold
        self.dropout = dropout
        self.unk_dropout = unk_dropout
        self.min_count = min_count
        self.pretrained = pretrained
        self.seed = seed

    def fit(self, X, y, X_dev=None, y_dev=None):
        train = as_sentences(X, y)
        dev = as_sentences(X_dev, y_dev) if X_dev is not None else train
        self.model_, self.log_ = _tagger.fit_tagger(
            train, dev, dim=self.embedding_dim, hidden=self.hidden_size,
            epochs=self.epochs, learning_rate=self.learning_rate,
            clip_threshold=self.clip_threshold, dropout=self.dropout,
            unk_dropout=self.unk_dropout, min_count=self.min_count,
            pretrained=self.pretrained, seed=self.seed)
        return self

    def _predict_one(self, sent):
        return _tagger.predict_tags(self.model_, sent)


class FeatureCrfTagger(BaseEstimator, _TaggerMixin):
    """Linear chain CRF over generic NER feature templates."""

    def __init__(self, l2=1e-4, epochs=100, learning_rate=0.1,
                 clip_threshold=5.0, embedding_dim=25, pretrained=None,
                 min_count=1, seed=42):
        self.l2 = l2
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.clip_threshold = clip_threshold
        self.embedding_dim = embedding_dim
        self.pretrained = pretrained
        self.min_count = min_count
        self.seed = seed

    def fit(self, X, y, X_dev=None, y_dev=None):
        train = as_sentences(X, y)
        dev = as_sentences(X_dev, y_dev) if X_dev is not None else train
        self.model_, self.log_ = _crf.fit_baseline(
            train, dev, l2=self.l2, epochs=self.epochs,
            learning_rate=self.learning_rate,
            clip_threshold=self.clip_threshold, dim=self.embedding_dim,
            pretrained=self.pretrained, min_count=self.min_count,
            seed=self.seed)
        return self

    def _predict_one(self, sent):
        return self.model_.predict(sent)
