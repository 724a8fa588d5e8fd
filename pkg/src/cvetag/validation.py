"""Input validation for the estimator API.

Estimators accept either ready-made Sentence objects or parallel
(token list, tag list) pairs; everything is normalized to sentences
here with early, specific errors.
"""

from __future__ import annotations

from .corpus import Sentence


def check_token_lists(X) -> list:
    X = list(X)
    if not X:
        raise ValueError("X must contain at least one sentence")
    for i, words in enumerate(X):
        if isinstance(words, Sentence):
            continue
        if isinstance(words, str):
            raise TypeError(f"X[{i}] is a string; expected a list of tokens")
        if not list(words):
            raise ValueError(f"X[{i}] is empty")
    return X


def as_sentences(X, y=None) -> list:
    """Build sentences from X (tokens) and y (tags), or pass them through.

    With ``y=None`` every element of X must already be a Sentence or a
    (words, tags) usable pair is impossible, so tags default to ``O``.
    """
    X = check_token_lists(X)
    if y is None:
        out = []
        for i, item in enumerate(X):
            if isinstance(item, Sentence):
                out.append(item)
            else:
                out.append(Sentence.from_pairs(list(item), ["O"] * len(list(item))))
        return out
    y = list(y)
    if len(X) != len(y):
        raise ValueError(f"X has {len(X)} sentences, y has {len(y)}")
    out = []
    for i, (words, tags) in enumerate(zip(X, y)):
        if isinstance(words, Sentence):
            words = words.words
        try:
            out.append(Sentence.from_pairs(list(words), list(tags)))
        except ValueError as exc:
            raise ValueError(f"sentence {i}: {exc}") from None
    return out
