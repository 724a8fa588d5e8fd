"""Annotated-sentence data model and corpus file handling.

Two line-oriented formats are supported:

* two-column ``word tag`` (blank line between sentences), and
* four-column ``tag word pos chunk`` as consumed by feature-template
  CRF tools.

Plus a converter from the auto-labeled JSON corpus layout
``{corpus_name: [{"tokens": [...], "labels": [...]}, ...]}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .numerics import default_rng

_TAG_RE = re.compile(r"^(O|[BI]-\S+)$")


class ParseError(ValueError):
    """Malformed corpus file; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ConversionError(ValueError):
    """Bad entry in a JSON corpus."""


@dataclass(frozen=True)
class Token:
    word: str
    tag: str
    pos: str | None = None
    chunk: str | None = None

    def __post_init__(self):
        if not self.word or any(c.isspace() for c in self.word):
            raise ValueError(f"bad token word: {self.word!r}")
        if not _TAG_RE.match(self.tag):
            raise ValueError(f"bad IOB2 tag: {self.tag!r}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("empty sentence")

    @classmethod
    def from_pairs(cls, words: Iterable[str], tags: Iterable[str]) -> "Sentence":
        words, tags = list(words), list(tags)
        if len(words) != len(tags):
            raise ValueError(f"{len(words)} words vs {len(tags)} tags")
        return cls(tuple(Token(w, t) for w, t in zip(words, tags)))

    @property
    def words(self) -> list:
        return [t.word for t in self.tokens]

    @property
    def tags(self) -> list:
        return [t.tag for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)


class TagSet:
    """Closed tag inventory with dense, stable integer ids.

    Label order is the construction order; ``from_corpus`` sorts with ``O``
    first so ids do not depend on corpus order. Every ``I-x`` must come with
    its ``B-x``.
    """

    def __init__(self, labels: Iterable[str]):
        labels = list(labels)
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels")
        for lab in labels:
            if not _TAG_RE.match(lab):
                raise ValueError(f"bad IOB2 label: {lab!r}")
        if "O" not in labels:
            raise ValueError("tag set must contain O")
        present = set(labels)
        for lab in labels:
            if lab.startswith("I-") and "B-" + lab[2:] not in present:
                raise ValueError(f"{lab} present without B-{lab[2:]}")
        self._labels = tuple(labels)
        self._ids = {lab: i for i, lab in enumerate(labels)}

    @classmethod
    def from_corpus(cls, sentences: Iterable[Sentence]) -> "TagSet":
        seen = set()
        for sent in sentences:
            seen.update(sent.tags)
        seen.add("O")
        for lab in list(seen):
            if lab.startswith("I-"):
                seen.add("B-" + lab[2:])
        ordered = ["O"] + sorted(seen - {"O"})
        return cls(ordered)

    @property
    def labels(self) -> tuple:
        return self._labels

    def id_of(self, label: str) -> int:
        try:
            return self._ids[label]
        except KeyError:
            raise KeyError(f"tag {label!r} not in tag set") from None

    def label_of(self, tag_id: int) -> str:
        return self._labels[tag_id]

    def __contains__(self, label: str) -> bool:
        return label in self._ids

    def __len__(self) -> int:
        return len(self._labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self._labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, TagSet) and self._labels == other._labels

    def entity_types(self) -> list:
        """Distinct entity types (tag texts minus the B-/I- prefix), sorted."""
        return sorted({lab[2:] for lab in self._labels if lab != "O"})


@dataclass(frozen=True)
class EntitySpan:
    entity_type: str
    start: int
    end: int  # inclusive

    def __post_init__(self):
        if not (0 <= self.start <= self.end):
            raise ValueError(f"bad span bounds [{self.start}, {self.end}]")


@dataclass(frozen=True)
class CorpusSplit:
    train: list
    dev: list
    test: list
    seed: int


def _as_lines(stream) -> Iterator[str]:
    if isinstance(stream, str):
        return iter(stream.splitlines())
    return iter(stream)


def parse_conll2000(stream) -> list:
    """Read two-column ``word tag`` text into sentences.

    ``stream`` is a string or an iterable of lines. Blank lines separate
    sentences; space or tab separates the columns.
    """
    sentences = []
    toks = []
    for lineno, raw in enumerate(_as_lines(stream), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            if toks:
                sentences.append(Sentence(tuple(toks)))
                toks = []
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(f"expected 2 columns, got {len(fields)}: {line!r}", lineno)
        try:
            toks.append(Token(fields[0], fields[1]))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if toks:
        sentences.append(Sentence(tuple(toks)))
    return sentences


def write_conll2000(corpus: Iterable[Sentence]) -> str:
    out = []
    for sent in corpus:
        for tok in sent:
            out.append(f"{tok.word} {tok.tag}\n")
        out.append("\n")
    return "".join(out)


def parse_crf_conll(stream) -> list:
    """Read four-column ``tag word pos chunk`` text into sentences."""
    sentences = []
    toks = []
    for lineno, raw in enumerate(_as_lines(stream), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            if toks:
                sentences.append(Sentence(tuple(toks)))
                toks = []
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(f"expected 4 columns, got {len(fields)}: {line!r}", lineno)
        tag, word, pos, chunk = fields
        try:
            toks.append(Token(word, tag, pos, chunk))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if toks:
        sentences.append(Sentence(tuple(toks)))
    return sentences


def write_crf_conll(corpus: Iterable[Sentence]) -> str:
    out = []
    for sent in corpus:
        for tok in sent:
            if tok.pos is None or tok.chunk is None:
                raise ValueError(f"token {tok.word!r} lacks pos/chunk; "
                                 "run heuristic_pos_tag first")
            out.append(f"{tok.tag} {tok.word} {tok.pos} {tok.chunk}\n")
        out.append("\n")
    return "".join(out)


def convert_json_corpus(stream) -> list:
    """Flatten the JSON corpus file into one sentence list, in file order.

    The top-level object maps corpus names to arrays of entries; each entry
    holds parallel ``tokens`` and ``labels`` arrays. The separation between
    the corpora is dropped.
    """
    if not isinstance(stream, str):
        stream = stream.read()
    try:
        data = json.loads(stream)
    except json.JSONDecodeError as exc:
        raise ConversionError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConversionError("top level must be an object keyed by corpus name")
    sentences = []
    for name, entries in data.items():
        if not isinstance(entries, list):
            raise ConversionError(f"corpus {name!r} is not an array")
        for i, entry in enumerate(entries):
            where = f"corpus {name!r} entry {i}"
            if not isinstance(entry, dict) or "tokens" not in entry or "labels" not in entry:
                raise ConversionError(f"{where}: missing tokens/labels")
            tokens, labels = entry["tokens"], entry["labels"]
            if len(tokens) != len(labels):
                raise ConversionError(
                    f"{where}: {len(tokens)} tokens vs {len(labels)} labels")
            if not tokens:
                continue
            try:
                sentences.append(Sentence.from_pairs(tokens, labels))
            except ValueError as exc:
                raise ConversionError(f"{where}: {exc}") from None
    return sentences


# Closed-class lexicon for the self-contained POS stand-in. Coverage is
# intentionally small; everything else falls through to the suffix rules.
_POS_LEXICON = {
    "the": "DT", "a": "DT", "an": "DT", "this": "DT", "that": "DT",
    "these": "DT", "those": "DT", "some": "DT", "any": "DT", "all": "DT",
    "to": "TO",
    "of": "IN", "in": "IN", "for": "IN", "with": "IN", "on": "IN",
    "at": "IN", "from": "IN", "by": "IN", "about": "IN", "as": "IN",
    "into": "IN", "through": "IN", "after": "IN", "over": "IN",
    "between": "IN", "against": "IN", "during": "IN", "without": "IN",
    "before": "IN", "under": "IN", "via": "IN",
    "and": "CC", "or": "CC", "but": "CC", "nor": "CC",
    "not": "RB", "also": "RB",
    "is": "VBZ", "are": "VBP", "was": "VBD", "were": "VBD", "be": "VB",
    "been": "VBN", "being": "VBG", "has": "VBZ", "have": "VBP", "had": "VBD",
    "do": "VBP", "does": "VBZ", "did": "VBD",
    "can": "MD", "could": "MD", "may": "MD", "might": "MD", "will": "MD",
    "would": "MD", "shall": "MD", "should": "MD", "must": "MD",
    "it": "PRP", "its": "PRP$", "their": "PRP$", "which": "WDT", "when": "WRB",
    ".": ".", ",": ",", ":": ":", ";": ":", "(": "(", ")": ")",
    '"': "''", "'": "''",
}

_NUMBER_RE = re.compile(r"^[0-9]+([.,][0-9]+)*$")


def heuristic_pos(word: str) -> str:
    """POS for one word from the lexicon-then-suffix rule table."""
    tag = _POS_LEXICON.get(word.lower())
    if tag is not None:
        return tag
    if _NUMBER_RE.match(word):
        return "CD"
    lower = word.lower()
    if lower.endswith("ing") and len(lower) > 4:
        return "VBG"
    if lower.endswith("ed") and len(lower) > 3:
        return "VBD"
    if lower.endswith("s") and len(lower) > 2:
        return "VBZ"
    if lower.endswith("ly") and len(lower) > 3:
        return "RB"
    if word[0].isupper():
        return "NNP"
    return "NN"


def heuristic_pos_tag(sentence: Sentence) -> Sentence:
    """Fill pos/chunk on every token with the deterministic rule table."""
    return Sentence(tuple(
        Token(t.word, t.tag, heuristic_pos(t.word), "O") for t in sentence))


def split_corpus(corpus, seed: int) -> CorpusSplit:
    """Shuffle sentences with the seed and cut 70/10/20 (test takes the rest)."""
    corpus = list(corpus)
    n = len(corpus)
    if n < 10:
        raise ValueError(f"corpus too small to split: {n} < 10 sentences")
    order = default_rng(seed).permutation(n)
    n_train = int(0.7 * n)
    n_dev = int(0.1 * n)
    train = [corpus[i] for i in order[:n_train]]
    dev = [corpus[i] for i in order[n_train:n_train + n_dev]]
    test = [corpus[i] for i in order[n_train + n_dev:]]
    return CorpusSplit(train, dev, test, seed)


def extract_spans(tags) -> list:
    """Decode IOB2 tags into maximal spans.

    Tolerant of malformed input: an ``I-x`` that does not continue a running
    span of type x opens a new span (the conlleval convention).
    """
    tags = list(tags)
    spans = []
    open_type, open_start = None, 0
    for i, tag in enumerate(tags):
        if tag == "O":
            if open_type is not None:
                spans.append(EntitySpan(open_type, open_start, i - 1))
                open_type = None
            continue
        prefix, etype = tag[0], tag[2:]
        if prefix == "B" or open_type != etype:
            if open_type is not None:
                spans.append(EntitySpan(open_type, open_start, i - 1))
            open_type, open_start = etype, i
    if open_type is not None:
        spans.append(EntitySpan(open_type, open_start, len(tags) - 1))
    return spans


def spans_to_tags(spans: Iterable[EntitySpan], length: int) -> list:
    """Inverse of extract_spans for non-overlapping spans."""
    tags = ["O"] * length
    for span in spans:
        if span.end >= length:
            raise ValueError(f"span {span} exceeds length {length}")
        if any(tags[i] != "O" for i in range(span.start, span.end + 1)):
            raise ValueError(f"span {span} overlaps another span")
        tags[span.start] = "B-" + span.entity_type
        for i in range(span.start + 1, span.end + 1):
            tags[i] = "I-" + span.entity_type
    return tags


def repair_iob(tags) -> list:
    """Rewrite orphan ``I-x`` tags to ``B-x`` so the output is well-formed."""
    out = []
    prev = "O"
    for tag in tags:
        if tag.startswith("I-"):
            etype = tag[2:]
            if not (prev == "B-" + etype or prev == "I-" + etype):
                tag = "B-" + etype
        out.append(tag)
        prev = tag
    return out
