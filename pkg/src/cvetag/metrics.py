"""Token accuracy and per-entity precision/recall/F1 reports.

The default scoring mode is entity-level exact match: a predicted span
counts only when its type and both boundaries equal a gold span. The
token-level mode scores each position by its tag type with the B-/I-
prefix stripped. Zero denominators yield 0 by convention.

Reports print percentages truncated (not half-up rounded) to one
decimal; that is the convention the study tables follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Sentence, extract_spans

ENTITY_MODE = "entity"
TOKEN_MODE = "token"


def _tag_seqs(corpus) -> list:
    seqs = []
    for item in corpus:
        seqs.append(item.tags if isinstance(item, Sentence) else list(item))
    return seqs


def _check_aligned(gold, pred) -> tuple:
    gold, pred = _tag_seqs(gold), _tag_seqs(pred)
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sentence {i}: {len(g)} gold tags vs {len(p)} predicted")
    return gold, pred


def report_percent(value: float) -> float:
    """Percent values as printed in reports: truncated to one decimal."""
    return math.floor(value * 10.0 + 1e-9) / 10.0


def token_accuracy(gold, pred) -> float:
    """Fraction of positions whose predicted tag equals the gold tag."""
    gold, pred = _check_aligned(gold, pred)
    total = sum(len(g) for g in gold)
    if total == 0:
        return 0.0
    correct = sum(1 for g, p in zip(gold, pred)
                  for gt, pt in zip(g, p) if gt == pt)
    return correct / total


def prf(tp: int, pred_count: int, gold_count: int) -> tuple:
    precision = tp / pred_count if pred_count else 0.0
    recall = tp / gold_count if gold_count else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return precision, recall, f1


def _entity_counts(gold, pred, entity_type: str) -> tuple:
    tp = gold_n = pred_n = 0
    for g, p in zip(gold, pred):
        gold_spans = {s for s in extract_spans(g) if s.entity_type == entity_type}
        pred_spans = {s for s in extract_spans(p) if s.entity_type == entity_type}
        tp += len(gold_spans & pred_spans)
        gold_n += len(gold_spans)
        pred_n += len(pred_spans)
    return tp, pred_n, gold_n


def _token_counts(gold, pred, entity_type: str) -> tuple:
    tp = gold_n = pred_n = 0
    for g, p in zip(gold, pred):
        for gt, pt in zip(g, p):
            g_match = gt != "O" and gt[2:] == entity_type
            p_match = pt != "O" and pt[2:] == entity_type
            tp += g_match and p_match
            gold_n += g_match
            pred_n += p_match
    return tp, pred_n, gold_n


def entity_prf(gold, pred, entity_type: str, mode: str = ENTITY_MODE) -> tuple:
    """(precision, recall, f1) for one entity type over aligned corpora."""
    gold, pred = _check_aligned(gold, pred)
    counts = (_entity_counts if mode == ENTITY_MODE else _token_counts)(
        gold, pred, entity_type)
    return prf(*counts)


def macro_average(values) -> float:
    values = list(values)
    if not values:
        raise ValueError("macro average of no values")
    return sum(values) / len(values)


@dataclass(frozen=True)
class TypeScore:
    precision: float
    recall: float
    f1: float
    gold_count: int
    pred_count: int
    tp: int


@dataclass(frozen=True)
class EvalReport:
    token_accuracy: float
    per_type: dict  # entity type -> TypeScore, in display order
    macro: tuple    # (precision, recall, f1) over the displayed types
    mode: str


def build_report(gold_corpus, pred_corpus, tagset, selected_types=None,
                 mode: str = ENTITY_MODE) -> EvalReport:
    """Score a prediction against gold over the tag set's entity types.

    ``selected_types`` restricts (and orders) the rows, mirroring the
    focused seven-type tables; otherwise the tag set order is used.
    """
    if mode not in (ENTITY_MODE, TOKEN_MODE):
        raise ValueError(f"unknown mode {mode!r}")
    gold, pred = _check_aligned(gold_corpus, pred_corpus)
    if selected_types is None:
        types = tagset.entity_types()
    else:
        types = list(selected_types)
        unknown = [t for t in types if t not in tagset.entity_types()]
        if unknown:
            raise ValueError(f"types not in the tag set: {unknown}")
    counts_fn = _entity_counts if mode == ENTITY_MODE else _token_counts
    per_type = {}
    for etype in types:
        tp, pred_n, gold_n = counts_fn(gold, pred, etype)
        p, r, f1 = prf(tp, pred_n, gold_n)
        per_type[etype] = TypeScore(p, r, f1, gold_n, pred_n, tp)
    if per_type:
        macro = (macro_average([s.precision for s in per_type.values()]),
                 macro_average([s.recall for s in per_type.values()]),
                 macro_average([s.f1 for s in per_type.values()]))
    else:
        macro = (0.0, 0.0, 0.0)
    return EvalReport(token_accuracy(gold, pred), per_type, macro, mode)


def _pct(value: float) -> str:
    return f"{report_percent(100.0 * value):.1f}"


def render_table(report: EvalReport) -> str:
    """Fixed-width report with one row per entity type and an Average row."""
    name_width = max([len("Entity type"), len("Average")]
                     + [len(t) for t in report.per_type])
    header = (f"{'Entity type':<{name_width}}  {'Precision':>9}  {'Recall':>9}"
              f"  {'F1':>9}  {'Gold':>6}  {'Pred':>6}  {'TP':>6}")
    lines = [
        f"Token accuracy: {_pct(report.token_accuracy)} ({report.mode}-level report)",
        header,
        "-" * len(header),
    ]
    for etype, s in report.per_type.items():
        lines.append(f"{etype:<{name_width}}  {_pct(s.precision):>9}  "
                     f"{_pct(s.recall):>9}  {_pct(s.f1):>9}  "
                     f"{s.gold_count:>6}  {s.pred_count:>6}  {s.tp:>6}")
    p, r, f1 = report.macro
    lines.append(f"{'Average':<{name_width}}  {_pct(p):>9}  {_pct(r):>9}  "
                 f"{_pct(f1):>9}")
    return "\n".join(lines) + "\n"


def render_keyvalue(report: EvalReport) -> str:
    """One machine-readable line per type: ``type precision recall f1 gold pred tp``."""
    lines = [f"token_accuracy {_pct(report.token_accuracy)}"]
    for etype, s in report.per_type.items():
        lines.append(f"{etype} {_pct(s.precision)} {_pct(s.recall)} "
                     f"{_pct(s.f1)} {s.gold_count} {s.pred_count} {s.tp}")
    p, r, f1 = report.macro
    lines.append(f"macro {_pct(p)} {_pct(r)} {_pct(f1)}")
    return "\n".join(lines) + "\n"
