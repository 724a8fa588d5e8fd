"""Per-epoch bookkeeping shared by both trainers.

Model selection is identical for the neural tagger and the feature
baseline: the epoch with the best dev entity-level macro F1 wins, ties
going to the earlier epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .metrics import build_report


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    dev_accuracy: float
    dev_macro_f1: float
    wall_time: float

    def log_line(self) -> str:
        """Deterministic stream format: ``epoch train_loss dev_acc dev_f1``."""
        return (f"{self.epoch} {self.train_loss:.6f} "
                f"{self.dev_accuracy:.6f} {self.dev_macro_f1:.6f}")


@dataclass
class TrainLog:
    records: list = field(default_factory=list)

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def best_epoch(self) -> int:
        """Index (1-based epoch) of the highest dev macro F1; ties go earlier."""
        if not self.records:
            raise ValueError("empty training log")
        best = max(self.records, key=lambda r: (r.dev_macro_f1, -r.epoch))
        return best.epoch

    def __len__(self) -> int:
        return len(self.records)


def dev_scores(predict_fn, dev, tagset) -> tuple:
    """(token accuracy, entity macro F1) of ``predict_fn`` over ``dev``."""
    pred = [predict_fn(sent) for sent in dev]
    report = build_report(dev, pred, tagset)
    return report.token_accuracy, report.macro[2]
