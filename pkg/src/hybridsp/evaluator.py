"""Exact-match scoring of predicted meaning trees."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .logic import MeaningTree, serialize_mrl, trees_equal


@dataclass(frozen=True)
class EvalResult:
    total: int
    parsed: int
    correct: int

    def __post_init__(self):
        if not 0 <= self.correct <= self.parsed <= self.total:
            raise ValueError(f"inconsistent counts {self}")

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        return self.correct / self.parsed if self.parsed else 0.0

    @property
    def recall(self) -> float:
        return self.accuracy

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def summary(self) -> str:
        return (f"total={self.total} parsed={self.parsed} correct={self.correct} "
                f"acc={100 * self.accuracy:.2f} p={100 * self.precision:.2f} "
                f"r={100 * self.recall:.2f} f1={100 * self.f1:.2f}")


def evaluate(preds, golds) -> EvalResult:
    """A missing prediction (None) lowers recall but not precision."""
    preds, golds = list(preds), list(golds)
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predictions for {len(golds)} gold trees")
    parsed = sum(p is not None for p in preds)
    correct = sum(p is not None and trees_equal(p, g) for p, g in zip(preds, golds))
    return EvalResult(len(golds), parsed, correct)


def verdict(pred: Optional[MeaningTree], gold: MeaningTree) -> str:
    if pred is None:
        return "noparse"
    return "correct" if trees_equal(pred, gold) else "wrong"


def prediction_lines(ids, preds, golds) -> list:
    lines = ["id\tgold\tprediction\tverdict"]
    for i, p, g in zip(ids, preds, golds):
        lines.append(f"{i}\t{serialize_mrl(g)}\t{'' if p is None else serialize_mrl(p)}\t{verdict(p, g)}")
    return lines


def write_predictions(path, ids, preds, golds) -> None:
    Path(path).write_text("\n".join(prediction_lines(ids, preds, golds)) + "\n", encoding="utf-8")
