"""Span- and relation-level micro-averaged precision/recall/F1, curve CSV.

Matching is exact and label-sensitive: a predicted span counts iff a gold
span with the same (token_start, token_end, label) exists in the same
document; a predicted relation additionally needs the exact head and tail
spans in the right direction.  Empty-set conventions: both sides empty is a
perfect score, an empty prediction against nonempty gold scores zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .annotate import EntityMention
from .errors import DocumentIdMismatch, ParseError

SpanKey = tuple[int, int, str]
RelationKey = tuple[SpanKey, SpanKey]


@dataclass(frozen=True)
class PrfScore:
    precision: float
    recall: float
    f1: float
    true_positives: int
    predicted_count: int
    gold_count: int

    @classmethod
    def from_counts(cls, tp: int, predicted: int, gold: int) -> "PrfScore":
        if predicted == 0 and gold == 0:
            return cls(1.0, 1.0, 1.0, 0, 0, 0)
        precision = tp / predicted if predicted > 0 else 0.0
        recall = tp / gold if gold > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(precision, recall, f1, tp, predicted, gold)


def span_key(m: EntityMention) -> SpanKey:
    return (m.token_start, m.token_end, m.label.value)


def relation_key(head: EntityMention, tail: EntityMention) -> RelationKey:
    return (span_key(head), span_key(tail))


def _check_keys(gold: Mapping, predicted: Mapping) -> None:
    if set(gold) != set(predicted):
        only_gold = sorted(set(gold) - set(predicted))
        only_pred = sorted(set(predicted) - set(gold))
        raise DocumentIdMismatch(
            f"gold/predicted document ids differ (gold-only {only_gold}, "
            f"predicted-only {only_pred})")


def span_prf(gold: Mapping[str, Sequence[EntityMention]],
             predicted: Mapping[str, Sequence[EntityMention]]) -> PrfScore:
    """Micro-averaged span score over documents keyed by id."""
    _check_keys(gold, predicted)
    tp = n_pred = n_gold = 0
    for doc_id in gold:
        gold_set = {span_key(m) for m in gold[doc_id]}
        pred_set = {span_key(m) for m in predicted[doc_id]}
        tp += len(gold_set & pred_set)
        n_pred += len(pred_set)
        n_gold += len(gold_set)
    return PrfScore.from_counts(tp, n_pred, n_gold)


def rel_prf(gold: Mapping[str, Iterable[tuple[EntityMention, EntityMention]]],
            predicted: Mapping[str, Iterable[tuple[EntityMention, EntityMention]]]
            ) -> PrfScore:
    """Micro-averaged relation score; direction- and label-sensitive."""
    _check_keys(gold, predicted)
    tp = n_pred = n_gold = 0
    for doc_id in gold:
        gold_set = {relation_key(h, t) for h, t in gold[doc_id]}
        pred_set = {relation_key(h, t) for h, t in predicted[doc_id]}
        tp += len(gold_set & pred_set)
        n_pred += len(pred_set)
        n_gold += len(gold_set)
    return PrfScore.from_counts(tp, n_pred, n_gold)


@dataclass(frozen=True)
class CurvePoint:
    epoch: int
    train_loss: float
    val_loss: float
    precision: float
    recall: float
    f1: float


class TrainingCurve:
    """Per-epoch training record; epoch indices contiguous from 0."""

    def __init__(self, points: Sequence[CurvePoint] = ()):
        self.points: list[CurvePoint] = []
        for p in points:
            self.append(p)

    def append(self, point: CurvePoint) -> None:
        if point.epoch != len(self.points):
            raise ValueError(f"epoch {point.epoch} breaks contiguity at "
                             f"{len(self.points)}")
        for name in ("precision", "recall", "f1"):
            score = getattr(point, name)
            if not (0.0 <= score <= 1.0):
                raise ValueError(f"{name} {score} not in [0,1]")
        self.points.append(point)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other):
        return isinstance(other, TrainingCurve) and self.points == other.points

    def best_f1_epoch(self) -> int:
        """Earliest epoch attaining the maximum validation F1."""
        if not self.points:
            raise ValueError("empty curve")
        best = max(p.f1 for p in self.points)
        return next(p.epoch for p in self.points if p.f1 == best)


CURVE_HEADER = ["epoch", "train_loss", "val_loss", "precision", "recall", "f1"]


def write_curve(curve: TrainingCurve, path: str | Path) -> None:
    """CSV with one row per epoch, scores at 4 decimal places."""
    if len(curve) == 0:
        raise ValueError("refusing to write an empty curve")
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_HEADER)
        for p in curve:
            writer.writerow([p.epoch] + [f"{v:.4f}" for v in
                                         (p.train_loss, p.val_loss,
                                          p.precision, p.recall, p.f1)])


def read_curve(path: str | Path) -> TrainingCurve:
    """Parse a curve CSV back (inverse of write_curve up to rounding)."""
    curve = TrainingCurve()
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CURVE_HEADER:
            raise ParseError(f"{path}: bad curve header {header}")
        for row in reader:
            if len(row) != 6:
                raise ParseError(f"{path}: bad curve row {row}")
            curve.append(CurvePoint(int(row[0]), *(float(v) for v in row[1:])))
    return curve
