"""Contour-level detection evaluation at an IoU threshold (default 0.5)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .geometry import _as_region, _overlap


class ImageCounts(NamedTuple):
    tp: int
    fp: int
    fn: int


def match_detections(preds: Sequence[tuple[object, float]], gts: Sequence, iou_threshold: float = 0.5,
                     ignore: Sequence = ()) -> ImageCounts:
    """Greedy one-to-one matching of predictions to ground truth by descending score.

    A prediction is a true positive when its best still-unmatched ground truth
    has IoU above the threshold. Unmatched predictions overlapping an ignore
    region above the threshold are dropped instead of counted as false
    positives. Score ties keep input order.
    """
    gt_regions = [_as_region(g) for g in gts]
    ignore_regions = [_as_region(g) for g in ignore]
    taken = [False] * len(gts)
    order = sorted(range(len(preds)), key=lambda i: -preds[i][1])
    tp = fp = 0
    for i in order:
        region = _as_region(preds[i][0])
        best, best_j = -1.0, -1
        for j, g in enumerate(gt_regions):
            if taken[j]:
                continue
            iou = _overlap(region, g)
            if iou > best:
                best, best_j = iou, j
        if best_j >= 0 and best > iou_threshold:
            taken[best_j] = True
            tp += 1
        elif not any(_overlap(region, g) > iou_threshold for g in ignore_regions):
            fp += 1
    return ImageCounts(tp, fp, len(gts) - tp)


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f_measure: float
    per_image: list[ImageCounts] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f_measure": self.f_measure,
            "per_image": [list(c) for c in self.per_image],
        }


def aggregate(per_image: Sequence[tuple[int, int, int]]) -> EvalReport:
    counts = [ImageCounts(*c) for c in per_image]
    tp = sum(c.tp for c in counts)
    fp = sum(c.fp for c in counts)
    fn = sum(c.fn for c in counts)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(tp, fp, fn, precision, recall, f, counts)
