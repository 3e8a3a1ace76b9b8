"""Boxes from descriptors, GIoU, polygon IoU and contour NMS."""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon

from .codec import idft_decode, k_of
from .errors import BothDegenerate, InsufficientSamples, LengthMismatch, ZeroArea


class NormalizedBox(NamedTuple):
    """``(x, y)`` is the mean of the decoded contour points, not the box midpoint."""

    x: float
    y: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> tuple[float, float, float, float]:
        """``(x0, y0, x1, y1)`` treating ``(x, y)`` as the box center."""
        return (self.x - self.w / 2, self.y - self.h / 2, self.x + self.w / 2, self.y + self.h / 2)


def points_to_bbox(points) -> NormalizedBox:
    p = np.asarray(points, dtype=np.float64)
    lo, hi = p.min(axis=0), p.max(axis=0)
    mean = p.mean(axis=0)
    return NormalizedBox(float(mean[0]), float(mean[1]), float(hi[0] - lo[0]), float(hi[1] - lo[1]))


def fd_to_bbox(fd, n: int = 400) -> NormalizedBox:
    k = k_of(fd)
    if n < 2 * k + 1:
        raise InsufficientSamples(f"n={n} is below 2K+1={2 * k + 1}")
    return points_to_bbox(idft_decode(fd, n))


def giou(a: NormalizedBox, b: NormalizedBox) -> float:
    if a.area <= 0 and b.area <= 0:
        raise BothDegenerate("both boxes have zero area")
    ax0, ay0, ax1, ay1 = a.corners()
    bx0, by0, bx1, by1 = b.corners()
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    union = a.area + b.area - inter
    enclosing = (max(ax1, bx1) - min(ax0, bx0)) * (max(ay1, by1) - min(ay0, by0))
    return inter / union - (enclosing - union) / enclosing


def giou_loss(a: NormalizedBox, b: NormalizedBox) -> float:
    return 1.0 - giou(a, b)


def _as_region(points):
    poly = Polygon(np.asarray(points, dtype=np.float64))
    if not poly.is_valid:
        # linework reconstruction gives even-odd semantics for self-intersections
        poly = shapely.make_valid(poly)
    return poly


def _region_iou(pa, pb) -> float:
    area_a, area_b = pa.area, pb.area
    if area_a <= 0 and area_b <= 0:
        raise ZeroArea("both polygons have zero area")
    if area_a <= 0 or area_b <= 0:
        return 0.0
    inter = pa.intersection(pb).area
    union = area_a + area_b - inter
    return float(min(1.0, max(0.0, inter / union)))


def polygon_iou(a, b) -> float:
    """Area IoU of two closed contours (self-intersections resolved even-odd)."""
    if len(a) < 3 or len(b) < 3:
        raise ValueError("polygon_iou needs at least 3 points per contour")
    return _region_iou(_as_region(a), _as_region(b))


def nms(contours: Sequence, scores: Sequence[float], iou_threshold: float = 0.5) -> list[int]:
    """Greedy NMS over polygons; ties in score keep the lower index first.

    Pairs of zero-area contours count as non-overlapping.
    """
    if len(contours) != len(scores):
        raise LengthMismatch(f"{len(contours)} contours vs {len(scores)} scores")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    regions = [_as_region(c) for c in contours]
    kept: list[int] = []
    for i in order:
        if all(_overlap(regions[i], regions[j]) <= iou_threshold for j in kept):
            kept.append(i)
    return kept


def _overlap(pa, pb) -> float:
    try:
        return _region_iou(pa, pb)
    except ZeroArea:
        return 0.0
