"""Regression losses on descriptors, focal classification loss and the layered total.

All L1 terms use a mean reduction: ``l_fd`` over the ``4K + 2`` coefficients,
``l_sd`` over the ``2n`` decoded coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .codec import idft_decode, k_of
from .errors import DimensionMismatch, EmptyMatchSet, InsufficientSamples, LengthMismatch, ScoreOutOfRange
from .geometry import fd_to_bbox, giou_loss

if TYPE_CHECKING:
    from .matching import MatchResult

DEFAULT_LAMBDA = 0.25
DEFAULT_ALPHA1 = 5.0
DEFAULT_ALPHA2 = 0.4
FOCAL_ALPHA = 0.25
FOCAL_GAMMA = 2.0


def _pair(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise DimensionMismatch(f"descriptor shapes differ: {pred.shape} vs {gt.shape}")
    k_of(pred)
    return pred, gt


def l_sd(pred, gt, n: int = 400) -> float:
    """Mean absolute coordinate difference of the two decoded contours."""
    pred, gt = _pair(pred, gt)
    if n < 2 * k_of(pred) + 1:
        raise InsufficientSamples(f"n={n} is below 2K+1")
    return float(np.mean(np.abs(idft_decode(pred, n) - idft_decode(gt, n))))


def l_fd(pred, gt) -> float:
    pred, gt = _pair(pred, gt)
    return float(np.mean(np.abs(pred - gt)))


def l_bbox(pred, gt, n: int = 400) -> float:
    pred, gt = _pair(pred, gt)
    return giou_loss(fd_to_bbox(pred, n), fd_to_bbox(gt, n))


def regression_loss(pred, gt, alpha1: float = DEFAULT_ALPHA1, alpha2: float = DEFAULT_ALPHA2,
                    n: int = 400) -> float:
    """Per-pair regression term shared by the matching cost and the training loss."""
    return l_sd(pred, gt, n) + alpha1 * l_fd(pred, gt) + alpha2 * l_bbox(pred, gt, n)


def _check_scores(scores: np.ndarray) -> None:
    bad = ~((scores > 0.0) & (scores < 1.0))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ScoreOutOfRange(f"score {i} = {scores[i]!r} is not in (0, 1)")


def focal_loss(scores, labels, alpha: float = FOCAL_ALPHA, gamma: float = FOCAL_GAMMA) -> float:
    """Mean of ``-alpha (1 - p_t)^gamma log p_t`` with ``p_t = s`` for positives, ``1 - s`` otherwise.

    ``alpha`` weights positives and negatives alike.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise LengthMismatch(f"{scores.size} scores vs {labels.size} labels")
    if scores.size == 0:
        return 0.0
    _check_scores(scores)
    p_t = np.where(labels, scores, 1.0 - scores)
    return float(np.mean(-alpha * (1.0 - p_t) ** gamma * np.log(p_t)))


@dataclass
class LossWeights:
    lam: float = DEFAULT_LAMBDA
    alpha1: float = DEFAULT_ALPHA1
    alpha2: float = DEFAULT_ALPHA2
    # one weight per decoder layer; layer 0 (the proposal network) always has weight 1
    layer_weights: list[float] = field(default_factory=lambda: [1.0] * 6)

    def __post_init__(self):
        if min([self.lam, self.alpha1, self.alpha2, *self.layer_weights], default=0.0) < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass
class LayerPredictions:
    """Descriptors and scores of one layer plus the match computed for it."""

    fds: Sequence
    scores: Sequence[float]
    match: MatchResult


def layer_loss(layer: LayerPredictions, gts: Sequence, weights: LossWeights, n: int = 400) -> tuple[float, float]:
    """Return ``(cls, reg)`` for one layer, with ``reg`` averaged over matched pairs."""
    count = len(layer.fds)
    if len(layer.scores) != count:
        raise LengthMismatch(f"{count} descriptors vs {len(layer.scores)} scores")
    labels = np.zeros(count, dtype=bool)
    for p, _ in layer.match.positives:
        labels[p] = True
    cls = focal_loss(layer.scores, labels)
    pairs = layer.match.positives
    if not pairs:
        if weights.lam == 0:
            return cls, 0.0
        raise EmptyMatchSet("layer has no matched pairs")
    reg = sum(regression_loss(layer.fds[p], gts[g], weights.alpha1, weights.alpha2, n) for p, g in pairs)
    return cls, reg / len(pairs)


def total_loss(layers: Sequence[LayerPredictions], gts: Sequence, weights: LossWeights | None = None,
               n: int = 400) -> tuple[float, list[dict]]:
    """Layer-weighted sum of ``cls + lambda * reg``.

    ``layers[0]`` is the proposal layer (weight 1); ``layers[1:]`` pair with
    ``weights.layer_weights``. Returns the total and a per-layer breakdown.
    """
    weights = weights or LossWeights(layer_weights=[1.0] * (len(layers) - 1))
    if len(layers) != len(weights.layer_weights) + 1:
        raise LengthMismatch(
            f"{len(layers)} layers need {len(layers) - 1} decoder weights, got {len(weights.layer_weights)}")
    total = 0.0
    breakdown = []
    for i, layer in enumerate(layers):
        w = 1.0 if i == 0 else weights.layer_weights[i - 1]
        cls, reg = layer_loss(layer, gts, weights, n)
        term = w * (cls + weights.lam * reg)
        total += term
        breakdown.append({"layer": i, "weight": w, "cls": cls, "reg": reg, "loss": term})
    return total, breakdown
