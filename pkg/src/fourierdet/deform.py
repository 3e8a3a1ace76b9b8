"""Descriptor-anchored reference geometry and the multi-scale deformable attention kernel.

Normalized coordinates address pixel centers: ``(0, 0)`` maps to pixel
coordinate ``(-0.5, -0.5)`` and ``(1, 1)`` to ``(W - 0.5, H - 0.5)``.
Samples outside the grid read zeros.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, WeightsNotNormalized
from .geometry import NormalizedBox, fd_to_bbox

WEIGHT_TOL = 1e-6


def reference_from_fd(fd, n: int = 400) -> tuple[tuple[float, float], NormalizedBox]:
    box = fd_to_bbox(fd, n)
    return (box.x, box.y), box


def modulate_offsets(box: NormalizedBox, offsets) -> np.ndarray:
    """Absolute sampling locations ``center + offset * (w, h)``."""
    offsets = np.asarray(offsets, dtype=np.float64)
    return np.array([box.x, box.y]) + offsets * np.array([box.w, box.h])


def bilinear_sample(level, loc) -> np.ndarray:
    """Sample a ``(C, H, W)`` grid at normalized locations ``(..., 2)``; returns ``(..., C)``."""
    level = np.asarray(level, dtype=np.float64)
    loc = np.asarray(loc, dtype=np.float64)
    _, height, width = level.shape
    px = loc[..., 0] * width - 0.5
    py = loc[..., 1] * height - 0.5
    x0 = np.floor(px)
    y0 = np.floor(py)
    fx = px - x0
    fy = py - y0
    out = np.zeros(loc.shape[:-1] + (level.shape[0],))
    for dy, wy in ((0, 1.0 - fy), (1, fy)):
        for dx, wx in ((0, 1.0 - fx), (1, fx)):
            xi = x0 + dx
            yi = y0 + dy
            inside = (xi >= 0) & (xi < width) & (yi >= 0) & (yi < height)
            xs = np.where(inside, xi, 0).astype(np.intp)
            ys = np.where(inside, yi, 0).astype(np.intp)
            vals = np.moveaxis(level[:, ys, xs], 0, -1)
            out += np.where(inside, wx * wy, 0.0)[..., None] * vals
    return out


@dataclass
class AttentionSpec:
    """Offsets ``(M, L, S, 2)``, weights ``(M, L, S)``, value projections ``(M, C', C)``
    and output projections ``(M, C, C')``."""

    offsets: np.ndarray
    weights: np.ndarray
    value_proj: np.ndarray
    output_proj: np.ndarray

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.value_proj = np.asarray(self.value_proj, dtype=np.float64)
        self.output_proj = np.asarray(self.output_proj, dtype=np.float64)

    @property
    def heads(self) -> int:
        return self.weights.shape[0]

    def check(self, levels: int, channels: int) -> None:
        m, l, s = self.weights.shape
        if l != levels:
            raise DimensionMismatch(f"weights cover {l} levels, pyramid has {levels}")
        if self.offsets.shape != (m, l, s, 2):
            raise DimensionMismatch(f"offsets shape {self.offsets.shape} != {(m, l, s, 2)}")
        if self.value_proj.ndim != 3 or self.value_proj.shape[0] != m or self.value_proj.shape[2] != channels:
            raise DimensionMismatch(f"value projection shape {self.value_proj.shape} is not (M, C', {channels})")
        inner = self.value_proj.shape[1]
        if self.output_proj.shape != (m, channels, inner):
            raise DimensionMismatch(f"output projection shape {self.output_proj.shape} != {(m, channels, inner)}")
        sums = self.weights.reshape(m, -1).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > WEIGHT_TOL):
            raise WeightsNotNormalized(f"per-head weight sums {sums.tolist()} are not 1")


def sampling_locations(reference, offsets) -> np.ndarray:
    """A box reference scales offsets by its size; a point reference adds them as is."""
    if isinstance(reference, NormalizedBox):
        return modulate_offsets(reference, offsets)
    return np.asarray(reference, dtype=np.float64) + np.asarray(offsets, dtype=np.float64)


def ms_deform_attn(pyramid: Sequence, reference, spec: AttentionSpec) -> np.ndarray:
    """Single-query multi-scale deformable attention; returns a ``C`` vector."""
    levels = [np.asarray(x, dtype=np.float64) for x in pyramid]
    if not levels:
        raise DimensionMismatch("feature pyramid is empty")
    channels = levels[0].shape[0]
    if any(x.ndim != 3 or x.shape[0] != channels for x in levels):
        raise DimensionMismatch("every pyramid level must be (C, H, W) with a shared C")
    spec.check(len(levels), channels)
    locs = sampling_locations(reference, spec.offsets)
    # sampled: (M, L, S, C)
    sampled = np.stack([bilinear_sample(x, locs[:, l]) for l, x in enumerate(levels)], axis=1)
    pooled = np.einsum("mls,mlsc->mc", spec.weights, sampled)
    projected = np.einsum("mkc,mc->mk", spec.value_proj, pooled)
    return np.einsum("mck,mk->c", spec.output_proj, projected)

