"""Randomized self-checks behind the ``grad-check`` and ``attn-check`` commands."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activation import DEFAULT_DELTA, activate, gradient_limit, refine, refine_gradient
from .deform import AttentionSpec, ms_deform_attn

FD_STEP = 1e-6
GRAD_RTOL = 1e-5
LIMIT_RTOL = 1e-10
ATTN_ATOL = 1e-10
# sampling box for random refinement inputs: previous-layer logits and offsets
LOGIT_RANGE = 2.0
OFFSET_RANGE = 0.5


@dataclass
class CheckResult:
    trials: int
    max_error: float
    tolerance: float
    max_limit_error: float = 0.0
    limit_tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        limit_ok = not self.limit_tolerance or self.max_limit_error < self.limit_tolerance
        return self.max_error < self.tolerance and limit_ok


def relative_error(approx, exact) -> np.ndarray:
    approx = np.asarray(approx, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    scale = np.maximum(np.abs(exact), np.abs(approx))
    return np.where(scale > 0, np.abs(approx - exact) / np.where(scale > 0, scale, 1.0), 0.0)


def random_refine_input(rng: np.random.Generator, k: int = 5, delta: float = DEFAULT_DELTA):
    size = 4 * k + 2
    prev = activate(rng.uniform(-LOGIT_RANGE, LOGIT_RANGE, size), delta)
    offset = rng.uniform(-OFFSET_RANGE, OFFSET_RANGE, size)
    return prev, offset


def finite_difference_gradient(prev, offset, step: float = FD_STEP, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """Central difference of each refine output with respect to its own offset."""
    # refine is componentwise, so perturbing all offsets at once isolates the diagonal
    up = refine(prev, offset + step, delta)
    down = refine(prev, offset - step, delta)
    return (up - down) / (2 * step)


def grad_check(trials: int = 1000, seed: int = 0, k: int = 5, delta: float = DEFAULT_DELTA) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_limit = 0.0
    for _ in range(trials):
        prev, offset = random_refine_input(rng, k, delta)
        analytic = refine_gradient(prev, offset, delta)
        numeric = finite_difference_gradient(prev, offset, delta=delta)
        worst = max(worst, float(relative_error(numeric, analytic).max()))
        at_zero = refine_gradient(prev, np.zeros_like(prev), delta)
        worst_limit = max(worst_limit, float(relative_error(at_zero, gradient_limit(prev, delta)).max()))
    return CheckResult(trials, worst, GRAD_RTOL, worst_limit, LIMIT_RTOL)


def random_attention_instance(rng: np.random.Generator, channels: int = 4, levels: int = 2, heads: int = 2,
                              points: int = 2, inner: int = 3):
    shapes = [(int(rng.integers(2, 9)), int(rng.integers(2, 9))) for _ in range(levels)]
    pyramid = [rng.normal(size=(channels, h, w)) for h, w in shapes]
    raw = rng.uniform(0.1, 1.0, size=(heads, levels, points))
    spec = AttentionSpec(
        offsets=rng.uniform(-0.6, 0.6, size=(heads, levels, points, 2)),
        weights=raw / raw.sum(axis=(1, 2), keepdims=True),
        value_proj=rng.normal(size=(heads, inner, channels)),
        output_proj=rng.normal(size=(heads, channels, inner)),
    )
    return pyramid, spec


def naive_ms_deform_attn(pyramid, reference, spec: AttentionSpec, box=None) -> np.ndarray:
    """Loop-by-loop evaluation used as an oracle for :func:`ms_deform_attn`."""
    channels = pyramid[0].shape[0]
    out = np.zeros(channels)
    m_heads, n_levels, n_points = spec.weights.shape
    for m in range(m_heads):
        head = np.zeros(spec.value_proj.shape[1])
        for l in range(n_levels):
            grid = pyramid[l]
            _, height, width = grid.shape
            for s in range(n_points):
                dx, dy = spec.offsets[m, l, s]
                if box is None:
                    x, y = reference[0] + dx, reference[1] + dy
                else:
                    x, y = box.x + dx * box.w, box.y + dy * box.h
                feature = _naive_bilinear(grid, x * width - 0.5, y * height - 0.5)
                head += spec.weights[m, l, s] * (spec.value_proj[m] @ feature)
        out += spec.output_proj[m] @ head
    return out


def _naive_bilinear(grid, px, py):
    channels, height, width = grid.shape
    ix, iy = int(np.floor(px)), int(np.floor(py))
    value = np.zeros(channels)
    for yy in (iy, iy + 1):
        for xx in (ix, ix + 1):
            if 0 <= xx < width and 0 <= yy < height:
                value += (1 - abs(px - xx)) * (1 - abs(py - yy)) * grid[:, yy, xx]
    return value


def attn_check(trials: int = 100, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        pyramid, spec = random_attention_instance(rng)
        reference = rng.uniform(0.0, 1.0, size=2)
        fast = ms_deform_attn(pyramid, reference, spec)
        slow = naive_ms_deform_attn(pyramid, reference, spec)
        worst = max(worst, float(np.max(np.abs(fast - slow))))
    return CheckResult(trials, worst, ATTN_ATOL)
