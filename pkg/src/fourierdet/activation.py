"""Bounded activation for descriptor regression and the iterative refinement step.

The activation maps unbounded logits to descriptor range: logistic sigmoid on
the dc pair, ``tanh(x) / delta`` elsewhere. Refinement of a previous prediction
``c`` by an offset ``o`` is additive in logit space for the dc pair,
``f(f^-1(c) + o)``, and multiplicative for the rest, ``f(f^-1(c) * exp(o))``.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit, logit

from .codec import dc_indices, k_of
from .errors import DimensionMismatch, OutOfRange

DEFAULT_DELTA = np.pi / 2


def _dc_mask(fd: np.ndarray) -> np.ndarray:
    mask = np.zeros(fd.shape, dtype=bool)
    mask[list(dc_indices(k_of(fd)))] = True
    return mask


def activate(raw, delta: float = DEFAULT_DELTA) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    dc = _dc_mask(raw)
    return np.where(dc, expit(raw), np.tanh(raw) / delta)


def activate_inverse(fd, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """Exact inverse of :func:`activate`; boundary values are rejected, not clamped."""
    fd = np.asarray(fd, dtype=np.float64)
    dc = _dc_mask(fd)
    bad_dc = dc & ~((fd > 0.0) & (fd < 1.0))
    bad_ac = ~dc & ~(np.abs(fd * delta) < 1.0)
    bad = np.flatnonzero(bad_dc | bad_ac)
    if bad.size:
        i = int(bad[0])
        raise OutOfRange(f"component {i} = {fd[i]!r} is outside the open activation range")
    with np.errstate(divide="ignore"):
        return np.where(dc, logit(np.where(dc, fd, 0.5)), np.arctanh(np.where(dc, 0.0, fd) * delta))


def _check_offset(fd: np.ndarray, offset) -> np.ndarray:
    offset = np.asarray(offset, dtype=np.float64)
    if offset.shape != fd.shape:
        raise DimensionMismatch(f"offset shape {offset.shape} != descriptor shape {fd.shape}")
    return offset


def refine(prev, offset, delta: float = DEFAULT_DELTA) -> np.ndarray:
    prev = np.asarray(prev, dtype=np.float64)
    offset = _check_offset(prev, offset)
    z = activate_inverse(prev, delta)
    dc = _dc_mask(prev)
    return activate(np.where(dc, z + offset, z * np.exp(offset)), delta)


def refine_gradient(prev, offset, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """Componentwise derivative of :func:`refine` output i with respect to offset i."""
    prev = np.asarray(prev, dtype=np.float64)
    offset = _check_offset(prev, offset)
    z = activate_inverse(prev, delta)
    dc = _dc_mask(prev)
    s = expit(z + offset)
    scaled = z * np.exp(offset)
    t = np.tanh(scaled)
    return np.where(dc, s * (1.0 - s), (1.0 - t * t) * scaled / delta)


def gradient_limit(prev, delta: float = DEFAULT_DELTA) -> np.ndarray:
    """Zero-offset limit of :func:`refine_gradient` written directly in terms of ``c``.

    dc: ``f'(f^-1(c)) = c (1 - c)``. Other components:
    ``f'(f^-1(c)) * f^-1(c) = (1 - (delta c)^2) / delta * artanh(delta c)``.
    """
    prev = np.asarray(prev, dtype=np.float64)
    activate_inverse(prev, delta)
    dc = _dc_mask(prev)
    dc_part = prev * (1.0 - prev)
    scaled = delta * np.where(dc, 0.0, prev)
    ac_part = (1.0 - scaled * scaled) / delta * np.arctanh(scaled)
    return np.where(dc, dc_part, ac_part)
