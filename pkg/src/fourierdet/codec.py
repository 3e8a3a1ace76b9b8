"""Polygon <-> normalized Fourier descriptor conversion.

Contours are ``(N, 2)`` float64 arrays of ``(x, y)`` points. A descriptor is a
flat array of ``4K + 2`` reals laid out as
``[u_-K, v_-K, ..., u_0, v_0, ..., u_K, v_K]`` where ``c_k = u_k + i v_k``.
The dc pair therefore sits at flat indices ``(2K, 2K + 1)``.

Polygons are canonicalized before resampling: clockwise in image coordinates
(y pointing down, i.e. positive shoelace area) and starting at the vertex with
the smallest ``(y, x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePolygon, DimensionMismatch, InsufficientSamples, OutOfBounds

DC_MAX = 1.0
NON_DC_MAX = 2.0 / np.pi
BOUNDS_TOL = 1e-12
NORMALIZE_TOL = 1e-9


def k_of(fd) -> int:
    """Highest frequency index K of a flat descriptor."""
    size = np.shape(fd)[-1]
    if size < 2 or (size - 2) % 4:
        raise DimensionMismatch(f"descriptor length {size} is not of the form 4K+2")
    return (size - 2) // 4


def dc_indices(k: int) -> tuple[int, int]:
    return 2 * k, 2 * k + 1


def to_complex(fd) -> np.ndarray:
    """Return the ``2K + 1`` complex coefficients ordered by ascending k."""
    fd = np.asarray(fd, dtype=np.float64)
    k_of(fd)
    return fd[0::2] + 1j * fd[1::2]


def from_complex(c) -> np.ndarray:
    c = np.asarray(c, dtype=np.complex128)
    out = np.empty(2 * c.size, dtype=np.float64)
    out[0::2] = c.real
    out[1::2] = c.imag
    return out


def signed_area(vertices) -> float:
    """Shoelace area; positive for clockwise traversal in image coordinates."""
    v = np.asarray(vertices, dtype=np.float64)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def validate_polygon(vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != 2:
        raise DegeneratePolygon(f"expected (N, 2) vertices, got shape {v.shape}")
    if len(v) < 3:
        raise DegeneratePolygon(f"polygon needs at least 3 vertices, got {len(v)}")
    if not np.all(np.isfinite(v)):
        raise DegeneratePolygon("polygon has non-finite coordinates")
    edges = np.roll(v, -1, axis=0) - v
    if np.any(np.all(edges == 0.0, axis=1)):
        raise DegeneratePolygon("polygon has consecutive identical vertices")
    return v


def canonicalize(vertices) -> np.ndarray:
    """Reorient to positive shoelace area and rotate to the min-(y, x) vertex."""
    v = validate_polygon(vertices)
    if signed_area(v) < 0:
        v = v[::-1]
    start = np.lexsort((v[:, 0], v[:, 1]))[0]
    return np.roll(v, -start, axis=0)


def resample_equidistant(polygon, n: int) -> np.ndarray:
    """Sample ``n`` points at equal arc-length spacing along the closed polygon.

    Point 0 is the canonical start vertex and traversal follows the canonical
    orientation.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    v = canonicalize(polygon)
    closed = np.vstack([v, v[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    perimeter = cum[-1]
    if not perimeter > 0:
        raise DegeneratePolygon("polygon perimeter is zero")
    s = perimeter * np.arange(n) / n
    return np.column_stack([np.interp(s, cum, closed[:, 0]), np.interp(s, cum, closed[:, 1])])


def normalize(points, width: float, height: float) -> np.ndarray:
    """Map pixel points into the unit square by dividing by the image size."""
    if not (width > 0 and height > 0):
        raise ValueError("image width and height must be positive")
    p = np.asarray(points, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    outside = (
        (x < -NORMALIZE_TOL) | (x > width + NORMALIZE_TOL)
        | (y < -NORMALIZE_TOL) | (y > height + NORMALIZE_TOL)
    )
    if np.any(outside):
        i = int(np.argmax(outside))
        raise OutOfBounds(f"point {i} {tuple(p[i])} lies outside the {width}x{height} image")
    return np.clip(p / [width, height], 0.0, 1.0)


def denormalize(points, width: float, height: float) -> np.ndarray:
    return np.asarray(points, dtype=np.float64) * [width, height]


def dft_encode(contour, k_max: int) -> np.ndarray:
    """Fourier descriptor ``c_k = (1/N) sum_n z_n exp(-2 pi i k n / N)`` for |k| <= K."""
    p = np.asarray(contour, dtype=np.float64)
    n = len(p)
    if n < 2 * k_max + 1:
        raise InsufficientSamples(f"{n} samples cannot resolve K={k_max} (need {2 * k_max + 1})")
    spectrum = np.fft.fft(p[:, 0] + 1j * p[:, 1]) / n
    return from_complex(spectrum[np.arange(-k_max, k_max + 1)])


def idft_decode(fd, n: int) -> np.ndarray:
    """Evaluate ``sum_k c_k exp(2 pi i k t)`` at ``t = j / n``, j = 0..n-1.

    No ``1/n`` factor and no clamping: arbitrary descriptors may decode outside
    the unit square.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    c = to_complex(fd)
    k = (len(c) - 1) // 2
    freqs = np.arange(-k, k + 1)
    phase = np.exp(2j * np.pi * np.outer(np.arange(n), freqs) / n)
    z = phase @ c
    return np.column_stack([z.real, z.imag])


def encode_polygon(polygon, width: float, height: float, k_max: int = 5, n: int = 400) -> np.ndarray:
    """Full target-generation pipeline: resample, normalize, DFT."""
    return dft_encode(normalize(resample_equidistant(polygon, n), width, height), k_max)


def decode_polygon(fd, width: float, height: float, n: int = 400) -> np.ndarray:
    return denormalize(idft_decode(fd, n), width, height)


@dataclass
class BoundsReport:
    ok: bool
    # (flat index, value, "dc" | "non-dc")
    violations: list[tuple[int, float, str]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def check_bounds(fd, tol: float = BOUNDS_TOL) -> BoundsReport:
    """Check the dc pair lies in [0, 1]^2 and every other pair in [-2/pi, 2/pi]^2."""
    fd = np.asarray(fd, dtype=np.float64)
    k = k_of(fd)
    dc = set(dc_indices(k))
    violations = []
    for i, value in enumerate(fd):
        if i in dc:
            if not (-tol <= value <= DC_MAX + tol):
                violations.append((i, float(value), "dc"))
        elif not (abs(value) <= NON_DC_MAX + tol):
            violations.append((i, float(value), "non-dc"))
    return BoundsReport(not violations, violations)
