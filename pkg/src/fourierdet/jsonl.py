"""JSONL records for contours and descriptors.

Contour record::

    {"image": {"w": 640, "h": 480}, "polygons": [[[x, y], ...], ...]}

A polygon may also be an object ``{"points": [[x, y], ...], "score": 0.9,
"ignore": true}``. Descriptor record::

    {"k": 5, "coeffs": [...]}   # optionally with "image" and "score"

Floats are written with 17 significant digits and keys in insertion order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterator

import numpy as np


class RecordError(ValueError):
    """A malformed input record; ``line`` is 1-based."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def dumps(obj) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"cannot serialize non-finite float {x!r}")
        text = format(x, ".17g")
        return text if any(ch in text for ch in ".en") else text + ".0"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def read_jsonl(stream: IO[str]) -> Iterator[tuple[int, dict]]:
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordError(lineno, f"invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise RecordError(lineno, "record is not a JSON object")
        yield lineno, record


@dataclass
class PolygonEntry:
    points: np.ndarray
    score: float | None = None
    ignore: bool = False


def _number(value, lineno: int, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise RecordError(lineno, f"{what} must be a finite number")
    return float(value)


def parse_image(record: dict, lineno: int) -> tuple[float, float]:
    image = record.get("image")
    if not isinstance(image, dict) or "w" not in image or "h" not in image:
        raise RecordError(lineno, 'missing "image": {"w": ..., "h": ...}')
    w = _number(image["w"], lineno, "image.w")
    h = _number(image["h"], lineno, "image.h")
    if w <= 0 or h <= 0:
        raise RecordError(lineno, "image size must be positive")
    return w, h


def _points(raw, lineno: int, index: int) -> np.ndarray:
    try:
        pts = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError):
        raise RecordError(lineno, f"polygon {index} is not a list of [x, y] pairs") from None
    if pts.ndim != 2 or pts.shape[1] != 2 or not np.all(np.isfinite(pts)):
        raise RecordError(lineno, f"polygon {index} is not a list of finite [x, y] pairs")
    return pts


def parse_contour_record(record: dict, lineno: int) -> tuple[tuple[float, float], list[PolygonEntry]]:
    size = parse_image(record, lineno)
    polygons = record.get("polygons")
    if not isinstance(polygons, list):
        raise RecordError(lineno, 'missing "polygons" list')
    entries = []
    for i, raw in enumerate(polygons):
        if isinstance(raw, dict):
            if "points" not in raw:
                raise RecordError(lineno, f'polygon {i} object has no "points"')
            score = raw.get("score")
            entries.append(PolygonEntry(
                _points(raw["points"], lineno, i),
                None if score is None else _number(score, lineno, f"polygon {i} score"),
                bool(raw.get("ignore", False)),
            ))
        else:
            entries.append(PolygonEntry(_points(raw, lineno, i)))
    return size, entries


def parse_descriptor_record(record: dict, lineno: int) -> tuple[int, np.ndarray]:
    k = record.get("k")
    if isinstance(k, bool) or not isinstance(k, int) or k < 0:
        raise RecordError(lineno, '"k" must be a non-negative integer')
    coeffs = record.get("coeffs")
    if not isinstance(coeffs, list) or len(coeffs) != 4 * k + 2:
        got = len(coeffs) if isinstance(coeffs, list) else "none"
        raise RecordError(lineno, f'"coeffs" must hold 4K+2 = {4 * k + 2} numbers (got {got})')
    return k, np.array([_number(c, lineno, "coefficient") for c in coeffs])
