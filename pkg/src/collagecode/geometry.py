"""Normalized grid/cell/box geometry shared by the codec, decoder, and mock models.

All coordinates live on the unit collage canvas [0,1] x [0,1]; cell indices are
row-major with the origin at the top-left. Everything here is a pure function
over immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """An s x s collage layout; ``n = s*s`` images per collage."""

    s: int

    def __post_init__(self):
        if not isinstance(self.s, int) or self.s < 1:
            raise ValueError(f"grid side must be a positive integer, got {self.s!r}")

    @property
    def n(self) -> int:
        return self.s * self.s


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle on the unit canvas, corner form (x, y, w, h)."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.x < 0 or self.y < 0 or self.w < 0 or self.h < 0:
            raise ValueError(f"negative rect field: {self}")
        if self.x + self.w > 1 + _EDGE_EPS or self.y + self.h > 1 + _EDGE_EPS:
            raise ValueError(f"rect exceeds unit canvas: {self}")

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class DetectionBox:
    """One spatially localized class prediction, center/extent form.

    Field layout follows the usual single-shot-detector output: normalized
    center (cx, cy), normalized extents (w, h), integer class, confidence.
    """

    cx: float
    cy: float
    w: float
    h: float
    class_id: int
    confidence: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive, got w={self.w} h={self.h}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")


@lru_cache(maxsize=4096)
def cell_rect(spec: GridSpec, i: int) -> Rect:
    """Rect of cell ``i`` (row-major). Cells tile the unit canvas in 1/s steps.

    Memoized; Rect is immutable, so sharing instances is safe.
    """
    if not 0 <= i < spec.n:
        raise ValueError(f"cell index {i} out of range for {spec.s}x{spec.s} grid")
    s = spec.s
    row, col = divmod(i, s)
    return Rect(col / s, row / s, 1.0 / s, 1.0 / s)


def intersection_area(a: Rect, b: Rect) -> float:
    """Overlap area of two rects; 0 when disjoint. Symmetric."""
    ox = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    oy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    return max(0.0, ox) * max(0.0, oy)


def box_to_rect(b: DetectionBox) -> Rect:
    """Corner-form rect of a detection box, clipped to the unit canvas.

    Clipping may produce a zero-area rect; out-of-canvas detections degrade
    gracefully instead of erroring.
    """
    x0 = min(max(b.cx - b.w / 2, 0.0), 1.0)
    y0 = min(max(b.cy - b.h / 2, 0.0), 1.0)
    x1 = min(max(b.cx + b.w / 2, 0.0), 1.0)
    y1 = min(max(b.cy + b.h / 2, 0.0), 1.0)
    return Rect(x0, y0, max(0.0, x1 - x0), max(0.0, y1 - y0))


def cell_containing(spec: GridSpec, x: float, y: float) -> int:
    """Index of the cell containing point (x, y), coordinates clamped to the canvas."""
    s = spec.s
    col = min(int(min(max(x, 0.0), 1.0) * s), s - 1)
    row = min(int(min(max(y, 0.0), 1.0) * s), s - 1)
    return row * s + col
