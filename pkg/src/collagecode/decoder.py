"""Turn a collage model's detection boxes into one backup prediction per grid cell.

Assignment rule: a box belongs to the cell it overlaps most (max intersection
area, ties to the lowest cell index); a box whose clipped rect has zero area
falls back to the cell containing its clamped center. Per cell, the
highest-confidence assigned box wins, earliest-in-input-order on confidence
ties. Surplus boxes are discarded, never merged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .geometry import (
    DetectionBox,
    GridSpec,
    box_to_rect,
    cell_containing,
    cell_rect,
    intersection_area,
)


@dataclass(frozen=True)
class CellPrediction:
    cell: int
    class_id: int
    confidence: float


@dataclass(frozen=True)
class DecodedCollage:
    """Backup answer for one batch: slot i is a CellPrediction or None (MISSING)."""

    spec: GridSpec
    slots: tuple[CellPrediction | None, ...]

    def __post_init__(self):
        if len(self.slots) != self.spec.n:
            raise ValueError(f"expected {self.spec.n} slots, got {len(self.slots)}")

    def decoded_mask(self) -> tuple[bool, ...]:
        return tuple(slot is not None for slot in self.slots)


def assign_box_to_cell(box: DetectionBox, spec: GridSpec) -> int:
    """Cell index the box belongs to (see module docstring for the rule).

    Only the cells the clipped rect actually touches are scored; the
    brute-force oracle in the test suite scores every (box, cell) pair instead.
    """
    rect = box_to_rect(box)
    if rect.area == 0.0:
        return cell_containing(spec, box.cx, box.cy)
    s = spec.s
    col_lo = max(0, min(int(rect.x * s), s - 1))
    col_hi = max(0, min(math.ceil((rect.x + rect.w) * s) - 1, s - 1))
    row_lo = max(0, min(int(rect.y * s), s - 1))
    row_hi = max(0, min(math.ceil((rect.y + rect.h) * s) - 1, s - 1))
    best_cell = -1
    best_area = -1.0
    for row in range(row_lo, row_hi + 1):
        for col in range(col_lo, col_hi + 1):
            i = row * s + col
            a = intersection_area(rect, cell_rect(spec, i))
            if a > best_area:  # strict: ties keep the lowest row-major index
                best_area = a
                best_cell = i
    return best_cell


def decode_collage(
    boxes: list[DetectionBox], spec: GridSpec, min_confidence: float = 0.0
) -> DecodedCollage:
    """Assign every box to a cell and keep the best box per cell.

    Boxes with confidence below ``min_confidence`` are dropped before
    assignment (default keeps everything). Input order matters only for the
    documented earliest-first confidence tie-break.
    """
    slots: list[CellPrediction | None] = [None] * spec.n
    for box in boxes:
        if box.confidence < min_confidence:
            continue
        cell = assign_box_to_cell(box, spec)
        current = slots[cell]
        if current is None or box.confidence > current.confidence:
            slots[cell] = CellPrediction(cell, box.class_id, box.confidence)
    return DecodedCollage(spec, tuple(slots))


def parse_boxes_json(text: str) -> list[DetectionBox]:
    """Parse the documented box schema: a JSON array of objects with keys
    cx, cy, w, h, class_id, confidence. Malformed boxes are rejected here."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"boxes file is not valid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(raw, list):
        raise ValueError("boxes file must contain a JSON array")
    boxes = []
    for k, obj in enumerate(raw):
        if not isinstance(obj, dict):
            raise ValueError(f"box {k} is not an object")
        try:
            boxes.append(
                DetectionBox(
                    cx=float(obj["cx"]),
                    cy=float(obj["cy"]),
                    w=float(obj["w"]),
                    h=float(obj["h"]),
                    class_id=int(obj["class_id"]),
                    confidence=float(obj["confidence"]),
                )
            )
        except KeyError as e:
            raise ValueError(f"box {k} is missing key {e.args[0]!r}") from e
        except (TypeError, ValueError) as e:
            raise ValueError(f"box {k} is invalid: {e}") from e
    return boxes


def boxes_to_json(boxes: list[DetectionBox]) -> str:
    return json.dumps(
        [
            {
                "cx": b.cx,
                "cy": b.cy,
                "w": b.w,
                "h": b.h,
                "class_id": b.class_id,
                "confidence": b.confidence,
            }
            for b in boxes
        ]
    )
