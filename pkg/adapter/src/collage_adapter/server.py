"""Reference model backend: line-delimited JSON over stdin/stdout.

Speaks the dispatcher's wire protocol without importing it — requests arrive
as ``{"id", "kind": "single"|"collage", "image", "grid_s"?}`` lines, responses
leave as ``{"id", "class_id"+"confidence" | "boxes" | "error"}`` lines, one
per request, order-preserving.

Fixture mode answers from a JSON map so cross-language integration tests need
no ML dependencies; delegate mode hands each request to a user callable (where
a real classifier or detector would plug in). Fixture single entries may be a
bare class id, ``{"class_id": c, "confidence": p, "delay_ms": ms}``, or the
string ``"stall"`` (read the request, never answer — a canned straggler).
Collage entries are either a list of box objects (echoed verbatim) or a list
of class ids, one per cell, turned into boxes at the cell centers.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class AdapterConfig:
    mode: str  # "fixture" | "delegate"
    fixture: dict | None = None
    delegate: Callable[[dict], dict] | None = None

    def __post_init__(self):
        if self.mode == "fixture":
            if self.fixture is None:
                raise ValueError("fixture mode needs a fixture mapping")
        elif self.mode == "delegate":
            if self.delegate is None:
                raise ValueError("delegate mode needs a predict callable")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")


def load_fixture(path) -> AdapterConfig:
    with open(path) as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValueError("fixture file must contain a JSON object")
    for key in ("singles", "collages"):
        if key in doc and not isinstance(doc[key], dict):
            raise ValueError(f"fixture {key!r} must be an object")
    return AdapterConfig(mode="fixture", fixture=doc)


def cell_center_boxes(classes: list, grid_s: int) -> list[dict]:
    """One box per listed class, centered on the corresponding grid cell."""
    boxes = []
    for i, class_id in enumerate(classes):
        row, col = divmod(i, grid_s)
        boxes.append(
            {
                "cx": (col + 0.5) / grid_s,
                "cy": (row + 0.5) / grid_s,
                "w": 0.8 / grid_s,
                "h": 0.8 / grid_s,
                "class_id": int(class_id),
                "confidence": 1.0,
            }
        )
    return boxes


_STALL = object()  # sentinel: swallow the request, emit nothing


def _fixture_single(fixture: dict, req: dict):
    entry = fixture.get("singles", {}).get(req["image"], fixture.get("single_default"))
    if entry is None:
        return {"id": req["id"], "error": f"no fixture entry for image {req['image']!r}"}
    if entry == "stall":
        return _STALL
    if isinstance(entry, dict):
        delay = entry.get("delay_ms")
        if delay:
            time.sleep(delay / 1000.0)
        return {
            "id": req["id"],
            "class_id": int(entry["class_id"]),
            "confidence": float(entry.get("confidence", 1.0)),
        }
    return {"id": req["id"], "class_id": int(entry), "confidence": 1.0}


def _fixture_collage(fixture: dict, req: dict):
    entry = fixture.get("collages", {}).get(req["image"], fixture.get("collage_default"))
    if entry is None:
        return {"id": req["id"], "error": f"no fixture entry for collage {req['image']!r}"}
    if entry == "stall":
        return _STALL
    if not isinstance(entry, list):
        return {"id": req["id"], "error": "collage fixture entry must be a list"}
    if all(isinstance(v, dict) for v in entry):
        return {"id": req["id"], "boxes": entry}
    return {"id": req["id"], "boxes": cell_center_boxes(entry, int(req["grid_s"]))}


def handle_line(line: str, config: AdapterConfig):
    """One request line -> one response object, _STALL, or None for blank input."""
    line = line.strip()
    if not line:
        return None
    try:
        req = json.loads(line)
        if not isinstance(req, dict):
            raise ValueError("not an object")
        rid = req["id"]
        kind = req["kind"]
        req["image"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        return {"id": "", "error": f"unparseable request line: {line}"}

    if config.mode == "delegate":
        try:
            payload = config.delegate(req)
            return {"id": rid, **payload}
        except Exception as e:  # a broken delegate must not kill the loop
            return {"id": rid, "error": f"delegate failed: {e}"}

    if kind == "single":
        return _fixture_single(config.fixture, req)
    if kind == "collage":
        if "grid_s" not in req:
            return {"id": rid, "error": "collage request without grid_s"}
        return _fixture_collage(config.fixture, req)
    return {"id": rid, "error": f"unknown request kind {kind!r}"}


def serve_stdio(config: AdapterConfig, stdin=None, stdout=None) -> int:
    """Answer request lines until EOF; returns 0. Never raises on bad input."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        resp = handle_line(line, config)
        if resp is None or resp is _STALL:
            continue
        stdout.write(json.dumps(resp) + "\n")
        stdout.flush()
    return 0
