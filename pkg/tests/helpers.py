"""Shared oracles and generators for the test suite.

The oracles here deliberately take the dumb road: full (box, cell)
enumeration, point-sampling areas, scalar pixel loops. They must stay
independent of the library code paths they check.
"""

from __future__ import annotations

import math

import numpy as np

from collagecode.geometry import (
    DetectionBox,
    GridSpec,
    Rect,
    box_to_rect,
    cell_containing,
    cell_rect,
    intersection_area,
)
from collagecode.codec import RasterImage
from collagecode.protocol import (
    CollageResult,
    Complete,
    DeadlineTick,
    FillPolicy,
    ProtocolConfig,
    SingleResult,
    run_batch,
)
from collagecode.rng import Prng

INF = math.inf


# -- geometry ------------------------------------------------------------------


def random_rect(p: Prng) -> Rect:
    x = p.next_float()
    y = p.next_float()
    w = p.next_float() * (1.0 - x)
    h = p.next_float() * (1.0 - y)
    return Rect(x, y, w, h)


def sampled_intersection(a: Rect, b: Rect, m: int = 2000) -> float:
    """Point-sampling area oracle: midpoint grid membership tests only."""
    xs = (np.arange(m) + 0.5) / m
    ys = (np.arange(m) + 0.5) / m
    in_ax = (xs >= a.x) & (xs < a.x + a.w)
    in_bx = (xs >= b.x) & (xs < b.x + b.w)
    in_ay = (ys >= a.y) & (ys < a.y + a.h)
    in_by = (ys >= b.y) & (ys < b.y + b.h)
    nx = int((in_ax & in_bx).sum())
    ny = int((in_ay & in_by).sum())
    return (nx / m) * (ny / m)


# -- decoder -------------------------------------------------------------------


def brute_force_assign(box: DetectionBox, spec: GridSpec) -> int:
    """Score every (box, cell) pair explicitly; lowest index wins ties."""
    rect = box_to_rect(box)
    if rect.area == 0.0:
        return cell_containing(spec, box.cx, box.cy)
    best, best_area = 0, -1.0
    for i in range(spec.n):
        a = intersection_area(rect, cell_rect(spec, i))
        if a > best_area:
            best, best_area = i, a
    return best


def brute_force_decode(boxes, spec: GridSpec, min_confidence: float = 0.0):
    """Reference decoder: returns a list of (class_id, confidence) or None per cell."""
    slots = [None] * spec.n
    for b in boxes:
        if b.confidence < min_confidence:
            continue
        cell = brute_force_assign(b, spec)
        if slots[cell] is None or b.confidence > slots[cell][1]:
            slots[cell] = (b.class_id, b.confidence)
    return slots


def random_box_set(p: Prng, spec: GridSpec, max_boxes: int | None = None) -> list[DetectionBox]:
    """Boxes with messy positions (some off-canvas), gridded confidences to force ties."""
    n_boxes = p.next_u64() % ((max_boxes or 2 * spec.n) + 1)
    boxes = []
    for _ in range(n_boxes):
        cx = p.next_float() * 1.3 - 0.15
        cy = p.next_float() * 1.3 - 0.15
        w = 0.01 + p.next_float() * 0.6
        h = 0.01 + p.next_float() * 0.6
        class_id = p.next_u64() % 10
        if p.next_float() < 0.5:
            confidence = (p.next_u64() % 6) * 0.1 + 0.5  # lattice: exact ties happen
        else:
            confidence = p.next_float()
        boxes.append(DetectionBox(cx, cy, w, h, int(class_id), confidence))
    return boxes


def centered_box(spec: GridSpec, cell: int, class_id: int, confidence: float = 0.9) -> DetectionBox:
    r = cell_rect(spec, cell)
    return DetectionBox(r.x + r.w / 2, r.y + r.h / 2, 0.8 / spec.s, 0.8 / spec.s, class_id, confidence)


# -- protocol scenarios ----------------------------------------------------------


class Scenario:
    def __init__(self, config, t_singles, t_collage, mask, reissue_durs):
        self.config = config
        self.t_singles = t_singles
        self.t_collage = t_collage
        self.mask = mask
        self.reissue_durs = reissue_durs


def random_scenario(p: Prng, policy: FillPolicy) -> Scenario:
    s = 2 + int(p.next_u64() % 2)
    spec = GridSpec(s)
    n = spec.n
    t_d = 5.0 + p.next_float() * 10.0
    t_r = t_d + 2.0 + p.next_float() * 10.0
    config = ProtocolConfig(spec, t_d, t_r, policy)
    lattice = (t_d, t_r, t_d / 2, t_d * 1.5)

    def arrival(scale: float) -> float:
        if p.next_float() < 0.15:
            return INF
        if p.next_float() < 0.3:
            return lattice[p.next_u64() % 4]
        return p.next_float() * scale

    t_singles = [arrival(t_r * 1.5) for _ in range(n)]
    t_collage = arrival(t_r * 1.2)
    mask = [p.next_float() < 0.8 for _ in range(n)]
    reissue_durs = [0.5 + p.next_float() * 10.0 for _ in range(n)]
    return Scenario(config, t_singles, t_collage, mask, reissue_durs)


def scenario_boxes(sc: Scenario) -> list[DetectionBox]:
    """One centered box per masked cell, so decoding reproduces the mask exactly."""
    return [
        centered_box(sc.config.spec, i, class_id=i)
        for i in range(sc.config.spec.n)
        if sc.mask[i]
    ]


def replay_scenario(sc: Scenario, extra_tick: float | None = None):
    """Event-driven run of a scenario; returns (completions, all actions)."""
    config = sc.config
    n = config.spec.n
    events = [
        SingleResult(i, sc.t_singles[i], 100 + i)
        for i in range(n)
        if sc.t_singles[i] != INF
    ]
    if sc.t_collage != INF:
        events.append(CollageResult(sc.t_collage, tuple(scenario_boxes(sc))))
    events.append(DeadlineTick(config.straggler_deadline))
    events.append(DeadlineTick(config.reissue_deadline))
    if extra_tick is not None:
        events.append(DeadlineTick(extra_tick))
    replay = run_batch(
        events,
        config,
        reissue_responder=lambda i: (config.reissue_deadline + sc.reissue_durs[i], 200 + i),
    )
    return replay.completions, replay.actions


def completions_per_request(actions, n: int) -> list[int]:
    counts = [0] * n
    for act in actions:
        if isinstance(act, Complete):
            counts[act.request] += 1
    return counts


# -- images --------------------------------------------------------------------


def random_image(p: Prng, w: int, h: int) -> RasterImage:
    data = bytearray()
    while len(data) < w * h * 3:
        data.extend(p.next_u64().to_bytes(8, "little"))
    return RasterImage(w, h, bytes(data[: w * h * 3]))
