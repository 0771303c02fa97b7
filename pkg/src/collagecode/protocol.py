"""Straggler-recovery state machine for one batch: n single tasks + 1 collage task.

Single results are always preferred; the decoded collage fills slots whose
single worker is straggling; still-unserved requests are re-issued at the
reissue deadline. ``on_event`` is a pure transition function; the hosting
runtime must serialize all events of one batch through a single ordered
queue (distinct batches are independent).

Timing contract: deadline ticks are expected promptly at T_d and T_r (the
simulator and the live dispatcher always inject them). A collage fill is
timestamped ``max(T_d, collage arrival)`` under FILL_AFTER_DEADLINE — the
instant the answer became usable — even if the triggering tick is observed
later. ``completion_oracle`` is the closed-form reference for this behavior.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Union

from .decoder import DecodedCollage, decode_collage
from .errors import ProtocolError
from .geometry import DetectionBox, GridSpec


class FillPolicy(Enum):
    FILL_AFTER_DEADLINE = "fill_after_deadline"
    FILL_ON_ARRIVAL = "fill_on_arrival"


class Source(Enum):
    SINGLE = "single"
    COLLAGE = "collage"
    REISSUE = "reissue"


@dataclass(frozen=True)
class ProtocolConfig:
    spec: GridSpec
    straggler_deadline: float  # T_d: ms after dispatch when a missing single is straggling
    reissue_deadline: float  # T_r: ms after dispatch when unserved requests re-execute
    fill_policy: FillPolicy = FillPolicy.FILL_AFTER_DEADLINE

    def __post_init__(self):
        if not 0 < self.straggler_deadline < self.reissue_deadline:
            raise ValueError(
                f"deadlines must satisfy 0 < T_d < T_r, got "
                f"T_d={self.straggler_deadline} T_r={self.reissue_deadline}"
            )


# -- events ------------------------------------------------------------------


@dataclass(frozen=True)
class SingleResult:
    request: int
    time: float
    class_id: int


@dataclass(frozen=True)
class CollageResult:
    time: float
    boxes: tuple[DetectionBox, ...]


@dataclass(frozen=True)
class DeadlineTick:
    time: float


@dataclass(frozen=True)
class ReissueResult:
    request: int
    time: float
    class_id: int


ProtocolEvent = Union[SingleResult, CollageResult, DeadlineTick, ReissueResult]

# At equal timestamps, results are applied before deadline ticks, and
# single results before collage before reissue; this realizes the oracle's
# SINGLE > COLLAGE > REISSUE preference on exact ties.
_EVENT_RANK = {SingleResult: 0, CollageResult: 1, DeadlineTick: 2, ReissueResult: 3}


def event_sort_key(ev: ProtocolEvent) -> tuple[float, int]:
    return (ev.time, _EVENT_RANK[type(ev)])


# -- actions -----------------------------------------------------------------


@dataclass(frozen=True)
class Complete:
    request: int
    source: Source
    time: float
    class_id: int


@dataclass(frozen=True)
class IssueReissue:
    request: int


Action = Union[Complete, IssueReissue]


# -- state -------------------------------------------------------------------


@dataclass(frozen=True)
class BatchState:
    """Bookkeeping for one batch. DONE is terminal; a request never completes twice."""

    done: tuple[Complete | None, ...]  # slot i: None while PENDING
    collage_time: float | None
    collage_decoded: DecodedCollage | None
    reissued: frozenset[int]
    clock: float
    audit: tuple[str, ...]  # late/duplicate results, recorded but never answered

    @property
    def all_done(self) -> bool:
        return all(c is not None for c in self.done)

    def pending(self) -> list[int]:
        return [i for i, c in enumerate(self.done) if c is None]


def new_batch_state(spec: GridSpec) -> BatchState:
    return BatchState(
        done=(None,) * spec.n,
        collage_time=None,
        collage_decoded=None,
        reissued=frozenset(),
        clock=0.0,
        audit=(),
    )


def _fill_from_collage(
    done: list[Complete | None], decoded: DecodedCollage, at_time: float
) -> list[Complete]:
    completions = []
    for i, slot in enumerate(decoded.slots):
        if done[i] is None and slot is not None:
            c = Complete(i, Source.COLLAGE, at_time, slot.class_id)
            done[i] = c
            completions.append(c)
    return completions


def on_event(
    state: BatchState, config: ProtocolConfig, ev: ProtocolEvent
) -> tuple[BatchState, list[Action]]:
    """Apply one event; returns the new state and the actions it caused.

    Raises ProtocolError on time regression. Duplicate or late results are
    ignored (idempotent) and noted in the audit log.
    """
    if ev.time < state.clock:
        raise ProtocolError(f"event time {ev.time} precedes batch clock {state.clock}")
    t_d = config.straggler_deadline
    t_r = config.reissue_deadline

    done = list(state.done)
    collage_time = state.collage_time
    collage_decoded = state.collage_decoded
    reissued = state.reissued
    audit = list(state.audit)
    actions: list[Action] = []

    if isinstance(ev, SingleResult):
        if done[ev.request] is None:
            c = Complete(ev.request, Source.SINGLE, ev.time, ev.class_id)
            done[ev.request] = c
            actions.append(c)
        else:
            audit.append(f"late single result for request {ev.request} at t={ev.time}")

    elif isinstance(ev, CollageResult):
        if collage_time is not None:
            audit.append(f"duplicate collage result at t={ev.time}")
        else:
            collage_time = ev.time
            collage_decoded = decode_collage(list(ev.boxes), config.spec)
            if config.fill_policy is FillPolicy.FILL_ON_ARRIVAL:
                actions.extend(_fill_from_collage(done, collage_decoded, ev.time))
            elif ev.time >= t_d:
                # arrival is itself past the deadline: max(T_d, arrival) == arrival
                actions.extend(_fill_from_collage(done, collage_decoded, ev.time))
            # else hold until a deadline tick

    elif isinstance(ev, DeadlineTick):
        if (
            ev.time >= t_d
            and collage_decoded is not None
            and config.fill_policy is FillPolicy.FILL_AFTER_DEADLINE
        ):
            actions.extend(_fill_from_collage(done, collage_decoded, max(t_d, collage_time)))
        if ev.time >= t_r:
            new_reissues = [i for i, c in enumerate(done) if c is None and i not in reissued]
            if new_reissues:
                reissued = reissued | frozenset(new_reissues)
                actions.extend(IssueReissue(i) for i in new_reissues)

    elif isinstance(ev, ReissueResult):
        if done[ev.request] is None:
            c = Complete(ev.request, Source.REISSUE, ev.time, ev.class_id)
            done[ev.request] = c
            actions.append(c)
        else:
            audit.append(f"late reissue result for request {ev.request} at t={ev.time}")

    else:
        raise TypeError(f"unknown event {ev!r}")

    new_state = BatchState(
        done=tuple(done),
        collage_time=collage_time,
        collage_decoded=collage_decoded,
        reissued=reissued,
        clock=ev.time,
        audit=tuple(audit),
    )
    return new_state, actions


# -- replay helpers ----------------------------------------------------------


@dataclass
class BatchReplay:
    state: BatchState
    actions: list[Action]

    @property
    def completions(self) -> tuple[Complete | None, ...]:
        return self.state.done


def run_batch(
    events: list[ProtocolEvent],
    config: ProtocolConfig,
    reissue_responder: Callable[[int], tuple[float, int]] | None = None,
) -> BatchReplay:
    """Replay events in time order (ties per event_sort_key) through on_event.

    When ``reissue_responder`` is given, every IssueReissue(i) action schedules
    a ReissueResult at ``reissue_responder(i) -> (time, class_id)``.
    """
    heap: list[tuple[float, int, int, ProtocolEvent]] = []
    seq = 0
    for ev in events:
        t, rank = event_sort_key(ev)
        heapq.heappush(heap, (t, rank, seq, ev))
        seq += 1

    state = new_batch_state(config.spec)
    all_actions: list[Action] = []
    while heap:
        _, _, _, ev = heapq.heappop(heap)
        state, actions = on_event(state, config, ev)
        all_actions.extend(actions)
        for act in actions:
            if isinstance(act, IssueReissue) and reissue_responder is not None:
                t_result, class_id = reissue_responder(act.request)
                rev = ReissueResult(act.request, t_result, class_id)
                t, rank = event_sort_key(rev)
                heapq.heappush(heap, (t, rank, seq, rev))
                seq += 1
    return BatchReplay(state=state, actions=all_actions)


def replay_event_log(
    events: list[ProtocolEvent], config: ProtocolConfig
) -> BatchReplay:
    """Feed an already-ordered recorded event log through a fresh state machine."""
    state = new_batch_state(config.spec)
    all_actions: list[Action] = []
    for ev in events:
        state, actions = on_event(state, config, ev)
        all_actions.extend(actions)
    return BatchReplay(state=state, actions=all_actions)


def completion_oracle(
    t_singles: list[float],
    t_collage: float,
    decoded_mask: list[bool],
    reissue_latencies: list[float],
    config: ProtocolConfig,
) -> list[tuple[float, Source]]:
    """Closed-form per-request (completion time, source) for one batch.

    ``t_singles[i]`` / ``t_collage`` are arrival times (math.inf = never);
    ``decoded_mask[i]`` says whether the collage decoded a prediction for
    slot i; ``reissue_latencies[i]`` is the duration a reissue would take, so
    a reissue issued at T_r completes at T_r + reissue_latencies[i].

    t_i = min(single, collage path, reissue path) with the collage path
    max(T_d, t_collage) under FILL_AFTER_DEADLINE (t_collage under
    FILL_ON_ARRIVAL) when slot i decoded, and the reissue path defined only
    when both other paths exceed T_r. Exact ties prefer
    SINGLE > COLLAGE > REISSUE.
    """
    n = config.spec.n
    if not (len(t_singles) == len(decoded_mask) == len(reissue_latencies) == n):
        raise ValueError("oracle inputs must all have length n")
    t_d = config.straggler_deadline
    t_r = config.reissue_deadline
    out = []
    for i in range(n):
        t_s = t_singles[i]
        if decoded_mask[i]:
            if config.fill_policy is FillPolicy.FILL_ON_ARRIVAL:
                c = t_collage
            else:
                c = max(t_d, t_collage)
        else:
            c = float("inf")
        r = t_r + reissue_latencies[i] if min(t_s, c) > t_r else float("inf")
        t = min(t_s, c, r)
        if t_s == t:
            source = Source.SINGLE
        elif c == t:
            source = Source.COLLAGE
        else:
            source = Source.REISSUE
        out.append((t, source))
    return out


# -- event (de)serialization for recorded logs --------------------------------


def event_to_dict(ev: ProtocolEvent) -> dict:
    if isinstance(ev, SingleResult):
        return {"kind": "single_result", "request": ev.request, "time": ev.time, "class_id": ev.class_id}
    if isinstance(ev, CollageResult):
        return {
            "kind": "collage_result",
            "time": ev.time,
            "boxes": [
                {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h, "class_id": b.class_id, "confidence": b.confidence}
                for b in ev.boxes
            ],
        }
    if isinstance(ev, DeadlineTick):
        return {"kind": "deadline_tick", "time": ev.time}
    if isinstance(ev, ReissueResult):
        return {"kind": "reissue_result", "request": ev.request, "time": ev.time, "class_id": ev.class_id}
    raise TypeError(f"unknown event {ev!r}")


def event_from_dict(obj: dict) -> ProtocolEvent:
    kind = obj.get("kind")
    if kind == "single_result":
        return SingleResult(int(obj["request"]), float(obj["time"]), int(obj["class_id"]))
    if kind == "collage_result":
        boxes = tuple(
            DetectionBox(
                cx=float(b["cx"]),
                cy=float(b["cy"]),
                w=float(b["w"]),
                h=float(b["h"]),
                class_id=int(b["class_id"]),
                confidence=float(b["confidence"]),
            )
            for b in obj["boxes"]
        )
        return CollageResult(float(obj["time"]), boxes)
    if kind == "deadline_tick":
        return DeadlineTick(float(obj["time"]))
    if kind == "reissue_result":
        return ReissueResult(int(obj["request"]), float(obj["time"]), int(obj["class_id"]))
    raise ValueError(f"unknown event kind {kind!r}")
