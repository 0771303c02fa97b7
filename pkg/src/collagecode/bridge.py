"""Wire protocol for external model backends, and the live batch dispatcher.

Backends are child processes speaking newline-delimited JSON over
stdin/stdout, one object per line, UTF-8:

* request:  ``{"id": str, "kind": "single"|"collage", "image": str, "grid_s": int?}``
* response: ``{"id": str, "class_id": int?, "confidence": float?, "boxes": [...]?, "error": str?}``

``image`` is a filesystem path to a PPM file, or an inline payload prefixed
with ``base64:``. Unknown fields are ignored for forward compatibility.
``error`` and payload fields are mutually exclusive.

The dispatcher runs one reader thread per backend; all arrivals funnel into
one queue and are applied to the recovery state machine in observation
order, so live mode exercises exactly the code path the simulator does. A
crashed or silent backend is simply a worker that never responds — the
deadlines handle it.
"""

from __future__ import annotations

import json
import queue
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .codec import CollageLayout, compose_collage, read_ppm_file, write_ppm_file
from .errors import WireProtocolError
from .geometry import DetectionBox
from .protocol import (
    CollageResult,
    DeadlineTick,
    IssueReissue,
    ProtocolConfig,
    ProtocolEvent,
    ReissueResult,
    SingleResult,
    Source,
    new_batch_state,
    on_event,
    replay_event_log,
)


@dataclass(frozen=True)
class BridgeRequest:
    id: str
    kind: str  # "single" | "collage"
    image: str
    grid_s: int | None = None

    def __post_init__(self):
        if self.kind not in ("single", "collage"):
            raise ValueError(f"kind must be 'single' or 'collage', got {self.kind!r}")
        if self.kind == "collage":
            if self.grid_s is None or self.grid_s < 1:
                raise ValueError("collage requests need grid_s >= 1")
        elif self.grid_s is not None:
            raise ValueError("grid_s is only valid on collage requests")


@dataclass(frozen=True)
class BridgeResponse:
    id: str
    class_id: int | None = None
    confidence: float | None = None
    boxes: tuple[DetectionBox, ...] | None = None
    error: str | None = None

    def __post_init__(self):
        has_payload = self.class_id is not None or self.boxes is not None
        if self.error is not None and has_payload:
            raise ValueError("error and payload are mutually exclusive")


def encode_request(req: BridgeRequest) -> str:
    obj = {"id": req.id, "kind": req.kind, "image": req.image}
    if req.grid_s is not None:
        obj["grid_s"] = req.grid_s
    return json.dumps(obj)


def decode_request(line: str) -> BridgeRequest:
    obj = _parse_line(line)
    try:
        return BridgeRequest(
            id=str(obj["id"]),
            kind=str(obj["kind"]),
            image=str(obj["image"]),
            grid_s=int(obj["grid_s"]) if "grid_s" in obj else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise WireProtocolError(f"bad request ({e})", line) from e


def encode_response(resp: BridgeResponse) -> str:
    obj: dict = {"id": resp.id}
    if resp.error is not None:
        obj["error"] = resp.error
        return json.dumps(obj)
    if resp.class_id is not None:
        obj["class_id"] = resp.class_id
        if resp.confidence is not None:
            obj["confidence"] = resp.confidence
    if resp.boxes is not None:
        obj["boxes"] = [
            {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h, "class_id": b.class_id, "confidence": b.confidence}
            for b in resp.boxes
        ]
    return json.dumps(obj)


def _parse_line(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise WireProtocolError(f"not valid JSON ({e.msg})", line) from None
    if not isinstance(obj, dict):
        raise WireProtocolError("expected a JSON object", line)
    return obj


def decode_response(line: str) -> BridgeResponse:
    obj = _parse_line(line)
    if "id" not in obj:
        raise WireProtocolError("response missing id", line)
    error = obj.get("error")
    boxes = None
    if obj.get("boxes") is not None:
        try:
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
        except (KeyError, TypeError, ValueError) as e:
            raise WireProtocolError(f"bad box in response ({e})", line) from e
    try:
        return BridgeResponse(
            id=str(obj["id"]),
            class_id=int(obj["class_id"]) if obj.get("class_id") is not None else None,
            confidence=float(obj["confidence"]) if obj.get("confidence") is not None else None,
            boxes=boxes,
            error=str(error) if error is not None else None,
        )
    except (TypeError, ValueError) as e:
        raise WireProtocolError(f"bad response ({e})", line) from e


# -- live dispatch -------------------------------------------------------------


class BackendClient:
    """One child-process backend: one writer (caller thread), one reader thread."""

    def __init__(self, cmd: list[str], name: str, arrivals: "queue.Queue"):
        self.name = name
        self._proc = subprocess.Popen(
            cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._arrivals = arrivals
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                resp = decode_response(line)
            except WireProtocolError as e:
                self._arrivals.put(("bad_line", self.name, str(e)))
                continue
            self._arrivals.put(("response", self.name, resp))
        # EOF: the backend is gone; deadlines cover the silence

    def send(self, req: BridgeRequest) -> None:
        try:
            assert self._proc.stdin is not None
            self._proc.stdin.write(encode_request(req) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            pass  # crashed backend == never responds

    def close(self) -> None:
        try:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.terminate()
            self._proc.wait(timeout=2)
        except (subprocess.TimeoutExpired, OSError):
            self._proc.kill()


@dataclass
class LiveCompletion:
    request: int
    source: Source | None
    class_id: int | None
    time_ms: float | None
    error: str | None = None


@dataclass
class LiveResult:
    completions: list[LiveCompletion]
    events: list[ProtocolEvent]  # in applied order; replayable
    replay_matches: bool  # self-check: fresh replay of the log reproduces sources+classes
    backend_errors: list[str] = field(default_factory=list)


def dispatch_live(
    image_paths: list[str],
    single_cmds: list[list[str]],
    collage_cmd: list[str],
    config: ProtocolConfig,
    cell_w: int = 64,
    cell_h: int = 64,
    reissue_timeout: float | None = None,
    collage_image_out: str | None = None,
    clock=time.monotonic,
) -> LiveResult:
    """Issue n single requests + 1 collage request and recover stragglers live.

    ``reissue_timeout`` (ms from dispatch, default 2 * T_r) bounds the wait
    for reissue results; requests still pending then fail with an error
    status. Reissues are routed to the neighboring single backend
    ((i+1) mod n) so a stalled worker's retry can land elsewhere.
    """
    spec = config.spec
    n = spec.n
    if len(image_paths) != n:
        raise ValueError(f"expected {n} images for a {spec.s}x{spec.s} batch, got {len(image_paths)}")
    if len(single_cmds) != n:
        raise ValueError(f"expected {n} single backend commands, got {len(single_cmds)}")
    if reissue_timeout is None:
        reissue_timeout = 2.0 * config.reissue_deadline
    if reissue_timeout <= config.reissue_deadline:
        raise ValueError("reissue_timeout must exceed the reissue deadline")

    images = [read_ppm_file(p) for p in image_paths]
    collage_img = compose_collage(images, CollageLayout(spec, cell_w, cell_h))
    if collage_image_out is not None:
        collage_path = collage_image_out
        write_ppm_file(collage_path, collage_img)
        temp_collage = None
    else:
        temp_collage = tempfile.NamedTemporaryFile(suffix=".ppm", delete=False)
        temp_collage.close()
        collage_path = temp_collage.name
        write_ppm_file(collage_path, collage_img)

    arrivals: queue.Queue = queue.Queue()
    singles = []
    collage_client = None
    events: list[ProtocolEvent] = []
    backend_errors: list[str] = []
    try:
        singles = [BackendClient(cmd, f"single[{i}]", arrivals) for i, cmd in enumerate(single_cmds)]
        collage_client = BackendClient(collage_cmd, "collage", arrivals)

        outstanding: dict[str, tuple[str, int]] = {}  # id -> (role, request index)
        t0 = clock()
        for i, path in enumerate(image_paths):
            rid = f"s{i}"
            outstanding[rid] = ("single", i)
            singles[i].send(BridgeRequest(id=rid, kind="single", image=str(path)))
        outstanding["c"] = ("collage", -1)
        collage_client.send(BridgeRequest(id="c", kind="collage", image=str(collage_path), grid_s=spec.s))

        state = new_batch_state(spec)
        deadlines = [config.straggler_deadline, config.reissue_deadline]
        last_t = 0.0

        def now_ms() -> float:
            return (clock() - t0) * 1000.0

        def apply(ev: ProtocolEvent):
            nonlocal state, last_t
            state, actions = on_event(state, config, ev)
            events.append(ev)
            last_t = ev.time
            for act in actions:
                if isinstance(act, IssueReissue):
                    i = act.request
                    rid = f"r{i}"
                    outstanding[rid] = ("reissue", i)
                    singles[(i + 1) % n].send(
                        BridgeRequest(id=rid, kind="single", image=str(image_paths[i]))
                    )

        while not state.all_done:
            t = now_ms()
            if t >= reissue_timeout:
                break
            next_wake = deadlines[0] if deadlines else reissue_timeout
            timeout_s = max(0.0, (min(next_wake, reissue_timeout) - t) / 1000.0)
            try:
                item = arrivals.get(timeout=timeout_s)
            except queue.Empty:
                t = now_ms()
                while deadlines and t >= deadlines[0]:
                    deadlines.pop(0)
                    apply(DeadlineTick(max(t, last_t)))
                continue

            t = max(now_ms(), last_t)
            # fire any deadline that elapsed while we were blocked, before the arrival
            while deadlines and t >= deadlines[0]:
                deadlines.pop(0)
                apply(DeadlineTick(t))

            tag = item[0]
            if tag == "bad_line":
                backend_errors.append(f"{item[1]}: {item[2]}")
                continue
            _, name, resp = item
            if resp.id not in outstanding:
                backend_errors.append(f"{name}: response for unknown or finished id {resp.id!r}")
                continue
            role, i = outstanding.pop(resp.id)
            if resp.error is not None:
                backend_errors.append(f"{name}: request {resp.id} failed: {resp.error}")
                continue  # treated like a silent backend; deadlines recover
            if role == "single":
                if resp.class_id is None:
                    backend_errors.append(f"{name}: single response without class_id")
                    continue
                apply(SingleResult(i, t, resp.class_id))
            elif role == "reissue":
                if resp.class_id is None:
                    backend_errors.append(f"{name}: reissue response without class_id")
                    continue
                apply(ReissueResult(i, t, resp.class_id))
            else:  # collage
                apply(CollageResult(t, resp.boxes or ()))
    finally:
        for c in singles:
            c.close()
        if collage_client is not None:
            collage_client.close()
        if temp_collage is not None:
            Path(temp_collage.name).unlink(missing_ok=True)

    completions = []
    for i, done in enumerate(state.done):
        if done is None:
            completions.append(
                LiveCompletion(i, None, None, None, error="no result before reissue timeout")
            )
        else:
            completions.append(LiveCompletion(i, done.source, done.class_id, done.time))

    replay = replay_event_log(events, config)
    replay_matches = all(
        (a is None) == (b is None) and (a is None or (a.source, a.class_id) == (b.source, b.class_id))
        for a, b in zip(state.done, replay.completions)
    )
    return LiveResult(
        completions=completions,
        events=events,
        replay_matches=replay_matches,
        backend_errors=backend_errors,
    )


def events_to_jsonl(events: list[ProtocolEvent]) -> str:
    from .protocol import event_to_dict

    return "".join(json.dumps(event_to_dict(ev)) + "\n" for ev in events)


def events_from_jsonl(text: str) -> list[ProtocolEvent]:
    from .protocol import event_from_dict

    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(event_from_dict(json.loads(line)))
        except (json.JSONDecodeError, ValueError, KeyError) as e:
            raise WireProtocolError(f"bad event log line {lineno} ({e})", line) from e
    return out
