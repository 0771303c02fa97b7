"""Walkthrough: one batch through the recovery state machine, step by step.

Nine single-image workers race a collage backup. Worker 7 straggles; watch
the deadline tick fill its slot from the decoded collage, and compare the
event-driven result with the closed-form completion oracle.

    python demos/02_straggler_recovery.py
"""

import math

from collagecode import (
    CollageResult,
    DeadlineTick,
    GridSpec,
    ProtocolConfig,
    SingleResult,
    completion_oracle,
    new_batch_state,
    on_event,
)
from collagecode.decoder import decode_collage
from collagecode.models import MockModelParams, mock_collage_boxes
from collagecode.rng import Prng

spec = GridSpec(3)
config = ProtocolConfig(spec, straggler_deadline=20.0, reissue_deadline=60.0)
print(f"deadlines: straggle at {config.straggler_deadline} ms, reissue at {config.reissue_deadline} ms")

# worker 7 never answers; everyone else is quick
t_singles = [4.1, 5.0, 3.7, 6.2, 4.8, 5.5, 4.0, math.inf, 5.9]
truths = list(range(9))
params = MockModelParams(num_classes=10, acc_single=1.0, acc_collage=1.0)
boxes = mock_collage_boxes(truths, params, spec, Prng(3))
t_collage = 9.0

events = [
    SingleResult(i, t, 100 + i) for i, t in enumerate(t_singles) if t != math.inf
]
events.append(CollageResult(t_collage, tuple(boxes)))
events.append(DeadlineTick(config.straggler_deadline))
events.append(DeadlineTick(config.reissue_deadline))
events.sort(key=lambda ev: ev.time)

state = new_batch_state(spec)
for ev in events:
    state, actions = on_event(state, config, ev)
    for act in actions:
        print(f"t={ev.time:>5.1f}  {type(ev).__name__:<14} -> {act}")

print("\nper-request outcome:")
for i, c in enumerate(state.done):
    print(f"  request {i}: {c.source.value:<8} t={c.time:>5.1f}  class={c.class_id}")

oracle = completion_oracle(
    t_singles, t_collage, [True] * 9, [1.0] * 9, config
)
agree = all(
    (c.time, c.source) == o for c, o in zip(state.done, oracle)
)
print(f"\nclosed-form oracle agrees: {agree}")
