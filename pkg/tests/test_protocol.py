import math

import pytest

from collagecode.errors import ProtocolError
from collagecode.geometry import GridSpec
from collagecode.protocol import (
    CollageResult,
    Complete,
    DeadlineTick,
    FillPolicy,
    IssueReissue,
    ProtocolConfig,
    ReissueResult,
    SingleResult,
    Source,
    completion_oracle,
    new_batch_state,
    on_event,
    run_batch,
)
from collagecode.rng import Prng

from helpers import (
    INF,
    centered_box,
    completions_per_request,
    random_scenario,
    replay_scenario,
    scenario_boxes,
)

CFG9 = ProtocolConfig(GridSpec(3), straggler_deadline=10.0, reissue_deadline=30.0)


def full_boxes(spec):
    return tuple(centered_box(spec, i, class_id=i) for i in range(spec.n))


# -- config and event plumbing ---------------------------------------------------


def test_config_requires_ordered_deadlines():
    with pytest.raises(ValueError):
        ProtocolConfig(GridSpec(2), 10.0, 10.0)
    with pytest.raises(ValueError):
        ProtocolConfig(GridSpec(2), 0.0, 10.0)


def test_time_regression_raises():
    state = new_batch_state(CFG9.spec)
    state, _ = on_event(state, CFG9, SingleResult(0, 5.0, 1))
    with pytest.raises(ProtocolError):
        on_event(state, CFG9, SingleResult(1, 4.0, 1))


def test_duplicate_single_is_ignored():
    state = new_batch_state(CFG9.spec)
    state, first = on_event(state, CFG9, SingleResult(0, 1.0, 7))
    state, second = on_event(state, CFG9, SingleResult(0, 2.0, 8))
    assert [a for a in first if isinstance(a, Complete)]
    assert second == []
    assert state.done[0].class_id == 7
    assert state.done[0].time == 1.0
    assert any("late single" in note for note in state.audit)


# -- spec scenarios ---------------------------------------------------------------


def test_all_singles_beat_deadline_collage_discarded():
    spec = CFG9.spec
    events = [SingleResult(i, 1.0 + 0.1 * i, 100 + i) for i in range(spec.n)]
    events.append(CollageResult(8.0, full_boxes(spec)))
    events.append(DeadlineTick(10.0))
    events.append(DeadlineTick(30.0))
    replay = run_batch(events, CFG9)
    assert all(c.source is Source.SINGLE for c in replay.completions)
    assert [c.class_id for c in replay.completions] == [100 + i for i in range(spec.n)]
    assert completions_per_request(replay.actions, spec.n) == [1] * spec.n


def test_straggler_completes_exactly_at_deadline_from_collage():
    spec = CFG9.spec
    events = [SingleResult(i, 2.0, 100 + i) for i in range(spec.n) if i != 7]
    events.append(CollageResult(0.8 * CFG9.straggler_deadline, full_boxes(spec)))
    events.append(DeadlineTick(CFG9.straggler_deadline))
    events.append(DeadlineTick(CFG9.reissue_deadline))
    replay = run_batch(events, CFG9)
    seven = replay.completions[7]
    assert seven.source is Source.COLLAGE
    assert seven.time == CFG9.straggler_deadline
    assert seven.class_id == 7
    for i in range(spec.n):
        if i != 7:
            assert replay.completions[i].source is Source.SINGLE


def test_missing_single_and_missing_slot_reissues():
    spec = CFG9.spec
    boxes = tuple(centered_box(spec, i, class_id=i) for i in range(spec.n) if i != 3)
    events = [SingleResult(i, 2.0, 100 + i) for i in range(spec.n) if i != 3]
    events.append(CollageResult(5.0, boxes))
    events.append(DeadlineTick(10.0))
    events.append(DeadlineTick(30.0))
    replay = run_batch(events, CFG9, reissue_responder=lambda i: (34.5, 200 + i))
    assert any(isinstance(a, IssueReissue) and a.request == 3 for a in replay.actions)
    three = replay.completions[3]
    assert (three.source, three.time, three.class_id) == (Source.REISSUE, 34.5, 203)


def test_fill_on_arrival_completes_at_collage_time():
    config = ProtocolConfig(GridSpec(2), 10.0, 30.0, FillPolicy.FILL_ON_ARRIVAL)
    events = [
        SingleResult(0, 1.0, 100),
        CollageResult(4.0, full_boxes(config.spec)),
        DeadlineTick(10.0),
        DeadlineTick(30.0),
    ]
    replay = run_batch(events, config)
    assert replay.completions[0].source is Source.SINGLE
    for i in (1, 2, 3):
        assert replay.completions[i].source is Source.COLLAGE
        assert replay.completions[i].time == 4.0


def test_fill_after_deadline_holds_until_tick():
    config = ProtocolConfig(GridSpec(2), 10.0, 30.0)
    state = new_batch_state(config.spec)
    state, actions = on_event(state, config, CollageResult(4.0, full_boxes(config.spec)))
    assert actions == []  # held: arrival precedes the deadline
    state, actions = on_event(state, config, DeadlineTick(10.0))
    completes = [a for a in actions if isinstance(a, Complete)]
    assert len(completes) == 4
    assert all(c.time == 10.0 for c in completes)  # max(T_d, arrival)


def test_collage_arriving_after_deadline_fills_at_arrival():
    config = ProtocolConfig(GridSpec(2), 10.0, 30.0)
    state = new_batch_state(config.spec)
    state, _ = on_event(state, config, DeadlineTick(10.0))
    state, actions = on_event(state, config, CollageResult(17.0, full_boxes(config.spec)))
    completes = [a for a in actions if isinstance(a, Complete)]
    assert len(completes) == 4
    assert all(c.time == 17.0 for c in completes)


def test_late_single_after_collage_fill_is_audited_not_answered():
    config = ProtocolConfig(GridSpec(2), 10.0, 30.0)
    events = [
        CollageResult(2.0, full_boxes(config.spec)),
        DeadlineTick(10.0),
        SingleResult(1, 12.0, 999),
        DeadlineTick(30.0),
    ]
    replay = run_batch(events, config)
    assert replay.completions[1].source is Source.COLLAGE
    assert replay.completions[1].class_id == 1
    assert any("late single" in note for note in replay.state.audit)


def test_reissue_issued_once_across_repeated_ticks():
    config = ProtocolConfig(GridSpec(2), 10.0, 30.0)
    events = [DeadlineTick(10.0), DeadlineTick(30.0), DeadlineTick(31.0), DeadlineTick(40.0)]
    replay = run_batch(events, config)
    reissues = [a for a in replay.actions if isinstance(a, IssueReissue)]
    assert sorted(a.request for a in reissues) == [0, 1, 2, 3]


# -- completion oracle examples ---------------------------------------------------


def test_oracle_all_singles():
    config = ProtocolConfig(GridSpec(2), 5.0, 10.0)
    out = completion_oracle([1.0] * 4, INF, [True] * 4, [1.0] * 4, config)
    assert out == [(1.0, Source.SINGLE)] * 4


def test_oracle_collage_fill_at_deadline():
    config = ProtocolConfig(GridSpec(2), 5.0, 10.0)
    out = completion_oracle([INF, 1.0, 1.0, 1.0], 2.0, [True] * 4, [1.0] * 4, config)
    assert out[0] == (5.0, Source.COLLAGE)  # max(T_d, t_collage)


def test_oracle_reissue_path():
    config = ProtocolConfig(GridSpec(2), 5.0, 10.0)
    out = completion_oracle(
        [INF, 1.0, 1.0, 1.0], INF, [False, True, True, True], [3.0, 1.0, 1.0, 1.0], config
    )
    assert out[0] == (13.0, Source.REISSUE)  # T_r + duration


def test_oracle_tie_priority():
    config = ProtocolConfig(GridSpec(2), 5.0, 10.0)
    # single arrives exactly at the deadline where the collage fill lands
    out = completion_oracle([5.0, 1.0, 1.0, 1.0], 2.0, [True] * 4, [1.0] * 4, config)
    assert out[0] == (5.0, Source.SINGLE)


def test_oracle_input_length_checked():
    config = ProtocolConfig(GridSpec(2), 5.0, 10.0)
    with pytest.raises(ValueError):
        completion_oracle([1.0] * 3, INF, [True] * 4, [1.0] * 4, config)


# -- oracle equivalence + properties ----------------------------------------------


@pytest.mark.parametrize("policy", list(FillPolicy))
def test_replay_matches_oracle_on_random_scenarios(policy):
    p = Prng(314159 if policy is FillPolicy.FILL_AFTER_DEADLINE else 271828)
    for k in range(1500):
        sc = random_scenario(p, policy)
        extra = sc.config.straggler_deadline * 1.7 if k % 3 == 0 else None
        completions, actions = replay_scenario(sc, extra_tick=extra)
        expected = completion_oracle(
            sc.t_singles, sc.t_collage, sc.mask, sc.reissue_durs, sc.config
        )
        got = [(c.time, c.source) for c in completions]
        assert got == expected
        assert completions_per_request(actions, sc.config.spec.n) == [1] * sc.config.spec.n


def test_monotonicity_earlier_single_never_later_completion():
    p = Prng(604)
    for _ in range(400):
        sc = random_scenario(p, FillPolicy.FILL_AFTER_DEADLINE)
        base = completion_oracle(sc.t_singles, sc.t_collage, sc.mask, sc.reissue_durs, sc.config)
        i = int(p.next_u64() % sc.config.spec.n)
        if sc.t_singles[i] == INF:
            earlier = sc.config.reissue_deadline * p.next_float()
        else:
            earlier = sc.t_singles[i] * p.next_float()
        moved = list(sc.t_singles)
        moved[i] = earlier
        after = completion_oracle(moved, sc.t_collage, sc.mask, sc.reissue_durs, sc.config)
        assert after[i][0] <= base[i][0]


def test_single_before_deadline_always_wins_under_fill_after_deadline():
    p = Prng(77)
    for _ in range(400):
        sc = random_scenario(p, FillPolicy.FILL_AFTER_DEADLINE)
        completions, _ = replay_scenario(sc)
        for i, c in enumerate(completions):
            if sc.t_singles[i] < sc.config.straggler_deadline:
                assert c.source is Source.SINGLE


def test_collage_completion_never_precedes_arrival_or_deadline():
    p = Prng(88)
    for _ in range(300):
        sc = random_scenario(p, FillPolicy.FILL_AFTER_DEADLINE)
        completions, _ = replay_scenario(sc)
        for c in completions:
            if c.source is Source.COLLAGE:
                assert c.time >= sc.config.straggler_deadline
                assert c.time >= sc.t_collage


def test_run_batch_without_responder_leaves_reissues_pending():
    config = ProtocolConfig(GridSpec(2), 10.0, 30.0)
    replay = run_batch([DeadlineTick(10.0), DeadlineTick(30.0)], config)
    assert replay.completions == (None,) * 4
    assert len([a for a in replay.actions if isinstance(a, IssueReissue)]) == 4


def test_scenario_boxes_reproduce_mask():
    from collagecode.decoder import decode_collage

    p = Prng(5)
    for _ in range(50):
        sc = random_scenario(p, FillPolicy.FILL_AFTER_DEADLINE)
        decoded = decode_collage(scenario_boxes(sc), sc.config.spec)
        assert list(decoded.decoded_mask()) == sc.mask
