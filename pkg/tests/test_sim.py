import numpy as np
import pytest

from alphabpp import sim
from alphabpp.datagen import make_record
from alphabpp.geometry import BinSpec, ItemDims, PackAction
from alphabpp.policy import HeuristicPolicy, RandomPolicy

CFG = sim.SimConfig()
SEQ5 = [ItemDims(2, 2, 2), ItemDims(3, 3, 3), ItemDims(5, 5, 5), ItemDims(2, 3, 4), ItemDims(4, 4, 2)]


def test_reset_single_item_buffer():
    s = sim.reset(SEQ5, CFG)
    assert s.buffer == (SEQ5[0],)
    assert s.cursor == 1
    assert not s.terminal
    assert sim.utilization(s, CFG) == 0.0


def test_reset_pads_with_sentinels():
    cfg = sim.SimConfig(buffer_size=3)
    s = sim.reset(SEQ5[:2], cfg)
    assert s.buffer == (SEQ5[0], SEQ5[1], ItemDims(0, 0, 0))
    assert s.cursor == 2


def test_reset_empty_sequence_is_terminal():
    assert sim.reset([], CFG).terminal


def test_reset_rejects_oversize_item():
    with pytest.raises(sim.InvalidSequenceError):
        sim.reset([ItemDims(11, 2, 2)], CFG)


def test_step_reward_and_termination():
    s = sim.reset([ItemDims(2, 2, 2)], CFG)
    out = sim.step(s, PackAction(0, 0, 0, 0), [ItemDims(2, 2, 2)], CFG)
    assert out.reward == pytest.approx(0.08, abs=0)
    assert out.next_state.buffer == (ItemDims(0, 0, 0),)
    assert out.terminal and out.next_state.terminal
    with pytest.raises(sim.TerminalStateError):
        sim.step(out.next_state, 0, [], CFG)


def test_step_replaces_only_the_used_slot():
    cfg = sim.SimConfig(buffer_size=3)
    seq = SEQ5
    s = sim.reset(seq, cfg)
    out = sim.step(s, PackAction(1, 0, 0, 0), seq, cfg)
    assert out.next_state.buffer == (seq[0], seq[3], seq[2])
    assert out.next_state.cursor == 4
    assert out.placed_item == seq[1]


def test_illegal_action_is_an_error():
    s = sim.reset(SEQ5, CFG)
    with pytest.raises(sim.IllegalActionError):
        sim.step(s, PackAction(0, 0, 9, 9), SEQ5, CFG)
    with pytest.raises(sim.IllegalActionError):
        sim.step(s, PackAction(0, 1, 0, 0), SEQ5, CFG)


def test_legal_actions_counts():
    s = sim.reset([ItemDims(2, 2, 2)], CFG)
    assert len(sim.legal_actions(s, CFG)) == 81
    cfg2 = sim.SimConfig(buffer_size=2)
    s2 = sim.reset([ItemDims(2, 2, 2)], cfg2)
    acts = sim.legal_actions(s2, cfg2)
    assert len(acts) == 81 and all(a.slot == 0 for a in acts)
    assert sim.legal_actions(sim.reset([], CFG), CFG) == []


def test_utilization_single_item():
    s = sim.reset([ItemDims(5, 5, 5)], CFG)
    s = sim.step(s, 0, [ItemDims(5, 5, 5)], CFG).next_state
    assert sim.utilization(s, CFG) == 0.125


def test_buffer_continues_when_one_item_fits_nowhere():
    cfg = sim.SimConfig(bin=BinSpec(4, 4, 4), buffer_size=2)
    seq = [ItemDims(4, 4, 3), ItemDims(4, 4, 2), ItemDims(1, 1, 1)]
    s = sim.reset(seq, cfg)
    s = sim.step(s, sim.legal_action_indices(s)[0], seq, cfg).next_state
    assert s.buffer == (seq[2], seq[1])
    # slot 1 (4x4x2) no longer fits, but slot 0 still does
    assert not s.mask[:, 1].any() and s.mask[:, 0].any()
    assert not s.terminal


def test_episode_invariants_and_determinism():
    rec = make_record("rs", 0, 99)
    cfg = sim.SimConfig(buffer_size=3, orientations=1)
    r1 = sim.run_episode(rec.items, RandomPolicy(), cfg, np.random.default_rng(5))
    r2 = sim.run_episode(rec.items, RandomPolicy(), cfg, np.random.default_rng(5))
    assert [o.placed_at for o in r1.steps] == [o.placed_at for o in r2.steps]
    volume = 0
    for o in r1.steps:
        volume += o.placed_item.volume()
        st = o.next_state
        assert len(st.buffer) == 3
        assert st.packed_volume == volume
        assert st.cumulative_reward == cfg.reward_scale * volume / cfg.bin.volume()
    assert 0 < r1.utilization <= 1
    assert r1.total_reward == pytest.approx(sum(r1.rewards))


def test_heuristic_on_cut1_utilization_bounds():
    rec = make_record("cut1", 3, 1234)
    pol = HeuristicPolicy()
    res = sim.run_episode(rec.items, lambda s, c, r: pol.greedy(s, c), CFG)
    assert 0 < res.utilization <= 1


def test_replay_of_provenance_fills_bin():
    for kind in ("cut1", "cut2"):
        rec = make_record(kind, 0, 42)
        s = sim.reset(rec.items, CFG)
        for origin in rec.provenance:
            s = sim.step(s, PackAction(0, 0, origin[0], origin[1]), rec.items, CFG).next_state
        assert sim.utilization(s, CFG) == 1.0
        assert s.packed_count == len(rec.items)
        assert (s.heightmap == 10).all()


def test_discounted_return():
    assert sim.discounted_return([1.0, 1.0, 1.0], 1.0) == 3.0
    assert sim.discounted_return([1.0, 1.0], 0.5) == 1.5


def test_trace_roundtrip(tmp_path):
    rec = make_record("rs", 1, 7)
    res = sim.run_episode(rec.items, RandomPolicy(), CFG, np.random.default_rng(1))
    rows = sim.trace_records(res, CFG)
    path = tmp_path / "t.jsonl"
    sim.write_trace(path, rows)
    header, steps = sim.read_trace(path)
    assert header["bin"] == [10, 10, 10]
    assert len(steps) == len(res.steps)
    assert list(steps[0])[:6] == ["step", "digest", "slot", "orientation", "x", "y"]
    np.testing.assert_array_equal(np.array(steps[-1]["heightmap"]), res.final_state.heightmap)
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"schema": "nope"}\n')
    with pytest.raises(sim.TraceParseError):
        sim.read_trace(bad)
