import numpy as np
import pytest

import gen
from glsim import (CapacityError, RunConfig, compute_stats, plan_segments,
                   run, segment_run, simulate, simulate_gate_window)


def stats_equal(a, b):
    return (a.net_names == b.net_names
            and np.array_equal(a.t0, b.t0) and np.array_equal(a.t1, b.t1)
            and np.array_equal(a.tc, b.tc) and np.array_equal(a.ig, b.ig)
            and a.duration == b.duration and a.windows == b.windows)


class TestRun:
    def test_degenerate_schedule_matches_direct_kernel(self):
        inst = gen.make_instance(42, num_gates=1, num_pis=4, windows=1)
        arena, _ = run(inst.levelized, inst.stimuli, inst.delays, RunConfig(workers=1))
        nl = inst.netlist
        gate = nl.gates[0]
        st = simulate_gate_window(
            gate.cell,
            [inst.stimuli.window_waveform(n, 0) for n in gate.pin_nets],
            inst.delays.interconnect[0], inst.delays.tables[0],
            int(inst.boundaries[1]))
        assert arena.waveform(0, 0).times.tolist() == st.out_times

    def test_worker_counts_byte_identical(self):
        inst = gen.make_instance(43, num_gates=250, windows=6)
        arenas = []
        for workers in (1, 2, 8):
            arena, _ = run(inst.levelized, inst.stimuli, inst.delays,
                           RunConfig(workers=workers))
            arenas.append(arena)
        for arena in arenas[1:]:
            assert np.array_equal(arena.buf, arenas[0].buf)
            assert np.array_equal(arena.counts, arenas[0].counts)

    def test_level_barrier_ordering(self):
        inst = gen.make_instance(44, num_gates=100, windows=4)
        trace = []
        run(inst.levelized, inst.stimuli, inst.delays,
            RunConfig(workers=4, cycle_parallelism=2), task_trace=trace)
        levels = [t[0] for t in trace]
        # two monotone ramps (counting pass, then store pass), nothing interleaved
        resets = sum(1 for i in range(1, len(levels)) if levels[i] < levels[i - 1])
        assert resets == 1
        split = next(i for i in range(1, len(levels)) if levels[i] < levels[i - 1])
        assert levels[:split] == sorted(levels[:split])
        assert levels[split:] == sorted(levels[split:])

    def test_capacity_error_propagates(self):
        inst = gen.make_instance(45, num_gates=100, windows=1)
        with pytest.raises(CapacityError):
            run(inst.levelized, inst.stimuli, inst.delays, RunConfig(mem_cap=8))


class TestPlanSegments:
    def test_fits_all_is_identity(self):
        tc = np.ones((3, 4), dtype=np.int64)
        assert plan_segments(tc, mem_cap=10_000) == [(0, 4)]

    def test_halving(self):
        tc = np.ones((1, 4), dtype=np.int64)  # 8 bytes per window
        assert plan_segments(tc, mem_cap=16) == [(0, 2), (2, 4)]

    def test_single_window_too_big(self):
        tc = np.array([[3, 1]], dtype=np.int64)
        with pytest.raises(CapacityError, match="alone"):
            plan_segments(tc, mem_cap=16)

    def test_uncapped(self):
        tc = np.ones((1, 4), dtype=np.int64)
        assert plan_segments(tc, mem_cap=None) == [(0, 4)]


class TestSegmentRun:
    def test_merged_stats_equal_unsegmented(self):
        inst = gen.uniform_window_instance(46, windows=4)
        arena, _ = run(inst.levelized, inst.stimuli, inst.delays, RunConfig(workers=1))
        full = compute_stats(arena, inst.stimuli)
        cap = arena.nbytes // 2 + 8
        seg, diag = segment_run(inst.levelized, inst.stimuli, inst.delays,
                                RunConfig(workers=2, mem_cap=cap))
        assert len(diag["segments"]) == 2
        assert stats_equal(full, seg)

    def test_merged_tc_is_sum_of_segments(self):
        inst = gen.uniform_window_instance(47, windows=4)
        per_segment = []
        cfg = RunConfig(workers=1, mem_cap=None)
        stats, diag = segment_run(inst.levelized, inst.stimuli, inst.delays, cfg,
                                  segment_cb=lambda a: per_segment.append(
                                      compute_stats(a, inst.stimuli)))
        assert len(per_segment) == 1  # uncapped: one segment (identity)
        total = per_segment[0]
        assert np.array_equal(stats.tc, total.tc)

    def test_simulate_falls_back_to_segments(self):
        inst = gen.uniform_window_instance(48, windows=4)
        arena, _ = run(inst.levelized, inst.stimuli, inst.delays, RunConfig(workers=1))
        full = compute_stats(arena, inst.stimuli)
        cap = arena.nbytes // 2 + 8
        stats, arena2, diag = simulate(inst.levelized, inst.stimuli, inst.delays,
                                       RunConfig(workers=1, mem_cap=cap))
        assert arena2 is None
        assert len(diag["segments"]) >= 2
        assert stats_equal(full, stats)

    def test_single_window_over_cap_unrecoverable(self):
        inst = gen.make_instance(49, num_gates=100, windows=1)
        with pytest.raises(CapacityError, match="single window"):
            simulate(inst.levelized, inst.stimuli, inst.delays,
                     RunConfig(workers=1, mem_cap=8))


class TestRunConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(cycle_parallelism=0)
        with pytest.raises(ValueError):
            RunConfig(pathpulse_pct=101)
        with pytest.raises(ValueError):
            RunConfig(workers=-1)

    def test_auto_workers(self):
        assert RunConfig(workers=0).resolved_workers >= 1
        assert RunConfig(workers=3).resolved_workers == 3
