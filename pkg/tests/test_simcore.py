import json

import numpy as np

import gen
from glsim import (EXHAUSTED, GateSimState, PinCursor, Waveform, emit_output,
                   levelize, next_event_time, parse_library, parse_netlist,
                   resolve_msi, simulate_gate_window, two_pass_simulate,
                   zero_delays, StimulusSet)
from glsim.oracle import compare_waveforms, oracle_simulate


def cursor(times, ic=0, initial=0):
    return PinCursor.from_waveform(Waveform(initial, times), ic)


class TestNextEventTime:
    def test_min_after_interconnect_shift(self):
        a = cursor([100], ic=10)
        b = cursor([105], ic=0)
        assert next_event_time([a, b]) == 105

    def test_interconnect_pulse_filtered(self):
        a = cursor([50, 52], ic=5)
        assert next_event_time([a]) is EXHAUSTED
        assert a.filtered == 1

    def test_all_exhausted(self):
        assert next_event_time([cursor([]), cursor([])]) is EXHAUSTED

    def test_width_equal_to_delay_survives(self):
        a = cursor([50, 55], ic=5)
        assert next_event_time([a]) == 55


class TestResolveMsi:
    def test_both_at_same_time(self):
        a = cursor([200])
        b = cursor([200])
        values, switching = resolve_msi([a, b], 200)
        assert switching == [0, 1]
        assert values == (1, 1)

    def test_singleton(self):
        a = cursor([200])
        b = cursor([300])
        _, switching = resolve_msi([a, b], 200)
        assert switching == [0]

    def test_interconnect_shift_creates_msi(self):
        # raw 190 with 10 fs of interconnect meets raw 200 with none
        a = cursor([190], ic=10)
        b = cursor([200], ic=0)
        t = next_event_time([a, b])
        assert t == 200
        _, switching = resolve_msi([a, b], t)
        assert switching == [0, 1]


class TestEmitOutput:
    def test_plain_emission(self):
        st = GateSimState(y=1)
        emit_output(st, 0, 10_000, 5_000, window_end=10**9)
        assert st.out_times == [15_000] and st.tc == 1

    def test_narrow_pulse_fully_cancelled(self):
        st = GateSimState(y=0)
        emit_output(st, 1, 100, 5_000, window_end=10**9)
        assert st.out_times == [5_100]
        emit_output(st, 0, 103, 5_000, window_end=10**9)
        assert st.out_times == [] and st.tc == 0
        assert st.filtered == 1
        assert st.y == 0  # back at the pre-pulse value

    def test_same_value_guard(self):
        st = GateSimState(y=0)
        emit_output(st, 0, 100, 5_000, window_end=10**9)
        assert st.tc == 0 and st.filtered == 0 and st.t_last is None

    def test_window_end_discard_keeps_logical_value(self):
        st = GateSimState(y=0)
        emit_output(st, 1, 90, 20, window_end=100)
        assert st.tc == 0 and st.discarded == 1 and st.y == 1

    def test_delay_collision_retracts(self):
        st = GateSimState(y=0)
        emit_output(st, 1, 100, 50, window_end=10**9)   # lands at 150
        emit_output(st, 0, 120, 0, window_end=10**9)    # lands at 120 <= 150
        assert st.out_times == [] and st.filtered == 1

    def test_pathpulse_percent_scales_threshold(self):
        st = GateSimState(y=0, pathpulse_pct=50)
        emit_output(st, 1, 0, 1000, window_end=10**9)   # lands at 1000
        emit_output(st, 0, 600, 1000, window_end=10**9)  # width 600 >= 500
        assert st.out_times == [1000, 1600] and st.filtered == 0


def single_gate_netlist(truth, k):
    lib = parse_library(json.dumps({"cells": [
        {"name": "X", "inputs": [f"I{i}" for i in range(k)], "output": "Z", "truth": truth}]}))
    doc = {"name": "one", "inputs": [f"p{i}" for i in range(k)], "outputs": ["z"],
           "gates": [{"name": "u", "cell": "X",
                      "pins": {**{f"I{i}": f"p{i}" for i in range(k)}, "Z": "z"}}]}
    nl = parse_netlist(json.dumps(doc), lib)
    return nl, levelize(nl)


class TestSimulateGateWindow:
    def test_delayless_and(self):
        nl, lv = single_gate_netlist("0001", 2)
        cell = nl.gates[0].cell
        st = simulate_gate_window(cell, [Waveform(0, [10]), Waveform(1, [])],
                                  [0, 0], zero_delays(nl).tables[0], window_end=100)
        assert st.out_times == [10]

    def test_xor_msi_double_toggle_no_event(self):
        nl, lv = single_gate_netlist("0110", 2)
        cell = nl.gates[0].cell
        d = zero_delays(nl)
        for p in range(2):
            d.tables[0][p][:] = [[7, 7], [7, 7]]
        st = simulate_gate_window(cell, [Waveform(0, [50]), Waveform(0, [50])],
                                  [0, 0], d.tables[0], window_end=1000)
        assert st.out_times == [] and st.tc == 0

    def test_count_mode_equals_store_mode(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            k = int(rng.integers(1, 5))
            truth = "".join(rng.choice(("0", "1"), size=1 << k))
            nl, lv = single_gate_netlist(truth, k)
            cell = nl.gates[0].cell
            d = zero_delays(nl)
            ic = []
            for p in range(k):
                d.tables[0][p][:, 0] = rng.integers(0, 500)
                d.tables[0][p][:, 1] = rng.integers(0, 500)
                ic.append(int(rng.integers(0, 50)))
            waves = [Waveform(int(rng.integers(0, 2)),
                              np.sort(rng.choice(np.arange(1, 5000), size=int(rng.integers(0, 30)),
                                                 replace=False)))
                     for _ in range(k)]
            a = simulate_gate_window(cell, waves, ic, d.tables[0], 5200, mode="store")
            b = simulate_gate_window(cell, waves, ic, d.tables[0], 5200, mode="count")
            assert a.tc == b.tc == len(a.out_times)

    def test_object_layer_matches_array_engine(self):
        rng = np.random.default_rng(17)
        for trial in range(60):
            k = int(rng.integers(1, 5))
            pct = (100, 100, 50, 75)[trial % 4]
            truth = "".join(rng.choice(("0", "1"), size=1 << k))
            nl, lv = single_gate_netlist(truth, k)
            cell = nl.gates[0].cell
            d = zero_delays(nl)
            for p in range(k):
                for r in range(1 << (k - 1)):
                    d.tables[0][p][r] = rng.integers(0, 800, size=2)
                d.interconnect[0][p] = int(rng.integers(0, 60))
            waves = {}
            for p in range(k):
                n = int(rng.integers(0, 40))
                times = np.sort(rng.choice(np.arange(1, 6000), size=n, replace=False))
                waves[f"p{p}"] = Waveform(int(rng.integers(0, 2)), times)
            stim = StimulusSet.build(waves, nl, [0, 6100])
            arena = two_pass_simulate(lv, stim, d, pathpulse_pct=pct)
            st = simulate_gate_window(cell, [waves[f"p{p}"] for p in range(k)],
                                      d.interconnect[0], d.tables[0], 6100,
                                      pathpulse_pct=pct)
            got = arena.waveform(0, 0)
            assert got.times.tolist() == st.out_times
            assert int(arena.filtered[0, 0]) == st.filtered
            assert int(arena.ic_filtered[0, 0]) == st.ic_filtered
            assert int(arena.discarded[0, 0]) == st.discarded

    def test_three_level_netlist_matches_oracle(self):
        inst = gen.make_instance(404, num_gates=20, num_pis=4, windows=2, max_levels=3)
        arena = two_pass_simulate(inst.levelized, inst.stimuli, inst.delays)
        for w in range(inst.stimuli.num_windows):
            waves = oracle_simulate(inst.levelized, inst.delays, inst.window_slices(w),
                                    int(inst.boundaries[w + 1]))
            assert compare_waveforms(arena, waves, w, inst.netlist) is None


class TestTwoPass:
    def test_empty_stimuli(self):
        nl, lv = single_gate_netlist("10", 1)
        stim = StimulusSet.build({"p0": Waveform(0, [])}, nl, [0, 100])
        arena = two_pass_simulate(lv, stim, zero_delays(nl))
        assert arena.buf.size == 0
        assert not arena.counts.any()

    def test_single_inverter_one_toggle(self):
        nl, lv = single_gate_netlist("10", 1)
        stim = StimulusSet.build({"p0": Waveform(0, [40])}, nl, [0, 100])
        arena = two_pass_simulate(lv, stim, zero_delays(nl))
        assert arena.caps[0, 0] == 1
        assert arena.waveform(0, 0) == Waveform(1, [40])

    def test_pass_counts_always_equal(self):
        inst = gen.make_instance(808, num_gates=150, windows=4)
        arena = two_pass_simulate(inst.levelized, inst.stimuli, inst.delays)
        assert np.array_equal(arena.counts, arena.pass1_counts)
        assert np.array_equal(arena.caps, arena.pass1_counts)  # full pulse rejection: peak == count

    def test_repeat_runs_byte_identical(self):
        inst = gen.make_instance(909, num_gates=120, windows=3)
        a = two_pass_simulate(inst.levelized, inst.stimuli, inst.delays)
        b = two_pass_simulate(inst.levelized, inst.stimuli, inst.delays)
        assert np.array_equal(a.buf, b.buf)
        assert np.array_equal(a.counts, b.counts)

    def test_monotone_and_parity(self):
        inst = gen.make_instance(303, num_gates=180, windows=4)
        arena = two_pass_simulate(inst.levelized, inst.stimuli, inst.delays)
        nl = inst.netlist
        for g in range(nl.num_gates):
            for w in range(inst.stimuli.num_windows):
                wf = arena.waveform(g, w)
                assert np.all(np.diff(wf.times) > 0)
                assert wf.final == wf.initial ^ (len(wf.times) & 1)

    def test_pathpulse_pct_matches_oracle(self):
        inst = gen.make_instance(606, num_gates=150, windows=3)
        arena = two_pass_simulate(inst.levelized, inst.stimuli, inst.delays,
                                  pathpulse_pct=50)
        for w in range(inst.stimuli.num_windows):
            waves = oracle_simulate(inst.levelized, inst.delays, inst.window_slices(w),
                                    int(inst.boundaries[w + 1]), pathpulse_pct=50)
            assert compare_waveforms(arena, waves, w, inst.netlist) is None
