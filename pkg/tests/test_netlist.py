import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glsim import (ParseError, SemanticError, eval_lut, levelize,
                   parse_library, parse_netlist, serialize_library,
                   serialize_netlist)

LIB = json.dumps({"cells": [
    {"name": "INV", "inputs": ["A"], "output": "Y", "truth": "10"},
    {"name": "AND2", "inputs": ["A", "B"], "output": "Y", "truth": "0001"},
    {"name": "MUX2", "inputs": ["A", "B", "S"], "output": "Y", "truth": "01010011"},
]})


def lib():
    return parse_library(LIB)


def netlist_doc(gates, inputs=("a", "b"), outputs=()):
    return json.dumps({"name": "t", "inputs": list(inputs),
                       "outputs": list(outputs), "gates": gates})


class TestParseLibrary:
    def test_and2_lut(self):
        l = parse_library('{"cells":[{"name":"AND2","inputs":["A","B"],"output":"Y","truth":"0001"}]}')
        assert eval_lut(l["AND2"], [1, 1]) == 1

    def test_inverter(self):
        l = parse_library('{"cells":[{"name":"INV","inputs":["A"],"output":"Y","truth":"10"}]}')
        assert eval_lut(l["INV"], [0]) == 1
        assert eval_lut(l["INV"], [1]) == 0

    def test_truth_length_mismatch(self):
        with pytest.raises(ParseError, match="length 4"):
            parse_library('{"cells":[{"name":"X","inputs":["A","B"],"output":"Y","truth":"001"}]}')

    def test_duplicate_cell_name(self):
        doc = {"cells": [{"name": "X", "inputs": ["A"], "output": "Y", "truth": "01"}] * 2}
        with pytest.raises(SemanticError, match="duplicate cell"):
            parse_library(json.dumps(doc))

    def test_bad_truth_character(self):
        with pytest.raises(ParseError, match="only 0 and 1"):
            parse_library('{"cells":[{"name":"X","inputs":["A"],"output":"Y","truth":"0x"}]}')

    def test_duplicate_pin(self):
        with pytest.raises(ParseError, match="unique"):
            parse_library('{"cells":[{"name":"X","inputs":["A","A"],"output":"Y","truth":"0011"}]}')

    def test_malformed_json(self):
        with pytest.raises(ParseError):
            parse_library("{nope")

    def test_too_many_inputs(self):
        pins = [f"I{i}" for i in range(17)]
        doc = {"cells": [{"name": "X", "inputs": pins, "output": "Y", "truth": "0" * (1 << 17)}]}
        with pytest.raises(ParseError, match="maximum"):
            parse_library(json.dumps(doc))


class TestEvalLut:
    def test_and2(self):
        l = lib()
        assert eval_lut(l["AND2"], [1, 1]) == 1
        assert eval_lut(l["AND2"], [1, 0]) == 0

    def test_three_input_index_arithmetic(self):
        # inputs (A=0, B=1, S=1) must select position 0 + 2 + 4 = 6
        l = lib()
        assert eval_lut(l["MUX2"], [0, 1, 1]) == int("01010011"[6])

    @given(st.integers(1, 5), st.data())
    @settings(max_examples=60, deadline=None)
    def test_reproduces_truth_string(self, k, data):
        bits = data.draw(st.lists(st.integers(0, 1), min_size=1 << k, max_size=1 << k))
        truth = "".join(map(str, bits))
        l = parse_library(json.dumps({"cells": [
            {"name": "X", "inputs": [f"I{i}" for i in range(k)], "output": "Z", "truth": truth}]}))
        cell = l["X"]
        got = "".join(str(eval_lut(cell, [(i >> p) & 1 for p in range(k)]))
                      for i in range(1 << k))
        assert got == truth


class TestParseNetlist:
    def test_single_inverter(self):
        n = parse_netlist(netlist_doc(
            [{"name": "u1", "cell": "INV", "pins": {"A": "a", "Y": "y"}}],
            inputs=["a"]), lib())
        assert n.num_gates == 1
        assert n.num_nets == 2

    def test_undriven_input(self):
        with pytest.raises(SemanticError, match="undriven"):
            parse_netlist(netlist_doc(
                [{"name": "u1", "cell": "INV", "pins": {"A": "ghost", "Y": "y"}}],
                inputs=["a"]), lib())

    def test_multiple_drivers(self):
        with pytest.raises(SemanticError, match="multiple drivers"):
            parse_netlist(netlist_doc([
                {"name": "u1", "cell": "INV", "pins": {"A": "a", "Y": "n1"}},
                {"name": "u2", "cell": "INV", "pins": {"A": "b", "Y": "n1"}},
            ]), lib())

    def test_unknown_cell(self):
        with pytest.raises(SemanticError, match="unknown cell"):
            parse_netlist(netlist_doc(
                [{"name": "u1", "cell": "NOPE", "pins": {"A": "a", "Y": "y"}}]), lib())

    def test_unknown_pin(self):
        with pytest.raises(SemanticError, match="unknown pin"):
            parse_netlist(netlist_doc(
                [{"name": "u1", "cell": "INV", "pins": {"A": "a", "Q": "x", "Y": "y"}}]), lib())

    def test_unbound_pin(self):
        with pytest.raises(SemanticError, match="unbound"):
            parse_netlist(netlist_doc(
                [{"name": "u1", "cell": "AND2", "pins": {"A": "a", "Y": "y"}}]), lib())

    def test_duplicate_gate_name(self):
        with pytest.raises(SemanticError, match="duplicate gate"):
            parse_netlist(netlist_doc([
                {"name": "u1", "cell": "INV", "pins": {"A": "a", "Y": "n1"}},
                {"name": "u1", "cell": "INV", "pins": {"A": "b", "Y": "n2"}},
            ]), lib())

    def test_unknown_output_net(self):
        with pytest.raises(SemanticError, match="output"):
            parse_netlist(netlist_doc([], outputs=["zzz"]), lib())

    def test_net_interning_order(self):
        n = parse_netlist(netlist_doc([
            {"name": "u1", "cell": "INV", "pins": {"A": "a", "Y": "n1"}},
            {"name": "u2", "cell": "INV", "pins": {"A": "n1", "Y": "n2"}},
        ]), lib())
        assert n.net_names == ["a", "b", "n1", "n2"]
        assert n.driver_gate(n.net_index["n2"]) == 1

    def test_round_trip(self):
        l = lib()
        doc = netlist_doc([
            {"name": "u1", "cell": "AND2", "pins": {"A": "a", "B": "b", "Y": "n1"}},
            {"name": "u2", "cell": "INV", "pins": {"A": "n1", "Y": "y"}},
        ], outputs=["y"])
        n1 = parse_netlist(doc, l)
        n2 = parse_netlist(serialize_netlist(n1), l)
        assert n1.net_names == n2.net_names
        assert n1.pi_names == n2.pi_names
        assert n1.po_names == n2.po_names
        for g1, g2 in zip(n1.gates, n2.gates):
            assert (g1.name, g1.cell.name, g1.pin_nets, g1.out_net) == \
                   (g2.name, g2.cell.name, g2.pin_nets, g2.out_net)
        l2 = parse_library(serialize_library(l))
        assert set(l2.cells) == set(l.cells)
        for name in l.cells:
            assert np.array_equal(l2[name].truth, l[name].truth)


class TestLevelize:
    def test_chain(self):
        n = parse_netlist(netlist_doc([
            {"name": "u1", "cell": "INV", "pins": {"A": "a", "Y": "n1"}},
            {"name": "u2", "cell": "INV", "pins": {"A": "n1", "Y": "n2"}},
            {"name": "u3", "cell": "INV", "pins": {"A": "n2", "Y": "n3"}},
        ]), lib())
        lv = levelize(n)
        assert list(lv.level_of) == [1, 2, 3]
        assert [b.tolist() for b in lv.levels] == [[0], [1], [2]]

    def test_two_independent_gates_level_one(self):
        n = parse_netlist(netlist_doc([
            {"name": "u1", "cell": "INV", "pins": {"A": "a", "Y": "n1"}},
            {"name": "u2", "cell": "INV", "pins": {"A": "b", "Y": "n2"}},
        ]), lib())
        lv = levelize(n)
        assert list(lv.level_of) == [1, 1]

    def test_diamond(self):
        n = parse_netlist(netlist_doc([
            {"name": "u1", "cell": "INV", "pins": {"A": "a", "Y": "n1"}},
            {"name": "u2", "cell": "INV", "pins": {"A": "a", "Y": "n2"}},
            {"name": "u3", "cell": "AND2", "pins": {"A": "n1", "B": "n2", "Y": "y"}},
        ], inputs=["a"]), lib())
        lv = levelize(n)
        assert list(lv.level_of) == [1, 1, 2]

    def test_cycle_detected(self):
        with pytest.raises(SemanticError, match="cycle through gate"):
            levelize(parse_netlist(netlist_doc([
                {"name": "u1", "cell": "AND2", "pins": {"A": "a", "B": "n2", "Y": "n1"}},
                {"name": "u2", "cell": "INV", "pins": {"A": "n1", "Y": "n2"}},
            ]), lib()))

    def test_soundness_and_minimality_random(self):
        rng = np.random.default_rng(11)
        import gen
        for _ in range(20):
            import json as _json
            lib_doc = gen.random_library(rng)
            doc, _d = gen.random_netlist(rng, lib_doc, int(rng.integers(10, 120)), 6)
            n = parse_netlist(_json.dumps(doc), parse_library(_json.dumps(lib_doc)))
            lv = levelize(n)
            for gi, g in enumerate(n.gates):
                fan_levels = [int(lv.level_of[n.driver_gate(net)]) if n.driver_gate(net) >= 0 else 0
                              for net in g.pin_nets]
                assert all(f < lv.level_of[gi] for f in fan_levels)   # soundness
                assert lv.level_of[gi] == 1 + max(fan_levels)         # minimality
            for li, bucket in enumerate(lv.levels):
                assert list(bucket) == sorted(bucket)
                for g in bucket:
                    assert lv.level_of[g] == li + 1
