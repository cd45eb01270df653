"""Cell library and structural netlist model.

Cells are boolean functions stored as truth-table bit vectors; the netlist is
a flat DAG of gate instances over an interned net table where every net has
exactly one driver (a primary input or one gate output).  Sequential elements
are not modeled: their outputs appear as pseudo-primary inputs driven by the
testbench, so the gate graph is purely combinational.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, SemanticError

MAX_CELL_INPUTS = 16


@dataclass(frozen=True)
class CellDef:
    """One library cell: ordered input pins, one output pin, and a truth table.

    ``truth[i]`` is the output for the input vector whose bit ``p`` (pin at
    declaration position ``p``, position 0 = least significant) equals
    ``(i >> p) & 1``.
    """

    name: str
    input_pins: tuple
    output_pin: str
    truth: np.ndarray  # uint8 vector of length 2**k

    @property
    def num_inputs(self):
        return len(self.input_pins)

    def pin_index(self, pin):
        try:
            return self.input_pins.index(pin)
        except ValueError:
            raise SemanticError(f"cell {self.name} has no input pin {pin!r}") from None


def eval_lut(cell, inputs):
    """Evaluate ``cell`` on a bit vector given in input-pin order."""
    if len(inputs) != cell.num_inputs:
        raise ValueError(f"expected {cell.num_inputs} input bits, got {len(inputs)}")
    index = 0
    for p, bit in enumerate(inputs):
        if bit:
            index |= 1 << p
    return int(cell.truth[index])


class CellLibrary:
    """Lookup table of :class:`CellDef` by cell name."""

    def __init__(self, cells=()):
        self.cells = {}
        for cell in cells:
            if cell.name in self.cells:
                raise SemanticError(f"duplicate cell name {cell.name!r}")
            self.cells[cell.name] = cell

    def __getitem__(self, name):
        return self.cells[name]

    def __contains__(self, name):
        return name in self.cells

    def __len__(self):
        return len(self.cells)


def parse_library(text, path="<library>"):
    """Parse a cell-library JSON document into a :class:`CellLibrary`.

    Expected shape::

        {"cells": [{"name": "AND2", "inputs": ["A","B"], "output": "Y",
                    "truth": "0001"}, ...]}
    """
    doc = _load_json(text, path)
    if not isinstance(doc, dict) or not isinstance(doc.get("cells"), list):
        raise ParseError('expected an object with a "cells" list', path)
    cells = []
    for entry in doc["cells"]:
        cells.append(_parse_cell(entry, path))
    return CellLibrary(cells)


def _parse_cell(entry, path):
    if not isinstance(entry, dict):
        raise ParseError("cell entry must be an object", path)
    name = entry.get("name")
    pins = entry.get("inputs")
    out = entry.get("output")
    truth = entry.get("truth")
    if not isinstance(name, str) or not name:
        raise ParseError("cell name must be a non-empty string", path)
    if not isinstance(pins, list) or not pins or not all(isinstance(p, str) for p in pins):
        raise ParseError(f"cell {name}: inputs must be a non-empty list of pin names", path)
    k = len(pins)
    if k > MAX_CELL_INPUTS:
        raise ParseError(f"cell {name}: {k} inputs exceeds the supported maximum of {MAX_CELL_INPUTS}", path)
    if not isinstance(out, str) or not out:
        raise ParseError(f"cell {name}: output pin must be a non-empty string", path)
    all_pins = pins + [out]
    if len(set(all_pins)) != len(all_pins):
        raise ParseError(f"cell {name}: pin names must be unique", path)
    if not isinstance(truth, str) or len(truth) != 1 << k:
        got = len(truth) if isinstance(truth, str) else truth
        raise ParseError(f"cell {name}: truth table must be a string of length {1 << k}, got {got}", path)
    if set(truth) - {"0", "1"}:
        raise ParseError(f"cell {name}: truth table may contain only 0 and 1", path)
    bits = np.frombuffer(truth.encode("ascii"), dtype=np.uint8) - ord("0")
    return CellDef(name, tuple(pins), out, bits)


def serialize_library(lib):
    """Render a library back to its JSON document form (parse round-trip)."""
    cells = []
    for cell in lib.cells.values():
        cells.append({
            "name": cell.name,
            "inputs": list(cell.input_pins),
            "output": cell.output_pin,
            "truth": "".join(str(int(b)) for b in cell.truth),
        })
    return json.dumps({"cells": cells}, indent=1)


@dataclass
class GateInst:
    """One gate instance: a cell reference plus interned net bindings."""

    name: str
    cell: CellDef
    pin_nets: tuple  # net index per input pin, in cell pin order
    out_net: int


class Netlist:
    """A flat combinational netlist over an interned net table.

    Net indices are assigned deterministically: primary (and pseudo-primary)
    inputs first in declaration order, then one output net per gate in gate
    declaration order, so ``gate i`` always drives net ``num_pis + i``.
    """

    def __init__(self, name, pi_names, po_names, gates, net_names, net_index):
        self.name = name
        self.pi_names = list(pi_names)
        self.po_names = list(po_names)
        self.gates = list(gates)
        self.net_names = list(net_names)
        self.net_index = dict(net_index)
        self.gate_index = {g.name: i for i, g in enumerate(self.gates)}
        # fanout: per net, the (gate, pin) loads it drives
        self.fanouts = [[] for _ in self.net_names]
        for gi, g in enumerate(self.gates):
            for p, n in enumerate(g.pin_nets):
                self.fanouts[n].append((gi, p))

    @property
    def num_pis(self):
        return len(self.pi_names)

    @property
    def num_gates(self):
        return len(self.gates)

    @property
    def num_nets(self):
        return len(self.net_names)

    def net_is_pi(self, net):
        return net < self.num_pis

    def driver_gate(self, net):
        """Gate index driving ``net``, or -1 for a primary input."""
        return net - self.num_pis if net >= self.num_pis else -1

    def __repr__(self):
        return (f"<Netlist {self.name!r}: {self.num_pis} inputs, "
                f"{self.num_gates} gates, {self.num_nets} nets>")


def parse_netlist(text, lib, path="<netlist>"):
    """Parse a netlist JSON document against ``lib`` into a :class:`Netlist`.

    Expected shape::

        {"name": "top", "inputs": ["a","b"], "outputs": ["y"],
         "gates": [{"name": "u1", "cell": "AND2",
                    "pins": {"A": "a", "B": "b", "Y": "y"}}, ...]}

    Every net must have exactly one driver and every gate input must be
    driven; violations raise :class:`SemanticError`.
    """
    doc = _load_json(text, path)
    if not isinstance(doc, dict):
        raise ParseError("netlist document must be an object", path)
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ParseError("netlist name must be a non-empty string", path)
    pis = doc.get("inputs", [])
    pos = doc.get("outputs", [])
    raw_gates = doc.get("gates", [])
    if not isinstance(pis, list) or not all(isinstance(s, str) for s in pis):
        raise ParseError('"inputs" must be a list of net names', path)
    if not isinstance(pos, list) or not all(isinstance(s, str) for s in pos):
        raise ParseError('"outputs" must be a list of net names', path)
    if not isinstance(raw_gates, list):
        raise ParseError('"gates" must be a list', path)

    net_index = {}
    net_names = []

    def intern_driver(net_name, what):
        if net_name in net_index:
            raise SemanticError(f"net {net_name!r} has multiple drivers ({what} conflicts with an earlier driver)")
        net_index[net_name] = len(net_names)
        net_names.append(net_name)
        return net_index[net_name]

    for pi in pis:
        intern_driver(pi, f"input {pi!r}")

    # first pass: validate gates, claim output nets
    staged = []
    seen_gate_names = set()
    for entry in raw_gates:
        if not isinstance(entry, dict):
            raise ParseError("gate entry must be an object", path)
        gname = entry.get("name")
        cname = entry.get("cell")
        pins = entry.get("pins")
        if not isinstance(gname, str) or not gname:
            raise ParseError("gate name must be a non-empty string", path)
        if gname in seen_gate_names:
            raise SemanticError(f"duplicate gate name {gname!r}")
        seen_gate_names.add(gname)
        if cname not in lib:
            raise SemanticError(f"gate {gname!r}: unknown cell {cname!r}")
        cell = lib[cname]
        if not isinstance(pins, dict) or not all(isinstance(v, str) for v in pins.values()):
            raise ParseError(f"gate {gname!r}: pins must map pin names to net names", path)
        expected = set(cell.input_pins) | {cell.output_pin}
        extra = set(pins) - expected
        if extra:
            raise SemanticError(f"gate {gname!r}: unknown pin {sorted(extra)[0]!r} for cell {cell.name}")
        missing = expected - set(pins)
        if missing:
            raise SemanticError(f"gate {gname!r}: pin {sorted(missing)[0]!r} is unbound")
        intern_driver(pins[cell.output_pin], f"gate {gname!r} output")
        staged.append((gname, cell, pins))

    # second pass: resolve input bindings (drivers are all known now)
    gates = []
    for gname, cell, pins in staged:
        pin_nets = []
        for pin in cell.input_pins:
            net_name = pins[pin]
            if net_name not in net_index:
                raise SemanticError(f"gate {gname!r}: input pin {pin!r} is bound to undriven net {net_name!r}")
            pin_nets.append(net_index[net_name])
        gates.append(GateInst(gname, cell, tuple(pin_nets), net_index[pins[cell.output_pin]]))

    for po in pos:
        if po not in net_index:
            raise SemanticError(f"output {po!r} references an undriven net")

    return Netlist(name, pis, pos, gates, net_names, net_index)


def serialize_netlist(netlist):
    """Render a netlist back to its JSON document form (parse round-trip)."""
    gates = []
    for g in netlist.gates:
        pins = {pin: netlist.net_names[n] for pin, n in zip(g.cell.input_pins, g.pin_nets)}
        pins[g.cell.output_pin] = netlist.net_names[g.out_net]
        gates.append({"name": g.name, "cell": g.cell.name, "pins": pins})
    return json.dumps({
        "name": netlist.name,
        "inputs": list(netlist.pi_names),
        "outputs": list(netlist.po_names),
        "gates": gates,
    }, indent=1)


class LevelizedNetlist:
    """A netlist plus longest-path logic levels.

    ``level_of[g]`` is 1 + the maximum level of g's gate-driven fanins, with
    primary-input drivers contributing 0, so gates fed only by inputs sit at
    level 1.  ``levels[l]`` lists the gates of level ``l + 1`` in ascending
    gate index, and ``order`` concatenates them, which is both a topological
    order and the storage order used for waveform arenas.
    """

    def __init__(self, netlist, level_of, levels):
        self.netlist = netlist
        self.level_of = level_of
        self.levels = levels
        self.order = (np.concatenate(levels) if levels
                      else np.empty(0, dtype=np.int64))
        starts = np.zeros(len(levels) + 1, dtype=np.int64)
        for i, bucket in enumerate(levels):
            starts[i + 1] = starts[i] + len(bucket)
        self.level_starts = starts

    @property
    def num_levels(self):
        return len(self.levels)

    def __repr__(self):
        return f"<LevelizedNetlist {self.netlist.name!r}: {self.num_levels} levels>"


def levelize(netlist):
    """Assign longest-path levels to every gate.

    Raises :class:`SemanticError` naming a gate on the cycle if the gate
    graph is not acyclic.
    """
    n_gates = netlist.num_gates
    level_of = np.zeros(n_gates, dtype=np.int64)
    pending = np.zeros(n_gates, dtype=np.int64)  # unresolved gate-driven fanins
    for gi, g in enumerate(netlist.gates):
        pending[gi] = sum(1 for n in g.pin_nets if not netlist.net_is_pi(n))

    ready = [gi for gi in range(n_gates) if pending[gi] == 0]
    processed = 0
    head = 0
    while head < len(ready):
        gi = ready[head]
        head += 1
        processed += 1
        g = netlist.gates[gi]
        lvl = 1
        for n in g.pin_nets:
            d = netlist.driver_gate(n)
            if d >= 0:
                lvl = max(lvl, level_of[d] + 1)
        level_of[gi] = lvl
        for sink, _pin in netlist.fanouts[g.out_net]:
            pending[sink] -= 1
            if pending[sink] == 0:
                ready.append(sink)

    if processed != n_gates:
        raise SemanticError(f"combinational cycle through gate {_cycle_member(netlist, pending)!r}")

    buckets = {}
    for gi in range(n_gates):
        buckets.setdefault(int(level_of[gi]), []).append(gi)
    levels = [np.array(sorted(buckets[l]), dtype=np.int64) for l in sorted(buckets)]
    return LevelizedNetlist(netlist, level_of, levels)


def _cycle_member(netlist, pending):
    # walk fanins among unresolved gates until one repeats
    start = int(np.nonzero(pending > 0)[0][0])
    seen = {}
    g = start
    while g not in seen:
        seen[g] = True
        for n in netlist.gates[g].pin_nets:
            d = netlist.driver_gate(n)
            if d >= 0 and pending[d] > 0:
                g = d
                break
    return netlist.gates[g].name


def _load_json(text, path):
    if isinstance(text, (dict, list)):
        return text
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path, e.lineno, e.colno) from None
