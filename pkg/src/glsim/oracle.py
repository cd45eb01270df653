"""Reference event-queue simulator for equivalence testing.

This is the slow, trusted half of the build's standing verification: a
classic single-threaded global event queue over the whole netlist, with a
completely different control structure from the per-gate scan in
:mod:`glsim.simcore` (shared delay tables and truth tables, independent
event handling), so transition-for-transition agreement between the two is
meaningful.

Queue entries are ordered by (time, logic level, kind) with pin arrivals
before output releases, which makes zero-delay chains within one timestamp
resolve in topological order and lets a gate retract its own pending edge
scheduled for the very instant being processed.  Ties beyond that break on
net index.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import SemanticError
from .netlist import eval_lut
from .sdf import lookup_delay
from .waveform import Waveform

ORACLE_GATE_LIMIT = 10_000

_PIN = 0
_RELEASE = 1
_PENDING, _CANCELLED, _DONE = 0, 1, 2


def zero_delay_eval(levelized, pi_values):
    """Propagate input values through the netlist, level order, no delays.

    Returns the value of every net as a uint8 array.
    """
    nl = levelized.netlist
    vals = np.zeros(nl.num_nets, dtype=np.uint8)
    vals[:nl.num_pis] = np.asarray(pi_values, dtype=np.uint8)
    for gi in levelized.order:
        g = nl.gates[gi]
        idx = 0
        for p, n in enumerate(g.pin_nets):
            if vals[n]:
                idx |= 1 << p
        vals[g.out_net] = g.cell.truth[idx]
    return vals


@dataclass
class OracleCounters:
    filtered: list = field(default_factory=list)
    ic_filtered: list = field(default_factory=list)
    discarded: list = field(default_factory=list)


def oracle_simulate(levelized, delays, window_stimuli, window_end,
                    pathpulse_pct=100, force=False, counters=None):
    """Simulate one window and return the waveform of every net.

    :param window_stimuli: one :class:`Waveform` per primary input (a window
        slice, timestamps below ``window_end``).
    :param window_end: output edges landing at or past this tick never
        appear on the net (the per-gate discard rule).
    :param force: lift the gate-count guard; the oracle is deliberately
        unoptimized and refuses large designs otherwise.
    :param counters: optional :class:`OracleCounters` to receive per-gate
        filtered/interconnect-filtered/discarded tallies.

    Returns a list of :class:`Waveform`, one per net index.
    """
    nl = levelized.netlist
    if nl.num_gates > ORACLE_GATE_LIMIT and not force:
        raise SemanticError(
            f"oracle refuses designs over {ORACLE_GATE_LIMIT} gates "
            f"({nl.num_gates} here); pass force=True if you really mean it")
    P = nl.num_pis
    G = nl.num_gates
    level_of = levelized.level_of

    pi_init = [w.initial for w in window_stimuli]
    init_vals = zero_delay_eval(levelized, pi_init)

    pin_vals = [[int(init_vals[n]) for n in g.pin_nets] for g in nl.gates]
    y = [int(init_vals[g.out_net]) for g in nl.gates]
    t_last = [None] * G
    last_entry = [None] * G
    last_stored = [False] * G
    released = [[] for _ in range(G)]  # surviving stored releases, oldest first
    filtered = [0] * G
    ic_filtered = [0] * G
    discarded = [0] * G
    out_times = [[] for _ in range(G)]
    link_pending = {}

    heap = []
    for pi, w in enumerate(window_stimuli):
        for t in w.times:
            heapq.heappush(heap, [int(t), 0, _RELEASE, pi, -1, _PENDING])

    def propagate(net, t):
        for g2, p2 in nl.fanouts[net]:
            d = int(delays.interconnect[g2][p2])
            pend = link_pending.get((g2, p2))
            if pend is not None and t < pend[0]:
                # the pulse is narrower than the interconnect delay: both
                # transitions of the pair vanish before reaching the pin
                pend[1][5] = _CANCELLED
                ic_filtered[g2] += 1
                del link_pending[(g2, p2)]
            else:
                entry = [t + d, int(level_of[g2]), _PIN, g2, p2, _PENDING]
                heapq.heappush(heap, entry)
                link_pending[(g2, p2)] = (t + d, entry)

    while heap:
        entry = heapq.heappop(heap)
        if entry[5] == _CANCELLED:
            continue
        t, lvl, kind = entry[0], entry[1], entry[2]
        entry[5] = _DONE
        if kind == _RELEASE:
            net = entry[3]
            if net >= P:
                out_times[net - P].append(t)
            propagate(net, t)
            continue

        gate = entry[3]
        pins = [entry[4]]
        while heap and heap[0][0] == t and heap[0][1] == lvl and heap[0][2] == _PIN and heap[0][3] == gate:
            more = heapq.heappop(heap)
            if more[5] == _CANCELLED:
                continue
            more[5] = _DONE
            pins.append(more[4])

        vals = pin_vals[gate]
        for p in pins:
            vals[p] ^= 1
        g = nl.gates[gate]
        new_y = eval_lut(g.cell, vals)
        if new_y == y[gate]:
            continue
        delay = lookup_delay(delays, gate, pins, vals, "rise" if new_y else "fall")
        t_out = t + delay
        thr = delay * pathpulse_pct // 100
        tl = t_last[gate]
        if tl is not None:
            target = tl
        elif released[gate]:
            target = released[gate][-1][0]
        else:
            target = None
        if target is not None and (t_out <= target or t_out - target < thr):
            if tl is not None:
                if last_stored[gate]:
                    pend = last_entry[gate]
                    assert pend[5] == _PENDING, "retraction hit an already released edge"
                    pend[5] = _CANCELLED
                else:
                    discarded[gate] -= 1
                last_entry[gate] = None
            else:
                pend = released[gate].pop()
                assert pend[5] == _PENDING, "retraction hit an already released edge"
                pend[5] = _CANCELLED
            filtered[gate] += 1
            t_last[gate] = None
        else:
            if tl is not None and last_stored[gate]:
                released[gate].append(last_entry[gate])
            if t_out < window_end:
                pend = [t_out, int(level_of[gate]), _RELEASE, g.out_net, -1, _PENDING]
                heapq.heappush(heap, pend)
                last_entry[gate] = pend
                last_stored[gate] = True
            else:
                discarded[gate] += 1
                last_entry[gate] = None
                last_stored[gate] = False
            t_last[gate] = t_out
        y[gate] = new_y

    if counters is not None:
        counters.filtered = filtered
        counters.ic_filtered = ic_filtered
        counters.discarded = discarded

    waves = []
    for n in range(nl.num_nets):
        if n < P:
            waves.append(window_stimuli[n])
        else:
            waves.append(Waveform(int(init_vals[n]), np.array(out_times[n - P], dtype=np.int64)))
    return waves


def compare_waveforms(arena, oracle_waves, window, netlist):
    """First divergence between an arena and an oracle run of one window.

    Returns ``None`` on agreement, else a human-readable location string
    naming the gate, window and timestamp that differ.
    """
    for gi in range(netlist.num_gates):
        got = arena.waveform(gi, window)
        want = oracle_waves[netlist.num_pis + gi]
        name = netlist.gates[gi].name
        if got.initial != want.initial:
            return (f"gate {name!r} window {window}: initial value "
                    f"{got.initial} != {want.initial}")
        a, b = got.times, want.times
        m = min(len(a), len(b))
        neq = np.nonzero(a[:m] != b[:m])[0]
        if len(neq):
            i = int(neq[0])
            return (f"gate {name!r} window {window}: transition {i} at "
                    f"{int(a[i])} != {int(b[i])}")
        if len(a) != len(b):
            extra = a if len(a) > len(b) else b
            who = "engine" if len(a) > len(b) else "oracle"
            return (f"gate {name!r} window {window}: {who} has extra "
                    f"transition at {int(extra[m])}")
    return None
