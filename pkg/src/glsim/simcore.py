"""Per-(gate, window) simulation engine.

Two implementations of the same semantics live here.  The object layer
(:class:`PinCursor`, :class:`GateSimState`, :func:`next_event_time`,
:func:`resolve_msi`, :func:`emit_output`, :func:`simulate_gate_window`) is
the direct, readable form used by unit tests and for poking at single gates.
The array engine (:func:`compile_design` plus :func:`count_pass` /
:func:`store_pass` / :func:`two_pass_simulate`) drives the jitted kernel in
:mod:`glsim._kernels` and is what production runs use.

The simulation is two-pass: a counting pass establishes the exact output
toggle count of every (gate, window), those counts size one contiguous
output arena by prefix sum, and a second identical pass fills it.  The
counting pass runs the complete algorithm (inertial filtering included) so
its counts are exact, which the second pass re-verifies.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .errors import ConsistencyError
from .netlist import eval_lut
from .sdf import condition_row
from .waveform import allocate_arena

EXHAUSTED = None


@dataclass
class PinCursor:
    """Scan state of one gate input pin over its driver's window waveform.

    The cursor view of the waveform is shifted by the pin's interconnect
    delay and inertially filtered against it: any adjacent transition pair
    closer together than the delay is skipped entirely (counted in
    ``filtered``).
    """

    times: np.ndarray
    ic_delay: int
    value: int
    pos: int = 0
    filtered: int = 0

    @classmethod
    def from_waveform(cls, w, ic_delay=0):
        return cls(w.times, int(ic_delay), int(w.initial))

    def peek(self):
        """Next delayed transition time, or ``EXHAUSTED``."""
        while (self.pos + 1 < len(self.times)
               and self.times[self.pos + 1] - self.times[self.pos] < self.ic_delay):
            self.pos += 2
            self.filtered += 1
        if self.pos >= len(self.times):
            return EXHAUSTED
        return int(self.times[self.pos]) + self.ic_delay

    def consume(self):
        self.pos += 1
        self.value ^= 1


def next_event_time(cursors):
    """Earliest pending delayed input transition across all pins.

    Returns only the timestamp (not which pin is switching);
    ``EXHAUSTED`` when every cursor has run dry.
    """
    best = EXHAUSTED
    for c in cursors:
        t = c.peek()
        if t is not None and (best is None or t < best):
            best = t
    return best


def resolve_msi(cursors, t):
    """Consume every pin transition arriving exactly at ``t``.

    All simultaneous input switches resolve before the single evaluation
    that follows.  Returns the post-transition input vector and the list of
    switching pin indices.
    """
    switching = []
    for p, c in enumerate(cursors):
        if c.peek() == t:
            c.consume()
            switching.append(p)
    return tuple(c.value for c in cursors), switching


@dataclass
class GateSimState:
    """Output-side state of one (gate, window) simulation.

    ``out_times`` is maintained in count mode too (the retraction chain needs
    the newest stored edge); ``tc`` is the counting contract either way.
    """

    y: int
    mode: str = "store"
    pathpulse_pct: int = 100
    tc: int = 0
    filtered: int = 0
    ic_filtered: int = 0
    discarded: int = 0
    t_last: object = None
    d_last: int = 0
    last_stored: bool = False
    out_times: list = field(default_factory=list)


def emit_output(state, new_y, t_event, delay, window_end):
    """Schedule an output edge through the inertial filter.

    No action when ``new_y`` equals the current output.  Otherwise the edge
    lands at ``t_event + delay``; if it arrives at or before the newest
    surviving edge, or within ``delay * pct / 100`` of it, the pulse is
    cancelled in full: that edge is retracted, nothing new is emitted, and
    the output value returns to its pre-pulse level.  After a retraction the
    newest remaining stored edge becomes the comparison target for later
    edges (at the default 100 percent the chain provably never goes deeper
    than the most recent edge).  Edges at or past ``window_end`` are
    discarded (window independence) but the logical output value still
    updates.
    """
    if new_y == state.y:
        return state
    t_out = t_event + delay
    thr = delay * state.pathpulse_pct // 100
    if state.t_last is not None:
        target = state.t_last
    elif state.out_times:
        target = state.out_times[-1]
    else:
        target = None
    if target is not None and (t_out <= target or t_out - target < thr):
        if state.t_last is not None and not state.last_stored:
            state.discarded -= 1
        else:
            state.tc -= 1
            state.out_times.pop()
        state.filtered += 1
        state.t_last = None
    else:
        if t_out < window_end:
            state.tc += 1
            state.out_times.append(t_out)
            state.last_stored = True
        else:
            state.discarded += 1
            state.last_stored = False
        state.t_last = t_out
        state.d_last = delay
    state.y = new_y
    return state


def simulate_gate_window(cell, pin_waveforms, ic_delays, arc_tables, window_end,
                         mode="store", pathpulse_pct=100):
    """Simulate one gate over one window from explicit fanin waveforms.

    :param cell: the gate's :class:`~glsim.netlist.CellDef`.
    :param pin_waveforms: one window :class:`~glsim.waveform.Waveform` per
        input pin, in cell pin order.
    :param ic_delays: interconnect delay per pin.
    :param arc_tables: per pin, the (2**(k-1), 2) conditional delay rows.
    :param window_end: events landing at or past this tick are discarded.

    The initial output value is the truth table of the initial input values
    and produces no event.  Returns the final :class:`GateSimState`; in
    store mode ``out_times`` holds exactly ``tc`` strictly increasing
    timestamps.
    """
    cursors = [PinCursor.from_waveform(w, d) for w, d in zip(pin_waveforms, ic_delays)]
    k = len(cursors)
    state = GateSimState(y=eval_lut(cell, [c.value for c in cursors]),
                         mode=mode, pathpulse_pct=pathpulse_pct)
    while True:
        t = next_event_time(cursors)
        if t is EXHAUSTED:
            break
        values, switching = resolve_msi(cursors, t)
        new_y = eval_lut(cell, values)
        if new_y != state.y:
            col = 0 if new_y else 1
            delay = 0
            for p in switching:
                row = condition_row(k, p, values)
                delay = max(delay, int(arc_tables[p][row, col]))
            emit_output(state, new_y, t, delay, window_end)
    state.ic_filtered = sum(c.filtered for c in cursors)
    return state


# ---------------------------------------------------------------------------
# array engine

class CompiledDesign:
    """Flat-array form of a levelized netlist plus its delay annotation."""

    def __init__(self, levelized, delays):
        nl = levelized.netlist
        if delays.netlist is not nl:
            raise ValueError("delay annotation was built for a different netlist")
        self.levelized = levelized
        self.netlist = nl
        G = nl.num_gates
        self.order = levelized.order
        self.level_starts = levelized.level_starts

        pin_off = np.zeros(G + 1, dtype=np.int64)
        lut_off = np.zeros(G, dtype=np.int64)
        out_net = np.zeros(G, dtype=np.int64)
        lut_parts = []
        lut_top = 0
        for gi, g in enumerate(nl.gates):
            pin_off[gi + 1] = pin_off[gi] + g.cell.num_inputs
            lut_off[gi] = lut_top
            lut_parts.append(g.cell.truth)
            lut_top += len(g.cell.truth)
            out_net[gi] = g.out_net
        total_pins = int(pin_off[-1])

        pin_net = np.zeros(total_pins, dtype=np.int64)
        pin_ic = np.zeros(total_pins, dtype=np.int64)
        pin_arc = np.zeros(total_pins, dtype=np.int64)
        arc_parts = []
        arc_top = 0
        for gi, g in enumerate(nl.gates):
            base = pin_off[gi]
            ic = delays.interconnect[gi]
            for p, n in enumerate(g.pin_nets):
                pin_net[base + p] = n
                pin_ic[base + p] = ic[p]
                rows = delays.tables[gi][p]
                pin_arc[base + p] = arc_top
                arc_parts.append(rows)
                arc_top += rows.shape[0]

        self.pin_off = pin_off
        self.pin_net = pin_net
        self.pin_ic = pin_ic
        self.pin_arc = pin_arc
        self.arc_rows = (np.vstack(arc_parts).astype(np.int64) if arc_parts
                         else np.zeros((0, 2), dtype=np.int64))
        self.lut_off = lut_off
        self.lut_bits = (np.concatenate(lut_parts) if lut_parts
                         else np.zeros(0, dtype=np.uint8))
        self.out_net = out_net

        self.net_kind = np.zeros(nl.num_nets, dtype=np.uint8)
        self.net_slot = np.zeros(nl.num_nets, dtype=np.int64)
        for n in range(nl.num_nets):
            d = nl.driver_gate(n)
            if d < 0:
                self.net_slot[n] = n  # primary input slot
            else:
                self.net_kind[n] = 1
                self.net_slot[n] = d

    @property
    def num_gates(self):
        return self.netlist.num_gates

    @property
    def num_levels(self):
        return self.levelized.num_levels


def compile_design(levelized, delays):
    return CompiledDesign(levelized, delays)


def initial_values(model, stimuli):
    """Window-start value of every net via zero-delay propagation."""
    return _k.init_values(model.order, model.pin_off, model.pin_net,
                          model.lut_off, model.lut_bits, model.out_net,
                          model.netlist.num_nets, stimuli.initials)


@dataclass
class PassResult:
    tc: np.ndarray
    peak: np.ndarray
    filtered: np.ndarray
    ic_filtered: np.ndarray
    discarded: np.ndarray


def _run_level(model, stimuli, init_vals, gbuf, g_off, g_cap, g_cnt,
               filt, icf, disc, err, peak, lo, hi, w_lo, w_hi, w_off,
               cycle_parallelism, pct, executor, workers, task_trace, level_no):
    spans = []
    n = hi - lo
    chunk = max(1, -(-n // max(1, workers * 4)))
    for s in range(lo, hi, chunk):
        e = min(hi, s + chunk)
        for wb in range(w_lo, w_hi, cycle_parallelism):
            we = min(w_hi, wb + cycle_parallelism)
            spans.append((s, e, wb, we))

    def runner(span):
        s, e, wb, we = span
        if task_trace is not None:
            task_trace.append((level_no, s, wb))
        _k.sim_span(s, e, wb, we, w_off,
                    model.order, model.pin_off, model.pin_net, model.pin_ic,
                    model.pin_arc, model.arc_rows, model.lut_off, model.lut_bits,
                    model.out_net, model.net_kind, model.net_slot,
                    stimuli.buf, stimuli.offsets, stimuli.counts,
                    init_vals, stimuli.boundaries,
                    gbuf, g_off, g_cap, g_cnt,
                    filt, icf, disc, err, peak, pct)

    if executor is None or len(spans) == 1:
        for span in spans:
            runner(span)
    else:
        list(executor.map(runner, spans))
    return len(spans)


def count_pass(model, stimuli, init_vals, *, window_range=None,
               cycle_parallelism=32, pathpulse_pct=100,
               executor=None, workers=1, task_trace=None, task_counts=None):
    """First pass: exact output toggle counts per (gate, window).

    Runs the complete algorithm, writing each level's waveforms into a
    transient scratch buffer sized by the one-output-edge-per-input-edge
    bound, so the returned counts are exact (filtering included) and ready
    to size the packed arena.  ``peak`` is the high-water region occupancy
    that pass 2 must accommodate; it equals ``tc`` at the default pulse
    threshold and can exceed it only when the threshold is scaled down.
    """
    w_lo, w_hi = window_range if window_range is not None else (0, stimuli.num_windows)
    Ws = w_hi - w_lo
    G = model.num_gates
    g_off = np.zeros((G, Ws), dtype=np.int64)
    g_cap = np.zeros((G, Ws), dtype=np.int64)
    g_cnt = np.zeros((G, Ws), dtype=np.int64)
    filt = np.zeros((G, Ws), dtype=np.int64)
    icf = np.zeros((G, Ws), dtype=np.int64)
    disc = np.zeros((G, Ws), dtype=np.int64)
    err = np.zeros((G, Ws), dtype=np.int64)
    peak = np.zeros((G, Ws), dtype=np.int64)
    gbuf = np.empty(4096, dtype=np.int64)
    top = 0
    pct = int(pathpulse_pct)
    for li in range(model.num_levels):
        lo, hi = int(model.level_starts[li]), int(model.level_starts[li + 1])
        nsp = hi - lo
        ub = np.empty((nsp, Ws), dtype=np.int64)
        _k.level_ub(model.order, lo, hi, model.pin_off, model.pin_net,
                    model.net_kind, model.net_slot, stimuli.counts, g_cnt,
                    w_lo, w_hi, w_lo, ub)
        need = int(ub.sum())
        if top + need > gbuf.size:
            grown = np.empty(max(gbuf.size * 2, top + need), dtype=np.int64)
            grown[:top] = gbuf[:top]
            gbuf = grown
        flat = np.concatenate(([0], np.cumsum(ub.ravel())[:-1])) + top
        sel = model.order[lo:hi]
        g_off[sel] = flat.reshape(nsp, Ws)
        g_cap[sel] = ub
        top += need
        n_tasks = _run_level(model, stimuli, init_vals, gbuf, g_off, g_cap, g_cnt,
                             filt, icf, disc, err, peak, lo, hi, w_lo, w_hi, w_lo,
                             cycle_parallelism, pct, executor, workers,
                             task_trace, li + 1)
        if task_counts is not None:
            task_counts.append(n_tasks)
        if err[sel].any():
            raise ConsistencyError("counting pass overran its output bound (kernel bug)")
    return PassResult(g_cnt, peak, filt, icf, disc)


def store_pass(model, stimuli, init_vals, arena, *,
               cycle_parallelism=32, pathpulse_pct=100,
               executor=None, workers=1, task_trace=None, task_counts=None):
    """Second pass: identical simulation, storing into the packed arena."""
    w_lo, w_hi = arena.window_range
    G = model.num_gates
    err = np.zeros((G, w_hi - w_lo), dtype=np.int64)
    peak = np.zeros((G, w_hi - w_lo), dtype=np.int64)
    arena.counts[:] = 0
    arena.filtered[:] = 0
    arena.ic_filtered[:] = 0
    arena.discarded[:] = 0
    pct = int(pathpulse_pct)
    for li in range(model.num_levels):
        lo, hi = int(model.level_starts[li]), int(model.level_starts[li + 1])
        n_tasks = _run_level(model, stimuli, init_vals, arena.buf,
                             arena.offsets, arena.caps, arena.counts,
                             arena.filtered, arena.ic_filtered, arena.discarded,
                             err, peak, lo, hi, w_lo, w_hi, w_lo,
                             cycle_parallelism, pct, executor, workers,
                             task_trace, li + 1)
        if task_counts is not None:
            task_counts.append(n_tasks)
        sel = model.order[lo:hi]
        if err[sel].any():
            g, wj = np.argwhere(err[sel])[0]
            raise ConsistencyError(
                f"store pass produced more toggles than the counting pass for gate "
                f"{model.netlist.gates[sel[g]].name!r}, window {w_lo + int(wj)} (two-pass mismatch)")


def verify_two_pass(model, arena):
    """Assert the defining postcondition: stored counts equal pass-1 counts."""
    expect = arena.pass1_counts if arena.pass1_counts is not None else arena.caps
    if not np.array_equal(arena.counts, expect):
        g, wj = np.argwhere(arena.counts != expect)[0]
        w = arena.window_range[0] + int(wj)
        raise ConsistencyError(
            f"two-pass mismatch at gate {model.netlist.gates[int(g)].name!r}, window {w}: "
            f"counted {int(expect[g, wj])}, stored {int(arena.counts[g, wj])}")


def two_pass_simulate(levelized, stimuli, delays, *, cycle_parallelism=32,
                      pathpulse_pct=100, mem_cap=None, workers=1,
                      executor=None, task_trace=None, timings=None,
                      task_counts=None):
    """Count, allocate, store: the full windowed re-simulation of a design.

    Returns the filled :class:`~glsim.waveform.WaveformArena`.  Raises
    :class:`~glsim.errors.CapacityError` when the arena would exceed
    ``mem_cap`` bytes (callers then fall back to segmented execution) and
    :class:`~glsim.errors.ConsistencyError` on any pass disagreement.
    """
    t0 = time.perf_counter()
    model = compile_design(levelized, delays)
    init_vals = initial_values(model, stimuli)
    t1 = time.perf_counter()
    counted = count_pass(model, stimuli, init_vals,
                         cycle_parallelism=cycle_parallelism,
                         pathpulse_pct=pathpulse_pct, executor=executor,
                         workers=workers, task_trace=task_trace,
                         task_counts=task_counts)
    t2 = time.perf_counter()
    W = stimuli.num_windows
    arena = allocate_arena(counted.peak, model.order, stimuli.boundaries,
                           (0, W), levelized, mem_cap=mem_cap)
    arena.pass1_counts = counted.tc
    arena.initials[:] = init_vals[levelized.netlist.num_pis:, :]
    arena.stimuli = stimuli
    t3 = time.perf_counter()
    store_pass(model, stimuli, init_vals, arena,
               cycle_parallelism=cycle_parallelism,
               pathpulse_pct=pathpulse_pct, executor=executor,
               workers=workers, task_trace=task_trace, task_counts=task_counts)
    verify_two_pass(model, arena)
    t4 = time.perf_counter()
    if timings is not None:
        timings["compile"] = timings.get("compile", 0.0) + (t1 - t0)
        timings["pass1"] = timings.get("pass1", 0.0) + (t2 - t1)
        timings["alloc"] = timings.get("alloc", 0.0) + (t3 - t2)
        timings["pass2"] = timings.get("pass2", 0.0) + (t4 - t3)
    return arena
