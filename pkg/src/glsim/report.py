"""Activity statistics and report writers (SAIF, VCD, JSON).

For every net the stats hold T0/T1 (femtoseconds spent at 0/1), TC (stored
toggle count) and IG (pulses cancelled by the driver's inertial filter, which
never appeared on the net).  T0 + T1 equals the run duration for every net,
always.  Filtered pulses are deliberately not part of TC so SAIF keeps its
standard meaning; IG carries them separately for glitch-reduction flows.
"""

import io
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import SemanticError

SAIF_VERSION = "2.0"


@dataclass
class ActivityStats:
    """Per-net switching activity aggregated over all windows of a run."""

    net_names: list
    t0: np.ndarray
    t1: np.ndarray
    tc: np.ndarray
    ig: np.ndarray
    duration: int
    windows: int

    @property
    def activity_factor(self):
        denom = len(self.net_names) * self.windows
        return float(self.tc.sum()) / denom if denom else 0.0

    @property
    def total_tc(self):
        return int(self.tc.sum())

    @property
    def total_ig(self):
        return int(self.ig.sum())

    def merge(self, other):
        """Combine stats of disjoint window segments by summation."""
        if self.net_names != other.net_names:
            raise ValueError("cannot merge stats of different designs")
        return ActivityStats(self.net_names,
                             self.t0 + other.t0, self.t1 + other.t1,
                             self.tc + other.tc, self.ig + other.ig,
                             self.duration + other.duration,
                             self.windows + other.windows)


def compute_stats(arena, stimuli=None, boundaries=None):
    """Aggregate an arena (plus its stimuli) into :class:`ActivityStats`.

    Dwell times accumulate between consecutive transitions and across window
    edges; the duration is the summed length of the windows covered by the
    arena.  Input nets are measured from their own sliced waveforms.
    """
    stimuli = stimuli if stimuli is not None else arena.stimuli
    boundaries = boundaries if boundaries is not None else arena.boundaries
    nl = arena.levelized.netlist
    N = nl.num_nets
    P = nl.num_pis
    w_lo, w_hi = arena.window_range
    net_kind = np.zeros(N, dtype=np.uint8)
    net_slot = np.zeros(N, dtype=np.int64)
    for n in range(N):
        d = nl.driver_gate(n)
        if d < 0:
            net_slot[n] = n
        else:
            net_kind[n] = 1
            net_slot[n] = d
    t0 = np.zeros(N, dtype=np.int64)
    t1 = np.zeros(N, dtype=np.int64)
    tc = np.zeros(N, dtype=np.int64)
    _k.dwell_sweep(net_kind, net_slot,
                   stimuli.buf, stimuli.offsets, stimuli.counts, stimuli.initials,
                   arena.buf, arena.offsets, arena.counts, arena.initials,
                   np.asarray(boundaries, dtype=np.int64), w_lo, w_hi, w_lo,
                   t0, t1, tc)
    ig = np.zeros(N, dtype=np.int64)
    if nl.num_gates:
        ig[P:] = arena.filtered.sum(axis=1)
    duration = int(boundaries[w_hi] - boundaries[w_lo])
    return ActivityStats(list(nl.net_names), t0, t1, tc, ig, duration, w_hi - w_lo)


def _escape(name):
    out = []
    for c in name:
        if c in "[]/\\":
            out.append("\\")
        out.append(c)
    return "".join(out)


def write_saif(stats, design_name, include_ig=True):
    """Render stats as SAIF text (flat, one INSTANCE, one block per net).

    The layout is byte-stable: identical stats produce identical text, and
    nets appear in interned-index order.  TX is always 0 (two-value
    simulation).  ``include_ig=False`` drops the IG field for consumers that
    reject extensions.
    """
    out = io.StringIO()
    out.write("(SAIFILE\n")
    out.write(f'  (SAIFVERSION "{SAIF_VERSION}")\n')
    out.write('  (DIRECTION "backward")\n')
    out.write(f'  (DESIGN "{design_name}")\n')
    out.write("  (TIMESCALE 1 fs)\n")
    out.write(f"  (DURATION {stats.duration})\n")
    out.write(f"  (INSTANCE {design_name}\n")
    out.write("    (NET\n")
    for i, name in enumerate(stats.net_names):
        out.write(f"      ({_escape(name)}\n")
        out.write(f"        (T0 {int(stats.t0[i])}) (T1 {int(stats.t1[i])}) (TX 0)\n")
        if include_ig:
            out.write(f"        (TC {int(stats.tc[i])}) (IG {int(stats.ig[i])})\n")
        else:
            out.write(f"        (TC {int(stats.tc[i])})\n")
        out.write("      )\n")
    out.write("    )\n")
    out.write("  )\n")
    out.write(")\n")
    return out.getvalue()


def _id_code(i):
    # printable VCD identifier codes, '!' .. '~'
    chars = []
    i += 1
    while i:
        i, r = divmod(i - 1, 94)
        chars.append(chr(33 + r))
    return "".join(chars)


class VcdWriter:
    """Streaming VCD writer over window-sliced waveforms.

    Feed arenas segment by segment (ascending window ranges); the writer
    tracks each net's last value so window and segment joints only emit a
    change when the value actually differs.
    """

    def __init__(self, out, design_name, net_names):
        self.out = out
        self.names = list(net_names)
        self.ids = {name: _id_code(i) for i, name in enumerate(self.names)}
        self.last = {}
        out.write("$timescale 1 fs $end\n")
        out.write(f"$scope module {design_name} $end\n")
        for name in self.names:
            out.write(f"$var wire 1 {self.ids[name]} {name} $end\n")
        out.write("$upscope $end\n")
        out.write("$enddefinitions $end\n")

    def feed(self, arena, stimuli=None):
        stimuli = stimuli if stimuli is not None else arena.stimuli
        nl = arena.levelized.netlist
        w_lo, w_hi = arena.window_range
        events = []  # (time, order, name, value)
        for name in self.names:
            n = nl.net_index.get(name)
            if n is None:
                raise SemanticError(f"unknown net {name!r}")
            for w in range(w_lo, w_hi):
                d = nl.driver_gate(n)
                if d < 0:
                    piece = stimuli.window_waveform(n, w)
                else:
                    piece = arena.waveform(d, w)
                t_open = int(arena.boundaries[w])
                v = piece.initial
                if self.last.get(name) != v:
                    events.append((t_open, 0, name, v))
                    self.last[name] = v
                for t in piece.times:
                    v ^= 1
                    events.append((int(t), 1, name, v))
                    self.last[name] = v
        events.sort()
        current = None
        for t, _k2, name, v in events:
            if t != current:
                self.out.write(f"#{t}\n")
                current = t
            self.out.write(f"{v}{self.ids[name]}\n")

    def finish(self, end_time):
        self.out.write(f"#{end_time}\n")


def write_vcd(arena, net_names=None, boundaries=None, stimuli=None, design_name=None):
    """Serialize selected nets of a completed arena as VCD text.

    Defaults to every net.  Window joints where a net's settled value and the
    next window's initial value differ show up as a value change at the
    boundary, so the text reproduces the concatenated window waveforms
    exactly (and parses back to them).
    """
    nl = arena.levelized.netlist
    names = list(net_names) if net_names is not None else list(nl.net_names)
    out = io.StringIO()
    writer = VcdWriter(out, design_name or nl.name, names)
    writer.feed(arena, stimuli)
    writer.finish(int((boundaries if boundaries is not None else arena.boundaries)[arena.window_range[1]]))
    return out.getvalue()


def run_report(stats, diagnostics=None):
    """Machine-readable run summary (the JSON report body)."""
    diagnostics = diagnostics or {}
    timings = diagnostics.get("timings", {})
    return {
        "duration": stats.duration,
        "nets": len(stats.net_names),
        "windows": stats.windows,
        "activity_factor": stats.activity_factor,
        "total_tc": stats.total_tc,
        "total_filtered": stats.total_ig,
        "discarded_events": int(diagnostics.get("discarded", 0)),
        "interconnect_filtered": int(diagnostics.get("ic_filtered", 0)),
        "levels": diagnostics.get("levels", {}),
        "tasks": diagnostics.get("tasks", []),
        "segments": diagnostics.get("segments", []),
        "timings": {
            "parse": timings.get("parse", 0.0),
            "pass1": timings.get("pass1", 0.0),
            "alloc": timings.get("alloc", 0.0),
            "pass2": timings.get("pass2", 0.0),
            "report": timings.get("report", 0.0),
        },
    }
