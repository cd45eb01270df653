"""Waveform storage, VCD stimulus ingest, window slicing and arena allocation.

A waveform is an initial value plus a strictly increasing array of toggle
timestamps (integer femtoseconds); the value after n toggles is
``initial ^ (n & 1)``.  Stimuli are sliced into independent cycle windows so
that every (gate, window) pair can be simulated in isolation, and all gate
output waveforms of a run live in one contiguous pre-allocated buffer at
prefix-sum offsets.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParseError, SemanticError

_VCD_UNIT_FS = {"s": 10**15, "ms": 10**12, "us": 10**9, "ns": 10**6, "ps": 10**3, "fs": 1}


@dataclass
class Waveform:
    """Initial value plus strictly increasing toggle timestamps."""

    initial: int
    times: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)
        self.initial = int(self.initial)

    def value_at(self, t):
        """Value at tick ``t``; a toggle takes effect at its own timestamp."""
        n = int(np.searchsorted(self.times, t, side="right"))
        return self.initial ^ (n & 1)

    @property
    def final(self):
        return self.initial ^ (len(self.times) & 1)

    def __eq__(self, other):
        return (self.initial == other.initial
                and len(self.times) == len(other.times)
                and bool(np.all(self.times == other.times)))

    def __repr__(self):
        return f"Waveform({self.initial}, {self.times.tolist()})"


def slice_windows(w, boundaries):
    """Split ``w`` into per-window waveforms over ``[b_j, b_{j+1})`` ranges.

    A toggle exactly at a boundary belongs to the window it opens, so window
    j's initial value is the source value just before ``b_j``.
    """
    boundaries = np.asarray(boundaries, dtype=np.int64)
    if len(boundaries) < 2 or np.any(np.diff(boundaries) <= 0):
        raise ValueError("window boundaries must be strictly ascending")
    cuts = np.searchsorted(w.times, boundaries, side="left")
    out = []
    for j in range(len(boundaries) - 1):
        initial = w.initial ^ (int(cuts[j]) & 1)
        out.append(Waveform(initial, w.times[cuts[j]:cuts[j + 1]]))
    return out


def window_boundaries(duration, period=None, offset=0, explicit=None):
    """Build window boundaries covering ``[0, duration]``.

    With ``period`` the boundaries are 0, offset, offset+period, ... ending
    exactly at ``duration``; with ``explicit`` the given ascending list is
    validated (must start at 0 and reach ``duration``); with neither, one
    window spans the whole run.
    """
    if duration <= 0:
        raise ValueError("stimulus duration must be positive")
    if explicit is not None:
        b = np.asarray(sorted(set(int(x) for x in explicit)), dtype=np.int64)
        if len(b) < 2:
            raise ValueError("need at least two window boundaries")
        if b[0] != 0:
            raise ValueError("window boundaries must start at 0")
        if b[-1] < duration:
            raise ValueError(f"window boundaries end at {b[-1]} but the stimulus lasts {duration}")
        return b
    if period is None:
        return np.array([0, duration], dtype=np.int64)
    if period <= 0 or offset < 0:
        raise ValueError("window period must be positive and offset non-negative")
    ticks = [0]
    t = offset if offset > 0 else period
    while t < duration:
        ticks.append(t)
        t += period
    ticks.append(duration)
    return np.array(ticks, dtype=np.int64)


# ---------------------------------------------------------------------------
# VCD stimulus ingest

def parse_vcd(text, netlist, path="<vcd>"):
    """Read primary-input waveforms from a VCD document.

    Returns ``(waveforms, duration)`` where ``waveforms`` maps every PI/PPI
    name to its :class:`Waveform` and ``duration`` is the last ``#`` time
    mark in femtoseconds.  x and z values map to 0 (two-value simulation);
    consecutive same-value assignments collapse; assignments at time 0 set
    the initial value.
    """
    pi_set = {name: i for i, name in enumerate(netlist.pi_names)}
    id_to_pi = {}
    scale = None
    duration = 0
    current = -1  # before the first #0 mark
    # per PI: current value, initial, toggle list, pending value at current time
    values = np.zeros(netlist.num_pis, dtype=np.uint8)
    initials = np.zeros(netlist.num_pis, dtype=np.uint8)
    toggles = [[] for _ in range(netlist.num_pis)]

    def apply(pi, v, t):
        if t <= 0:
            initials[pi] = v
            values[pi] = v
        elif v != values[pi]:
            # several assignments at one time mark collapse to the last one
            if toggles[pi] and toggles[pi][-1] == t:
                toggles[pi].pop()
            else:
                toggles[pi].append(t)
            values[pi] = v

    lines = text.splitlines()
    li = 0
    n_lines = len(lines)
    while li < n_lines:
        raw = lines[li]
        tokens = raw.split()
        ti = 0
        while ti < len(tokens):
            tok = tokens[ti]
            if tok.startswith("$"):
                key = tok
                body = []
                ti += 1
                # collect up to $end, possibly across lines
                while True:
                    while ti < len(tokens):
                        if tokens[ti] == "$end":
                            ti += 1
                            break
                        body.append(tokens[ti])
                        ti += 1
                    else:
                        li += 1
                        if li >= n_lines:
                            raise ParseError(f"unterminated {key} section", path, len(lines))
                        tokens = lines[li].split()
                        ti = 0
                        continue
                    break
                if key == "$timescale":
                    scale = _parse_vcd_timescale(body, path, li + 1)
                elif key == "$var":
                    _bind_var(body, pi_set, id_to_pi, path, li + 1)
                # $scope/$upscope/$enddefinitions/$comment/$dumpvars are inert
                continue
            if tok.startswith("#"):
                try:
                    t = int(tok[1:])
                except ValueError:
                    raise ParseError(f"bad time mark {tok!r}", path, li + 1) from None
                if scale is None:
                    raise ParseError("missing $timescale before time marks", path, li + 1)
                t *= scale
                if t < current:
                    raise ParseError(f"non-monotonic time mark #{tok[1:]}", path, li + 1)
                current = t
                duration = max(duration, t)
            elif tok[0] in "01xXzZ":
                ident = tok[1:]
                pi = id_to_pi.get(ident)
                if pi is not None:
                    v = 1 if tok[0] == "1" else 0  # x/z map to 0
                    apply(pi, v, max(current, 0))
            elif tok[0] in "bBrR":
                ti += 1  # vector/real change: skip its identifier token
            ti += 1
        li += 1

    missing = [name for name in netlist.pi_names
               if pi_set[name] not in id_to_pi.values()]
    if missing:
        raise SemanticError(f"VCD declares no scalar variable for input net {missing[0]!r}")

    waveforms = {}
    for name, pi in pi_set.items():
        waveforms[name] = Waveform(int(initials[pi]), np.array(toggles[pi], dtype=np.int64))
    return waveforms, duration


def _parse_vcd_timescale(body, path, line):
    spec = "".join(body)
    num = spec.rstrip("abcdefghijklmnopqrstuvwxyz")
    unit = spec[len(num):].lower()
    if unit not in _VCD_UNIT_FS or num not in ("1", "10", "100"):
        raise ParseError(f"bad $timescale {spec!r}", path, line)
    return int(num) * _VCD_UNIT_FS[unit]


def _bind_var(body, pi_set, id_to_pi, path, line):
    if len(body) < 4:
        raise ParseError("malformed $var declaration", path, line)
    _vtype, width, ident, name = body[0], body[1], body[2], body[3]
    pi = pi_set.get(name)
    if pi is None:
        return
    if width != "1":
        raise SemanticError(f"vector variable ({width} bits) bound to input net {name!r}")
    if pi in id_to_pi.values():
        return  # duplicate alias of an already-bound input
    id_to_pi[ident] = pi


# ---------------------------------------------------------------------------
# window-sliced stimulus storage

class StimulusSet:
    """Window-sliced primary-input waveforms in flat-buffer form.

    One contiguous timestamp buffer plus per-(input, window) offset, count
    and initial-value tables; this mirrors the arena layout so the kernel
    reads inputs and fanin gate outputs the same way.
    """

    def __init__(self, boundaries, buf, offsets, counts, initials, duration):
        self.boundaries = boundaries
        self.buf = buf
        self.offsets = offsets
        self.counts = counts
        self.initials = initials
        self.duration = duration

    @classmethod
    def build(cls, waveforms, netlist, boundaries):
        """Slice ``waveforms`` (name -> :class:`Waveform`) into windows."""
        boundaries = np.asarray(boundaries, dtype=np.int64)
        P = netlist.num_pis
        W = len(boundaries) - 1
        offsets = np.zeros((P, W), dtype=np.int64)
        counts = np.zeros((P, W), dtype=np.int64)
        initials = np.zeros((P, W), dtype=np.uint8)
        chunks = []
        top = 0
        for pi, name in enumerate(netlist.pi_names):
            w = waveforms.get(name)
            if w is None:
                raise SemanticError(f"no stimulus for input net {name!r}")
            for j, piece in enumerate(slice_windows(w, boundaries)):
                offsets[pi, j] = top
                counts[pi, j] = len(piece.times)
                initials[pi, j] = piece.initial
                chunks.append(piece.times)
                top += len(piece.times)
        buf = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
        return cls(boundaries, buf, offsets, counts, initials, int(boundaries[-1]))

    @property
    def num_windows(self):
        return len(self.boundaries) - 1

    def window_waveform(self, pi, window):
        o = self.offsets[pi, window]
        c = self.counts[pi, window]
        return Waveform(int(self.initials[pi, window]), self.buf[o:o + c])


# ---------------------------------------------------------------------------
# output arena

class WaveformArena:
    """All gate output waveforms of a run in one contiguous buffer.

    Regions are laid out in (level, gate, window) order with capacities taken
    from the counting pass, so offsets are an exclusive prefix sum and the
    regions tile the buffer exactly.  The simulation fills ``counts``,
    ``initials`` and the per-(gate, window) diagnostic counters.
    """

    def __init__(self, buf, offsets, caps, boundaries, window_range, levelized):
        G, Ws = offsets.shape
        self.buf = buf
        self.offsets = offsets
        self.caps = caps
        self.pass1_counts = None
        self.counts = np.zeros((G, Ws), dtype=np.int64)
        self.initials = np.zeros((G, Ws), dtype=np.uint8)
        self.filtered = np.zeros((G, Ws), dtype=np.int64)
        self.ic_filtered = np.zeros((G, Ws), dtype=np.int64)
        self.discarded = np.zeros((G, Ws), dtype=np.int64)
        self.boundaries = boundaries
        self.window_range = window_range
        self.levelized = levelized
        self.stimuli = None

    @property
    def nbytes(self):
        return self.buf.nbytes

    @property
    def num_windows(self):
        return self.window_range[1] - self.window_range[0]

    def waveform(self, gate, window):
        """Stored output waveform of ``gate`` in absolute window ``window``."""
        wj = window - self.window_range[0]
        o = self.offsets[gate, wj]
        c = self.counts[gate, wj]
        return Waveform(int(self.initials[gate, wj]), self.buf[o:o + c])


def allocate_arena(tc, order, boundaries, window_range, levelized=None, mem_cap=None):
    """Allocate the output arena from per-(gate, window) toggle capacities.

    ``tc`` has shape (gates, windows) and comes from the counting pass (at
    the default pulse threshold it is exactly the toggle count); offsets are
    the exclusive prefix sum of ``tc`` visited in (level, gate, window)
    order, where ``order`` lists gates sorted by level.  Raises
    :class:`CapacityError` when the buffer (8 bytes per toggle) would exceed
    ``mem_cap`` bytes; that is the signal to fall back to segmented
    execution.
    """
    tc = np.asarray(tc, dtype=np.int64)
    total = int(tc.sum())
    nbytes = total * 8
    if mem_cap is not None and nbytes > mem_cap:
        raise CapacityError(
            f"waveform storage needs {nbytes} bytes but the memory cap is {mem_cap};"
            " run the windows in segments or raise --mem-cap",
            required_bytes=nbytes, cap_bytes=mem_cap)
    offsets = np.zeros_like(tc)
    if tc.size:
        ordered = tc[order]  # (level, gate) major, window minor
        flat = np.concatenate(([0], np.cumsum(ordered.ravel())[:-1]))
        offsets[order] = flat.reshape(ordered.shape)
    buf = np.empty(total, dtype=np.int64)
    return WaveformArena(buf, offsets, tc.copy(), boundaries, window_range, levelized)
