"""SDF delay annotation: parsing and condition-indexed lookup.

The supported subset covers what a power re-simulation consumes: the
DELAYFILE header (TIMESCALE, DIVIDER), CELL/INSTANCE, DELAY ABSOLUTE with
IOPATH, COND-qualified IOPATH (conjunctions of pin literals) and
INTERCONNECT.  Timing checks, PATHPULSE entries and everything else are
skipped with a warning.

Delays live in per-arc condition tables: for a k-input gate, the arc from
input pin ``i`` has one (rise, fall) row per assignment of the other k-1
pins, indexed by :func:`condition_index`.  All values are integer
femtoseconds.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SemanticError

log = logging.getLogger(__name__)

_UNIT_FS = {"s": 10**15, "ms": 10**12, "us": 10**9, "ns": 10**6, "ps": 10**3, "fs": 1}
_CORNERS = ("min", "typ", "max")

DEFAULT_TIMESCALE_FS = _UNIT_FS["ns"]  # SDF default timescale is 1 ns


@dataclass
class ArcDelayTable:
    """Conditional delays for one input-to-output arc.

    ``rows`` has shape (2**(k-1), 2): one row per side-input condition, with
    columns (rise, fall).  Unannotated entries stay 0.
    """

    gate: int
    pin: int
    rows: np.ndarray


@dataclass
class AnnotatedDelays:
    """All delay annotation for one netlist.

    ``tables[g][p]`` is the condition table of gate g's input pin p (shape
    ``(2**(k-1), 2)``, int64 femtoseconds).  ``interconnect[g][p]`` is the
    net delay from the driver of that pin to the pin itself; since every pin
    has exactly one driver this array is the whole (driver net, sink gate,
    sink pin) -> delay map.
    """

    netlist: object
    tables: list
    interconnect: list
    timescale_fs: int = DEFAULT_TIMESCALE_FS
    delay_mode: str = "full"
    warnings: list = field(default_factory=list)

    def arc_table(self, gate, pin):
        return ArcDelayTable(gate, pin, self.tables[gate][pin])


def zero_delays(netlist):
    """Delay annotation with every arc and interconnect at 0 fs."""
    tables = []
    interconnect = []
    for g in netlist.gates:
        k = g.cell.num_inputs
        tables.append([np.zeros((1 << (k - 1), 2), dtype=np.int64) for _ in range(k)])
        interconnect.append(np.zeros(k, dtype=np.int64))
    return AnnotatedDelays(netlist, tables, interconnect)


def condition_index(gate, switching_pin, side_values):
    """Row index for a side-input condition.

    ``side_values`` holds the values of the gate's other input pins in
    ascending pin order with the switching pin skipped; bit j of the index is
    ``side_values[j]``.
    """
    index = 0
    for j, v in enumerate(side_values):
        if v:
            index |= 1 << j
    return index


def condition_row(k, switching_pin, post_state):
    """Like :func:`condition_index` but taking the full k-bit input vector."""
    index = 0
    j = 0
    for q in range(k):
        if q == switching_pin:
            continue
        if post_state[q]:
            index |= 1 << j
        j += 1
    return index


def lookup_delay(delays, gate, switching_pins, post_state, output_edge):
    """Delay of a gate output transition.

    ``post_state`` is the full input vector after all simultaneous input
    transitions were applied; each switching pin contributes its arc delay
    conditioned on the post-transition side values, and the maximum over the
    switching pins wins.  ``output_edge`` is ``"rise"`` or ``"fall"``.
    """
    col = 0 if output_edge == "rise" else 1
    k = len(post_state)
    best = 0
    for p in switching_pins:
        row = condition_row(k, p, post_state)
        d = int(delays.tables[gate][p][row, col])
        if d > best:
            best = d
    return best


def average_tables(delays):
    """Collapse each arc's condition table to its mean row.

    Every row becomes the arithmetic mean of the original rows (rounded to
    the nearest femtosecond, ties up), which makes lookups independent of the
    side-input state.  Interconnect delays are unchanged.
    """
    tables = []
    for per_gate in delays.tables:
        new_gate = []
        for rows in per_gate:
            n = rows.shape[0]
            mean = (rows.sum(axis=0, dtype=np.int64) + n // 2) // n
            new_gate.append(np.broadcast_to(mean, rows.shape).copy())
        tables.append(new_gate)
    return AnnotatedDelays(delays.netlist, tables, [a.copy() for a in delays.interconnect],
                           delays.timescale_fs, "averaged", list(delays.warnings))


# ---------------------------------------------------------------------------
# parsing

class _Atom(str):
    """A token with its source position attached."""

    line = 0
    col = 0

    def __new__(cls, text, line, col):
        s = super().__new__(cls, text)
        s.line = line
        s.col = col
        return s


def _tokenize(text, path):
    line = 1
    col = 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            i += 1
            col += 1
        elif c == "/" and text[i:i + 2] == "//":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield _Atom(c, line, col)
            i += 1
            col += 1
        elif c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise ParseError("unterminated string", path, line, col)
            yield _Atom(text[i + 1:j], line, col)
            col += j + 1 - i
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in ' \t\r\n()"':
                j += 1
            yield _Atom(text[i:j], line, col)
            col += j - i
            i = j


def _read_sexprs(text, path):
    stack = [[]]
    opens = []
    for tok in _tokenize(text, path):
        if tok == "(":
            stack.append([])
            opens.append(tok)
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", path, tok.line, tok.col)
            done = stack.pop()
            opens.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        o = opens[-1]
        raise ParseError("unbalanced '('", path, o.line, o.col)
    return stack[0]


def _head(form):
    if isinstance(form, list) and form and isinstance(form[0], _Atom):
        return form[0].upper()
    return None


def _pos(form):
    while isinstance(form, list):
        if not form:
            return None, None
        form = form[0]
    return form.line, form.col


def parse_sdf(text, netlist, corner="typ", path="<sdf>"):
    """Parse an SDF document into :class:`AnnotatedDelays` for ``netlist``.

    IOPATH entries fill every condition row of the named arc; COND-qualified
    entries fill only the rows their expression selects, with later entries
    overwriting earlier ones in document order.  min:typ:max triples collapse
    to ``corner`` (falling back to whichever field is present).
    """
    if corner not in _CORNERS:
        raise ValueError(f"corner must be one of {_CORNERS}, got {corner!r}")
    forms = _read_sexprs(text, path)
    if len(forms) != 1 or _head(forms[0]) != "DELAYFILE":
        raise ParseError("expected a single (DELAYFILE ...) form", path, 1, 1)

    delays = zero_delays(netlist)
    delays.timescale_fs = DEFAULT_TIMESCALE_FS
    state = _ParseState(netlist, delays, corner, path)

    for item in forms[0][1:]:
        head = _head(item)
        if head == "TIMESCALE":
            delays.timescale_fs = _parse_timescale(item, path)
        elif head == "DIVIDER":
            if len(item) > 1 and isinstance(item[1], _Atom):
                state.divider = str(item[1])
        elif head == "CELL":
            state.parse_cell(item)
        elif head is None:
            line, col = _pos(item)
            raise ParseError("expected a (KEYWORD ...) form", path, line, col)
        else:
            # header entries (SDFVERSION, DESIGN, DATE, VENDOR, ...) are inert
            pass
    return delays


def _parse_timescale(item, path):
    spec = "".join(str(a) for a in item[1:] if isinstance(a, _Atom))
    num = spec.rstrip("abcdefghijklmnopqrstuvwxyz")
    unit = spec[len(num):].lower()
    line, col = _pos(item)
    if unit not in _UNIT_FS or num not in ("1", "10", "100"):
        raise ParseError(f"bad TIMESCALE {spec!r} (expected 1|10|100 s|ms|us|ns|ps|fs)", path, line, col)
    return int(num) * _UNIT_FS[unit]


class _ParseState:
    def __init__(self, netlist, delays, corner, path):
        self.netlist = netlist
        self.delays = delays
        self.corner = corner
        self.path = path
        self.divider = "/"

    def warn(self, message, form):
        line, col = _pos(form)
        where = f"{self.path}:{line}" if line else self.path
        self.delays.warnings.append(f"{where}: {message}")
        log.warning("%s: %s", where, message)

    def err(self, message, form, cls=ParseError):
        line, col = _pos(form)
        if cls is ParseError:
            raise ParseError(message, self.path, line, col)
        raise cls(f"{self.path}:{line}: {message}" if line else message)

    def parse_cell(self, form):
        instance = None
        have_instance = False
        for sub in form[1:]:
            head = _head(sub)
            if head == "CELLTYPE":
                continue
            if head == "INSTANCE":
                names = [a for a in sub[1:] if isinstance(a, _Atom)]
                instance = str(names[0]) if names else None
                have_instance = True
            elif head == "DELAY":
                if not have_instance:
                    self.err("DELAY before INSTANCE in CELL", sub)
                self.parse_delay(sub, instance)
            elif head in ("TIMINGCHECK", "LABEL", "TIMINGENV"):
                self.warn(f"skipping unsupported {head} section", sub)
            else:
                self.warn(f"skipping unsupported CELL entry {head}", sub)

    def parse_delay(self, form, instance):
        for sub in form[1:]:
            head = _head(sub)
            if head == "ABSOLUTE":
                for entry in sub[1:]:
                    self.parse_entry(entry, instance)
            elif head == "PATHPULSE" or head == "PATHPULSEPERCENT":
                self.warn(f"skipping {head} entry (pulse handling is a simulator setting)", sub)
            else:
                self.warn(f"skipping unsupported DELAY section {head}", sub)

    def parse_entry(self, entry, instance):
        head = _head(entry)
        if head == "IOPATH":
            self.parse_iopath(entry, instance, cond=None)
        elif head == "COND":
            self.parse_cond(entry, instance)
        elif head == "INTERCONNECT":
            self.parse_interconnect(entry)
        elif head == "PATHPULSE" or head == "PATHPULSEPERCENT":
            self.warn(f"skipping {head} entry (pulse handling is a simulator setting)", entry)
        else:
            self.warn(f"skipping unsupported delay entry {head}", entry)

    def resolve_gate(self, instance, form):
        if instance is None:
            self.err("IOPATH requires a named INSTANCE", form)
        gi = self.netlist.gate_index.get(instance)
        if gi is None:
            self.err(f"unknown instance {instance!r}", form, SemanticError)
        return gi

    def parse_iopath(self, entry, instance, cond):
        gi = self.resolve_gate(instance, entry)
        gate = self.netlist.gates[gi]
        args = entry[1:]
        if len(args) < 3:
            self.err("IOPATH needs input port, output port and at least one delay value", entry)
        in_port, out_port = args[0], args[1]
        if isinstance(in_port, list):
            # (posedge A) / (negedge A) qualified paths are outside the subset
            self.warn("skipping edge-qualified IOPATH", entry)
            return
        if not isinstance(out_port, _Atom):
            self.err("IOPATH output port must be a pin name", entry)
        if str(out_port) != gate.cell.output_pin:
            self.err(f"gate {instance!r}: unknown output pin {str(out_port)!r}", entry, SemanticError)
        if str(in_port) not in gate.cell.input_pins:
            self.err(f"gate {instance!r}: unknown input pin {str(in_port)!r}", entry, SemanticError)
        pin = gate.cell.input_pins.index(str(in_port))

        values = [self.parse_value(v, entry) for v in args[2:]]
        rise = values[0]
        fall = values[1] if len(values) > 1 else values[0]
        if len(values) > 2:
            self.warn("ignoring IOPATH delay values beyond rise/fall", entry)

        rows = self.delays.tables[gi][pin]
        if cond is None:
            rows[:, 0] = rise
            rows[:, 1] = fall
            return
        k = gate.cell.num_inputs
        side_pins = [q for q in range(k) if q != pin]
        literals = self.resolve_cond(cond, gate, pin, instance, entry)
        for r in range(rows.shape[0]):
            ok = True
            for q, want in literals:
                j = side_pins.index(q)
                if (r >> j) & 1 != want:
                    ok = False
                    break
            if ok:
                rows[r, 0] = rise
                rows[r, 1] = fall

    def parse_cond(self, entry, instance):
        parts = entry[1:]
        if not parts or _head(parts[-1]) != "IOPATH":
            self.err("COND must wrap an IOPATH entry", entry)
        expr_parts = parts[:-1]
        if len(expr_parts) == 1 and isinstance(expr_parts[0], list):
            expr_parts = expr_parts[0]  # parenthesized expression
        atoms = [str(a) for a in expr_parts if isinstance(a, _Atom)]
        if not atoms:
            self.err("COND requires a condition expression", entry)
        self.parse_iopath(parts[-1], instance, cond=" ".join(atoms))

    def resolve_cond(self, cond, gate, switching_pin, instance, entry):
        literals = []
        for term in cond.split("&&"):
            term = term.strip()
            if not term:
                self.err("empty term in COND expression", entry)
            if "==" in term:
                pin_name, _, value = term.partition("==")
                pin_name = pin_name.strip()
                value = value.strip()
                if value not in ("0", "1", "1'b0", "1'b1"):
                    self.err(f"unsupported COND comparison value {value!r}", entry)
                want = 1 if value in ("1", "1'b1") else 0
            elif term.startswith("!"):
                pin_name = term[1:].strip()
                want = 0
            else:
                pin_name = term
                want = 1
            if pin_name not in gate.cell.input_pins:
                self.err(f"gate {instance!r}: COND references unknown pin {pin_name!r}", entry, SemanticError)
            q = gate.cell.input_pins.index(pin_name)
            if q == switching_pin:
                self.err(f"gate {instance!r}: COND references the switching pin {pin_name!r}", entry, SemanticError)
            literals.append((q, want))
        return literals

    def parse_interconnect(self, entry):
        args = entry[1:]
        if len(args) != 3:
            self.err("INTERCONNECT needs source port, destination port and one delay value", entry)
        src, dst = args[0], args[1]
        if not isinstance(src, _Atom) or not isinstance(dst, _Atom):
            self.err("INTERCONNECT ports must be names", entry)
        value = self.parse_value(args[2], entry)
        net = self.resolve_source_net(str(src), entry)
        gi, pin = self.resolve_sink_pin(str(dst), entry)
        if self.netlist.gates[gi].pin_nets[pin] != net:
            self.err(f"INTERCONNECT {str(src)!r} -> {str(dst)!r} does not match netlist connectivity",
                     entry, SemanticError)
        self.delays.interconnect[gi][pin] = value

    def resolve_source_net(self, src, entry):
        if self.divider in src:
            gname, _, pname = src.rpartition(self.divider)
            gi = self.netlist.gate_index.get(gname)
            if gi is None:
                self.err(f"unknown instance {gname!r}", entry, SemanticError)
            gate = self.netlist.gates[gi]
            if pname != gate.cell.output_pin:
                self.err(f"INTERCONNECT source {src!r} is not a driver pin", entry, SemanticError)
            return gate.out_net
        net = self.netlist.net_index.get(src)
        if net is None:
            self.err(f"unknown net {src!r}", entry, SemanticError)
        return net

    def resolve_sink_pin(self, dst, entry):
        if self.divider not in dst:
            self.err(f"INTERCONNECT destination {dst!r} must name a gate input pin", entry, SemanticError)
        gname, _, pname = dst.rpartition(self.divider)
        gi = self.netlist.gate_index.get(gname)
        if gi is None:
            self.err(f"unknown instance {gname!r}", entry, SemanticError)
        gate = self.netlist.gates[gi]
        if pname not in gate.cell.input_pins:
            self.err(f"gate {gname!r}: unknown pin {pname!r}", entry, SemanticError)
        return gi, gate.cell.input_pins.index(pname)

    def parse_value(self, form, entry):
        """One delay value: ``(1.2)``, ``(min:typ:max)`` with blanks, or ``()``."""
        if not isinstance(form, list):
            self.err("delay value must be parenthesized", entry)
        spec = "".join(str(a) for a in form)
        if spec == "":
            return 0
        fields = spec.split(":")
        if len(fields) == 1:
            fields = fields * 3
        if len(fields) != 3:
            self.err(f"bad delay value {spec!r}", form)
        vals = []
        for f in fields:
            if f == "":
                vals.append(None)
                continue
            try:
                vals.append(float(f))
            except ValueError:
                self.err(f"bad delay number {f!r}", form)
        picked = vals[_CORNERS.index(self.corner)]
        if picked is None:
            for alt in ("typ", "min", "max"):
                if vals[_CORNERS.index(alt)] is not None:
                    picked = vals[_CORNERS.index(alt)]
                    break
        if picked is None:
            return 0
        if picked < 0:
            self.err(f"negative delay {picked}", form)
        return int(round(picked * self.delays.timescale_fs))
