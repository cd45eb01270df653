"""glsim: a data-parallel, delay-annotated two-value gate-level re-simulator.

Replays known input stimuli through a combinational netlist with
SDF-annotated inertial delays and produces SAIF switching-activity files.
Known sequential-element waveforms break the cycle-to-cycle dependency, so
the testbench slices into independent cycle windows and every (gate, window)
pair simulates in isolation: gates of one logic level run in parallel,
windows run in parallel, and levels advance behind a barrier.

Typical use::

    from glsim import (parse_library, parse_netlist, levelize, parse_sdf,
                       parse_vcd, window_boundaries, StimulusSet,
                       RunConfig, simulate, write_saif)

    lib = parse_library(open("cells.json").read())
    nl = parse_netlist(open("design.json").read(), lib)
    lv = levelize(nl)
    delays = parse_sdf(open("design.sdf").read(), nl)
    waves, duration = parse_vcd(open("stim.vcd").read(), nl)
    stim = StimulusSet.build(waves, nl, window_boundaries(duration, period=1_000_000))
    stats, arena, diag = simulate(lv, stim, delays, RunConfig())
    open("out.saif", "w").write(write_saif(stats, nl.name))
"""

from .errors import (CapacityError, ConsistencyError, GlsimError, ParseError,
                     SemanticError)
from .netlist import (CellDef, CellLibrary, GateInst, LevelizedNetlist,
                      Netlist, eval_lut, levelize, parse_library,
                      parse_netlist, serialize_library, serialize_netlist)
from .oracle import oracle_simulate, zero_delay_eval
from .report import (ActivityStats, VcdWriter, compute_stats, run_report,
                     write_saif, write_vcd)
from .scheduler import RunConfig, plan_segments, run, segment_run, simulate
from .sdf import (AnnotatedDelays, ArcDelayTable, average_tables,
                  condition_index, lookup_delay, parse_sdf, zero_delays)
from .simcore import (EXHAUSTED, GateSimState, PinCursor, emit_output,
                      next_event_time, resolve_msi, simulate_gate_window,
                      two_pass_simulate)
from .waveform import (StimulusSet, Waveform, WaveformArena, allocate_arena,
                       parse_vcd, slice_windows, window_boundaries)

__version__ = "0.1.0"

__all__ = [
    "ActivityStats", "AnnotatedDelays", "ArcDelayTable", "CapacityError",
    "CellDef", "CellLibrary", "ConsistencyError", "EXHAUSTED", "GateInst",
    "GateSimState", "GlsimError", "LevelizedNetlist", "Netlist", "ParseError",
    "PinCursor", "RunConfig", "SemanticError", "StimulusSet", "VcdWriter",
    "Waveform", "WaveformArena", "allocate_arena", "average_tables",
    "compute_stats", "condition_index", "emit_output", "eval_lut", "levelize",
    "lookup_delay", "next_event_time", "oracle_simulate", "parse_library",
    "parse_netlist", "parse_sdf", "parse_vcd", "plan_segments", "resolve_msi",
    "run", "run_report", "segment_run", "serialize_library",
    "serialize_netlist", "simulate", "simulate_gate_window", "slice_windows",
    "two_pass_simulate", "window_boundaries", "write_saif", "write_vcd",
    "zero_delay_eval", "zero_delays",
]
