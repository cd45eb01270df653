"""Quickstart: parse a small design, simulate it, and read the results.

Builds a two-gate circuit inline, replays a handful of input toggles through
it with annotated delays, and prints every waveform plus the SAIF activity
summary.  Run with:  python demos/01_quickstart.py
"""

from glsim import (RunConfig, StimulusSet, levelize, parse_library,
                   parse_netlist, parse_sdf, parse_vcd, simulate,
                   window_boundaries, write_saif)

LIBRARY = """
{"cells": [
  {"name": "AND2", "inputs": ["A", "B"], "output": "Y", "truth": "0001"},
  {"name": "INV",  "inputs": ["A"],      "output": "Y", "truth": "10"}
]}
"""

NETLIST = """
{"name": "quick", "inputs": ["a", "b"], "outputs": ["y"],
 "gates": [
   {"name": "u1", "cell": "AND2", "pins": {"A": "a", "B": "b", "Y": "n1"}},
   {"name": "u2", "cell": "INV",  "pins": {"A": "n1", "Y": "y"}}
 ]}
"""

# rise/fall delays per arc; the INV's input also gets 0.5 ps of wire delay
SDF = """
(DELAYFILE (TIMESCALE 1ps)
 (CELL (CELLTYPE "AND2") (INSTANCE u1)
  (DELAY (ABSOLUTE (IOPATH A Y (2.0) (1.0)) (IOPATH B Y (1.5) (1.5)))))
 (CELL (CELLTYPE "INV") (INSTANCE u2)
  (DELAY (ABSOLUTE (IOPATH A Y (1.0) (1.0)) (INTERCONNECT u1/Y u2/A (0.5)))))
)
"""

VCD = """$timescale 1 ps $end
$scope module tb $end
$var wire 1 ! a $end
$var wire 1 " b $end
$upscope $end
$enddefinitions $end
#0
0!
1"
#10
1!
#30
0!
#50
"""

lib = parse_library(LIBRARY)
netlist = parse_netlist(NETLIST, lib)
levelized = levelize(netlist)
delays = parse_sdf(SDF, netlist)
waves, duration = parse_vcd(VCD, netlist)

print(f"{netlist}  levels={levelized.num_levels}  stimulus={duration} fs")

boundaries = window_boundaries(duration)  # one window spanning the whole run
stimuli = StimulusSet.build(waves, netlist, boundaries)
stats, arena, diag = simulate(levelized, stimuli, delays, RunConfig(workers=1))

print("\ninput waveforms (initial value + toggle times in fs):")
for pi, name in enumerate(netlist.pi_names):
    print(f"  {name}: {stimuli.window_waveform(pi, 0)}")

print("gate output waveforms:")
for gi, gate in enumerate(netlist.gates):
    print(f"  {netlist.net_names[gate.out_net]} ({gate.name}): {arena.waveform(gi, 0)}")

# a rises at 10 ps; AND2 output follows 2 ps later; the inverter adds
# 0.5 ps of wire plus 1 ps of cell delay on top of that
print("\nSAIF activity:")
print(write_saif(stats, netlist.name))
