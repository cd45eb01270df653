"""Command-line front end: parse, levelize, slice, simulate, report.

Exit codes: 0 success, 1 usage error, 2 input-file parse error, 3 semantic
error (undriven net, cycle, unknown instance, ...), 4 capacity error,
5 internal consistency failure (two-pass mismatch or reference-simulator
divergence under --oracle).

Every flag has a ``GLSIM_``-prefixed environment variable fallback (dashes
become underscores, e.g. ``GLSIM_CYCLE_PARALLELISM``); explicit flags win.
Human-readable output goes to stdout, diagnostics to stderr, machine outputs
only to the file paths given.
"""

import argparse
import json
import os
import sys
import time

from . import oracle as oracle_mod
from . import report as report_mod
from . import scheduler
from .errors import CapacityError, ConsistencyError, GlsimError, ParseError, SemanticError
from .netlist import levelize, parse_library, parse_netlist
from .sdf import average_tables, parse_sdf, zero_delays
from .waveform import StimulusSet, parse_vcd, window_boundaries

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_SEMANTIC = 3
EXIT_CAPACITY = 4
EXIT_INTERNAL = 5


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    p = _Parser(prog="glsim", description="Gate-level re-simulator producing SAIF activity files.")
    p.add_argument("--netlist", help="netlist JSON file")
    p.add_argument("--lib", help="cell library JSON file")
    p.add_argument("--sdf", help="SDF delay file (omit for a zero-delay run)")
    p.add_argument("--vcd", help="input stimulus VCD file")
    p.add_argument("--saif", help="write SAIF activity to this path")
    p.add_argument("--window-period", type=int, help="cycle window period in fs")
    p.add_argument("--window-offset", type=int, help="first window boundary offset in fs")
    p.add_argument("--windows-file", help="file with explicit window boundaries, one per line")
    p.add_argument("--threads", type=int, help="worker threads (0 = one per CPU)")
    p.add_argument("--cycle-parallelism", type=int, help="windows per task batch (default 32)")
    p.add_argument("--mem-cap", help="waveform memory cap in bytes (suffix K/M/G; 0 = uncapped)")
    p.add_argument("--corner", choices=["min", "typ", "max"], help="SDF corner (default typ)")
    p.add_argument("--delay-mode", choices=["full", "avg"], help="conditional tables or per-arc averages")
    p.add_argument("--pathpulse-pct", type=int, help="inertial filter threshold percent (default 100)")
    p.add_argument("--oracle", action="store_true", default=None,
                   help="cross-check waveforms against the reference event-queue simulator")
    p.add_argument("--force-oracle", action="store_true", default=None,
                   help="allow --oracle on designs over its gate-count guard")
    p.add_argument("--dump-vcd", help="write selected net waveforms as VCD to this path")
    p.add_argument("--dump-nets", help="comma-separated net names for --dump-vcd (default: all)")
    p.add_argument("--report", help="write the JSON run report to this path")
    p.add_argument("--no-ig", action="store_true", default=None,
                   help="omit the IG (filtered glitch) field from SAIF")
    return p


def _env_fill(args):
    for key, value in vars(args).items():
        if value is not None:
            continue
        env = os.environ.get("GLSIM_" + key.upper())
        if env is None:
            continue
        if key in ("oracle", "force_oracle", "no_ig"):
            setattr(args, key, env.lower() in ("1", "true", "yes", "on"))
        elif key in ("window_period", "window_offset", "threads", "cycle_parallelism", "pathpulse_pct"):
            setattr(args, key, int(env))
        else:
            setattr(args, key, env)
    return args


def _parse_mem_cap(text):
    text = text.strip()
    mult = 1
    if text and text[-1].upper() in "KMG":
        mult = {"K": 1 << 10, "M": 1 << 20, "G": 1 << 30}[text[-1].upper()]
        text = text[:-1]
    value = int(text) * mult
    return None if value <= 0 else value


def _read(path, what):
    try:
        with open(path, "r") as f:
            return f.read()
    except OSError as e:
        raise ParseError(f"cannot read {what}: {e.strerror}", path) from None


def _load_boundaries_file(path):
    ticks = []
    for line in _read(path, "windows file").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            ticks.append(int(line))
    return ticks


def main(argv=None):
    parser = _build_parser()
    try:
        args = _env_fill(parser.parse_args(argv))
        for required in ("netlist", "lib", "vcd"):
            if getattr(args, required) is None:
                raise _UsageError(f"--{required} is required")
        if args.windows_file and args.window_period:
            raise _UsageError("--window-period and --windows-file are mutually exclusive")
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        print(_build_parser().format_usage(), file=sys.stderr, end="")
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)

    t_start = time.perf_counter()
    try:
        cfg = scheduler.RunConfig(
            workers=args.threads if args.threads is not None else 0,
            cycle_parallelism=(args.cycle_parallelism
                               if args.cycle_parallelism is not None else 32),
            mem_cap=_parse_mem_cap(args.mem_cap) if args.mem_cap else scheduler.DEFAULT_MEM_CAP,
            corner=args.corner or "typ",
            delay_mode=args.delay_mode or "full",
            pathpulse_pct=args.pathpulse_pct if args.pathpulse_pct is not None else 100,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        t_parse = time.perf_counter()
        lib = parse_library(_read(args.lib, "library"), path=args.lib)
        netlist = parse_netlist(_read(args.netlist, "netlist"), lib, path=args.netlist)
        levelized = levelize(netlist)
        if args.sdf:
            delays = parse_sdf(_read(args.sdf, "SDF"), netlist, corner=cfg.corner, path=args.sdf)
        else:
            delays = zero_delays(netlist)
        if cfg.delay_mode == "avg":
            delays = average_tables(delays)
        waveforms, duration = parse_vcd(_read(args.vcd, "VCD"), netlist, path=args.vcd)

        try:
            if args.windows_file:
                boundaries = window_boundaries(duration, explicit=_load_boundaries_file(args.windows_file))
            elif args.window_period is not None:
                boundaries = window_boundaries(duration, period=args.window_period,
                                               offset=args.window_offset or 0)
            else:
                boundaries = window_boundaries(duration)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        stimuli = StimulusSet.build(waveforms, netlist, boundaries)
        parse_time = time.perf_counter() - t_parse

        vcd_sink = None
        writer = None
        if args.dump_vcd:
            names = ([s for s in args.dump_nets.split(",") if s] if args.dump_nets
                     else list(netlist.net_names))
            vcd_sink = open(args.dump_vcd, "w")
            writer = report_mod.VcdWriter(vcd_sink, netlist.name, names)

        oracle_checked = [0]

        def on_segment(arena):
            if writer is not None:
                writer.feed(arena, stimuli)
            if args.oracle:
                _oracle_check(levelized, delays, stimuli, arena, cfg,
                              bool(args.force_oracle), oracle_checked)

        try:
            stats, arena, diag = scheduler.simulate(levelized, stimuli, delays, cfg,
                                                    segment_cb=on_segment)
            if writer is not None:
                writer.finish(int(boundaries[-1]))
        finally:
            if vcd_sink is not None:
                vcd_sink.close()
        diag["timings"]["parse"] = parse_time

        t_report = time.perf_counter()
        if args.saif:
            with open(args.saif, "w") as f:
                f.write(report_mod.write_saif(stats, netlist.name, include_ig=not args.no_ig))
        diag["timings"]["report"] = time.perf_counter() - t_report
        if args.report:
            with open(args.report, "w") as f:
                json.dump(report_mod.run_report(stats, diag), f, indent=1)
                f.write("\n")

        kernel = diag["timings"].get("kernel", 0.0)
        total = time.perf_counter() - t_start
        print(f"design {netlist.name}: {netlist.num_gates} gates, {netlist.num_nets} nets, "
              f"{levelized.num_levels} levels, {stats.windows} windows")
        print(f"toggles: {stats.total_tc} stored, {stats.total_ig} filtered pulses, "
              f"{diag.get('discarded', 0)} discarded at window ends")
        print(f"activity factor: {stats.activity_factor:.4f}")
        if args.oracle:
            print(f"oracle check: {oracle_checked[0]} windows compared, no divergence")
        print(f"kernel time: {kernel:.3f} s (pass1 {diag['timings'].get('pass1', 0.0):.3f} s, "
              f"pass2 {diag['timings'].get('pass2', 0.0):.3f} s)")
        print(f"application time: {total:.3f} s")
        if args.saif:
            print(f"saif written to {args.saif}")
        return EXIT_OK

    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except SemanticError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SEMANTIC
    except CapacityError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except ConsistencyError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except GlsimError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SEMANTIC


def _oracle_check(levelized, delays, stimuli, arena, cfg, force, counter):
    netlist = levelized.netlist
    w_lo, w_hi = arena.window_range
    for w in range(w_lo, w_hi):
        slices = [stimuli.window_waveform(pi, w) for pi in range(netlist.num_pis)]
        waves = oracle_mod.oracle_simulate(levelized, delays, slices,
                                           int(stimuli.boundaries[w + 1]),
                                           pathpulse_pct=cfg.pathpulse_pct,
                                           force=force)
        where = oracle_mod.compare_waveforms(arena, waves, w, netlist)
        if where is not None:
            raise ConsistencyError(f"reference simulator divergence: {where}")
        counter[0] += 1


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
