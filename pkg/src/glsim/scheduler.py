"""Level-ordered parallel execution and segmented runs.

The scheduler owns the only thread pool.  Within one logic level all
(gate-slice, window-batch) tasks may run in any order; no task of level L+1
starts before every task of level L has finished (a full join is the
barrier).  Results are byte-identical for any worker count or batch size
because tasks write disjoint arena regions and read only completed levels.

When the output arena would exceed the memory cap, the window axis is split
into contiguous segments that each fit, the segments run in sequence, and
their activity statistics merge by summation into exactly the stats of the
uncapped run.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import report, simcore
from .errors import CapacityError
from .waveform import allocate_arena

DEFAULT_MEM_BUDGET = 2 << 30  # bytes available to waveform storage
DEFAULT_MEM_CAP = int(DEFAULT_MEM_BUDGET * 0.75)


@dataclass
class RunConfig:
    """Execution knobs for a simulation run.

    ``workers=0`` means one worker per CPU.  ``cycle_parallelism`` bounds how
    many windows one task simulates (the batch width of the window axis).
    ``mem_cap`` is in bytes; ``None`` disables the cap.  ``pathpulse_pct``
    scales the inertial filter threshold (100 = filter everything narrower
    than the full path delay).
    """

    workers: int = 0
    cycle_parallelism: int = 32
    mem_cap: object = DEFAULT_MEM_CAP
    corner: str = "typ"
    delay_mode: str = "full"
    pathpulse_pct: int = 100

    def __post_init__(self):
        if self.cycle_parallelism < 1:
            raise ValueError("cycle_parallelism must be at least 1")
        if not 0 <= self.pathpulse_pct <= 100:
            raise ValueError("pathpulse_pct must be within [0, 100]")
        if self.workers < 0:
            raise ValueError("workers must be non-negative")

    @property
    def resolved_workers(self):
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)


def _base_diag(levelized, cfg):
    return {
        "levels": {int(l + 1): len(b) for l, b in enumerate(levelized.levels)},
        "workers": cfg.resolved_workers,
        "cycle_parallelism": cfg.cycle_parallelism,
        "timings": {},
        "tasks": [],
        "segments": [],
    }


def _finish_diag(diag, arena=None):
    if arena is not None:
        diag["filtered"] = int(arena.filtered.sum())
        diag["ic_filtered"] = int(arena.ic_filtered.sum())
        diag["discarded"] = int(arena.discarded.sum())


def run(levelized, stimuli, delays, cfg=None, task_trace=None):
    """Unsegmented two-pass run.  Returns ``(arena, diagnostics)``.

    Raises :class:`CapacityError` if the arena exceeds ``cfg.mem_cap``; use
    :func:`segment_run` (or :func:`simulate`, which falls back automatically)
    in that case.
    """
    cfg = cfg or RunConfig()
    workers = cfg.resolved_workers
    diag = _base_diag(levelized, cfg)
    t0 = time.perf_counter()
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        arena = simcore.two_pass_simulate(
            levelized, stimuli, delays,
            cycle_parallelism=cfg.cycle_parallelism,
            pathpulse_pct=cfg.pathpulse_pct,
            mem_cap=cfg.mem_cap, workers=workers, executor=executor,
            task_trace=task_trace, timings=diag["timings"],
            task_counts=diag["tasks"])
    finally:
        if executor is not None:
            executor.shutdown()
    diag["timings"]["total"] = time.perf_counter() - t0
    diag["timings"]["kernel"] = diag["timings"].get("pass1", 0.0) + diag["timings"].get("pass2", 0.0)
    _finish_diag(diag, arena)
    return arena, diag


def plan_segments(tc, mem_cap):
    """Split the window axis into contiguous ranges fitting ``mem_cap`` bytes.

    ``tc`` is the per-(gate, window) toggle count matrix of the counting
    pass.  Raises :class:`CapacityError` when even a single window does not
    fit (segmentation cannot help then).
    """
    per_window = tc.sum(axis=0) * 8  # int64 timestamps
    segments = []
    start = 0
    acc = 0
    for w, b in enumerate(per_window):
        b = int(b)
        if mem_cap is not None and b > mem_cap:
            raise CapacityError(
                f"window {w} alone needs {b} bytes of waveform storage, over the cap of "
                f"{mem_cap}; raise --mem-cap to at least {b} or shorten the windows",
                required_bytes=b, cap_bytes=mem_cap)
        if mem_cap is not None and acc + b > mem_cap and w > start:
            segments.append((start, w))
            start = w
            acc = 0
        acc += b
    segments.append((start, len(per_window)))
    return segments


def segment_run(levelized, stimuli, delays, cfg=None, segment_cb=None, task_trace=None):
    """Run the windows in memory-capped segments and merge their stats.

    One counting pass covers all windows; the store pass then visits each
    segment with its own arena.  Returns ``(stats, diagnostics)``; the
    merged stats are exactly those of an uncapped run.  ``segment_cb`` (if
    given) receives each completed segment arena, e.g. to stream VCD.
    """
    cfg = cfg or RunConfig()
    workers = cfg.resolved_workers
    diag = _base_diag(levelized, cfg)
    t0 = time.perf_counter()
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        tc0 = time.perf_counter()
        model = simcore.compile_design(levelized, delays)
        init_vals = simcore.initial_values(model, stimuli)
        counted = simcore.count_pass(
            model, stimuli, init_vals,
            cycle_parallelism=cfg.cycle_parallelism,
            pathpulse_pct=cfg.pathpulse_pct, executor=executor,
            workers=workers, task_trace=task_trace, task_counts=diag["tasks"])
        diag["timings"]["pass1"] = time.perf_counter() - tc0
        segments = plan_segments(counted.peak, cfg.mem_cap)
        stats = None
        discarded = 0
        ic_filtered = 0
        store_time = 0.0
        for w_lo, w_hi in segments:
            ts = time.perf_counter()
            arena = allocate_arena(counted.peak[:, w_lo:w_hi], model.order,
                                   stimuli.boundaries, (w_lo, w_hi), levelized)
            arena.pass1_counts = counted.tc[:, w_lo:w_hi]
            arena.initials[:] = init_vals[levelized.netlist.num_pis:, w_lo:w_hi]
            arena.stimuli = stimuli
            simcore.store_pass(model, stimuli, init_vals, arena,
                               cycle_parallelism=cfg.cycle_parallelism,
                               pathpulse_pct=cfg.pathpulse_pct,
                               executor=executor, workers=workers,
                               task_trace=task_trace)
            simcore.verify_two_pass(model, arena)
            store_time += time.perf_counter() - ts
            seg_stats = report.compute_stats(arena, stimuli)
            stats = seg_stats if stats is None else stats.merge(seg_stats)
            discarded += int(arena.discarded.sum())
            ic_filtered += int(arena.ic_filtered.sum())
            diag["segments"].append({"windows": [int(w_lo), int(w_hi)],
                                     "bytes": int(arena.nbytes)})
            if segment_cb is not None:
                segment_cb(arena)
        diag["timings"]["pass2"] = store_time
    finally:
        if executor is not None:
            executor.shutdown()
    diag["timings"]["total"] = time.perf_counter() - t0
    diag["timings"]["kernel"] = diag["timings"]["pass1"] + diag["timings"]["pass2"]
    diag["filtered"] = int(stats.total_ig) if stats is not None else 0
    diag["ic_filtered"] = ic_filtered
    diag["discarded"] = discarded
    return stats, diag


def simulate(levelized, stimuli, delays, cfg=None, task_trace=None, segment_cb=None):
    """Full run with automatic segmented fallback under the memory cap.

    Returns ``(stats, arena_or_None, diagnostics)``: the arena is ``None``
    when the run had to be segmented (its windows never coexist in memory).
    """
    cfg = cfg or RunConfig()
    try:
        arena, diag = run(levelized, stimuli, delays, cfg, task_trace=task_trace)
    except CapacityError as e:
        if stimuli.num_windows < 2:
            raise CapacityError(
                f"a single window needs {e.required_bytes} bytes of waveform storage, "
                f"over the cap of {e.cap_bytes}; raise --mem-cap to at least "
                f"{e.required_bytes} or shorten the windows",
                required_bytes=e.required_bytes, cap_bytes=e.cap_bytes) from None
        stats, diag = segment_run(levelized, stimuli, delays, cfg,
                                  segment_cb=segment_cb, task_trace=task_trace)
        return stats, None, diag
    stats = report.compute_stats(arena, stimuli)
    if segment_cb is not None:
        segment_cb(arena)
    return stats, arena, diag
