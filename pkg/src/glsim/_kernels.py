"""Compiled per-(gate, window) simulation kernels.

Everything here operates on flat numpy arrays prepared by
:mod:`glsim.simcore` so the hot loops can be jitted and run with the GIL
released.  One call to :func:`sim_span` simulates a contiguous slice of one
logic level's gates over a contiguous range of windows; tasks touching
disjoint gate/window slices never share mutable state, so any number of
them may run concurrently between level barriers.
"""

import numpy as np
from numba import njit

I64MAX = np.iinfo(np.int64).max


@njit(cache=True, nogil=True)
def sim_span(oi_lo, oi_hi, w_lo, w_hi, w_off,
             order, pin_off, pin_net, pin_ic, pin_arc, arc_rows,
             lut_off, lut_bits, out_net, net_kind, net_slot,
             stim_buf, stim_off, stim_cnt,
             init_vals, boundaries,
             gbuf, g_off, g_cap, g_cnt,
             out_filt, out_icf, out_disc, out_err, out_peak,
             pct):
    """Simulate gates ``order[oi_lo:oi_hi]`` over windows ``[w_lo, w_hi)``.

    Per gate and window the loop is: find the earliest pending delayed input
    transition (dropping input pulse pairs narrower than the pin's
    interconnect delay), consume every pin arriving at that instant, evaluate
    the truth table once, look up the conditioned arc delay (maximum over the
    switching pins), and emit the output edge through the inertial filter: a
    new edge that lands at or before the newest surviving edge, or closer to
    it than ``delay * pct / 100``, cancels that pulse entirely; the cancelled
    edge's predecessor then becomes the comparison target for later edges.
    Edges landing at or past the window end are dropped (counted, value still
    tracked).

    Gate output regions are addressed by ``g_off``/``g_cap`` (columns are
    ``window - w_off``); ``g_cnt`` receives the stored toggle count and is
    also how fanin waveforms of completed levels are read back.  ``out_peak``
    records the high-water region occupancy, which sizes the second pass's
    regions; retractions can transiently pop stored edges when the filter
    threshold is scaled below the full path delay, so the peak may then
    exceed the final count (at 100 percent they are provably equal).
    """
    pos = np.empty(16, np.int64)
    nxt = np.empty(16, np.int64)
    val = np.empty(16, np.uint8)
    sof = np.empty(16, np.int64)
    scn = np.empty(16, np.int64)
    sst = np.empty(16, np.uint8)

    for oi in range(oi_lo, oi_hi):
        g = order[oi]
        p0 = pin_off[g]
        k = pin_off[g + 1] - p0
        lidx = lut_off[g]
        for w in range(w_lo, w_hi):
            wj = w - w_off
            wend = boundaries[w + 1]
            idx = 0
            for p in range(k):
                n = pin_net[p0 + p]
                s = net_slot[n]
                if net_kind[n] == 0:
                    sof[p] = stim_off[s, w]
                    scn[p] = stim_cnt[s, w]
                    sst[p] = 1
                else:
                    sof[p] = g_off[s, wj]
                    scn[p] = g_cnt[s, wj]
                    sst[p] = 0
                pos[p] = 0
                nxt[p] = -1  # needs refresh
                v = init_vals[n, w]
                val[p] = v
                if v:
                    idx |= 1 << p
            y = lut_bits[lidx + idx]

            cnt = 0
            peak = 0
            filt = 0
            icf = 0
            disc = 0
            has_last = False
            t_last = 0
            last_stored = False
            roff = g_off[g, wj]
            rcap = g_cap[g, wj]
            err = 0

            while True:
                tmin = I64MAX
                for p in range(k):
                    if nxt[p] == -1:
                        d = pin_ic[p0 + p]
                        while pos[p] + 1 < scn[p]:
                            if sst[p]:
                                ta = stim_buf[sof[p] + pos[p]]
                                tb = stim_buf[sof[p] + pos[p] + 1]
                            else:
                                ta = gbuf[sof[p] + pos[p]]
                                tb = gbuf[sof[p] + pos[p] + 1]
                            if tb - ta < d:
                                pos[p] += 2
                                icf += 1
                            else:
                                break
                        if pos[p] < scn[p]:
                            if sst[p]:
                                nxt[p] = stim_buf[sof[p] + pos[p]] + d
                            else:
                                nxt[p] = gbuf[sof[p] + pos[p]] + d
                        else:
                            nxt[p] = I64MAX
                    if nxt[p] < tmin:
                        tmin = nxt[p]
                if tmin == I64MAX:
                    break

                sw = 0
                for p in range(k):
                    if nxt[p] == tmin:
                        pos[p] += 1
                        nxt[p] = -1
                        if val[p]:
                            val[p] = 0
                            idx &= ~(1 << p)
                        else:
                            val[p] = 1
                            idx |= 1 << p
                        sw |= 1 << p

                new_y = lut_bits[lidx + idx]
                if new_y != y:
                    col = 0 if new_y == 1 else 1
                    dly = 0
                    for p in range(k):
                        if sw & (1 << p):
                            row = 0
                            j = 0
                            for q in range(k):
                                if q != p:
                                    if val[q]:
                                        row |= 1 << j
                                    j += 1
                            a = arc_rows[pin_arc[p0 + p] + row, col]
                            if a > dly:
                                dly = a
                    t_out = tmin + dly
                    thr = dly * pct // 100
                    # the newest edge stays in registers until a later edge
                    # survives past it; the retraction target after that is
                    # the newest stored edge still in the region
                    if has_last:
                        have_tgt = True
                        t_tgt = t_last
                    elif cnt > 0:
                        have_tgt = True
                        t_tgt = gbuf[roff + cnt - 1]
                    else:
                        have_tgt = False
                        t_tgt = 0
                    if have_tgt and (t_out <= t_tgt or t_out - t_tgt < thr):
                        # pulse narrower than the inertial threshold (or a
                        # schedule collision): cancel the pair in full
                        if has_last:
                            if not last_stored:
                                disc -= 1
                            has_last = False
                        else:
                            cnt -= 1
                        filt += 1
                    else:
                        if has_last and last_stored:
                            if cnt < rcap:
                                gbuf[roff + cnt] = t_last
                                cnt += 1
                            else:
                                err = 1
                                cnt += 1
                            if cnt > peak:
                                peak = cnt
                        if t_out < wend:
                            last_stored = True
                        else:
                            disc += 1
                            last_stored = False
                        has_last = True
                        t_last = t_out
                    y = new_y

            if has_last and last_stored:
                if cnt < rcap:
                    gbuf[roff + cnt] = t_last
                    cnt += 1
                else:
                    err = 1
                    cnt += 1
                if cnt > peak:
                    peak = cnt
            g_cnt[g, wj] = cnt
            out_filt[g, wj] = filt
            out_icf[g, wj] = icf
            out_disc[g, wj] = disc
            out_peak[g, wj] = peak
            if err:
                out_err[g, wj] = 1


@njit(cache=True)
def init_values(order, pin_off, pin_net, lut_off, lut_bits, out_net,
                num_nets, stim_init):
    """Zero-delay window-start value of every net, shape (nets, windows)."""
    W = stim_init.shape[1]
    vals = np.zeros((num_nets, W), np.uint8)
    vals[:stim_init.shape[0], :] = stim_init
    for oi in range(order.shape[0]):
        g = order[oi]
        p0 = pin_off[g]
        k = pin_off[g + 1] - p0
        lidx = lut_off[g]
        for w in range(W):
            idx = 0
            for p in range(k):
                if vals[pin_net[p0 + p], w]:
                    idx |= 1 << p
            vals[out_net[g], w] = lut_bits[lidx + idx]
    return vals


@njit(cache=True)
def level_ub(order, oi_lo, oi_hi, pin_off, pin_net, net_kind, net_slot,
             stim_cnt, g_cnt, w_lo, w_hi, w_off, ub):
    """Upper bound on output toggles: one output edge needs one input edge."""
    for i in range(oi_hi - oi_lo):
        g = order[oi_lo + i]
        p0 = pin_off[g]
        k = pin_off[g + 1] - p0
        for w in range(w_lo, w_hi):
            total = 0
            for p in range(k):
                n = pin_net[p0 + p]
                s = net_slot[n]
                if net_kind[n] == 0:
                    total += stim_cnt[s, w]
                else:
                    total += g_cnt[s, w - w_off]
            ub[i, w - w_lo] = total


@njit(cache=True, nogil=True)
def dwell_sweep(net_kind, net_slot,
                stim_buf, stim_off, stim_cnt, stim_init,
                gbuf, g_off, g_cnt, g_init,
                boundaries, w_lo, w_hi, w_off,
                t0_out, t1_out, tc_out):
    """Accumulate per-net time-at-0 / time-at-1 / toggle counts over windows."""
    for n in range(net_kind.shape[0]):
        s = net_slot[n]
        acc0 = 0
        acc1 = 0
        tcn = 0
        for w in range(w_lo, w_hi):
            if net_kind[n] == 0:
                off = stim_off[s, w]
                cnt = stim_cnt[s, w]
                v = stim_init[s, w]
            else:
                off = g_off[s, w - w_off]
                cnt = g_cnt[s, w - w_off]
                v = g_init[s, w - w_off]
            prev = boundaries[w]
            for i in range(cnt):
                if net_kind[n] == 0:
                    t = stim_buf[off + i]
                else:
                    t = gbuf[off + i]
                if v:
                    acc1 += t - prev
                else:
                    acc0 += t - prev
                v ^= 1
                prev = t
            endt = boundaries[w + 1]
            if v:
                acc1 += endt - prev
            else:
                acc0 += endt - prev
            tcn += cnt
        t0_out[n] += acc0
        t1_out[n] += acc1
        tc_out[n] += tcn
