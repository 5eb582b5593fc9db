"""Compiled gate loop. Semantics mirror ``detector.step_gate`` + ``self_difference``."""

import numba
import numpy as np


@numba.njit(cache=True)
def run_chunk(rng, photons, positions, frame_gates, gate_offset,
              eta, dark, ap_increment, ap_decay, eps, eps_slope,
              h, prev_aval, skip_empty, clicks, avalanches, keep_avalanches):
    """Advance the detector over ``photons.shape[0]`` frames.

    Writes global gate indices of clicks (and, if requested, avalanches) into
    the preallocated buffers. Returns ``(n_clicks, n_avalanches, h, prev_aval)``.

    With ``skip_empty`` set, runs of unilluminated gates at zero trap hazard
    are crossed with a geometric draw for the next dark count; the result is
    distributionally identical to stepping them one by one.
    """
    n_frames = photons.shape[0]
    n_slots = positions.shape[0]
    keep_dark = 1.0 - dark
    keep_photon = 1.0 - eta
    nc = 0
    na = 0
    for f in range(n_frames):
        base = gate_offset + f * frame_gates
        j = 0
        s = 0
        while j < frame_gates:
            n = 0
            if s < n_slots and positions[s] == j:
                n = photons[f, s]
                s += 1
            elif skip_empty and h == 0.0:
                nxt = frame_gates
                if s < n_slots:
                    nxt = positions[s]
                gap = nxt - j
                d = gap + 1
                if dark > 0.0:
                    d = rng.geometric(dark)
                if d > gap:
                    prev_aval = False
                    j = nxt
                    continue
                if d > 1:
                    prev_aval = False
                j += d - 1
                # gate j now carries a dark avalanche
                g = base + j
                if keep_avalanches:
                    avalanches[na] = g
                na += 1
                if not prev_aval:
                    clicks[nc] = g
                    nc += 1
                elif eps >= 1.0 or (eps > 0.0 and rng.random() < eps):
                    clicks[nc] = g
                    nc += 1
                h = ap_increment
                prev_aval = True
                j += 1
                continue

            p_quiet = keep_dark * (1.0 - h)
            if n > 0:
                p_quiet *= keep_photon ** n
            aval = rng.random() < 1.0 - p_quiet
            if aval:
                g = base + j
                if keep_avalanches:
                    avalanches[na] = g
                na += 1
                if not prev_aval:
                    clicks[nc] = g
                    nc += 1
                else:
                    e = eps + eps_slope * n
                    if e >= 1.0 or (e > 0.0 and rng.random() < e):
                        clicks[nc] = g
                        nc += 1
                h = h * ap_decay + ap_increment
            else:
                h = h * ap_decay
            prev_aval = aval
            j += 1
    return nc, na, h, prev_aval
