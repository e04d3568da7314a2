"""Batched RK4 integrator for the linearized side-mode equations.

State columns evolve independently, so one kernel serves three callers:
single-trajectory runs (one column), basis-propagator builds for the
ensemble module (one column per grid cell), and straggler continuation
batches. The end-fire field is slaved: it is recomputed from the matter
fields at every stage, never stepped itself.

The backward side-mode carries a fast -2i phase rotation, which is
integrated exactly: the RK4 stages act on the rotating-frame variable
v = exp(2i s) psi_minus within each step, so the stiff rotation costs
nothing in accuracy (Lawson / integrating-factor RK4).

No fastmath anywhere: results must be bitwise reproducible.
"""

import numba
import numpy as np

NAN_ABORT = 1  # status flag: column hit a non-finite field value


@numba.njit(cache=True, nogil=True)
def slave_field(PP, PM, psi0, dxi, coup, backward, E):
    """Cumulative-trapezoid end-fire field for every column.

    E[g, b] = -i coup * integral_0^xi_g (psi0 conj(PP) + PM psi0) along the
    cell centers; the first cell carries zero (integral starts there).
    """
    G, B = PP.shape
    for b in range(B):
        E[0, b] = 0.0j
    if backward:
        for g in range(1, G):
            for b in range(B):
                f0 = psi0[g - 1] * np.conj(PP[g - 1, b]) + PM[g - 1, b] * psi0[g - 1]
                f1 = psi0[g] * np.conj(PP[g, b]) + PM[g, b] * psi0[g]
                E[g, b] = E[g - 1, b] + (f0 + f1) * (dxi * 0.5)
    else:
        for g in range(1, G):
            for b in range(B):
                f0 = psi0[g - 1] * np.conj(PP[g - 1, b])
                f1 = psi0[g] * np.conj(PP[g, b])
                E[g, b] = E[g - 1, b] + (f0 + f1) * (dxi * 0.5)
    c = -1j * coup
    for g in range(G):
        for b in range(B):
            E[g, b] = c * E[g, b]


@numba.njit(cache=True, nogil=True)
def rk4_step(PP, PM, psi0, dxi, coup, backward, h, E1, E2, PPa, PMa, KP, KV):
    """Advance all columns by one step; E1 holds E(state) on entry and exit."""
    G, B = PP.shape
    rot_h = np.exp(-2j * h)  # exact one-step rotation of psi_minus
    rot_h2 = np.exp(-1j * h)
    cr2 = np.conj(rot_h2)
    crh = np.conj(rot_h)
    half = 0.5 * h

    # stage 1 at the step start
    for g in range(G):
        p0 = psi0[g]
        for b in range(B):
            k1p = -1j * np.conj(E1[g, b]) * p0
            KP[g, b] = k1p
            PPa[g, b] = PP[g, b] + half * k1p
    if backward:
        for g in range(G):
            p0 = psi0[g]
            for b in range(B):
                k1v = -1j * E1[g, b] * p0
                KV[g, b] = k1v
                PMa[g, b] = rot_h2 * (PM[g, b] + half * k1v)
    slave_field(PPa, PMa, psi0, dxi, coup, backward, E2)

    # stage 2 at midpoint
    for g in range(G):
        p0 = psi0[g]
        for b in range(B):
            k2p = -1j * np.conj(E2[g, b]) * p0
            KP[g, b] += 2.0 * k2p
            PPa[g, b] = PP[g, b] + half * k2p
    if backward:
        for g in range(G):
            p0 = psi0[g]
            for b in range(B):
                k2v = cr2 * (-1j * E2[g, b] * p0)
                KV[g, b] += 2.0 * k2v
                PMa[g, b] = rot_h2 * (PM[g, b] + half * k2v)
    slave_field(PPa, PMa, psi0, dxi, coup, backward, E2)

    # stage 3 at midpoint
    for g in range(G):
        p0 = psi0[g]
        for b in range(B):
            k3p = -1j * np.conj(E2[g, b]) * p0
            KP[g, b] += 2.0 * k3p
            PPa[g, b] = PP[g, b] + h * k3p
    if backward:
        for g in range(G):
            p0 = psi0[g]
            for b in range(B):
                k3v = cr2 * (-1j * E2[g, b] * p0)
                KV[g, b] += 2.0 * k3v
                PMa[g, b] = rot_h * (PM[g, b] + h * k3v)
    slave_field(PPa, PMa, psi0, dxi, coup, backward, E2)

    # stage 4 at the step end, then combine
    for g in range(G):
        p0 = psi0[g]
        for b in range(B):
            k4p = -1j * np.conj(E2[g, b]) * p0
            PP[g, b] = PP[g, b] + (h / 6.0) * (KP[g, b] + k4p)
    if backward:
        for g in range(G):
            p0 = psi0[g]
            for b in range(B):
                k4v = crh * (-1j * E2[g, b] * p0)
                PM[g, b] = rot_h * (PM[g, b] + (h / 6.0) * (KV[g, b] + k4v))
    slave_field(PP, PM, psi0, dxi, coup, backward, E1)


@numba.njit(cache=True, nogil=True)
def integrate_batch(
    PP, PM, psi0, dxi, coup, backward, h, n_steps,
    counter_scale, thr_stop, counters, e_rows, status,
):
    """Integrate all columns for up to n_steps steps.

    counters[b] accumulates the emitted-photon counter by trapezoid of
    counter_scale * |E(last cell)|^2; it may enter nonzero (continuation
    runs). e_rows[k, b] records E(last cell) after k steps, row 0 being
    the initial state. When thr_stop is finite the loop exits as soon as
    every column has either reached thr_stop or gone non-finite. Returns
    the number of steps taken.
    """
    G, B = PP.shape
    E1 = np.empty((G, B), dtype=np.complex128)
    E2 = np.empty((G, B), dtype=np.complex128)
    PPa = np.empty((G, B), dtype=np.complex128)
    PMa = np.empty((G, B), dtype=np.complex128)
    KP = np.empty((G, B), dtype=np.complex128)
    KV = np.empty((G, B), dtype=np.complex128)
    for g in range(G):
        for b in range(B):
            PMa[g, b] = 0.0j

    i_prev = np.empty(B, dtype=np.float64)
    done = np.zeros(B, dtype=np.uint8)
    n_done = 0

    slave_field(PP, PM, psi0, dxi, coup, backward, E1)
    last = G - 1
    for b in range(B):
        e = E1[last, b]
        e_rows[0, b] = e
        i_prev[b] = counter_scale * (e.real * e.real + e.imag * e.imag)
        if not np.isfinite(i_prev[b]):
            status[b] = NAN_ABORT
            done[b] = 1
            n_done += 1
        elif counters[b] >= thr_stop:
            done[b] = 1
            n_done += 1
    if n_done == B:
        return 0

    steps = 0
    for k in range(1, n_steps + 1):
        rk4_step(PP, PM, psi0, dxi, coup, backward, h, E1, E2, PPa, PMa, KP, KV)
        steps = k
        for b in range(B):
            e = E1[last, b]
            e_rows[k, b] = e
            inew = counter_scale * (e.real * e.real + e.imag * e.imag)
            if done[b] == 0:
                if not np.isfinite(inew):
                    status[b] = NAN_ABORT
                    done[b] = 1
                    n_done += 1
                else:
                    counters[b] += 0.5 * h * (i_prev[b] + inew)
                    if counters[b] >= thr_stop:
                        done[b] = 1
                        n_done += 1
            i_prev[b] = inew
        if n_done == B:
            break
    return steps
