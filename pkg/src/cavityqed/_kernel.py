"""Compiled inner loop of the quantum-trajectory stepper.

One call advances a single trajectory by ``uniforms.shape[0]`` steps. All
randomness is passed in (pre-drawn uniforms), so the result depends only
on the inputs and never on thread scheduling.
"""

import numpy as np
from numba import njit

RENORM_BELOW = 1e-6
UNDERFLOW_BELOW = 1e-12


@njit(cache=True, nogil=True, fastmath=True)
def advance(psi, U, jump_ops, weights, diag_weights, is_diag, uniforms, step0,
            transit_steps, transit_uniforms, tpos, transit_partner, excited,
            event_steps, event_kinds, event_fracs):
    """Advance ``psi`` in place; returns ``(n_events, tpos, n_underflow)``.

    Channel ``k`` fires when ``uniforms[s, k] < <psi|weights[k]|psi>/<psi|psi>``;
    column ``K`` breaks ties uniformly among the channels that fired. Transit
    collapses happen after the step whose global index is listed in
    ``transit_steps``; they are recorded with kind ``K``.

    ``event_fracs`` places each jump inside its step: given that channel
    ``k`` fired, ``u / p`` is uniform on [0, 1), the first-order jump time.
    Transit collapses sit at the end of the step (fraction 1).
    """
    D = psi.shape[0]
    K = jump_ops.shape[0]
    n_steps = uniforms.shape[0]
    n_transit = transit_steps.shape[0]
    Ur = np.ascontiguousarray(U.real)
    Ui = np.ascontiguousarray(U.imag)
    pr = np.empty(D)
    pi = np.empty(D)
    for i in range(D):
        pr[i] = psi[i].real
        pi[i] = psi[i].imag
    tr = np.empty(D)
    ti = np.empty(D)
    tmp = np.empty(D, dtype=np.complex128)
    fired = np.empty(K, dtype=np.int64)
    probs = np.empty(K)
    n_events = 0
    n_underflow = 0
    for s in range(n_steps):
        for i in range(D):
            ar = 0.0
            ai = 0.0
            for j in range(D):
                ar += Ur[i, j] * pr[j] - Ui[i, j] * pi[j]
                ai += Ur[i, j] * pi[j] + Ui[i, j] * pr[j]
            tr[i] = ar
            ti[i] = ai
        nrm = 0.0
        for i in range(D):
            pr[i] = tr[i]
            pi[i] = ti[i]
            nrm += tr[i] * tr[i] + ti[i] * ti[i]

        n_fired = 0
        for k in range(K):
            p = 0.0
            if is_diag[k]:
                for i in range(D):
                    p += diag_weights[k, i] * (pr[i] * pr[i] + pi[i] * pi[i])
            else:
                for i in range(D):
                    rr = 0.0
                    ri = 0.0
                    for j in range(D):
                        w = weights[k, i, j]
                        rr += w.real * pr[j] - w.imag * pi[j]
                        ri += w.real * pi[j] + w.imag * pr[j]
                    p += pr[i] * rr + pi[i] * ri
            probs[k] = p / nrm
            if uniforms[s, k] < probs[k]:
                fired[n_fired] = k
                n_fired += 1

        if n_fired > 0:
            pick = int(uniforms[s, K] * n_fired)
            if pick >= n_fired:
                pick = n_fired - 1
            k = fired[pick]
            nrm = 0.0
            for i in range(D):
                acc = 0j
                for j in range(D):
                    acc += jump_ops[k, i, j] * (pr[j] + 1j * pi[j])
                tmp[i] = acc
                nrm += acc.real * acc.real + acc.imag * acc.imag
            scale = 1.0 / np.sqrt(nrm)
            for i in range(D):
                pr[i] = tmp[i].real * scale
                pi[i] = tmp[i].imag * scale
            event_steps[n_events] = step0 + s
            event_kinds[n_events] = k
            event_fracs[n_events] = uniforms[s, k] / probs[k]
            n_events += 1
        elif nrm < RENORM_BELOW:
            if nrm < UNDERFLOW_BELOW:
                n_underflow += 1
            scale = 1.0 / np.sqrt(nrm)
            for i in range(D):
                pr[i] *= scale
                pi[i] *= scale

        while tpos < n_transit and transit_steps[tpos] == step0 + s:
            total = 0.0
            p_exc = 0.0
            for i in range(D):
                w = pr[i] * pr[i] + pi[i] * pi[i]
                total += w
                if excited[i]:
                    p_exc += w
            take_excited = transit_uniforms[tpos] < p_exc / total
            nrm = 0.0
            for i in range(D):
                if excited[i]:
                    tr[i] = 0.0
                    ti[i] = 0.0
                else:
                    src = transit_partner[i] if take_excited else i
                    tr[i] = pr[src]
                    ti[i] = pi[src]
                nrm += tr[i] * tr[i] + ti[i] * ti[i]
            scale = 1.0 / np.sqrt(nrm)
            for i in range(D):
                pr[i] = tr[i] * scale
                pi[i] = ti[i] * scale
            event_steps[n_events] = step0 + s
            event_kinds[n_events] = K
            event_fracs[n_events] = 1.0
            n_events += 1
            tpos += 1
    for i in range(D):
        psi[i] = pr[i] + 1j * pi[i]
    return n_events, tpos, n_underflow
