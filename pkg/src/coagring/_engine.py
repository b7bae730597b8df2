"""Event-driven core loop for one stochastic realization.

The simulation runs in the co-moving frame of the +1 clusters: a cluster
moving right sits at a fixed relative coordinate A = (x - t) mod 1, while
a cluster moving left drifts downward through that frame at speed 2 from
phase B = (x + t) mod 1.  A left-mover's next meeting is therefore with
the first right-mover below it (circularly), and after a pass-through its
target simply advances to the predecessor, so the schedule never needs a
global rescan.  Right-mover positions only ever disappear (a merge that
keeps direction +1 reuses the parent's slot, and a merge to -1 reuses the
left parent's slot), which keeps the sorted array maintenance trivial.

Per meeting the RNG is consumed as: one uniform for the Bernoulli(p)
coagulation trial, then one uniform for the direction rule if the trial
succeeded.  This order is shared with the step-by-step reference path in
``ring_sim`` so both produce identical realizations from the same seed.
"""

from __future__ import annotations

import numpy as np

from .rng import next_uniform

try:
    from numba import njit as _njit

    def _jit(f):
        return _njit(cache=True)(f)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    def _jit(f):
        return f

    HAVE_NUMBA = False

TIE_TOL = 1e-12


@_jit
def _engine(rng_state, n0, p, p0, binomial_init, majority_kernel):
    # ---- initial condition -------------------------------------------------
    x = np.empty(n0)
    for i in range(n0):
        x[i] = next_uniform(rng_state)
    vel = np.empty(n0, dtype=np.int64)
    if binomial_init:
        for i in range(n0):
            if next_uniform(rng_state) < p0:
                vel[i] = 1
            else:
                vel[i] = -1
    else:
        k = int(p0 * n0)
        perm = np.arange(n0)
        for i in range(k):
            j = i + int(next_uniform(rng_state) * (n0 - i))
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
        for i in range(n0):
            vel[i] = -1
        for i in range(k):
            vel[perm[i]] = 1

    np0 = 0
    for i in range(n0):
        if vel[i] == 1:
            np0 += 1
    nm0 = n0 - np0
    z0 = np0 - nm0

    # plus side: sorted relative positions (frame coordinate A = x at t=0)
    a_vals = np.empty(np0)
    mass_p = np.empty(np0, dtype=np.int64)
    gid_p = np.empty(np0, dtype=np.int64)
    ip = 0
    for i in range(n0):
        if vel[i] == 1:
            a_vals[ip] = x[i]
            gid_p[ip] = i
            ip += 1
    order = np.argsort(a_vals)
    a_sorted = a_vals[order]
    gid_p = gid_p[order]
    for i in range(np0):
        mass_p[i] = 1

    # minus side: fixed slots, phase B = x at t=0
    b_phase = np.empty(nm0)
    mass_m = np.empty(nm0, dtype=np.int64)
    gid_m = np.empty(nm0, dtype=np.int64)
    alive_m = np.empty(nm0, dtype=np.bool_)
    tgt = np.empty(nm0)
    next_t = np.empty(nm0)
    jm = 0
    for i in range(n0):
        if vel[i] == -1:
            b_phase[jm] = x[i]
            gid_m[jm] = i
            mass_m[jm] = 1
            alive_m[jm] = True
            jm += 1

    # rank[g]: position of cluster g in the conceptual list (merged clusters
    # are appended at the end); used for deterministic tie-breaking and for
    # the parent ordering of the majority direction draw.
    rank = np.empty(2 * n0, dtype=np.int64)
    for g in range(n0):
        rank[g] = g

    nplive = np0
    nmlive = nm0
    for j in range(nm0):
        if nplive == 0:
            next_t[j] = np.inf
            tgt[j] = -1.0
        else:
            idx = np.searchsorted(a_sorted[:nplive], b_phase[j])
            pred = idx - 1 if idx > 0 else nplive - 1
            gap = (b_phase[j] - a_sorted[pred]) % 1.0
            if gap == 0.0:
                gap = 1.0
            next_t[j] = 0.5 * gap
            tgt[j] = a_sorted[pred]

    coag_t = np.empty(n0)
    coag_z = np.empty(n0, dtype=np.int64)
    coag_n = np.empty(n0, dtype=np.int64)
    coag_mass = np.empty(n0, dtype=np.int64)
    coag_dir = np.empty(n0, dtype=np.int64)
    ncoag = 0
    z = z0
    t = 0.0

    # ---- event loop --------------------------------------------------------
    while nplive > 0 and nmlive > 0:
        tmin = np.inf
        jmin = -1
        for j in range(nm0):
            if alive_m[j] and next_t[j] < tmin:
                tmin = next_t[j]
                jmin = j
        j_star = jmin
        # near-simultaneous meetings: pick the lexicographically smallest
        # (rank, rank) pair among candidates within the tolerance
        n_cand = 0
        for j in range(nm0):
            if alive_m[j] and next_t[j] <= tmin + TIE_TOL:
                n_cand += 1
        if n_cand > 1:
            best_a = np.int64(1 << 60)
            best_b = np.int64(1 << 60)
            for j in range(nm0):
                if alive_m[j] and next_t[j] <= tmin + TIE_TOL:
                    i_t = np.searchsorted(a_sorted[:nplive], tgt[j])
                    gp = gid_p[i_t]
                    gm = gid_m[j]
                    ra = min(rank[gp], rank[gm])
                    rb = max(rank[gp], rank[gm])
                    if ra < best_a or (ra == best_a and rb < best_b):
                        best_a = ra
                        best_b = rb
                        j_star = j

        t_ev = next_t[j_star]
        a_star = tgt[j_star]
        i_star = np.searchsorted(a_sorted[:nplive], a_star)
        t = t_ev
        u1 = next_uniform(rng_state)
        if u1 >= p:
            # pass-through: advance to the predecessor right-mover
            pred = i_star - 1 if i_star > 0 else nplive - 1
            if pred == i_star:
                gap = 1.0
            else:
                gap = (a_star - a_sorted[pred]) % 1.0
                if gap == 0.0:
                    gap = 1.0
            next_t[j_star] = t_ev + 0.5 * gap
            tgt[j_star] = a_sorted[pred]
            continue

        # ---- coagulation ----
        gp = gid_p[i_star]
        gm = gid_m[j_star]
        mp_ = mass_p[i_star]
        mm_ = mass_m[j_star]
        if rank[gp] < rank[gm]:
            m1, v1, m2, v2 = mp_, 1, mm_, -1
        else:
            m1, v1, m2, v2 = mm_, -1, mp_, 1
        u2 = next_uniform(rng_state)
        if majority_kernel:
            newv = v1 if u2 < m1 / (m1 + m2) else v2
        else:
            newv = 1 if u2 < 0.5 else -1

        gnew = n0 + ncoag
        ra = min(rank[gp], rank[gm])
        rb = max(rank[gp], rank[gm])
        for idx in range(nplive):
            g = gid_p[idx]
            r = rank[g]
            if r > rb:
                rank[g] = r - 2
            elif r > ra:
                rank[g] = r - 1
        for j in range(nm0):
            if alive_m[j]:
                g = gid_m[j]
                r = rank[g]
                if r > rb:
                    rank[g] = r - 2
                elif r > ra:
                    rank[g] = r - 1
        rank[gnew] = nplive + nmlive - 2

        mass_new = mp_ + mm_
        x_meet = (a_star + t_ev) % 1.0
        if newv == 1:
            # merged cluster keeps the right-mover's slot and coordinate
            mass_p[i_star] = mass_new
            gid_p[i_star] = gnew
            alive_m[j_star] = False
            next_t[j_star] = np.inf
            nmlive -= 1
        else:
            # drop the right-mover, reuse the left parent's slot
            for idx in range(i_star, nplive - 1):
                a_sorted[idx] = a_sorted[idx + 1]
                mass_p[idx] = mass_p[idx + 1]
                gid_p[idx] = gid_p[idx + 1]
            nplive -= 1
            if nplive == 0:
                for j in range(nm0):
                    next_t[j] = np.inf
            else:
                idx2 = np.searchsorted(a_sorted[:nplive], a_star)
                pred = idx2 - 1 if idx2 > 0 else nplive - 1
                gap_r = (a_star - a_sorted[pred]) % 1.0
                if gap_r == 0.0:
                    gap_r = 1.0
                pred_val = a_sorted[pred]
                for j in range(nm0):
                    if alive_m[j] and j != j_star and tgt[j] == a_star:
                        next_t[j] += 0.5 * gap_r
                        tgt[j] = pred_val
            mass_m[j_star] = mass_new
            gid_m[j_star] = gnew
            b_phase[j_star] = (x_meet + t_ev) % 1.0
            if nplive == 0:
                next_t[j_star] = np.inf
            else:
                u = (b_phase[j_star] - 2.0 * t_ev) % 1.0
                idx2 = np.searchsorted(a_sorted[:nplive], u)
                pred = idx2 - 1 if idx2 > 0 else nplive - 1
                gap = (u - a_sorted[pred]) % 1.0
                if gap == 0.0:
                    gap = 1.0
                next_t[j_star] = t_ev + 0.5 * gap
                tgt[j_star] = a_sorted[pred]

        z += newv
        coag_t[ncoag] = t_ev
        coag_z[ncoag] = z
        coag_n[ncoag] = nplive + nmlive
        coag_mass[ncoag] = mass_new
        coag_dir[ncoag] = newv
        ncoag += 1

    # ---- final state, in list (rank) order ---------------------------------
    n_fin = nplive + nmlive
    pos_f = np.empty(n_fin)
    vel_f = np.empty(n_fin, dtype=np.int64)
    mass_f = np.empty(n_fin, dtype=np.int64)
    rk = np.empty(n_fin, dtype=np.int64)
    m = 0
    for idx in range(nplive):
        pos_f[m] = (a_sorted[idx] + t) % 1.0
        vel_f[m] = 1
        mass_f[m] = mass_p[idx]
        rk[m] = rank[gid_p[idx]]
        m += 1
    for j in range(nm0):
        if alive_m[j]:
            pos_f[m] = (b_phase[j] - t) % 1.0
            vel_f[m] = -1
            mass_f[m] = mass_m[j]
            rk[m] = rank[gid_m[j]]
            m += 1
    order_f = np.argsort(rk)
    pos_f = pos_f[order_f]
    vel_f = vel_f[order_f]
    mass_f = mass_f[order_f]

    return (
        pos_f,
        vel_f,
        mass_f,
        coag_t[:ncoag].copy(),
        coag_z[:ncoag].copy(),
        coag_n[:ncoag].copy(),
        coag_mass[:ncoag].copy(),
        coag_dir[:ncoag].copy(),
        z0,
    )


def run_engine(rng_state, n0, p, p0, binomial_init, majority_kernel):
    """Run one realization; returns the raw engine arrays."""
    with np.errstate(over="ignore"):
        return _engine(
            rng_state,
            np.int64(n0),
            float(p),
            float(p0),
            bool(binomial_init),
            bool(majority_kernel),
        )
