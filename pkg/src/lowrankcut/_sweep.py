"""Compiled kernel: walk the great circle cut out by each index-set prefix.

For a prefix P of 2r-2 rows of the augmented matrix, the unit vectors c~ with
W_P c~ = 0 form a circle a cos t + b sin t. Every other row j meets the
circle at two antipodal points, which are exactly the vertices P + {j}
(both signs). Walking the circle in t order, each crossing changes the label
of one coordinate, so all cells adjacent to the vertices on the circle are
visited with O(r) work per crossing.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi
EXPAND_DELTA = 1e-7


@njit(cache=True, nogil=True)
def _nearest(y, K):
    x = np.arctan2(y.imag, y.real) * (K / TWO_PI)
    lower = np.ceil(x - 0.5)
    lab = int(lower) % K
    if lower == x - 0.5 and lab == K - 1:
        lab = 0
    return lab


@njit(cache=True, nogil=True)
def _label_at(phase, K):
    x = phase * (K / TWO_PI)
    return int(np.ceil(x - 0.5)) % K


@njit(cache=True, nogil=True)
def _canon_less(a, b, K):
    # canonical (first label rotated to 0) lexicographic comparison a < b
    sa = a[0]
    sb = b[0]
    for i in range(a.size):
        x = (a[i] - sa) % K
        y = (b[i] - sb) % K
        if x != y:
            return x < y
    return False


@njit(cache=True, nogil=True)
def _prefix_options(u, v, t, count, K, opts, nopt, k):
    # a prefix coordinate sits on a boundary line along the whole circle;
    # it keeps both neighbouring labels, or all K where V_i c vanishes
    y = u * np.cos(t) + v * np.sin(t)
    if count >= 2 or abs(y) <= 1e-9 * (abs(u) + abs(v)):
        for m in range(K):
            opts[k, m] = m
        nopt[k] = K
        return
    ph = np.arctan2(y.imag, y.real)
    l1 = _label_at(ph + EXPAND_DELTA, K)
    l2 = _label_at(ph - EXPAND_DELTA, K)
    opts[k, 0] = l1
    if l2 != l1:
        opts[k, 1] = l2
        nopt[k] = 2
    else:
        nopt[k] = 1


@njit(cache=True, nogil=True)
def sweep_batch(V, W, Bm, wnorm, grp, K, prefixes, rank_tol, best_labels, stats):
    """Process a batch of prefixes.

    ``W`` holds the augmented rows in coordinates of their row space and
    ``Bm`` (2r x d) lifts a point of that space back to R^{2r}.

    ``best_labels`` (n,) is updated in place with the batch winner; ``stats``
    holds [best_obj, vertex_count, scored, max_residual, max_norm_dev].
    """
    n, r = V.shape
    N, d = W.shape
    plen = prefixes.shape[1]
    Vc = np.conj(V)
    roots = np.empty(K, dtype=np.complex128)
    for k in range(K):
        roots[k] = np.exp(2j * np.pi * k / K)

    labels = np.zeros(n, dtype=np.int64)
    is_pref = np.zeros(n, dtype=np.int64)
    times = np.empty(2 * N)
    coords = np.empty(2 * N, dtype=np.int64)
    u = np.empty(n, dtype=np.complex128)
    v = np.empty(n, dtype=np.complex128)
    s = np.zeros(r, dtype=np.complex128)
    tot = np.zeros(r, dtype=np.complex128)
    cand = np.empty(n, dtype=np.int64)
    pc = np.empty(plen, dtype=np.int64)
    pcnt = np.empty(plen, dtype=np.int64)
    opts = np.empty((plen, K), dtype=np.int64)
    nopt = np.empty(plen, dtype=np.int64)
    digit = np.empty(plen, dtype=np.int64)
    first_t = np.empty(n)
    cnt = np.zeros(n, dtype=np.int64)
    ev_of = np.empty((n, 2 * (N // n)), dtype=np.int64)
    own_mid = np.empty(2 * N)

    best_obj = stats[0]
    have_best = best_obj > -np.inf

    for p in range(prefixes.shape[0]):
        P = prefixes[p]
        # null space of the prefix rows
        if plen == 0:
            a = np.zeros(d)
            b = np.zeros(d)
            a[0] = 1.0
            b[1] = 1.0
            pmax = -1
        else:
            A = np.empty((plen, d))
            for a_ in range(plen):
                A[a_, :] = W[P[a_], :]
            U_, sv, Vt = np.linalg.svd(A)
            if sv[plen - 1] <= rank_tol * sv[0] or sv[0] == 0.0:
                continue
            a = Vt[d - 2, :].copy()
            b = Vt[d - 1, :].copy()
            pmax = P[plen - 1]
        la = Bm @ a
        lb = Bm @ b

        # prefix coordinates and their multiplicity
        npc = 0
        for a_ in range(plen):
            g = grp[P[a_]]
            found = -1
            for k in range(npc):
                if pc[k] == g:
                    found = k
            if found >= 0:
                pcnt[found] += 1
            else:
                pc[npc] = g
                pcnt[npc] = 1
                npc += 1
        for k in range(npc):
            is_pref[pc[k]] = pcnt[k]

        # complex images of the circle basis: c = c~[r:] + i c~[:r]
        for i in range(n):
            ua = 0j
            vb = 0j
            for k in range(r):
                ua += V[i, k] * complex(la[r + k], la[k])
                vb += V[i, k] * complex(lb[r + k], lb[k])
            u[i] = ua
            v[i] = vb

        # crossings
        E = 0
        for j in range(N):
            al = 0.0
            be = 0.0
            for k in range(d):
                al += W[j, k] * a[k]
                be += W[j, k] * b[k]
            h = np.hypot(al, be)
            if h <= rank_tol * wnorm[j]:
                continue
            t0 = np.arctan2(-al, be)
            if t0 < 0.0:
                t0 += TWO_PI
            t1 = t0 + np.pi
            if t1 >= TWO_PI:
                t1 -= TWO_PI
            times[E] = t0
            coords[E] = grp[j]
            times[E + 1] = t1
            coords[E + 1] = grp[j]
            E += 2
            if j > pmax and is_pref[grp[j]] <= 1:
                stats[1] += 1.0
                ct, sn = np.cos(t0), np.sin(t0)
                nrm = 0.0
                res = abs(al * ct + be * sn)
                for k in range(d):
                    ck = a[k] * ct + b[k] * sn
                    nrm += ck * ck
                for a_ in range(plen):
                    acc = 0.0
                    for k in range(d):
                        acc += W[P[a_], k] * (a[k] * ct + b[k] * sn)
                    res = max(res, abs(acc))
                stats[3] = max(stats[3], res)
                stats[4] = max(stats[4], abs(np.sqrt(nrm) - 1.0))

        order = np.argsort(times[:E], kind="mergesort")
        # a coordinate's state only changes at its own crossings, so it is
        # evaluated midway between consecutive own crossings
        for i in range(n):
            cnt[i] = 0
        for e in range(E):
            i = coords[e]
            ev_of[i, cnt[i]] = e
            cnt[i] += 1
        for i in range(n):
            c = cnt[i]
            first_t[i] = 0.0
            if c == 0:
                continue
            # at most 2 B_K events per coordinate: insertion sort by time
            for x in range(1, c):
                e = ev_of[i, x]
                y = x - 1
                while y >= 0 and times[ev_of[i, y]] > times[e]:
                    ev_of[i, y + 1] = ev_of[i, y]
                    y -= 1
                ev_of[i, y + 1] = e
            tfirst = times[ev_of[i, 0]]
            tlast = times[ev_of[i, c - 1]]
            first_t[i] = 0.5 * (tlast - TWO_PI + tfirst)
            for x in range(c):
                te = times[ev_of[i, x]]
                tn = tfirst + TWO_PI
                for y in range(x + 1, c):
                    if times[ev_of[i, y]] > te + 1e-12:
                        tn = times[ev_of[i, y]]
                        break
                own_mid[ev_of[i, x]] = 0.5 * (te + tn)

        for k in range(r):
            s[k] = 0j
        for i in range(n):
            t = first_t[i]
            if is_pref[i]:
                continue
            lab = _nearest(u[i] * np.cos(t) + v[i] * np.sin(t), K)
            labels[i] = lab
            for k in range(r):
                s[k] += Vc[i, k] * roots[lab]
        for k in range(npc):
            i = pc[k]
            t = first_t[i]
            _prefix_options(u[i], v[i], t, pcnt[k], K, opts, nopt, k)

        changed = True
        for step in range(E + 1):
            if step > 0:
                e = order[step - 1]
                i = coords[e]
                t = own_mid[e]
                if is_pref[i]:
                    for k in range(npc):
                        if pc[k] == i:
                            _prefix_options(u[i], v[i], t, pcnt[k], K, opts, nopt, k)
                    changed = True
                else:
                    lab = _nearest(u[i] * np.cos(t) + v[i] * np.sin(t), K)
                    old = labels[i]
                    if lab != old:
                        for k in range(r):
                            s[k] += Vc[i, k] * (roots[lab] - roots[old])
                        labels[i] = lab
                        changed = True
                if step < E and times[order[step]] == times[e]:
                    continue
            if not changed:
                continue
            changed = False

            combos = 1
            for k in range(npc):
                combos *= nopt[k]
                digit[k] = 0
            for c_ in range(combos):
                for k in range(r):
                    tot[k] = s[k]
                for k in range(npc):
                    lab = opts[k, digit[k]]
                    i = pc[k]
                    for q in range(r):
                        tot[q] += Vc[i, q] * roots[lab]
                obj = 0.0
                for k in range(r):
                    obj += tot[k].real * tot[k].real + tot[k].imag * tot[k].imag
                stats[2] += 1.0
                take = (not have_best) or obj > best_obj
                if not take and obj == best_obj:
                    for i in range(n):
                        cand[i] = labels[i]
                    for k in range(npc):
                        cand[pc[k]] = opts[k, digit[k]]
                    take = _canon_less(cand, best_labels, K)
                if take:
                    best_obj = obj
                    have_best = True
                    for i in range(n):
                        best_labels[i] = labels[i]
                    for k in range(npc):
                        best_labels[pc[k]] = opts[k, digit[k]]
                # mixed-radix increment
                k = 0
                while k < npc:
                    digit[k] += 1
                    if digit[k] < nopt[k]:
                        break
                    digit[k] = 0
                    k += 1

        for k in range(npc):
            is_pref[pc[k]] = 0

    stats[0] = best_obj
