"""Compiled first-improvement descent over a fixed-slot route array.

Routes live in ``R[k, :L[k]]`` (local customer ids, depot 0 implicit at both
ends) with loads in ``W[k]``. Overload is charged ``pen`` per unit of
excess demand. Neighbourhoods are scanned in a fixed order: intra-route
2-opt, relocate, swap, tail exchange (2-opt*).
"""

import numba
import numpy as np

_EPS = 1e-9


@numba.njit(cache=True)
def _ex(x, cap):
    return x - cap if x > cap else 0


@numba.njit(cache=True)
def _two_opt(d, R, L, r):
    improved = False
    changed = True
    while changed:
        changed = False
        n = L[r]
        for i in range(n - 1):
            a = R[r, i - 1] if i > 0 else 0
            b = R[r, i]
            dab = d[a, b]
            for j in range(i + 2, n + 1):
                c = R[r, j - 1]
                e = R[r, j] if j < n else 0
                if d[a, c] + d[b, e] - dab - d[c, e] < -_EPS:
                    lo, hi = i, j - 1
                    while lo < hi:
                        R[r, lo], R[r, hi] = R[r, hi], R[r, lo]
                        lo += 1
                        hi -= 1
                    changed = improved = True
                    break
            if changed:
                break
    return improved


@numba.njit(cache=True)
def _remove(R, L, r, pos):
    u = R[r, pos]
    for t in range(pos, L[r] - 1):
        R[r, t] = R[r, t + 1]
    L[r] -= 1
    return u


@numba.njit(cache=True)
def _insert(R, L, r, pos, u):
    for t in range(L[r], pos, -1):
        R[r, t] = R[r, t - 1]
    R[r, pos] = u
    L[r] += 1


@numba.njit(cache=True)
def _relocate(d, dem, cap, pen, R, L, W):
    k = R.shape[0]
    improved = False
    for r1 in range(k):
        pos = 0
        while pos < L[r1]:
            n1 = L[r1]
            u = R[r1, pos]
            q = dem[u]
            prev = R[r1, pos - 1] if pos > 0 else 0
            nxt = R[r1, pos + 1] if pos + 1 < n1 else 0
            gain = d[prev, u] + d[u, nxt] - d[prev, nxt]
            out_gain = gain + pen * (_ex(W[r1], cap) - _ex(W[r1] - q, cap))
            best_r, best_p = -1, -1
            opened = False
            for r2 in range(k):
                if r2 == r1:
                    if n1 < 3:
                        continue
                    # positions index the route with u removed
                    a = 0
                    for p2 in range(n1):
                        if p2 < n1 - 1:
                            b = R[r1, p2] if p2 < pos else R[r1, p2 + 1]
                        else:
                            b = 0
                        if p2 != pos and d[a, u] + d[u, b] - d[a, b] - gain < -_EPS:
                            best_r, best_p = r2, p2
                            break
                        a = b
                    if best_r >= 0:
                        break
                    continue
                cost_in = pen * (_ex(W[r2] + q, cap) - _ex(W[r2], cap))
                n2 = L[r2]
                if n2 == 0:
                    if opened or n1 == 1:
                        continue
                    opened = True
                    if 2.0 * d[u, 0] + cost_in - out_gain < -_EPS:
                        best_r, best_p = r2, 0
                        break
                    continue
                limit = out_gain - cost_in
                a = 0
                for p2 in range(n2 + 1):
                    b = R[r2, p2] if p2 < n2 else 0
                    if d[a, u] + d[u, b] - d[a, b] - limit < -_EPS:
                        best_r, best_p = r2, p2
                        break
                    a = b
                if best_r >= 0:
                    break
            if best_r < 0:
                pos += 1
                continue
            _remove(R, L, r1, pos)
            _insert(R, L, best_r, best_p, u)
            if best_r != r1:
                W[r1] -= q
                W[best_r] += q
            improved = True
    return improved


@numba.njit(cache=True)
def _swap(d, dem, cap, pen, R, L, W):
    k = R.shape[0]
    improved = False
    for r1 in range(k):
        for r2 in range(r1 + 1, k):
            if L[r1] == 0 or L[r2] == 0:
                continue
            i = 0
            while i < L[r1]:
                n1, n2 = L[r1], L[r2]
                u = R[r1, i]
                pu = R[r1, i - 1] if i > 0 else 0
                nu = R[r1, i + 1] if i + 1 < n1 else 0
                base_u = d[pu, u] + d[u, nu]
                l1, l2 = W[r1], W[r2]
                ex0 = _ex(l1, cap) + _ex(l2, cap)
                done = False
                for j in range(n2):
                    v = R[r2, j]
                    shift = dem[v] - dem[u]
                    pv = R[r2, j - 1] if j > 0 else 0
                    nv = R[r2, j + 1] if j + 1 < n2 else 0
                    delta = (
                        d[pu, v] + d[v, nu] - base_u
                        + d[pv, u] + d[u, nv] - d[pv, v] - d[v, nv]
                    )
                    if shift != 0:
                        delta += pen * (_ex(l1 + shift, cap) + _ex(l2 - shift, cap) - ex0)
                    if delta < -_EPS:
                        R[r1, i] = v
                        R[r2, j] = u
                        W[r1] += shift
                        W[r2] -= shift
                        improved = done = True
                        break
                if not done:
                    i += 1
    return improved


@numba.njit(cache=True)
def _tail_exchange(d, dem, cap, pen, R, L, W, buf):
    k = R.shape[0]
    improved = False
    for r1 in range(k):
        for r2 in range(r1 + 1, k):
            na, nb = L[r1], L[r2]
            if na == 0 or nb == 0:
                continue
            la, lb = W[r1], W[r2]
            ex0 = _ex(la, cap) + _ex(lb, cap)
            found_i, found_j = -1, -1
            pa = 0
            for i in range(na + 1):
                a_last = R[r1, i - 1] if i > 0 else 0
                a_next = R[r1, i] if i < na else 0
                base_a = d[a_last, a_next]
                pb = 0
                for j in range(nb + 1):
                    trivial = (i == 0 and j == 0) or (i == na and j == nb)
                    if not trivial:
                        b_last = R[r2, j - 1] if j > 0 else 0
                        b_next = R[r2, j] if j < nb else 0
                        delta = d[a_last, b_next] + d[b_last, a_next] - base_a - d[b_last, b_next]
                        delta += pen * (
                            _ex(pa + lb - pb, cap) + _ex(pb + la - pa, cap) - ex0
                        )
                        if delta < -_EPS:
                            found_i, found_j = i, j
                            break
                    if j < nb:
                        pb += dem[R[r2, j]]
                if found_i >= 0:
                    break
                if i < na:
                    pa += dem[R[r1, i]]
            if found_i < 0:
                continue
            i, j = found_i, found_j
            # new r1 = a[:i] + b[j:], new r2 = b[:j] + a[i:]
            t = 0
            for s in range(i, na):
                buf[t] = R[r1, s]
                t += 1
            for s in range(j, nb):
                R[r1, i + s - j] = R[r2, s]
            for s in range(t):
                R[r2, j + s] = buf[s]
            L[r1] = i + nb - j
            L[r2] = j + na - i
            new_a = 0
            for s in range(L[r1]):
                new_a += dem[R[r1, s]]
            W[r2] = la + lb - new_a
            W[r1] = new_a
            improved = True
    return improved


@numba.njit(cache=True)
def descend_kernel(d, dem, cap, pen, R, L, W):
    """Run the descent to a local optimum in place."""
    buf = np.empty(R.shape[1], dtype=R.dtype)
    k = R.shape[0]
    while True:
        moved = False
        for r in range(k):
            if L[r] >= 3 and _two_opt(d, R, L, r):
                moved = True
        if _relocate(d, dem, cap, pen, R, L, W):
            moved = True
        if _swap(d, dem, cap, pen, R, L, W):
            moved = True
        if _tail_exchange(d, dem, cap, pen, R, L, W, buf):
            moved = True
        if not moved:
            break
