"""Compiled forward sweep for models built from the stock terms.

One call draws (or replays) a single graph: it samples the edge order with
the supplied ``np.random.Generator``, walks the dyads in that order, and
accumulates realized change statistics (g), expected change statistics (G)
and the conditional log-likelihood. The order is shuffled lazily so that
each dyad costs one shuffle draw and one Bernoulli draw.

The dyad loop (``_run``) works on fixed-size buffers and returns early when
the edge list or a neighbour row is full; ``sweep`` grows the buffers and
resumes it. Keeping reallocation out of the hot loop matters a great deal
for numba's code generation.

Term codes must match ``terms.py``.
"""

import numpy as np
from numba import njit

EDGES, TRIANGLES, TWO_STARS, DEGREE, NODECOV, NODECOV_PROD, NODEMATCH, NODEMIX, LOG_ORDER, PREF_ATTACH, SHARED_NBRS = range(11)

WANT_G = 1
WANT_LOGLIK = 2
WANT_ROWS = 4
WANT_ORDER = 8
REPLAY = 16


@njit(cache=True, nogil=True, inline="always")
def _below(rng, m):
    # uniform integer in [0, m); the float route is far cheaper than rng.integers
    # inside numba and its bias (order m / 2^53) is immaterial here
    k = int(rng.random() * m)
    return k if k < m else m - 1


@njit(cache=True, nogil=True, inline="always")
def _find(nbr, nnbr, i, v):
    lo = 0
    hi = nnbr[i]
    while lo < hi:
        mid = (lo + hi) >> 1
        if nbr[i, mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo < nnbr[i] and nbr[i, lo] == v


@njit(cache=True, nogil=True, inline="always")
def _insert(nbr, nnbr, i, v):
    p = nnbr[i]
    while p > 0 and nbr[i, p - 1] > v:
        nbr[i, p] = nbr[i, p - 1]
        p -= 1
    nbr[i, p] = v
    nnbr[i] += 1


@njit(cache=True, nogil=True, inline="always")
def _shared(nbr, nnbr, i, j):
    a, b = i, j
    if nnbr[a] > nnbr[b]:
        a, b = b, a
    count = 0
    for q in range(nnbr[a]):
        if _find(nbr, nnbr, b, nbr[a, q]):
            count += 1
    return count


@njit(cache=True, nogil=True, inline="always")
def _observed(ptr, idx, i, j):
    lo = ptr[i]
    hi = ptr[i + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        if idx[mid] < j:
            lo = mid + 1
        else:
            hi = mid
    return lo < ptr[i + 1] and idx[lo] == j


@njit(cache=True, nogil=True, inline="always")
def _changes(i, j, kinds, par1, par2, attr, deg, pos, n_edges, sn, c):
    for t in range(kinds.shape[0]):
        kind = kinds[t]
        if kind == EDGES:
            c[t] = 1.0
        elif kind == TRIANGLES:
            c[t] = sn
        elif kind == TWO_STARS:
            c[t] = deg[i] + deg[j]
        elif kind == DEGREE:
            k = par1[t]
            di = deg[i]
            dj = deg[j]
            c[t] = (di + 1 == k) + (dj + 1 == k) - (di == k) - (dj == k)
        elif kind == NODECOV:
            c[t] = attr[t, i] + attr[t, j]
        elif kind == NODECOV_PROD:
            c[t] = attr[t, i] * attr[t, j]
        elif kind == NODEMATCH:
            c[t] = 1.0 if attr[t, i] == attr[t, j] else 0.0
        elif kind == NODEMIX:
            a = par1[t]
            b = par2[t]
            xi = attr[t, i]
            xj = attr[t, j]
            c[t] = 1.0 if (xi == a and xj == b) or (xi == b and xj == a) else 0.0
        elif kind == LOG_ORDER:
            c[t] = np.log(max(pos[i], pos[j]))
        elif kind == PREF_ATTACH:
            if pos[i] > pos[j]:
                act = i
                alt = j
            else:
                act = j
                alt = i
            k = par1[t]
            c[t] = np.log(k + deg[alt]) - np.log(k * (pos[act] - 1) + 2 * n_edges - deg[act])
        elif kind == SHARED_NBRS:
            m = min(deg[i], deg[j])
            c[t] = 0.0 if m == 0 else np.log1p(sn / m)


@njit(cache=True, nogil=True, inline="always")
def _decode(n, directed, k, row_start):
    if directed:
        i = k // (n - 1)
        r = k - i * (n - 1)
        j = r + 1 if r >= i else r
        return i, j
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if row_start[mid] <= k:
            lo = mid
        else:
            hi = mid
    return lo, k - row_start[lo] + lo + 1


# slots of the integer loop state
_B, _Q, _STEP, _NE, _MAXNBR = range(5)


@njit(cache=True, nogil=True)
def _run(st, fst, n, directed, vertex_mode, entry, pos, cand, perm, row_start,
         kinds, par1, par2, attr, theta, n_model, need_nbrs, need_tri,
         obs_ptr, obs_idx, flags, rng,
         deg, nbr, nnbr, c, g, G, et, eh, etime, rows, ys, order):
    """Advance the sweep from the saved state; False means a buffer must grow first."""
    p = kinds.shape[0]
    want_G = (flags & WANT_G) != 0
    want_ll = (flags & WANT_LOGLIK) != 0
    want_rows = (flags & WANT_ROWS) != 0
    want_order = (flags & WANT_ORDER) != 0
    replay = (flags & REPLAY) != 0
    nd = n * (n - 1) if directed else n * (n - 1) // 2
    n_blocks = n if vertex_mode else 1
    cap = et.shape[0]
    width = nbr.shape[1]

    step = st[_STEP]
    n_edges = st[_NE]
    maxnbr = st[_MAXNBR]
    ll = fst[0]
    b = st[_B]
    q0 = st[_Q]
    done = True
    while b < n_blocks:
        if vertex_mode:
            if b == 0:
                b += 1
                continue
            v = entry[b]
            m = 2 * b if directed else b
            if q0 == 0:
                for q in range(m):
                    cand[q] = q
        else:
            v = -1
            m = nd
        q = q0
        while q < m:
            if n_edges == cap or (need_nbrs and maxnbr == width):
                done = False
                break
            # lazy Fisher-Yates: position q takes a uniform pick from the rest
            if vertex_mode:
                r = q + _below(rng, m - q)
                code = cand[r]
                cand[r] = cand[q]
                cand[q] = code
                if directed:
                    a = entry[code >> 1]
                    if code & 1:
                        i, j = a, v
                    else:
                        i, j = v, a
                else:
                    a = entry[code]
                    i, j = (v, a) if v < a else (a, v)
            else:
                r = q + _below(rng, m - q)
                code = perm[r]
                perm[r] = perm[q]
                perm[q] = code
                i, j = _decode(n, directed, code, row_start)

            sn = 0
            if need_nbrs and (need_tri or (deg[i] > 0 and deg[j] > 0)):
                sn = _shared(nbr, nnbr, i, j)
            _changes(i, j, kinds, par1, par2, attr, deg, pos, n_edges, sn, c)
            x = 0.0
            for t in range(n_model):
                x += theta[t] * c[t]
            if x >= 0.0:
                prob = 1.0 / (1.0 + np.exp(-x))
            else:
                e = np.exp(x)
                prob = e / (1.0 + e)

            if replay:
                y = _observed(obs_ptr, obs_idx, i, j)
            else:
                y = rng.random() < prob

            if want_G:
                for t in range(p):
                    G[t] += prob * c[t]
            if want_ll:
                # log sigmoid(+-x), stable
                z = x if y else -x
                if z >= 0.0:
                    ll -= np.log1p(np.exp(-z))
                else:
                    ll += z - np.log1p(np.exp(z))
            if want_rows:
                for t in range(p):
                    rows[step, t] = c[t]
                ys[step] = 1 if y else 0
            if want_order:
                order[step, 0] = i
                order[step, 1] = j

            if y:
                for t in range(p):
                    g[t] += c[t]
                if need_nbrs:
                    if not (directed and _find(nbr, nnbr, i, j)):
                        _insert(nbr, nnbr, i, j)
                        _insert(nbr, nnbr, j, i)
                        maxnbr = max(maxnbr, nnbr[i], nnbr[j])
                deg[i] += 1
                deg[j] += 1
                et[n_edges] = i
                eh[n_edges] = j
                etime[n_edges] = step
                n_edges += 1
            step += 1
            q += 1
        if not done:
            st[_Q] = q
            break
        b += 1
        q0 = 0
    st[_B] = b
    st[_STEP] = step
    st[_NE] = n_edges
    st[_MAXNBR] = maxnbr
    fst[0] = ll
    return done


@njit(cache=True, nogil=True)
def _grow_rows(a, width):
    out = np.empty((a.shape[0], width), a.dtype)
    out[:, :a.shape[1]] = a
    return out


@njit(cache=True, nogil=True)
def _grow(a, size):
    out = np.empty(size, a.dtype)
    out[:a.shape[0]] = a
    return out


@njit(cache=True, nogil=True)
def sweep(n, directed, vertex_mode, group_ptr, group_members,
          kinds, par1, par2, attr, theta, n_model,
          obs_ptr, obs_idx, flags, rng):
    """Returns (g, G, loglik, edge_tail, edge_head, edge_time, entry, rows, ys, order)."""
    p = kinds.shape[0]
    want_rows = (flags & WANT_ROWS) != 0
    want_order = (flags & WANT_ORDER) != 0

    nd = n * (n - 1) if directed else n * (n - 1) // 2
    need_nbrs = False
    need_tri = False
    for t in range(p):
        if kinds[t] == TRIANGLES:
            need_tri = True
        if kinds[t] == TRIANGLES or kinds[t] == SHARED_NBRS:
            need_nbrs = True

    deg = np.zeros(n, np.int64)
    nnbr = np.zeros(n, np.int64)
    nbr = np.empty((n if need_nbrs else 0, 8), np.int64)
    pos = np.zeros(n, np.int64)
    c = np.zeros(p)
    g = np.zeros(p)
    G = np.zeros(p)

    cap = 64
    et = np.empty(cap, np.int64)
    eh = np.empty(cap, np.int64)
    etime = np.empty(cap, np.int64)

    rows = np.empty((nd if want_rows else 0, p))
    ys = np.empty(nd if want_rows else 0, np.int8)
    order = np.empty((nd if want_order else 0, 2), np.int64)

    entry = np.empty(n if vertex_mode else 0, np.int64)
    if vertex_mode:
        for gi in range(group_ptr.shape[0] - 1):
            lo = group_ptr[gi]
            hi = group_ptr[gi + 1]
            for q in range(lo, hi):
                entry[q] = group_members[q]
            for q in range(hi - 1, lo, -1):
                r = lo + _below(rng, q - lo + 1)
                tmp = entry[q]
                entry[q] = entry[r]
                entry[r] = tmp
        for q in range(n):
            pos[entry[q]] = q + 1
        cand = np.empty(2 * n if directed else n, np.int64)
        perm = np.empty(0, np.int64)
        row_start = np.empty(0, np.int64)
    else:
        cand = np.empty(0, np.int64)
        perm = np.arange(nd)
        row_start = np.empty(n, np.int64)
        acc = 0
        for q in range(n):
            row_start[q] = acc
            acc += n - q - 1

    st = np.zeros(5, np.int64)
    fst = np.zeros(1)
    while not _run(st, fst, n, directed, vertex_mode, entry, pos, cand, perm, row_start,
                   kinds, par1, par2, attr, theta, n_model, need_nbrs, need_tri,
                   obs_ptr, obs_idx, flags, rng,
                   deg, nbr, nnbr, c, g, G, et, eh, etime, rows, ys, order):
        if st[_NE] == et.shape[0]:
            size = 2 * et.shape[0]
            et = _grow(et, size)
            eh = _grow(eh, size)
            etime = _grow(etime, size)
        if need_nbrs and st[_MAXNBR] == nbr.shape[1]:
            nbr = _grow_rows(nbr, 2 * nbr.shape[1])

    n_edges = st[_NE]
    return g, G, fst[0], et[:n_edges].copy(), eh[:n_edges].copy(), etime[:n_edges].copy(), entry, rows, ys, order


@njit(cache=True, nogil=True, inline="always")
def _logistic(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def grow(n, directed, group_ptr, group_members, theta_edges, theta_pa, k, rng):
    """Graph-only draw for vertex-entry models with edges and pref-attach terms.

    Within the block of an entering vertex every remaining dyad has edge
    probability at most p_max (set by the largest degree so far), so the
    block is thinned: candidate slots arrive after geometric gaps at rate
    p_max and are kept with probability p / p_max. By exchangeability a
    candidate is a uniform pick among the block's not yet revealed dyads.
    G and the log-likelihood need every dyad and are not produced.

    Returns (g_edges, g_pa, edge_tail, edge_head, entry).
    """
    entry = np.empty(n, np.int64)
    for gi in range(group_ptr.shape[0] - 1):
        lo = group_ptr[gi]
        hi = group_ptr[gi + 1]
        for q in range(lo, hi):
            entry[q] = group_members[q]
        for q in range(hi - 1, lo, -1):
            r = lo + _below(rng, q - lo + 1)
            tmp = entry[q]
            entry[q] = entry[r]
            entry[r] = tmp

    deg = np.zeros(n, np.int64)
    cand = np.empty(2 * n if directed else n, np.int64)
    cap = 64
    et = np.empty(cap, np.int64)
    eh = np.empty(cap, np.int64)
    n_edges = 0
    dmax = 0
    g_pa = 0.0
    for b in range(1, n):
        v = entry[b]
        m = 2 * b if directed else b
        revealed = 0
        slot = 0
        while slot < m:
            s_log = np.log(k * b + 2 * n_edges - deg[v])
            d_bound = dmax if theta_pa >= 0.0 else 0
            p_max = _logistic(theta_edges + theta_pa * (np.log(k + d_bound) - s_log))
            if p_max <= 0.0:
                break
            if p_max < 1.0:
                u = 1.0 - rng.random()  # in (0, 1]
                gap = np.floor(np.log(u) / np.log1p(-p_max))
                if gap >= m - slot:
                    break
                slot += int(gap)
            if revealed == 0:
                for q in range(m):
                    cand[q] = q
            r = revealed + _below(rng, m - revealed)
            code = cand[r]
            cand[r] = cand[revealed]
            cand[revealed] = code
            revealed += 1
            slot += 1
            if directed:
                a = entry[code >> 1]
                if code & 1:
                    i, j = a, v
                else:
                    i, j = v, a
            else:
                a = entry[code]
                i, j = (v, a) if v < a else (a, v)
            c = np.log(k + deg[a]) - s_log
            prob = _logistic(theta_edges + theta_pa * c)
            if rng.random() * p_max < prob:
                if n_edges == cap:
                    cap *= 2
                    et = _grow(et, cap)
                    eh = _grow(eh, cap)
                et[n_edges] = i
                eh[n_edges] = j
                n_edges += 1
                deg[i] += 1
                deg[j] += 1
                dmax = max(dmax, deg[i], deg[j])
                g_pa += c
    return float(n_edges), g_pa, et[:n_edges].copy(), eh[:n_edges].copy(), entry
