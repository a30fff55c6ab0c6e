"""Jitted engine shared by :class:`~contactnet.graph_state.DynamicState` and the
event loop.

All state primitives are closures inside :func:`engine` so numba compiles them
into the caller's body.  Separate jitted functions taking a dozen arrays each
ran about five times slower per event.
"""

import numpy as np
from numba import njit

from ._rng import randbelow

# meta slots
NE = 0  # current edge count
AR = 1  # total at-risk pairs
FULLDEG = 2  # vertices whose nbr row is full
FULLFOC = 3  # foci whose members row is full

# operations
OP_RUN, OP_ADD, OP_REMOVE, OP_MIGRATE, OP_SAMPLE = 0, 1, 2, 3, 4

# exit codes
DONE, MAXED, GROW, STALLED = 0, 1, 2, 3

# event kinds in the log
FORM, DISSOLVE, MIGRATE = 0, 1, 2

# within-focus density above which pair sampling enumerates instead of rejecting
DENSE_FOCUS_THRESHOLD = 0.75


@njit(cache=True)
def engine(op, arg_a, arg_b, rng,
           focus_of, members, msize, mpos, internal, nbr, nbr_eid, deg, edges, fen, meta,
           rf, rl, rm, exclude_current, t, horizon, max_events,
           log_on, log_t, log_kind, log_a, log_b, log_n):
    """Apply ``op`` to the state arrays.

    Returns ``(status, t, n_events, a, b)``; ``(a, b)`` is the sampled pair
    for ``OP_SAMPLE`` (``(-1, -1)`` when none is at risk).
    """
    n_vert = focus_of.shape[0]
    n_foci = msize.shape[0]

    def fen_add(k, delta):
        i = k + 1
        while i < fen.shape[0]:
            fen[i] += delta
            i += i & (-i)

    def fen_find(r):
        # focus k with prefix(k) <= r < prefix(k + 1)
        n = fen.shape[0] - 1
        step = 1
        while step * 2 <= n:
            step *= 2
        pos = 0
        while step > 0:
            nxt = pos + step
            if nxt <= n and fen[nxt] <= r:
                pos = nxt
                r -= fen[nxt]
            step //= 2
        return pos

    def nbr_slot(u, v):
        for s in range(deg[u]):
            if nbr[u, s] == v:
                return s
        return -1

    def has_edge(u, v):
        if deg[u] <= deg[v]:
            return nbr_slot(u, v) >= 0
        return nbr_slot(v, u) >= 0

    def append_nbr(u, v, e):
        d = deg[u]
        nbr[u, d] = v
        nbr_eid[u, d] = e
        deg[u] = d + 1
        if d + 1 == nbr.shape[1]:
            meta[FULLDEG] += 1

    def drop_nbr(u, v):
        s = nbr_slot(u, v)
        last = deg[u] - 1
        if deg[u] == nbr.shape[1]:
            meta[FULLDEG] -= 1
        nbr[u, s] = nbr[u, last]
        nbr_eid[u, s] = nbr_eid[u, last]
        deg[u] = last

    def add_edge(u, v):
        e = meta[NE]
        edges[e, 0] = min(u, v)
        edges[e, 1] = max(u, v)
        append_nbr(u, v, e)
        append_nbr(v, u, e)
        meta[NE] = e + 1
        k = focus_of[u]
        if k == focus_of[v]:
            internal[k] += 1
            fen_add(k, -1)
            meta[AR] -= 1

    def remove_edge_id(e):
        u = edges[e, 0]
        v = edges[e, 1]
        drop_nbr(u, v)
        drop_nbr(v, u)
        last = meta[NE] - 1
        if e != last:
            a = edges[last, 0]
            b = edges[last, 1]
            edges[e, 0] = a
            edges[e, 1] = b
            nbr_eid[a, nbr_slot(a, b)] = e
            nbr_eid[b, nbr_slot(b, a)] = e
        meta[NE] = last
        k = focus_of[u]
        if k == focus_of[v]:
            internal[k] -= 1
            fen_add(k, 1)
            meta[AR] += 1

    def migrate(v, dest):
        src = focus_of[v]
        if src == dest:
            return
        c_src = 0
        c_dst = 0
        for s in range(deg[v]):
            f = focus_of[nbr[v, s]]
            if f == src:
                c_src += 1
            elif f == dest:
                c_dst += 1
        n_src = msize[src]
        n_dst = msize[dest]
        cap = members.shape[1]
        p = mpos[v]
        w = members[src, n_src - 1]
        members[src, p] = w
        mpos[w] = p
        if n_src == cap:
            meta[FULLFOC] -= 1
        msize[src] = n_src - 1
        members[dest, n_dst] = v
        mpos[v] = n_dst
        msize[dest] = n_dst + 1
        if n_dst + 1 == cap:
            meta[FULLFOC] += 1
        focus_of[v] = dest
        internal[src] -= c_src
        internal[dest] += c_dst
        # C(n-1, 2) - C(n, 2) = -(n - 1);  C(n+1, 2) - C(n, 2) = n
        d_src = c_src - (n_src - 1)
        d_dst = n_dst - c_dst
        fen_add(src, d_src)
        fen_add(dest, d_dst)
        meta[AR] += d_src + d_dst

    def sample_pair():
        total = meta[AR]
        if total <= 0:
            return -1, -1
        k = fen_find(randbelow(rng, total))
        n = msize[k]
        e = internal[k]
        pairs = n * (n - 1) // 2
        if e > DENSE_FOCUS_THRESHOLD * pairs:
            r = randbelow(rng, pairs - e)
            for i in range(n):
                u = members[k, i]
                for j in range(i + 1, n):
                    v = members[k, j]
                    if not has_edge(u, v):
                        if r == 0:
                            return min(u, v), max(u, v)
                        r -= 1
            return -1, -1  # unreachable with consistent counters
        while True:
            i = randbelow(rng, n)
            j = randbelow(rng, n - 1)
            if j >= i:
                j += 1
            u = members[k, i]
            v = members[k, j]
            if not has_edge(u, v):
                return min(u, v), max(u, v)

    if op == OP_ADD:
        add_edge(arg_a, arg_b)
        return DONE, t, 1, arg_a, arg_b
    if op == OP_REMOVE:
        remove_edge_id(nbr_eid[arg_a, nbr_slot(arg_a, arg_b)])
        return DONE, t, 1, arg_a, arg_b
    if op == OP_MIGRATE:
        migrate(arg_a, arg_b)
        return DONE, t, 1, arg_a, arg_b
    if op == OP_SAMPLE:
        a, b = sample_pair()
        return DONE, t, 0, a, b

    # OP_RUN: Gillespie direct method until the horizon or max_events
    r_mig = rm * n_vert
    done = 0
    while done < max_events:
        if meta[FULLDEG] > 0 or meta[FULLFOC] > 0 or meta[NE] >= edges.shape[0]:
            return GROW, t, done, -1, -1
        if log_on and log_n[0] >= log_t.shape[0]:
            return GROW, t, done, -1, -1
        r_form = rf * meta[AR]
        r_diss = rl * meta[NE]
        r_tot = r_form + r_diss + r_mig
        if r_tot <= 0.0:
            return STALLED, t, done, -1, -1
        t_next = t + rng.exponential(1.0) / r_tot
        if t_next > horizon:
            return DONE, horizon, done, -1, -1
        t = t_next
        x = rng.random() * r_tot
        if x < r_form:
            kind = FORM
            a, b = sample_pair()
            add_edge(a, b)
        elif x < r_form + r_diss:
            kind = DISSOLVE
            e = randbelow(rng, meta[NE])
            a = edges[e, 0]
            b = edges[e, 1]
            remove_edge_id(e)
        else:
            kind = MIGRATE
            a = randbelow(rng, n_vert)
            if exclude_current:
                if n_foci > 1:
                    b = randbelow(rng, n_foci - 1)
                    if b >= focus_of[a]:
                        b += 1
                else:
                    b = focus_of[a]
            else:
                b = randbelow(rng, n_foci)
            migrate(a, b)
        if log_on:
            i = log_n[0]
            log_t[i] = t
            log_kind[i] = kind
            log_a[i] = a
            log_b[i] = b
            log_n[0] = i + 1
        done += 1
    return MAXED, t, done, -1, -1


@njit(cache=True)
def fen_build(values):
    n = values.shape[0]
    fen = np.zeros(n + 1, dtype=np.int64)
    for k in range(n):
        i = k + 1
        while i < n + 1:
            fen[i] += values[k]
            i += i & (-i)
    return fen


@njit(cache=True)
def fen_prefix(fen, k):
    """Sum of the first ``k`` entries."""
    s = 0
    i = k
    while i > 0:
        s += fen[i]
        i -= i & (-i)
    return s
