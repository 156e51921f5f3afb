"""Hot loops. Each kernel has a numba body and a numpy/Python fallback.

The fallback is chosen when numba is missing or ``STRUCTDIV_NO_NUMBA`` is
set; see :mod:`structdiv._accel`.
"""
import numpy as np

from ._accel import HAS_NUMBA, njit, prange


# --- all-pairs Jensen-Bregman ------------------------------------------------

@njit(cache=True, fastmath=False)
def _jbd_pairs_serial(P, S, h, alpha, out):
    m, n = P.shape
    e = alpha - 1.0
    for a in range(m):
        out[a, a] = 0.0
        for b in range(a + 1, m):
            acc = 0.0
            for i in range(n):
                s = 0.5 * (S[a, i] + S[b, i])
                mu = 0.5 * (P[a, i] + P[b, i])
                if alpha == 2.0:
                    acc += mu * s
                elif alpha == 3.0:
                    acc += mu * s * s
                elif alpha == 4.0:
                    acc += mu * s * s * s
                else:
                    acc += mu * s ** e
            val = (1.0 - acc) / e - 0.5 * (h[a] + h[b])
            out[a, b] = val
            out[b, a] = val
    return out


@njit(cache=True, parallel=True, fastmath=False)
def _jbd_pairs_parallel(P, S, h, alpha, out):
    m, n = P.shape
    e = alpha - 1.0
    for a in prange(m):
        out[a, a] = 0.0
        for b in range(a + 1, m):
            acc = 0.0
            for i in range(n):
                s = 0.5 * (S[a, i] + S[b, i])
                mu = 0.5 * (P[a, i] + P[b, i])
                acc += mu * s ** e
            val = (1.0 - acc) / e - 0.5 * (h[a] + h[b])
            out[a, b] = val
            out[b, a] = val
    return out


def _jbd_pairs_numpy(P, S, h, alpha, out, block=64):
    m = P.shape[0]
    e = alpha - 1.0
    for start in range(0, m, block):
        stop = min(m, start + block)
        mu = 0.5 * (P[start:stop, None, :] + P[None, :, :])
        s = 0.5 * (S[start:stop, None, :] + S[None, :, :])
        hm = (1.0 - np.einsum("abi,abi->ab", mu, s ** e)) / e
        out[start:stop] = hm - 0.5 * (h[start:stop, None] + h[None, :])
    np.fill_diagonal(out, 0.0)
    # blocks fill both triangles independently; symmetrize bitwise
    iu = np.triu_indices(m, 1)
    out[(iu[1], iu[0])] = out[iu]
    return out


def jbd_pairs(P, S, h, alpha, threads=1):
    """Pairwise midpoint-entropy gaps from precomputed ``S = P Z`` and entropies ``h``."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    S = np.ascontiguousarray(S, dtype=np.float64)
    h = np.ascontiguousarray(h, dtype=np.float64)
    out = np.empty((P.shape[0], P.shape[0]))
    if not HAS_NUMBA:
        return _jbd_pairs_numpy(P, S, h, float(alpha), out)
    if threads > 1:
        return _jbd_pairs_parallel(P, S, h, float(alpha), out)
    return _jbd_pairs_serial(P, S, h, float(alpha), out)


# --- transportation simplex --------------------------------------------------

@njit(cache=True)
def _initial_basis(C, supply, demand, flow, brow, bcol):
    """Least-cost-cell start that keeps the basis a spanning tree.

    Every allocation retires exactly one row or column (the last one both),
    so ``ns + nt - 1`` basic cells are produced, possibly some at zero flow.
    """
    ns, nt = C.shape
    order = np.argsort(C.ravel(), kind="mergesort")
    s = supply.copy()
    d = demand.copy()
    row_live = np.ones(ns, dtype=np.bool_)
    col_live = np.ones(nt, dtype=np.bool_)
    rows_left = ns
    cols_left = nt
    k = 0
    need = ns + nt - 1
    for idx in order:
        if k == need:
            break
        i = idx // nt
        j = idx % nt
        if not row_live[i] or not col_live[j]:
            continue
        x = min(s[i], d[j])
        flow[i, j] = x
        brow[k] = i
        bcol[k] = j
        k += 1
        s[i] -= x
        d[j] -= x
        if rows_left == 1 and cols_left == 1:
            row_live[i] = False
            col_live[j] = False
            rows_left -= 1
            cols_left -= 1
        elif rows_left == 1:
            col_live[j] = False
            cols_left -= 1
        elif cols_left == 1 or s[i] <= d[j]:
            row_live[i] = False
            rows_left -= 1
        else:
            col_live[j] = False
            cols_left -= 1
    return k


@njit(cache=True)
def _tree_potentials(C, brow, bcol, ns, nt, u, v, parent, parent_edge, depth):
    """Duals with ``u[0] = 0`` and the rooted tree (nodes: rows 0..ns-1, columns ns..)."""
    N = ns + nt
    nb = N - 1
    # adjacency as CSR over the basis edges
    deg = np.zeros(N, dtype=np.int64)
    for k in range(nb):
        deg[brow[k]] += 1
        deg[ns + bcol[k]] += 1
    start = np.zeros(N + 1, dtype=np.int64)
    for a in range(N):
        start[a + 1] = start[a] + deg[a]
    fill = start[:-1].copy()
    adj = np.empty(2 * nb, dtype=np.int64)
    adj_edge = np.empty(2 * nb, dtype=np.int64)
    for k in range(nb):
        r = brow[k]
        c = ns + bcol[k]
        adj[fill[r]] = c
        adj_edge[fill[r]] = k
        fill[r] += 1
        adj[fill[c]] = r
        adj_edge[fill[c]] = k
        fill[c] += 1
    seen = np.zeros(N, dtype=np.bool_)
    stack = np.empty(N, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    seen[0] = True
    parent[0] = -1
    parent_edge[0] = -1
    depth[0] = 0
    u[0] = 0.0
    count = 1
    while top > 0:
        top -= 1
        a = stack[top]
        for t in range(start[a], start[a + 1]):
            b = adj[t]
            if seen[b]:
                continue
            seen[b] = True
            count += 1
            parent[b] = a
            parent_edge[b] = adj_edge[t]
            depth[b] = depth[a] + 1
            k = adj_edge[t]
            if b >= ns:
                v[b - ns] = C[brow[k], bcol[k]] - u[a]
            else:
                u[b] = C[brow[k], bcol[k]] - v[a - ns]
            stack[top] = b
            top += 1
    return count == N


@njit(cache=True)
def _entering_loop(C, u, v, bland, eps):
    """Dantzig's most-negative reduced cost, or Bland's first improving cell."""
    ns, nt = C.shape
    best = -eps
    ei = -1
    ej = -1
    for i in range(ns):
        ui = u[i]
        for j in range(nt):
            r = C[i, j] - ui - v[j]
            if r < best:
                if bland:
                    return i, j
                best = r
                ei = i
                ej = j
    return ei, ej


def _entering_numpy(C, u, v, bland, eps):
    R = C - u[:, None] - v[None, :]
    if bland:
        hits = np.flatnonzero(R.ravel() < -eps)
        if hits.size == 0:
            return -1, -1
        k = int(hits[0])
    else:
        k = int(np.argmin(R))
        if not R.flat[k] < -eps:
            return -1, -1
    return divmod(k, C.shape[1])


_entering = _entering_loop if HAS_NUMBA else _entering_numpy


@njit(cache=True)
def _transport_simplex(C, supply, demand, max_iter, bland_after, eps):
    ns, nt = C.shape
    N = ns + nt
    flow = np.zeros((ns, nt))
    brow = np.empty(N - 1, dtype=np.int64)
    bcol = np.empty(N - 1, dtype=np.int64)
    _initial_basis(C, supply, demand, flow, brow, bcol)
    u = np.zeros(ns)
    v = np.zeros(nt)
    parent = np.empty(N, dtype=np.int64)
    parent_edge = np.empty(N, dtype=np.int64)
    depth = np.empty(N, dtype=np.int64)
    cyc_edges = np.empty(N, dtype=np.int64)
    cyc_sign = np.empty(N, dtype=np.int64)
    path_a = np.empty(N, dtype=np.int64)
    path_b = np.empty(N, dtype=np.int64)
    status = 1
    it = 0
    while it < max_iter:
        if not _tree_potentials(C, brow, bcol, ns, nt, u, v, parent, parent_edge, depth):
            status = 2
            break
        ei, ej = _entering(C, u, v, it >= bland_after, eps)
        if ei < 0:
            status = 0
            break
        # tree path between row ei and column ej; edges alternate -, +, - ...
        a = ei
        b = ns + ej
        na = 0
        nb_ = 0
        while depth[a] > depth[b]:
            path_a[na] = parent_edge[a]
            na += 1
            a = parent[a]
        while depth[b] > depth[a]:
            path_b[nb_] = parent_edge[b]
            nb_ += 1
            b = parent[b]
        while a != b:
            path_a[na] = parent_edge[a]
            na += 1
            a = parent[a]
            path_b[nb_] = parent_edge[b]
            nb_ += 1
            b = parent[b]
        # cycle order starting at column ej: path_b (from ej upward), then path_a reversed
        L = 0
        for t in range(nb_):
            cyc_edges[L] = path_b[t]
            L += 1
        for t in range(na - 1, -1, -1):
            cyc_edges[L] = path_a[t]
            L += 1
        theta = np.inf
        leave = -1
        for t in range(L):
            if t % 2 == 0:
                cyc_sign[t] = -1
                k = cyc_edges[t]
                f = flow[brow[k], bcol[k]]
                if f < theta or (f == theta and k < leave):
                    theta = f
                    leave = k
            else:
                cyc_sign[t] = 1
        for t in range(L):
            k = cyc_edges[t]
            flow[brow[k], bcol[k]] += cyc_sign[t] * theta
        flow[brow[leave], bcol[leave]] = 0.0
        flow[ei, ej] += theta
        brow[leave] = ei
        bcol[leave] = ej
        it += 1
    if it >= max_iter:
        status = 1
    else:
        _tree_potentials(C, brow, bcol, ns, nt, u, v, parent, parent_edge, depth)
    return flow, u, v, it, status


def transport_simplex(C, supply, demand, max_iter=100_000, bland_after=5_000, eps=1e-12):
    """Exact transportation problem ``min <C, F>`` with row sums ``supply``, column sums ``demand``."""
    C = np.ascontiguousarray(C, dtype=np.float64)
    return _transport_simplex(C, np.ascontiguousarray(supply, dtype=np.float64),
                              np.ascontiguousarray(demand, dtype=np.float64),
                              int(max_iter), int(bland_after), float(eps))
