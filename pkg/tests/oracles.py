"""Reference implementations used only by the tests.

Each oracle is written directly from the defining formula, with dense
loops or brute force, and shares no code with the package.
"""
import itertools
import math

import numpy as np


def random_points_similarity(rng, n, dim=3, tau=1.0):
    """exp(-tau * Euclidean) on random points: positive definite."""
    X = rng.uniform(size=(n, dim))
    D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    Z = np.exp(-tau * D)
    np.fill_diagonal(Z, 1.0)
    return Z, D


def interior(rng, n, m=None):
    shape = (n,) if m is None else (m, n)
    x = rng.uniform(0.05, 1.0, size=shape)
    return x / x.sum(axis=-1, keepdims=True)


def entropy_ref(Z, alpha, p):
    Zp = [sum(Z[i][j] * p[j] for j in range(len(p))) for i in range(len(p))]
    if alpha == 1:
        return -sum(p[i] * math.log(Zp[i]) for i in range(len(p)) if p[i] > 0)
    return (1.0 - sum(p[i] * Zp[i] ** (alpha - 1) for i in range(len(p)) if p[i] > 0)) / (alpha - 1)


def grad_fd(f, p, h=1e-6):
    g = np.zeros_like(p)
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        g[i] = (f(p + e) - f(p - e)) / (2 * h)
    return g


def hess_fd(f, p, h=1e-4):
    n = p.size
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * h * h)
    return H


def bregman_ref(Z, alpha, p, q):
    """F(p) - F(q) - <grad F(q), p - q> for F = -H, with the gradient by finite differences."""
    F = lambda x: -entropy_ref(Z, alpha, list(x))  # noqa: E731
    g = grad_fd(F, np.asarray(q, float))
    return F(p) - F(q) - float(g @ (np.asarray(p) - np.asarray(q)))


def w1_dual_vertices(D, p, q):
    """W1 by enumerating vertices of the Lipschitz polytope {f : f_i - f_j <= D_ij, f_0 = 0}.

    By Kantorovich-Rubinstein duality W1 = max_f sum_i f_i (p_i - q_i); the
    maximum sits at a vertex, defined by n-1 tight independent constraints.
    Needs D to be a metric on a connected space. Practical for n <= 5.
    """
    D = np.asarray(D, float)
    n = D.shape[0]
    if n == 1:
        return 0.0
    cons = [(i, j) for i in range(n) for j in range(n) if i != j]
    A = np.zeros((len(cons), n - 1))
    b = np.zeros(len(cons))
    for r, (i, j) in enumerate(cons):
        if i > 0:
            A[r, i - 1] += 1
        if j > 0:
            A[r, j - 1] -= 1
        b[r] = D[i, j]
    c = (np.asarray(p) - np.asarray(q))[1:]
    best = -np.inf
    for rows in itertools.combinations(range(len(cons)), n - 1):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        f = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ f <= b + 1e-10):
            best = max(best, float(c @ f))
    return best


def w1_primal_bases(D, p, q):
    """W1 by enumerating basic feasible solutions of the transportation polytope.

    Zero-mass rows and columns are dropped; every choice of ``ns + nt - 1``
    cells whose equality system is nonsingular and yields a nonnegative flow
    is a vertex. Practical for ``ns, nt <= 4``.
    """
    D = np.asarray(D, float)
    rows = [i for i in range(len(p)) if p[i] > 0]
    cols = [j for j in range(len(q)) if q[j] > 0]
    ns, nt = len(rows), len(cols)
    cells = [(i, j) for i in range(ns) for j in range(nt)]
    # marginal constraints, dropping the last (redundant) column equation
    A = np.zeros((ns + nt - 1, len(cells)))
    rhs = np.concatenate([[p[i] for i in rows], [q[j] for j in cols[:-1]]])
    for k, (i, j) in enumerate(cells):
        A[i, k] = 1
        if j < nt - 1:
            A[ns + j, k] = 1
    best = np.inf
    for basis in itertools.combinations(range(len(cells)), ns + nt - 1):
        B = A[:, list(basis)]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        x = np.linalg.solve(B, rhs)
        if np.all(x >= -1e-12):
            cost = sum(x[t] * D[rows[cells[k][0]], cols[cells[k][1]]] for t, k in enumerate(basis))
            best = min(best, cost)
    return best


def ami_ref(a, b):
    """AMI (arithmetic normalization) by direct summation of the hypergeometric expectation."""
    a = list(a)
    b = list(b)
    N = len(a)
    la, lb = sorted(set(a)), sorted(set(b))
    M = [[sum(1 for x, y in zip(a, b) if x == u and y == v) for v in lb] for u in la]
    ra = [sum(r) for r in M]
    cb = [sum(M[i][j] for i in range(len(la))) for j in range(len(lb))]
    mi = sum(M[i][j] / N * math.log(N * M[i][j] / (ra[i] * cb[j]))
             for i in range(len(la)) for j in range(len(lb)) if M[i][j] > 0)
    ha = -sum(x / N * math.log(x / N) for x in ra)
    hb = -sum(x / N * math.log(x / N) for x in cb)
    emi = 0.0
    for ai in ra:
        for bj in cb:
            for nij in range(max(1, ai + bj - N), min(ai, bj) + 1):
                prob = math.comb(bj, nij) * math.comb(N - bj, ai - nij) / math.comb(N, ai)
                emi += nij / N * math.log(N * nij / (ai * bj)) * prob
    return (mi - emi) / (0.5 * (ha + hb) - emi)


def nearest_offdiag_grid(m01, delta, cap, steps=200001):
    """2x2 case: the off-diagonal z minimizing 2 (z - m01)^2 subject to 0 <= z <= cap, 1 - z >= delta."""
    hi = min(cap, 1.0 - delta)
    z = np.linspace(0.0, hi, steps)
    return float(z[np.argmin((z - m01) ** 2)])


def tree_metric(rng, n):
    """Shortest-path metric of a random weighted tree on ``n`` nodes."""
    W = np.full((n, n), np.inf)
    np.fill_diagonal(W, 0.0)
    for v in range(1, n):
        u = int(rng.integers(0, v))
        w = float(rng.uniform(0.1, 2.0))
        W[u, v] = W[v, u] = w
    for k in range(n):
        W = np.minimum(W, W[:, [k]] + W[[k], :])
    return W


def random_metric(rng, n):
    """Shortest-path closure of random positive weights: always a metric."""
    W = rng.uniform(0.2, 2.0, size=(n, n))
    W = 0.5 * (W + W.T)
    np.fill_diagonal(W, 0.0)
    for k in range(n):
        W = np.minimum(W, W[:, [k]] + W[[k], :])
    return W
