"""Exact Wasserstein-1 distance between distributions on a finite metric space.

Solved as a transportation problem with the primal transportation simplex
(MODI potentials, spanning-tree basis). Dantzig pricing is used until a pivot
cap, after which Bland's rule guarantees termination.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import NumericalError, ValidationError
from .measures import PairwiseDissimilarity
from .similarity import DistanceMatrix
from .simplex import Distribution, as_probs


@dataclass
class TransportPlan:
    plan: np.ndarray
    cost: float
    row_potential: np.ndarray
    col_potential: np.ndarray
    iterations: int

    @property
    def dual_objective(self) -> float:
        """``p' u + q' v`` at the returned potentials; equals ``cost`` at optimality."""
        p = self.plan.sum(axis=1)
        q = self.plan.sum(axis=0)
        return float(p @ self.row_potential + q @ self.col_potential)


def _dist_entries(D) -> np.ndarray:
    if isinstance(D, DistanceMatrix):
        return D.entries
    return DistanceMatrix(D).entries


def wasserstein1(D, p, q, max_iter: int = 100_000, bland_after: int = 5_000) -> tuple[float, TransportPlan]:
    """Optimal transport cost between ``p`` and ``q`` under ground metric ``D``.

    Zero-mass rows and columns are removed before solving; the returned plan
    is on the full ``n x n`` support, with potentials set to zero on the
    removed elements.

    Raises
    ------
    ValidationError
        Dimension mismatch or malformed inputs.
    NumericalError
        The simplex hit its iteration cap.
    """
    Dm = _dist_entries(D)
    p = as_probs(p)
    q = as_probs(q)
    n = Dm.shape[0]
    if p.size != n or q.size != n:
        raise ValidationError(f"dimension mismatch: metric on {n} points, distributions of size {p.size} and {q.size}")
    rows = np.flatnonzero(p > 0)
    cols = np.flatnonzero(q > 0)
    C = np.ascontiguousarray(Dm[np.ix_(rows, cols)])
    flow, u, v, iters, status = _kernels.transport_simplex(C, p[rows], q[cols], max_iter, bland_after)
    if status == 1:
        raise NumericalError(f"transport simplex hit the iteration cap ({max_iter})")
    if status == 2:
        raise NumericalError("transport simplex lost its spanning-tree basis")
    plan = np.zeros((n, n))
    plan[np.ix_(rows, cols)] = flow
    up = np.zeros(n)
    vp = np.zeros(n)
    up[rows] = u
    vp[cols] = v
    cost = float(np.sum(flow * C))
    return cost, TransportPlan(plan, cost, up, vp, int(iters))


def all_pairs_wasserstein(D, members: Sequence) -> PairwiseDissimilarity:
    """Exact W1 for every pair, one independent solve per unordered pair."""
    Dm = DistanceMatrix(_dist_entries(D))
    rows = [m.probs if isinstance(m, Distribution) else np.asarray(m, dtype=float) for m in members]
    m = len(rows)
    out = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            out[a, b] = out[b, a] = wasserstein1(Dm, rows[a], rows[b])[0]
    return PairwiseDissimilarity(out, "wasserstein1")
