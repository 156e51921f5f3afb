"""Hard Bregman k-means over weighted ensembles of distributions.

The total Bregman information of an ensemble splits into a between-cluster
part (information of the cluster means, weighted by cluster mass) and a
within-cluster part. k-means alternates assignment to the closest centroid
under the structure-aware divergence with recomputing centroids as weighted
means; both steps never increase the within-cluster information.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import gammaln

from .errors import ValidationError
from .measures import as_similarity, divergence_matrix
from .similarity import SimilarityMatrix
from .simplex import WeightedEnsemble, make_rng


@dataclass
class Decomposition:
    total: float
    between: float
    within: float
    per_cluster: np.ndarray  # weight-scaled within-cluster information of each cluster
    cluster_weights: np.ndarray


@dataclass
class Partition:
    assignments: np.ndarray
    k: int
    objective: float  # explained fraction between / total
    total: float
    between: float
    within: float


@dataclass
class RestartResult:
    seed: int
    partition: Partition
    centroids: np.ndarray
    iterations: int
    history: List[float] = field(default_factory=list)  # within-information after each update
    converged: bool = True
    repairs: int = 0


@dataclass
class ClusteringReport:
    best: Partition
    centroids: np.ndarray
    restart_objectives: np.ndarray
    iterations: np.ndarray
    seed: Optional[int]
    restarts: List[RestartResult]
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "k": self.best.k,
            "assignments": self.best.assignments.tolist(),
            "explained_fraction": self.best.objective,
            "total_information": self.best.total,
            "between_information": self.best.between,
            "within_information": self.best.within,
            "restart_objectives": self.restart_objectives.tolist(),
            "iterations": self.iterations.tolist(),
            "seed": self.seed,
            "degenerate": self.degenerate,
        }


def _weighted_means(P, w, labels, k):
    mass = np.bincount(labels, weights=w, minlength=k)
    sums = np.zeros((k, P.shape[1]))
    np.add.at(sums, labels, w[:, None] * P)
    with np.errstate(invalid="ignore", divide="ignore"):
        C = sums / mass[:, None]
    return C, mass


def information_decomposition(Z, alpha: float, ensemble: WeightedEnsemble, assignments) -> Decomposition:
    """Split total Bregman information into between- and within-cluster parts.

    ``per_cluster[c]`` is the cluster's mass times its own (renormalized)
    Bregman information, so ``within == per_cluster.sum()``.
    """
    if not isinstance(ensemble, WeightedEnsemble):
        ensemble = WeightedEnsemble(ensemble)
    P, w = ensemble.members, ensemble.weights
    labels = np.asarray(assignments, dtype=np.int64)
    if labels.shape != (ensemble.m,):
        raise ValidationError(f"{labels.size} assignments for {ensemble.m} members")
    if labels.min() < 0:
        raise ValidationError("cluster labels must be nonnegative")
    k = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise ValidationError(f"empty cluster(s) {np.flatnonzero(counts == 0).tolist()}")
    Z = as_similarity(Z, ensemble.n)
    if not Z.certified:
        Z.certify()
    C, mass = _weighted_means(P, w, labels, k)
    if np.any(mass <= 0):
        raise ValidationError("a cluster carries zero weight")
    D = divergence_matrix(Z, alpha, P, C)
    contrib = w * D[np.arange(ensemble.m), labels]
    per_cluster = np.bincount(labels, weights=contrib, minlength=k)
    within = float(per_cluster.sum())
    mu = w @ P
    between = float(mass @ divergence_matrix(Z, alpha, C, mu[None, :])[:, 0])
    total = float(w @ divergence_matrix(Z, alpha, P, mu[None, :])[:, 0])
    return Decomposition(total, between, within, per_cluster, mass)


def empty_cluster_repair(labels: np.ndarray, divergences: np.ndarray, k: int) -> tuple[np.ndarray, int]:
    """Refill empty clusters with the member farthest from its assigned centroid.

    ``divergences[a, c]`` is member a's divergence from centroid c. Returns
    the repaired labels and the number of moves. Members already moved are
    not moved again, and a donor cluster is never emptied.
    """
    labels = labels.copy()
    moves = 0
    m = labels.size
    own = divergences[np.arange(m), labels].copy()
    for c in range(k):
        counts = np.bincount(labels, minlength=k)
        if counts[c] > 0:
            continue
        order = np.argsort(-own, kind="stable")
        for a in order:
            if counts[labels[a]] > 1:
                labels[a] = c
                own[a] = -np.inf
                moves += 1
                break
    return labels, moves


def _within(P, w, C, labels, Z, alpha):
    D = divergence_matrix(Z, alpha, P, C)
    return float(w @ D[np.arange(P.shape[0]), labels]), D


def kmeans_restart(Z: SimilarityMatrix, alpha: float, ensemble: WeightedEnsemble, k: int,
                   max_iters: int, rng_seed, tol: float = 1e-12) -> RestartResult:
    """One k-means run from ``k`` distinct members chosen as initial centroids."""
    P, w = ensemble.members, ensemble.weights
    m = P.shape[0]
    rng = make_rng(rng_seed)
    init = rng.choice(m, size=k, replace=False)
    C = P[init].copy()
    labels = None
    history: List[float] = []
    repairs = 0
    converged = False
    it = 0
    D = divergence_matrix(Z, alpha, P, C)
    for it in range(1, max_iters + 1):
        new = np.argmin(D, axis=1)  # ties go to the lowest index
        new, moved = empty_cluster_repair(new, D, k)
        repairs += moved
        if labels is not None and np.array_equal(new, labels):
            converged = True
            break
        labels = new
        C, _ = _weighted_means(P, w, labels, k)
        within, D = _within(P, w, C, labels, Z, alpha)
        decrease = history[-1] - within if history else np.inf
        history.append(within)
        if decrease < tol:
            converged = True
            break
    dec = information_decomposition(Z, alpha, ensemble, labels)
    frac = dec.between / dec.total if dec.total > 0 else 0.0
    part = Partition(labels, k, float(min(max(frac, 0.0), 1.0)), dec.total, dec.between, dec.within)
    seed_val = int(rng_seed) if isinstance(rng_seed, (int, np.integer)) else None
    return RestartResult(seed_val, part, C, it, history, converged, repairs)


def bregman_kmeans(Z, alpha: float, ensemble: WeightedEnsemble, k: int, n_restarts: int = 100,
                   max_iters: int = 500, rng_seed: Optional[int] = None,
                   n_jobs: int = 1) -> ClusteringReport:
    """Best-of-restarts Bregman k-means.

    Each restart gets its own child seed spawned from ``rng_seed``, so
    results do not depend on ``n_jobs``. The reported partition maximizes
    the explained fraction (between / total); ties go to the earliest
    restart.

    Raises
    ------
    ValidationError
        ``k`` outside ``[1, m]`` or non-interior members.
    """
    if not isinstance(ensemble, WeightedEnsemble):
        ensemble = WeightedEnsemble(ensemble)
    m = ensemble.m
    if not 1 <= k <= m:
        raise ValidationError(f"k must lie in [1, {m}], got {k}")
    if n_restarts < 1:
        raise ValidationError("need at least one restart")
    if not np.all(ensemble.members > 0):
        raise ValidationError("ensemble members must be interior")
    Z = as_similarity(Z, ensemble.n)
    if not Z.certified:
        Z.certify()
    alpha = float(alpha)
    if alpha < 2:
        raise ValidationError("clustering needs alpha >= 2")
    children = np.random.SeedSequence(rng_seed).spawn(n_restarts)
    seeds = [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]

    def run(s):
        return kmeans_restart(Z, alpha, ensemble, k, max_iters, s)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]
    objectives = np.array([r.partition.objective for r in results])
    best_idx = int(np.argmax(objectives))
    best = results[best_idx]
    degenerate = best.partition.total <= 0 and k > 1
    return ClusteringReport(best.partition, best.centroids, objectives,
                            np.array([r.iterations for r in results]), rng_seed, results, degenerate)


def _contingency(a, b):
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    M = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(M, (ai, bi), 1)
    return M


def _label_entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def expected_mutual_information(M: np.ndarray) -> float:
    """Expected MI of two labelings with the margins of ``M`` under random permutation."""
    N = int(M.sum())
    a = M.sum(axis=1)
    b = M.sum(axis=0)
    lg = gammaln(np.arange(N + 2) + 1.0)  # lg[x] = log(x!)
    emi = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - N)
            hi = min(ai, bj)
            if lo > hi:
                continue
            nij = np.arange(lo, hi + 1)
            term = (nij / N) * (np.log(N) + np.log(nij) - np.log(ai) - np.log(bj))
            logp = (lg[ai] + lg[bj] + lg[N - ai] + lg[N - bj] - lg[N] - lg[nij]
                    - lg[ai - nij] - lg[bj - nij] - lg[N - ai - bj + nij])
            emi += float(np.sum(term * np.exp(logp)))
    return emi


def adjusted_mutual_information(labels_a, labels_b) -> float:
    """Chance-adjusted MI with arithmetic-mean normalization.

    ``(MI - E[MI]) / (mean(H_a, H_b) - E[MI])`` with the expectation under the
    permutation (hypergeometric) model.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.size != b.size:
        raise ValidationError(f"label vectors differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValidationError("empty labelings")
    M = _contingency(a, b)
    ka, kb = M.shape
    if (ka == kb == 1) or (ka == kb == a.size):
        return 1.0
    N = a.size
    ra = M.sum(axis=1)
    cb = M.sum(axis=0)
    nz = M > 0
    mi = float(np.sum(M[nz] / N * (np.log(M[nz] * N) - np.log(np.outer(ra, cb)[nz]))))
    emi = expected_mutual_information(M)
    h = 0.5 * (_label_entropy(ra) + _label_entropy(cb))
    denom = h - emi
    eps = np.finfo(float).eps
    denom = min(denom, -eps) if denom < 0 else max(denom, eps)
    return float((mi - emi) / denom)
