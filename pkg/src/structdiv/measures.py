"""Structure-aware entropy, divergence and Bregman information.

For a similarity matrix ``Z`` and order ``alpha`` the entropy of ``p`` is

    H(p) = (1 - p' (Z p)^(alpha - 1)) / (alpha - 1)      (alpha != 1)
    H(p) = -p' ln(Z p)                                   (alpha == 1)

with element-wise powers. For ``alpha >= 2`` and positive definite ``Z`` it
is strictly concave on the open simplex, and the divergence below is the
Bregman divergence of ``-H``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _kernels
from ._accel import default_threads
from .errors import NumericalError, ValidationError
from .similarity import SimilarityMatrix
from .simplex import DEFAULT_TOLERANCE, Distribution, WeightedEnsemble

NEG_CLAMP = 1e-12

SimilarityLike = Union[SimilarityMatrix, np.ndarray]


def as_similarity(Z: SimilarityLike, n: int | None = None) -> SimilarityMatrix:
    if isinstance(Z, SimilarityMatrix):
        if n is not None:
            Z.check_dim(n)
        return Z
    Z = SimilarityMatrix(Z)
    if n is not None:
        Z.check_dim(n)
    return Z


def _probs(p, n=None, interior=False) -> np.ndarray:
    if isinstance(p, Distribution):
        v = p.probs
    else:
        v = np.asarray(p, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValidationError("distribution must be a non-empty vector")
        if abs(v.sum() - 1.0) > DEFAULT_TOLERANCE or np.any(v < -DEFAULT_TOLERANCE):
            raise ValidationError("input is not a probability vector")
    if n is not None and v.size != n:
        raise ValidationError(f"dimension mismatch: {v.size} vs {n}")
    if interior and not np.all(v > 0):
        raise ValidationError("distribution must lie in the interior of the simplex (floor it first)")
    return v


def _pow(x: np.ndarray, e: float) -> np.ndarray:
    if e == 1.0:
        return x
    if e == 2.0:
        return x * x
    if e == 3.0:
        return x * x * x
    if e == 0.0:
        return np.ones_like(x)
    return np.power(x, e)


def _check_alpha(alpha: float, minimum: float = 0.0) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < minimum:
        raise ValidationError(f"order alpha must be >= {minimum}, got {alpha!r}")
    return alpha


def _require_pd(Z: SimilarityMatrix) -> None:
    if not Z.certified:
        Z.certify()


def ordinariness(Z: SimilarityLike, p) -> np.ndarray:
    """Expected similarity ``Z p`` of each element to a draw from ``p``."""
    p = _probs(p)
    return as_similarity(Z, p.size).matvec(p)


def surprise(alpha: float, x) -> np.ndarray:
    """Surprise of an element with ordinariness ``x`` in (0, 1]."""
    alpha = _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValidationError("ordinariness must be positive")
    if alpha == 1.0:
        return -np.log(x)
    return (1.0 - _pow(x, alpha - 1.0)) / (alpha - 1.0)


def _entropy_raw(Zp: np.ndarray, p: np.ndarray, alpha: float) -> float:
    mask = p > 0
    if alpha == 1.0:
        return float(-np.dot(p[mask], np.log(Zp[mask])))
    return float((1.0 - np.dot(p[mask], _pow(Zp[mask], alpha - 1.0))) / (alpha - 1.0))


def entropy(Z: SimilarityLike, alpha: float, p) -> float:
    """Structure-aware Havrda-Charvat entropy of order ``alpha`` (any ``alpha >= 0``).

    Zero entries of ``p`` contribute nothing (``0 ln 0 = 0``).

    Examples
    --------
    >>> import numpy as np
    >>> round(entropy(np.eye(4), 2, np.full(4, 0.25)), 12)
    0.75
    """
    alpha = _check_alpha(alpha)
    p = _probs(p)
    Z = as_similarity(Z, p.size)
    return _entropy_raw(Z.matvec(p), p, alpha)


def entropy_gradient(Z: SimilarityLike, alpha: float, p) -> np.ndarray:
    """Euclidean gradient of the entropy at an interior ``p`` (``alpha >= 2``)."""
    alpha = _check_alpha(alpha, 2.0)
    p = _probs(p, interior=True)
    Z = as_similarity(Z, p.size)
    Zp = Z.matvec(p)
    return -_pow(Zp, alpha - 1.0) / (alpha - 1.0) - Z.matvec(_pow(Zp, alpha - 2.0) * p)


def entropy_hessian(Z: SimilarityLike, alpha: float, p) -> np.ndarray:
    """Hessian ``-(Z D1 + D1 Z + (alpha - 2) Z D2 Z)`` at an interior ``p``.

    ``D1 = diag((Zp)^(alpha-2))`` and ``D2 = diag(p * (Zp)^(alpha-3))``.
    """
    alpha = _check_alpha(alpha, 2.0)
    p = _probs(p, interior=True)
    Z = as_similarity(Z, p.size)
    Zd = Z.dense(p.size)
    Zp = Zd @ p
    d1 = _pow(Zp, alpha - 2.0)
    ZD1 = Zd * d1[None, :]
    H = ZD1 + ZD1.T
    if alpha != 2.0:
        d2 = p * np.power(Zp, alpha - 3.0)
        H += (alpha - 2.0) * (Zd * d2[None, :]) @ Zd
    H = -H
    return 0.5 * (H + H.T)


def _clamp(value: float, what: str) -> float:
    if value < 0.0:
        if value < -NEG_CLAMP:
            raise NumericalError(f"{what} evaluated to {value:.3e} < 0; inconsistent inputs")
        return 0.0
    return value


def _divergence_raw(Z: SimilarityMatrix, alpha: float, p: np.ndarray, q: np.ndarray) -> float:
    Zp = Z.matvec(p)
    Zq = Z.matvec(q)
    e = alpha - 1.0
    first = np.dot(p, _pow(Zp, e) - _pow(Zq, e)) / e
    second = np.dot(q * _pow(Zq, alpha - 2.0), Z.matvec(p - q))
    return first - second


def divergence(Z: SimilarityLike, alpha: float, p, q) -> float:
    """Structure-aware divergence of ``p`` from ``q``.

    Requires ``alpha >= 2``, a positive definite ``Z`` (certified once and
    cached on the matrix object) and interior ``p``, ``q``. For ``alpha = 2``
    it reduces to ``(p - q)' Z (p - q)``.

    Raises
    ------
    ValidationError
        Bad order, dimensions, or boundary inputs.
    NotPositiveDefiniteError
        ``Z`` fails certification.
    """
    alpha = _check_alpha(alpha, 2.0)
    p = _probs(p, interior=True)
    q = _probs(q, p.size, interior=True)
    Z = as_similarity(Z, p.size)
    _require_pd(Z)
    return _clamp(_divergence_raw(Z, alpha, p, q), "divergence")


def divergence_matrix(Z: SimilarityLike, alpha: float, P, C) -> np.ndarray:
    """Divergences ``d(P[a] || C[c])`` for every row pair, shape ``(len(P), len(C))``.

    Inputs are trusted to be interior; this is the vectorized workhorse of
    the clustering loop.
    """
    Z = as_similarity(Z)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    e = alpha - 1.0
    SP = Z.matvec(P)
    SC = Z.matvec(C)
    self_term = np.einsum("ai,ai->a", P, _pow(SP, e)) / e
    cross = P @ _pow(SC, e).T / e
    G = Z.matvec(C * _pow(SC, alpha - 2.0))
    lin = P @ G.T - np.einsum("ci,ci->c", C, G)[None, :]
    D = self_term[:, None] - cross - lin
    np.maximum(D, 0.0, out=D)
    return D


def jensen_bregman(Z: SimilarityLike, alpha: float, p, q) -> float:
    """Bregman information of ``{p, q}`` with weights one half each."""
    alpha = _check_alpha(alpha, 2.0)
    p = _probs(p, interior=True)
    q = _probs(q, p.size, interior=True)
    Z = as_similarity(Z, p.size)
    _require_pd(Z)
    Zp = Z.matvec(p)
    Zq = Z.matvec(q)
    mid = _entropy_raw(0.5 * (Zp + Zq), 0.5 * (p + q), alpha)
    gap = mid - 0.5 * (_entropy_raw(Zp, p, alpha) + _entropy_raw(Zq, q, alpha))
    return _clamp(gap, "Jensen-Bregman divergence")


@dataclass
class BregmanInformation:
    value: float
    mean: np.ndarray


def bregman_information(Z: SimilarityLike, alpha: float, ensemble: WeightedEnsemble,
                        form: str = "divergence") -> BregmanInformation:
    """Weighted mean divergence of the members from their weighted mean.

    ``form="divergence"`` evaluates ``sum_a w_a d(p_a || mu)``;
    ``form="jensen"`` evaluates ``H(mu) - sum_a w_a H(p_a)``. The two agree
    up to rounding.
    """
    alpha = _check_alpha(alpha, 2.0)
    if not isinstance(ensemble, WeightedEnsemble):
        ensemble = WeightedEnsemble(ensemble)
    P, w = ensemble.members, ensemble.weights
    if not np.all(P > 0):
        raise ValidationError("ensemble members must be interior")
    Z = as_similarity(Z, ensemble.n)
    _require_pd(Z)
    mu = w @ P
    if form == "divergence":
        value = float(w @ divergence_matrix(Z, alpha, P, mu[None, :])[:, 0])
    elif form == "jensen":
        S = Z.matvec(P)
        h = _entropies(S, P, alpha)
        value = _entropy_raw(Z.matvec(mu), mu, alpha) - float(w @ h)
    else:
        raise ValueError(f"unknown form {form!r}")
    return BregmanInformation(_clamp(value, "Bregman information"), mu)


def _entropies(S: np.ndarray, P: np.ndarray, alpha: float) -> np.ndarray:
    return (1.0 - np.einsum("ai,ai->a", P, _pow(S, alpha - 1.0))) / (alpha - 1.0)


@dataclass
class PairwiseDissimilarity:
    values: np.ndarray
    method: str


def _stack(members) -> np.ndarray:
    if isinstance(members, WeightedEnsemble):
        return members.members
    if isinstance(members, np.ndarray):
        return np.atleast_2d(members.astype(float, copy=False))
    return np.vstack([np.asarray(p, dtype=float) for p in members])


def all_pairs_jbd_naive(Z: SimilarityLike, alpha: float, members: Sequence) -> PairwiseDissimilarity:
    """Pairwise Jensen-Bregman divergences, one independent call per pair."""
    P = _stack(members)
    m = P.shape[0]
    Z = as_similarity(Z, P.shape[1])
    _require_pd(Z)
    out = np.zeros((m, m))
    rows = [P[a] for a in range(m)]
    for a in range(m):
        for b in range(a + 1, m):
            out[a, b] = out[b, a] = jensen_bregman(Z, alpha, rows[a], rows[b])
    return PairwiseDissimilarity(out, "jensen_bregman")


def all_pairs_jbd_fast(Z: SimilarityLike, alpha: float, members: Sequence,
                       threads: int | None = None, gram: bool = True) -> PairwiseDissimilarity:
    """Pairwise Jensen-Bregman divergences without a per-pair matrix-vector product.

    ``S = P Z`` and the member entropies are computed once; each midpoint
    entropy then needs only O(n) work from rows of ``S``. At ``alpha = 2``
    (and ``gram=True``) the whole matrix follows from the Gram matrix
    ``G = P Z P'`` as ``(G_aa + G_bb - 2 G_ab) / 4``.
    """
    alpha = _check_alpha(alpha, 2.0)
    P = _stack(members)
    if not np.all(P > 0):
        raise ValidationError("members must be interior")
    Z = as_similarity(Z, P.shape[1])
    _require_pd(Z)
    S = Z.matvec(P)
    if alpha == 2.0 and gram:
        G = P @ S.T
        g = np.diag(G)
        out = 0.25 * (g[:, None] + g[None, :] - 2.0 * G)
        np.fill_diagonal(out, 0.0)
        out = 0.5 * (out + out.T)
    else:
        h = _entropies(S, P, alpha)
        out = _kernels.jbd_pairs(P, S, h, alpha, threads or default_threads())
    if out.size and out.min() < -NEG_CLAMP:
        raise NumericalError("negative Jensen-Bregman divergence in all-pairs computation")
    np.maximum(out, 0.0, out=out)
    return PairwiseDissimilarity(out, "jensen_bregman")
