"""Similarity and distance matrices, and the routes to positive definiteness.

A similarity matrix is symmetric with entries in [0, 1] and a unit diagonal.
The divergence machinery additionally needs it positive definite; this module
builds such matrices from metrics (``exp(-tau * D)``), from hierarchies, by a
linear map ``1 - D / max(D)``, by lifting a PSD matrix, or by projecting an
arbitrary symmetric matrix onto the feasible set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .errors import NotPositiveDefiniteError, NumericalError, ValidationError

SYMMETRY_TOL = 1e-12
PD_TOL = 0.0


class PDCheck(NamedTuple):
    is_pd: bool
    min_eigenvalue: float


class NegativeTypeCheck(NamedTuple):
    is_negative_type: bool
    is_strict: bool
    min_eigenvalue: float


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _first_bad_pair(mask: np.ndarray):
    i, j = np.argwhere(mask)[0]
    return int(i), int(j)


@dataclass(eq=False)
class SimilarityMatrix:
    """Symmetric ``n x n`` matrix in [0, 1] with unit diagonal.

    ``pd_certificate`` caches the smallest eigenvalue once the matrix has been
    certified positive definite, so repeated divergence calls skip the
    eigen-solve.
    """

    entries: Optional[np.ndarray]
    pd_certificate: Optional[float] = None
    is_identity: bool = False
    _n: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.is_identity:
            if self.entries is not None:
                self._n = self.entries.shape[0]
            self.pd_certificate = 1.0
            return
        Z = np.asarray(self.entries, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != Z.shape[1] or Z.shape[0] == 0:
            raise ValidationError(f"similarity matrix must be square and non-empty, got shape {Z.shape}")
        if not np.all(np.isfinite(Z)):
            raise ValidationError("similarity matrix has non-finite entries")
        asym = np.abs(Z - Z.T) > SYMMETRY_TOL
        if asym.any():
            i, j = _first_bad_pair(asym)
            raise ValidationError(f"similarity matrix not symmetric at ({i}, {j}): {float(Z[i, j])!r} != {float(Z[j, i])!r}")
        if np.any(np.diag(Z) != 1.0):
            i = int(np.flatnonzero(np.diag(Z) != 1.0)[0])
            raise ValidationError(f"similarity diagonal entry {i} is {float(Z[i, i])!r}, expected 1")
        out = (Z < 0) | (Z > 1)
        if out.any():
            i, j = _first_bad_pair(out)
            raise ValidationError(f"similarity entry ({i}, {j}) = {float(Z[i, j])!r} outside [0, 1]")
        self.entries = _readonly(0.5 * (Z + Z.T))
        self._n = Z.shape[0]

    @classmethod
    def identity(cls, n: Optional[int] = None) -> "SimilarityMatrix":
        """The structure-blind similarity; not materialized unless asked for."""
        obj = cls(entries=None, is_identity=True)
        obj._n = n or 0
        return obj

    @property
    def n(self) -> int:
        return self._n

    def dense(self, n: Optional[int] = None) -> np.ndarray:
        if self.is_identity:
            return np.eye(n if n is not None else self._n)
        return self.entries

    def matvec(self, p: np.ndarray) -> np.ndarray:
        """``Z @ p`` for a vector or ``p @ Z`` for row-stacked vectors (Z is symmetric)."""
        if self.is_identity:
            return np.array(p, dtype=float, copy=True)
        if p.ndim == 1:
            return self.entries @ p
        return p @ self.entries

    def check_dim(self, n: int) -> None:
        if (not self.is_identity or self._n) and self._n != n:
            raise ValidationError(f"dimension mismatch: similarity is {self._n}x{self._n}, distribution has {n}")

    @property
    def certified(self) -> bool:
        return self.pd_certificate is not None

    def certify(self, tol: float = PD_TOL) -> "SimilarityMatrix":
        """Verify positive definiteness once and cache the result.

        Raises
        ------
        NotPositiveDefiniteError
            If the smallest eigenvalue is not above ``tol``.
        """
        if self.pd_certificate is not None:
            return self
        ok, lam = is_positive_definite(self, tol)
        if not ok:
            raise NotPositiveDefiniteError(f"similarity matrix not positive definite (min eigenvalue {lam:.3e})")
        self.pd_certificate = lam
        return self

    def __array__(self, dtype=None, copy=None):
        a = self.dense()
        return a if dtype is None else a.astype(dtype)


@dataclass(eq=False)
class DistanceMatrix:
    """Symmetric nonnegative matrix with zero diagonal.

    The triangle inequality costs O(n^3) and is only checked when
    ``check_triangle`` is true.
    """

    entries: np.ndarray
    check_triangle: bool = False
    triangle_tol: float = 1e-9

    def __post_init__(self):
        D = np.asarray(self.entries, dtype=float)
        if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] == 0:
            raise ValidationError(f"distance matrix must be square and non-empty, got shape {D.shape}")
        if not np.all(np.isfinite(D)):
            raise ValidationError("distance matrix has non-finite entries")
        asym = np.abs(D - D.T) > SYMMETRY_TOL * max(1.0, float(np.abs(D).max()))
        if asym.any():
            i, j = _first_bad_pair(asym)
            raise ValidationError(f"distance matrix not symmetric at ({i}, {j})")
        if np.any(np.diag(D) != 0):
            raise ValidationError("distance matrix must have a zero diagonal")
        if np.any(D < 0):
            i, j = _first_bad_pair(D < 0)
            raise ValidationError(f"negative distance at ({i}, {j})")
        self.entries = _readonly(0.5 * (D + D.T))
        if self.check_triangle:
            bad = triangle_violation(self.entries, self.triangle_tol)
            if bad is not None:
                i, j, k = bad
                raise ValidationError(f"triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def require_metric(self) -> None:
        """Raise unless distinct elements are at positive distance."""
        off = self.entries + np.eye(self.n)
        if np.any(off <= 0):
            i, j = _first_bad_pair(off <= 0)
            raise ValidationError(f"distinct elements {i} and {j} are at zero distance; not a metric")

    @classmethod
    def from_points(cls, X, metric: str = "euclidean") -> "DistanceMatrix":
        from scipy.spatial.distance import cdist

        X = np.asarray(X, dtype=float)
        D = cdist(X, X, metric=metric)
        np.fill_diagonal(D, 0.0)
        return cls(D)


def triangle_violation(D: np.ndarray, tol: float = 1e-9):
    """First ``(i, j, k)`` with ``D[i,k] > D[i,j] + D[j,k] + tol``, or None."""
    n = D.shape[0]
    for j in range(n):
        viol = D - (D[:, j][:, None] + D[j, :][None, :]) > tol
        if viol.any():
            i, k = _first_bad_pair(viol)
            return i, j, k
    return None


@dataclass
class Hierarchy:
    """Per-element code paths through a rooted hierarchy plus level similarities.

    ``paths[i]`` lists element i's group at levels 1..l (level 0 is the
    root shared by all). ``level_similarity[h]`` is the similarity of two
    elements whose deepest shared level is ``h``; it must be nondecreasing
    with ``level_similarity[l] == 1``.
    """

    paths: Sequence[Sequence]
    level_similarity: Sequence[float]

    def __post_init__(self):
        lengths = {len(p) for p in self.paths}
        if len(self.paths) == 0:
            raise ValidationError("hierarchy has no elements")
        if len(lengths) != 1:
            raise ValidationError(f"inconsistent path lengths {sorted(lengths)}")
        depth = lengths.pop()
        f = np.asarray(self.level_similarity, dtype=float)
        if f.size != depth + 1:
            raise ValidationError(f"need {depth + 1} level similarities for depth {depth}, got {f.size}")
        if np.any(np.diff(f) < 0):
            raise ValidationError("level similarity must be nondecreasing in level")
        if f[-1] != 1.0:
            raise ValidationError("similarity at the leaf level must be 1")
        if np.any(f < 0) or np.any(f > 1):
            raise ValidationError("level similarities must lie in [0, 1]")
        self.paths = [tuple(p) for p in self.paths]
        self.level_similarity = f

    @property
    def depth(self) -> int:
        return len(self.paths[0])

    def common_level(self) -> np.ndarray:
        """Matrix of deepest shared levels ``h(i, j)``."""
        n, depth = len(self.paths), self.depth
        codes = np.empty((n, depth), dtype=np.int64)
        for k in range(depth):
            _, codes[:, k] = np.unique([p[k] for p in self.paths], return_inverse=True)
        H = np.zeros((n, n), dtype=np.int64)
        still = np.ones((n, n), dtype=bool)
        for k in range(depth):
            still &= codes[:, k][:, None] == codes[:, k][None, :]
            H += still
        return H

    def edge_weights(self) -> np.ndarray:
        """Edge lengths between consecutive levels that reproduce ``f`` under exp(-d)."""
        f = self.level_similarity
        with np.errstate(divide="ignore"):
            return 0.5 * np.log(f[1:] / f[:-1])

    def tree_distance(self) -> np.ndarray:
        """Shortest-path distance in the weighted tree (may be infinite when f(0) = 0)."""
        w = self.edge_weights()
        # distance from level h down to the leaves
        to_leaf = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        D = 2.0 * to_leaf[self.common_level()]
        np.fill_diagonal(D, 0.0)
        return D


def is_positive_definite(Z, tol: float = PD_TOL) -> PDCheck:
    """Smallest eigenvalue of a symmetric matrix and whether it exceeds ``tol``."""
    if isinstance(Z, SimilarityMatrix):
        if Z.is_identity:
            return PDCheck(True, 1.0)
        Z = Z.entries
    Z = np.asarray(Z, dtype=float)
    lam = float(np.linalg.eigvalsh(0.5 * (Z + Z.T))[0])
    return PDCheck(lam > tol, lam)


def _certify_if_pd(entries: np.ndarray, tol: float = PD_TOL) -> SimilarityMatrix:
    Z = SimilarityMatrix(entries)
    ok, lam = is_positive_definite(Z, tol)
    if ok:
        Z.pd_certificate = lam
    return Z


def similarity_from_metric(D, tau: float = 1.0) -> SimilarityMatrix:
    """``Z_ij = exp(-tau * D_ij)``; certified positive definite when it is."""
    if not tau > 0:
        raise ValidationError(f"tau must be positive, got {tau!r}")
    if not isinstance(D, DistanceMatrix):
        D = DistanceMatrix(D)
    D.require_metric()
    Z = np.exp(-tau * D.entries)
    np.fill_diagonal(Z, 1.0)
    return _certify_if_pd(Z)


def _median_offdiag(D: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(D.shape[0], k=1)
    return D[iu]


def calibrate_tau(D, target_median_similarity: float = 0.1, lo: float = 1e-12, hi: float = 1e12,
                  steps: int = 200) -> float:
    """Scale ``tau`` so that the median off-diagonal of ``exp(-tau * D)`` hits a target.

    Bisection in log-space over ``[lo, hi]``; the median is monotone
    decreasing in ``tau``.
    """
    if not 0.0 < target_median_similarity < 1.0:
        raise ValidationError("target median similarity must lie in (0, 1)")
    D = D.entries if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=float)
    d = _median_offdiag(D)
    if d.size == 0 or not np.any(d > 0):
        raise ValidationError("need at least one positive off-diagonal distance")

    def med(t):
        return float(np.median(np.exp(-t * d)))

    a, b = np.log(lo), np.log(hi)
    for _ in range(steps):
        mid = 0.5 * (a + b)
        if med(np.exp(mid)) > target_median_similarity:
            a = mid
        else:
            b = mid
        if b - a < 1e-15:
            break
    return float(np.exp(0.5 * (a + b)))


def similarity_from_hierarchy(h: Hierarchy) -> SimilarityMatrix:
    """``Z_ij = f(h(i, j))`` where ``h`` is the deepest level shared by i and j."""
    Z = h.level_similarity[h.common_level()]
    np.fill_diagonal(Z, 1.0)
    return _certify_if_pd(Z)


def similarity_linear_from_metric(D) -> SimilarityMatrix:
    """``Z_ij = 1 - D_ij / max(D)``.

    Positive definiteness is sufficient-condition territory here, so it is
    always checked numerically; the result carries a certificate only when
    the check passes.
    """
    if not isinstance(D, DistanceMatrix):
        D = DistanceMatrix(D)
    dmax = float(D.entries.max())
    if dmax <= 0:
        raise ValidationError("maximum distance is zero")
    Z = 1.0 - D.entries / dmax
    np.fill_diagonal(Z, 1.0)
    return _certify_if_pd(np.clip(Z, 0.0, 1.0))


def lift_psd_to_pd(M, delta: float) -> SimilarityMatrix:
    """``delta * I + (1 - delta) * M`` for a PSD similarity matrix ``M``."""
    if not 0.0 < delta <= 1.0:
        raise ValidationError(f"delta must lie in (0, 1], got {delta!r}")
    M = M if isinstance(M, SimilarityMatrix) else SimilarityMatrix(M)
    if M.is_identity:
        return M
    _, lam = is_positive_definite(M)
    if lam < -1e-10:
        raise ValidationError(f"input not positive semidefinite (min eigenvalue {lam:.3e})")
    n = M.n
    Z = delta * np.eye(n) + (1.0 - delta) * M.entries
    np.fill_diagonal(Z, 1.0)
    return _certify_if_pd(Z)


@dataclass
class NearestPDResult:
    similarity: SimilarityMatrix
    converged: bool
    iterations: int
    step: float
    min_eigenvalue: float


def _project_spectral(X: np.ndarray, delta: float) -> np.ndarray:
    w, V = np.linalg.eigh(X)
    np.maximum(w, delta, out=w)
    Y = (V * w) @ V.T
    return 0.5 * (Y + Y.T)


def _project_box(X: np.ndarray, cap: float) -> np.ndarray:
    Y = np.clip(X, 0.0, cap)
    np.fill_diagonal(Y, 1.0)
    return Y


def nearest_pd_similarity(M, delta: float = 1e-6, offdiag_cap: float = 1.0 - 1e-9,
                          max_iters: int = 10_000, tol: float = 1e-10,
                          raise_on_failure: bool = False) -> NearestPDResult:
    """Frobenius-nearest similarity matrix with smallest eigenvalue at least ``delta``.

    Dykstra-corrected alternating projections between the shifted PSD cone
    ``{Z : Z - delta I >= 0}`` and the box ``{diag = 1, 0 <= off-diag <= cap}``.
    Neither set is affine, so both projections carry a correction term.

    Returns
    -------
    NearestPDResult
        The box-feasible iterate, whether successive iterates moved by less
        than ``tol`` (Frobenius), and the iteration count. On non-convergence
        the best iterate is returned with ``converged=False`` unless
        ``raise_on_failure`` is set.
    """
    M = np.asarray(M.dense() if isinstance(M, SimilarityMatrix) else M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("input must be a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValidationError("input has non-finite entries")
    if np.abs(M - M.T).max() > 1e-9:
        raise ValidationError("input must be symmetric")
    if not 0 < delta <= 1:
        raise ValidationError("delta must lie in (0, 1]")
    if not 0 < offdiag_cap <= 1:
        raise ValidationError("off-diagonal cap must lie in (0, 1]")
    M = 0.5 * (M + M.T)

    Y = _project_box(M, offdiag_cap)
    corr_spec = np.zeros_like(M)
    corr_box = M - Y
    converged = False
    step = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        R = Y + corr_spec
        X = _project_spectral(R, delta)
        corr_spec = R - X
        S = X + corr_box
        Y_new = _project_box(S, offdiag_cap)
        corr_box = S - Y_new
        step = max(np.linalg.norm(Y_new - Y), np.linalg.norm(Y_new - X))
        Y = Y_new
        if step < tol:
            converged = True
            break
    lam = float(np.linalg.eigvalsh(Y)[0])
    if not converged and raise_on_failure:
        raise NumericalError(f"nearest-PD projection did not converge in {max_iters} iterations (step {step:.3e})")
    Z = SimilarityMatrix(Y)
    if lam > 0:
        Z.pd_certificate = lam
    return NearestPDResult(Z, converged, it, float(step), lam)


def is_negative_type(D, tol: float = 1e-9) -> NegativeTypeCheck:
    """Whether ``v' D v <= 0`` for every ``v`` orthogonal to the ones vector.

    Works on an orthonormal basis ``Q`` of the complement of the ones vector:
    the answer is the spectrum of ``-Q' D Q``. ``tol`` is relative to the
    spectral norm of ``D``.
    """
    if not isinstance(D, DistanceMatrix):
        D = DistanceMatrix(D)
    n = D.n
    if n == 1:
        return NegativeTypeCheck(True, True, np.inf)
    Q = _ones_complement_basis(n)
    w = np.linalg.eigvalsh(-(Q.T @ D.entries @ Q))
    scale = max(1.0, float(np.linalg.norm(D.entries, 2)))
    lam = float(w[0])
    return NegativeTypeCheck(lam >= -tol * scale, lam > tol * scale, lam)


def _ones_complement_basis(n: int) -> np.ndarray:
    # Householder reflection mapping e_1 to the normalized ones vector
    e = np.ones(n) / np.sqrt(n)
    v = e.copy()
    v[0] -= 1.0
    nv = v @ v
    H = np.eye(n) if nv == 0 else np.eye(n) - 2.0 * np.outer(v, v) / nv
    return H[:, 1:]


def level_map(mapping: Mapping) -> np.ndarray:
    """Dense level-similarity vector from a ``{level: similarity}`` mapping (keys may be strings)."""
    items = {int(k): float(v) for k, v in mapping.items()}
    if sorted(items) != list(range(len(items))):
        raise ValidationError(f"levels must be 0..l without gaps, got {sorted(items)}")
    return np.array([items[k] for k in range(len(items))])
