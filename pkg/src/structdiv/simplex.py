"""Distributions on the probability simplex: validation, smoothing, sampling."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ValidationError

DEFAULT_TOLERANCE = 1e-9
DEFAULT_FLOOR = 1e-10

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Counter-based (Philox) generator from an int, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Distribution:
    """A point of the probability simplex.

    ``probs`` is stored read-only. Use :func:`validate_distribution` to build
    one from arbitrary input; the constructor only checks shape.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("distribution must be a non-empty vector")
        object.__setattr__(self, "probs", p)

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self):
        return self.probs.size

    @property
    def n(self) -> int:
        return self.probs.size

    def is_interior(self, floor: float = 0.0) -> bool:
        """True when every entry is positive (or at least ``floor`` if given)."""
        if floor > 0:
            return bool(np.all(self.probs >= floor))
        return bool(np.all(self.probs > 0))

    @property
    def interior(self) -> bool:
        return self.is_interior()

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True, eq=False)
class WeightedEnsemble:
    """``m`` distributions over a shared support together with weights in the m-simplex."""

    members: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        P = np.array(self.members, dtype=float)
        if P.ndim == 1:
            P = P[None, :]
        if P.ndim != 2 or P.shape[0] == 0 or P.shape[1] == 0:
            raise ValidationError("ensemble needs at least one member of positive dimension")
        m = P.shape[0]
        if self.weights is None:
            w = np.full(m, 1.0 / m)
        else:
            w = np.array(self.weights, dtype=float).ravel()
        if w.size != m:
            raise ValidationError(f"{w.size} weights for {m} members")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {float(w.sum())!r}, expected 1")
        P.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "members", P)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_members(cls, members: Sequence, weights=None, normalize_weights=False):
        if isinstance(members, np.ndarray):
            P = members
        else:
            rows = [np.asarray(p, dtype=float).ravel() for p in members]
            sizes = sorted({r.size for r in rows})
            if len(sizes) > 1:
                raise ValidationError(f"members have different dimensions {sizes}")
            P = np.vstack(rows)
        if weights is not None and normalize_weights:
            weights = np.asarray(weights, dtype=float)
            weights = weights / weights.sum()
        return cls(P, weights)

    @property
    def m(self) -> int:
        return self.members.shape[0]

    @property
    def n(self) -> int:
        return self.members.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.members

    def subset(self, index) -> "WeightedEnsemble":
        """Members at ``index`` with their weights renormalized."""
        w = self.weights[index]
        total = w.sum()
        if total <= 0:
            raise ValidationError("subset carries no weight")
        return WeightedEnsemble(self.members[index], w / total)


def validate_distribution(v, tolerance: float = DEFAULT_TOLERANCE) -> Distribution:
    """Check that ``v`` lies within ``tolerance`` of the simplex and snap it onto it.

    Entries are clipped at zero and the vector renormalized to sum to one.

    Raises
    ------
    ValidationError
        Empty or non-finite input, an entry below ``-tolerance``, or a sum
        further than ``tolerance`` from one.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError("distribution must be a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise ValidationError("distribution has non-finite entries")
    low = int(np.argmin(v))
    if v[low] < -tolerance:
        raise ValidationError(f"entry {low} is {float(v[low])!r} < -{tolerance}")
    total = v.sum()
    if abs(total - 1.0) > tolerance:
        raise ValidationError(f"entries sum to {float(total)!r}, not 1 within {tolerance}")
    p = np.clip(v, 0.0, None)
    return Distribution(p / p.sum())


def as_probs(p, tolerance: float = DEFAULT_TOLERANCE) -> np.ndarray:
    if isinstance(p, Distribution):
        return p.probs
    return validate_distribution(p, tolerance).probs


def smooth_to_interior(p, lam: float, u=None) -> Distribution:
    """Mix ``p`` with ``u`` (uniform by default): ``(1 - lam) * p + lam * u``."""
    p = as_probs(p)
    u = np.full(p.size, 1.0 / p.size) if u is None else as_probs(u)
    if u.size != p.size:
        raise ValidationError(f"dimension mismatch: {p.size} vs {u.size}")
    if not 0.0 < lam <= 1.0:
        raise ValidationError(f"smoothing weight must lie in (0, 1], got {lam!r}")
    if lam == 1.0:
        return Distribution(u)
    q = (1.0 - lam) * p + lam * u
    return Distribution(q / q.sum())


def floor_to_interior(p, epsilon: float = DEFAULT_FLOOR) -> Distribution:
    """Set zero entries to ``epsilon`` and renormalize.

    Already-interior input is returned unchanged, so the operation is
    idempotent.
    """
    p = as_probs(p)
    if not 0.0 < epsilon < 1.0 / p.size:
        raise ValidationError(f"epsilon must lie in (0, 1/n) = (0, {1.0 / p.size}), got {epsilon!r}")
    if np.all(p > 0):
        return Distribution(p)
    q = np.where(p > 0, p, epsilon)
    return Distribution(q / q.sum())


def floor_rows(P, epsilon: float = DEFAULT_FLOOR) -> np.ndarray:
    """Row-wise :func:`floor_to_interior` for a matrix of nonnegative weights.

    Rows are normalized first, so raw abundances are accepted.
    """
    P = np.asarray(P, dtype=float)
    sums = P.sum(axis=1, keepdims=True)
    if np.any(sums <= 0) or np.any(P < 0):
        raise ValidationError("every row needs nonnegative entries with a positive total")
    Q = P / sums
    Q = np.where(Q > 0, Q, epsilon)
    return Q / Q.sum(axis=1, keepdims=True)


def sample_uniform_simplex(n: int, rng_seed: SeedLike = None) -> Distribution:
    """Flat-Dirichlet draw via normalized standard exponentials."""
    if n < 1:
        raise ValidationError("dimension must be at least 1")
    e = make_rng(rng_seed).standard_exponential(n)
    return Distribution(e / e.sum())


def sample_uniform_simplex_batch(m: int, n: int, rng_seed: SeedLike = None) -> np.ndarray:
    """``m`` independent flat-Dirichlet draws as rows of an ``(m, n)`` array."""
    if n < 1 or m < 1:
        raise ValidationError("need m >= 1 and n >= 1")
    e = make_rng(rng_seed).standard_exponential((m, n))
    return e / e.sum(axis=1, keepdims=True)


def sample_group_distribution(group_elements, m_samples: int, support_size: int,
                              rng_seed: SeedLike = None) -> Distribution:
    """Empirical distribution of ``m_samples`` uniform draws (with replacement) from a group."""
    group = np.asarray(group_elements, dtype=np.int64).ravel()
    if group.size == 0:
        raise ValidationError("group is empty")
    if m_samples < 1:
        raise ValidationError("need at least one sample")
    if group.min() < 0 or group.max() >= support_size:
        raise ValidationError("group indices outside the support")
    draws = make_rng(rng_seed).choice(group, size=m_samples, replace=True)
    counts = np.bincount(draws, minlength=support_size).astype(float)
    return Distribution(counts / m_samples)
