"""Runtime and agreement of exact W1 against Jensen-Bregman all-pairs matrices."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import kendalltau, pearsonr

from ..errors import NumericalError, ValidationError
from ..measures import all_pairs_jbd_fast, all_pairs_jbd_naive
from ..similarity import DistanceMatrix, similarity_from_metric
from ..simplex import make_rng, sample_uniform_simplex_batch
from ..transport import all_pairs_wasserstein

SAMPLERS = ("normalized_uniform", "dirichlet")


@dataclass
class RuntimeConfig:
    support: int = 50
    dim: int = 10
    tau: float = 1.0
    alpha: float = 2.0
    sizes: Sequence[int] = (10, 25, 50, 100, 200)
    runs: int = 3
    seed: int = 0
    sampler: str = "normalized_uniform"
    equivalence_tol: float = 1e-10

    def validate(self):
        if self.support < 2 or self.dim < 1:
            raise ValidationError("support must be >= 2 and dim >= 1")
        if not self.sizes or min(self.sizes) < 2:
            raise ValidationError("sizes must be >= 2")
        if self.runs < 1:
            raise ValidationError("runs must be positive")
        if self.alpha < 2:
            raise ValidationError("alpha must be >= 2")
        if self.tau <= 0:
            raise ValidationError("tau must be positive")
        if self.sampler not in SAMPLERS:
            raise ValidationError(f"sampler must be one of {SAMPLERS}")


@dataclass
class RuntimeRun:
    size: int
    run: int
    seconds: Dict[str, float]
    max_abs_diff: float
    pearson: float
    kendall: float


@dataclass
class RuntimeReport:
    config: RuntimeConfig
    runs: List[RuntimeRun] = field(default_factory=list)

    def median(self, size: int, key: str) -> float:
        rs = [r for r in self.runs if r.size == size]
        if key in ("pearson", "kendall", "max_abs_diff"):
            return float(np.median([getattr(r, key) for r in rs]))
        return float(np.median([r.seconds[key] for r in rs]))

    def summary(self) -> dict:
        out = {}
        for s in self.config.sizes:
            ot, naive, fast = (self.median(s, k) for k in ("ot", "jbd_naive", "jbd_fast"))
            out[str(s)] = {
                "median_seconds": {"ot": ot, "jbd_naive": naive, "jbd_fast": fast},
                "speedup_naive_vs_ot": ot / naive if naive > 0 else float("inf"),
                "pearson": self.median(s, "pearson"),
                "kendall": self.median(s, "kendall"),
                "max_abs_diff": max(r.max_abs_diff for r in self.runs if r.size == s),
            }
        return out

    def curve_rows(self) -> List[dict]:
        rows = []
        for r in self.runs:
            for method, sec in r.seconds.items():
                rows.append({"size": r.size, "run": r.run, "method": method, "seconds": sec,
                             "pearson": r.pearson, "kendall": r.kendall})
        return rows

    def to_dict(self) -> dict:
        return {"config": asdict(self.config), "summary": self.summary(),
                "runs": [asdict(r) for r in self.runs]}


def sample_members(m: int, n: int, sampler: str, rng) -> np.ndarray:
    """Random distributions on ``n`` elements.

    ``normalized_uniform`` divides i.i.d. U(0,1) entries by their sum;
    ``dirichlet`` is the flat Dirichlet.
    """
    if sampler not in SAMPLERS:
        raise ValidationError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    rng = make_rng(rng)
    if sampler == "dirichlet":
        return sample_uniform_simplex_batch(m, n, rng)
    X = rng.uniform(size=(m, n))
    return X / X.sum(axis=1, keepdims=True)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _warm_up(Z, D, alpha):
    P = sample_members(3, Z.n, "normalized_uniform", 0)
    all_pairs_wasserstein(D, P)
    all_pairs_jbd_naive(Z, alpha, P)
    all_pairs_jbd_fast(Z, alpha, P, threads=1)


def run_runtime_experiment(config: Optional[RuntimeConfig] = None, progress=None) -> RuntimeReport:
    """Time per-pair exact W1, naive J-BD and fast J-BD on random ensembles.

    All timed paths run single-threaded. The fast and naive matrices must
    agree entrywise within ``equivalence_tol``.

    Raises
    ------
    NumericalError
        Fast and naive J-BD disagree.
    """
    config = config or RuntimeConfig()
    config.validate()
    report = RuntimeReport(config)
    root = np.random.SeedSequence(config.seed)
    warmed = False
    for size, size_seed in zip(config.sizes, root.spawn(len(config.sizes))):
        iu = np.triu_indices(size, 1)
        for run, run_seed in enumerate(size_seed.spawn(config.runs)):
            rng = make_rng(run_seed)
            X = rng.uniform(size=(config.support, config.dim))
            D = DistanceMatrix.from_points(X, "euclidean")
            Z = similarity_from_metric(D, config.tau)
            P = sample_members(size, config.support, config.sampler, rng)
            if not warmed:
                _warm_up(Z, D, config.alpha)
                warmed = True
            ot, t_ot = _timed(lambda: all_pairs_wasserstein(D, P))
            naive, t_naive = _timed(lambda: all_pairs_jbd_naive(Z, config.alpha, P))
            fast, t_fast = _timed(lambda: all_pairs_jbd_fast(Z, config.alpha, P, threads=1))
            diff = float(np.max(np.abs(fast.values - naive.values)))
            if diff > config.equivalence_tol:
                raise NumericalError(f"fast and naive J-BD differ by {diff:.3e} at size {size}")
            a, b = ot.values[iu], naive.values[iu]
            r = float(pearsonr(a, b)[0]) if a.size > 1 else float("nan")
            tau = float(kendalltau(a, b)[0]) if a.size > 1 else float("nan")
            report.runs.append(RuntimeRun(int(size), run, {"ot": t_ot, "jbd_naive": t_naive, "jbd_fast": t_fast},
                                          diff, r, tau))
            if progress:
                progress(size, run)
    return report
