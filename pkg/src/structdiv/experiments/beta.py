"""Beta diversity of successional stages as Bregman information, with a resampling null.

The Rutor glacier tables are not shipped; see ``data/RUTOR_DATA.md`` for the
expected CSV schema and how to export them.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ..errors import ValidationError
from ..measures import _entropies, _require_pd, as_similarity
from ..similarity import SimilarityMatrix
from ..simplex import floor_rows, make_rng

TRAIT_COLUMNS = ("canopy_height", "ldmc", "leaf_dry_weight", "sla", "leaf_n", "leaf_c")
STAGES = ("early", "mid", "late")
ABUNDANCE_FLOOR = 1e-10


@dataclass
class StageResult:
    stage: str
    n_plots: int
    value: float
    null: np.ndarray
    percentile: float


@dataclass
class BetaDiversityReport:
    alpha: float
    n_null: int
    seed: Optional[int]
    stages: Dict[str, StageResult] = field(default_factory=dict)

    def ratio(self, stage: str, reference: str = "early") -> float:
        return self.stages[stage].value / self.stages[reference].value

    def to_dict(self, include_null: bool = False) -> dict:
        out = {"alpha": self.alpha, "n_null": self.n_null, "seed": self.seed, "stages": {}}
        for name, s in self.stages.items():
            d = {"n_plots": s.n_plots, "value": s.value, "percentile": s.percentile,
                 "null_mean": float(s.null.mean()), "null_sd": float(s.null.std(ddof=1)) if s.null.size > 1 else 0.0}
            if include_null:
                d["null"] = s.null.tolist()
            out["stages"][name] = d
        return out


def rutor_similarity(traits, certify: bool = True) -> SimilarityMatrix:
    """``1 - D / max(D)`` over standardized trait vectors, certified positive definite.

    Species with identical traits get similarity 1 and make the matrix
    singular; pass ``certify=False`` to inspect such a matrix.

    Raises
    ------
    ValidationError
        A trait column has zero standard deviation.
    NotPositiveDefiniteError
        The resulting matrix is not positive definite.
    """
    T = np.asarray(traits, dtype=float)
    if T.ndim != 2 or T.shape[0] < 2:
        raise ValidationError("traits must be a species x traits matrix with at least two species")
    if not np.all(np.isfinite(T)):
        raise ValidationError("traits contain non-finite values")
    sd = T.std(axis=0, ddof=1)
    bad = np.flatnonzero(sd == 0)
    if bad.size:
        raise ValidationError(f"trait column(s) {bad.tolist()} are constant")
    X = (T - T.mean(axis=0)) / sd
    D = squareform(pdist(X, "euclidean"))
    dmax = D.max()
    Z = 1.0 - D / dmax if dmax > 0 else np.ones_like(D)
    np.fill_diagonal(Z, 1.0)
    Z = SimilarityMatrix(0.5 * (Z + Z.T))
    return Z.certify() if certify else Z


def _bregman_subsets(S, P, h, alpha, idx) -> np.ndarray:
    """Bregman information with uniform weights for each row of index matrix ``idx``."""
    mu = P[idx].mean(axis=1)
    smu = S[idx].mean(axis=1)  # Z applied to the mean, by linearity
    h_mu = (1.0 - np.einsum("ri,ri->r", mu, smu ** (alpha - 1.0))) / (alpha - 1.0)
    return np.maximum(h_mu - h[idx].mean(axis=1), 0.0)


def run_beta_diversity(abundances, stage_labels: Sequence, Z, alpha: float = 2.0,
                       n_null: int = 1000, rng_seed=None, identity: bool = False) -> BetaDiversityReport:
    """Per-stage Bregman information and its percentile among random plot subsets.

    Rows of ``abundances`` are normalized and floored to the interior. Each
    null draw takes as many plots as the stage has, uniformly without
    replacement from all plots. The percentile is the share of null draws
    strictly below the observed value. Plots are put in a canonical order
    first, so the result does not depend on how the rows were ordered.

    Parameters
    ----------
    abundances : (plots, species) array
    stage_labels : sequence of length plots
    Z : SimilarityMatrix, array or None
        ``None`` or ``identity=True`` uses the identity.
    """
    A = np.asarray(abundances, dtype=float)
    labels = np.asarray(stage_labels).astype(str)
    if A.ndim != 2:
        raise ValidationError("abundances must be a plots x species matrix")
    if labels.shape != (A.shape[0],):
        raise ValidationError(f"{labels.size} stage labels for {A.shape[0]} plots")
    if n_null < 1:
        raise ValidationError("n_null must be at least 1")
    alpha = float(alpha)
    if alpha < 2:
        raise ValidationError("alpha must be >= 2")
    Zs = SimilarityMatrix.identity(A.shape[1]) if (identity or Z is None) else as_similarity(Z)
    if Zs.n is not None and Zs.n != A.shape[1]:
        raise ValidationError(f"similarity covers {Zs.n} species, abundances have {A.shape[1]}")
    _require_pd(Zs)
    # canonical plot order: lexicographic on (stage, abundance row)
    order = np.lexsort(tuple(A.T[::-1]) + (labels,))
    A, labels = A[order], labels[order]
    P = floor_rows(A, ABUNDANCE_FLOOR)
    S = Zs.matvec(P)
    h = _entropies(S, P, alpha)
    rng = make_rng(rng_seed)
    names = [s for s in STAGES if s in set(labels)] + sorted(set(labels) - set(STAGES))
    report = BetaDiversityReport(alpha, int(n_null), rng_seed if isinstance(rng_seed, int) else None)
    n_plots = P.shape[0]
    for name in names:
        members = np.flatnonzero(labels == name)
        k = members.size
        if k == 0:
            raise ValidationError(f"stage {name!r} has no plots")
        value = float(_bregman_subsets(S, P, h, alpha, members[None, :])[0])
        idx = np.argsort(rng.random((n_null, n_plots)), axis=1)[:, :k]
        null = _bregman_subsets(S, P, h, alpha, idx)
        report.stages[name] = StageResult(name, int(k), value, null, float(100.0 * np.mean(null < value)))
    return report


# --- data loading ------------------------------------------------------------

def _data_dir(data_dir=None) -> Path:
    if data_dir is not None:
        return Path(data_dir)
    env = os.environ.get("STRUCTDIV_RUTOR_DIR")
    if env:
        return Path(env)
    return Path(str(resources.files(__package__).joinpath("data")))


@dataclass
class RutorData:
    plots: List[str]
    species: List[str]
    abundances: np.ndarray
    traits: np.ndarray
    stages: np.ndarray


def _read_table(path: Path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValidationError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValidationError(f"{path}: line {i} has {len(r)} fields, header has {len(header)}")
    return header, body


def load_rutor(data_dir=None) -> RutorData:
    """Read ``rutor_abundance.csv``, ``rutor_traits.csv`` and ``rutor_stages.csv``.

    Looks in ``data_dir``, then ``$STRUCTDIV_RUTOR_DIR``, then the package
    data directory.

    Raises
    ------
    FileNotFoundError
        Any of the three tables is missing.
    ValidationError
        Plot or species identifiers do not line up.
    """
    base = _data_dir(data_dir)
    names = ("rutor_abundance.csv", "rutor_traits.csv", "rutor_stages.csv")
    missing = [n for n in names if not (base / n).is_file()]
    if missing:
        raise FileNotFoundError(
            f"Rutor tables not found in {base} (missing {', '.join(missing)}); "
            "set STRUCTDIV_RUTOR_DIR or see RUTOR_DATA.md for the schema and export steps")
    h_ab, ab = _read_table(base / names[0])
    species = h_ab[1:]
    plots = [r[0] for r in ab]
    A = np.array([[float(x) for x in r[1:]] for r in ab])
    _, tr = _read_table(base / names[1])
    trait_of = {r[0]: [float(x) for x in r[1:]] for r in tr}
    absent = [s for s in species if s not in trait_of]
    if absent:
        raise ValidationError(f"species without traits: {absent}")
    T = np.array([trait_of[s] for s in species])
    _, st = _read_table(base / names[2])
    stage_of = {r[0]: r[1] for r in st}
    absent = [p for p in plots if p not in stage_of]
    if absent:
        raise ValidationError(f"plots without a stage: {absent}")
    return RutorData(plots, species, A, T, np.array([stage_of[p] for p in plots]))


@dataclass
class RutorAnalysis:
    alpha: float
    taxonomic: BetaDiversityReport
    functional: BetaDiversityReport

    def ratios(self) -> dict:
        return {kind: {s: rep.ratio(s) for s in ("mid", "late") if s in rep.stages}
                for kind, rep in (("taxonomic", self.taxonomic), ("functional", self.functional))}

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "ratios_vs_early": self.ratios(),
                "taxonomic": self.taxonomic.to_dict(), "functional": self.functional.to_dict()}


def analyze_rutor(data: RutorData, alpha: float = 2.0, n_null: int = 1000, rng_seed=0) -> RutorAnalysis:
    """Taxonomic (identity) and functional (trait similarity) analyses on shared null seeds."""
    Z = rutor_similarity(data.traits)
    tax = run_beta_diversity(data.abundances, data.stages, None, alpha, n_null, rng_seed)
    fun = run_beta_diversity(data.abundances, data.stages, Z, alpha, n_null, rng_seed)
    return RutorAnalysis(float(alpha), tax, fun)

