"""Planted-partition recovery on a lattice of 60 elements in three groups."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..clustering import adjusted_mutual_information, bregman_kmeans
from ..errors import ValidationError
from ..similarity import DistanceMatrix, SimilarityMatrix, similarity_from_metric
from ..simplex import WeightedEnsemble, make_rng

GROUP_NAMES = ("triangle", "square", "circle")


def load_layout() -> Dict[str, np.ndarray]:
    text = resources.files(__package__).joinpath("data/planted_layout.json").read_text()
    groups = json.loads(text)["groups"]
    return {name: np.asarray(groups[name], dtype=float) for name in GROUP_NAMES}


@dataclass
class PlantedConfig:
    m_values: Sequence[int] = (2, 4, 8, 16)
    per_group: int = 10
    runs: int = 50
    smoothing: float = 0.05
    k_values: Sequence[int] = (2, 3, 4, 5, 6)
    alpha: float = 2.0
    tau: float = 1.0
    n_restarts: int = 100
    max_iters: int = 500
    seed: int = 0

    def validate(self):
        if self.runs < 1 or self.per_group < 1 or self.n_restarts < 1:
            raise ValidationError("runs, per_group and n_restarts must be positive")
        if not self.m_values or min(self.m_values) < 1:
            raise ValidationError("m values must be positive")
        if not 0 < self.smoothing <= 1:
            raise ValidationError("smoothing must lie in (0, 1]")
        if 2 not in self.k_values or 3 not in self.k_values:
            raise ValidationError("k values must include 2 and 3 (ground-truth comparisons)")
        if self.alpha < 2:
            raise ValidationError("alpha must be >= 2")


@dataclass
class PlantedRun:
    m: int
    run: int
    structure: str
    explained: Dict[int, float]
    ami_k2: float
    ami_k3: float


@dataclass
class PlantedReport:
    config: PlantedConfig
    runs: List[PlantedRun] = field(default_factory=list)

    def median_ami(self, structure: str, m: int, k: int) -> float:
        vals = [r.ami_k2 if k == 2 else r.ami_k3 for r in self.runs if r.structure == structure and r.m == m]
        return float(np.median(vals))

    def curve_rows(self) -> List[dict]:
        rows = []
        for r in self.runs:
            for k, f in sorted(r.explained.items()):
                rows.append({"structure": r.structure, "m": r.m, "run": r.run, "k": k, "explained_fraction": f})
        return rows

    def summary(self) -> dict:
        out = {}
        for s in ("Z", "I"):
            for m in self.config.m_values:
                out[f"{s}/m={m}"] = {"median_ami_k2": self.median_ami(s, m, 2),
                                     "median_ami_k3": self.median_ami(s, m, 3)}
        return out

    def to_dict(self) -> dict:
        return {"config": asdict(self.config), "summary": self.summary(),
                "runs": [asdict(r) | {"explained": {str(k): v for k, v in r.explained.items()}} for r in self.runs]}


def planted_similarity(tau: float = 1.0) -> SimilarityMatrix:
    """``exp(-tau * Manhattan distance)`` over the frozen lattice layout."""
    layout = load_layout()
    X = np.vstack([layout[g] for g in GROUP_NAMES])
    return similarity_from_metric(DistanceMatrix.from_points(X, metric="cityblock"), tau)


def ground_truth(per_group: int = 10):
    """Labels for k=3 (one per group) and k=2 (triangle and square merged)."""
    k3 = np.repeat(np.arange(3), per_group)
    k2 = np.repeat([0, 0, 1], per_group)
    return k2, k3


def sample_planted_ensemble(m_samples: int, per_group: int, smoothing: float, rng) -> np.ndarray:
    """``3 * per_group`` smoothed empirical distributions, grouped in layout order."""
    rng = make_rng(rng)
    sizes = [len(v) for v in load_layout().values()]
    starts = np.concatenate([[0], np.cumsum(sizes)])
    rows = []
    for g in range(3):
        group = np.arange(starts[g], starts[g + 1])
        draws = rng.choice(group, size=(per_group, m_samples), replace=True)
        for d in draws:
            counts = np.bincount(d, minlength=starts[-1]).astype(float)
            rows.append(counts / m_samples)
    P = np.asarray(rows)
    P = (1.0 - smoothing) * P + smoothing / P.shape[1]
    return P / P.sum(axis=1, keepdims=True)


def run_planted_experiment(config: Optional[PlantedConfig] = None, use_structure: Optional[bool] = None,
                           progress=None) -> PlantedReport:
    """Cluster planted ensembles with and without structure and score recovery.

    ``use_structure=None`` runs both the lattice similarity and the identity
    on the same sampled ensembles.
    """
    config = config or PlantedConfig()
    config.validate()
    structures = {"Z": planted_similarity(config.tau), "I": SimilarityMatrix.identity(60)}
    if use_structure is True:
        structures.pop("I")
    elif use_structure is False:
        structures.pop("Z")
    truth2, truth3 = ground_truth(config.per_group)
    report = PlantedReport(config)
    root = np.random.SeedSequence(config.seed)
    m_seeds = root.spawn(len(config.m_values))
    for m, m_seed in zip(config.m_values, m_seeds):
        for run, run_seed in enumerate(m_seed.spawn(config.runs)):
            data_seed, cluster_seed = run_seed.spawn(2)
            P = sample_planted_ensemble(m, config.per_group, config.smoothing, data_seed)
            ens = WeightedEnsemble(P)
            cseed = int(cluster_seed.generate_state(1)[0])
            for name, Z in structures.items():
                explained, labels = {}, {}
                for k in config.k_values:
                    rep = bregman_kmeans(Z, config.alpha, ens, k, config.n_restarts, config.max_iters, cseed)
                    explained[int(k)] = rep.best.objective
                    labels[k] = rep.best.assignments
                report.runs.append(PlantedRun(
                    m=int(m), run=run, structure=name, explained=explained,
                    ami_k2=adjusted_mutual_information(truth2, labels[2]),
                    ami_k3=adjusted_mutual_information(truth3, labels[3])))
            if progress:
                progress(m, run)
    return report
