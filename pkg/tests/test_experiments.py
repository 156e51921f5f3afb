import numpy as np
import pytest
from scipy.spatial.distance import cdist

from structdiv import NotPositiveDefiniteError, ValidationError
from structdiv.experiments.beta import load_rutor, run_beta_diversity, rutor_similarity
from structdiv.experiments.planted import (GROUP_NAMES, PlantedConfig, load_layout, planted_similarity,
                                           run_planted_experiment, sample_planted_ensemble)
from structdiv.experiments.runtime import RuntimeConfig, run_runtime_experiment, sample_members
from structdiv.measures import bregman_information
from structdiv.similarity import SimilarityMatrix
from structdiv.simplex import WeightedEnsemble, floor_rows


class TestPlanted:
    def test_layout(self):
        layout = load_layout()
        assert tuple(layout) == GROUP_NAMES
        pts = [np.asarray(layout[g]) for g in GROUP_NAMES]
        assert all(p.shape == (20, 2) for p in pts)
        allp = np.vstack(pts)
        assert np.all(allp == np.round(allp)) and len({tuple(r) for r in allp}) == 60
        gap = lambda a, b: cdist(a, b, "cityblock").min()  # noqa: E731
        assert gap(pts[0], pts[1]) < min(gap(pts[0], pts[2]), gap(pts[1], pts[2]))

    def test_similarity_pd(self):
        Z = planted_similarity()
        assert Z.certified and Z.n == 60

    def test_ensemble(self):
        P = sample_planted_ensemble(4, 10, 0.05, 0)
        assert P.shape == (30, 60)
        np.testing.assert_allclose(P.sum(axis=1), 1, atol=1e-12)
        assert P.min() >= 0.05 / 60 * (1 - 1e-12)
        # support of each unsmoothed member lies inside its group
        raw = (P - 0.05 / 60) / 0.95
        assert np.all(raw[:10, 20:] < 1e-12) and np.all(raw[20:, :40] < 1e-12)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            run_planted_experiment(PlantedConfig(runs=0))
        with pytest.raises(ValidationError):
            run_planted_experiment(PlantedConfig(k_values=(3, 4)))

    def test_small_run_reproducible_and_monotone(self):
        cfg = PlantedConfig(m_values=(2, 16), runs=3, n_restarts=5, seed=11)
        a = run_planted_experiment(cfg)
        b = run_planted_experiment(cfg)
        assert a.to_dict() == b.to_dict()
        assert len(a.runs) == 2 * 2 * 3
        for r in a.runs:
            f = [r.explained[k] for k in sorted(r.explained)]
            # best-of-restarts objective; equal within rounding counts as non-decreasing
            assert np.all(np.diff(f) >= -1e-12), f
            assert all(0 <= v <= 1 + 1e-12 for v in f)
        assert a.median_ami("Z", 16, 3) == pytest.approx(1.0, abs=1e-9)
        assert len(a.curve_rows()) == len(a.runs) * 5


class TestRuntime:
    def test_small(self):
        cfg = RuntimeConfig(sizes=(8, 12), runs=2, seed=3)
        rep = run_runtime_experiment(cfg)
        assert len(rep.runs) == 4
        for r in rep.runs:
            assert r.max_abs_diff <= 1e-10
            assert -1 <= r.kendall <= 1 and -1 <= r.pearson <= 1
            assert set(r.seconds) == {"ot", "jbd_naive", "jbd_fast"}
        again = run_runtime_experiment(cfg)
        assert [(r.pearson, r.kendall, r.max_abs_diff) for r in rep.runs] == \
               [(r.pearson, r.kendall, r.max_abs_diff) for r in again.runs]

    def test_samplers(self):
        for name in ("normalized_uniform", "dirichlet"):
            P = sample_members(100, 50, name, 0)
            assert P.shape == (100, 50)
            np.testing.assert_allclose(P.sum(axis=1), 1, atol=1e-12)
        with pytest.raises(ValidationError):
            sample_members(3, 3, "bogus", 0)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            run_runtime_experiment(RuntimeConfig(sizes=(1,)))


def synthetic_site(seed=0, plots=(6, 5, 4), species=7):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 20, size=(sum(plots), species)).astype(float)
    A[:, 0] += 1
    labels = np.repeat(["early", "mid", "late"], plots)
    return A, labels, rng


class TestBeta:
    def test_matches_library(self):
        A, labels, rng = synthetic_site()
        Z = SimilarityMatrix(rutor_similarity(rng.normal(size=(7, 6))).dense())
        rep = run_beta_diversity(A, labels, Z, alpha=3, n_null=50, rng_seed=0)
        P = floor_rows(A, 1e-10)
        for stage, s in rep.stages.items():
            ref = bregman_information(Z, 3, WeightedEnsemble(P[labels == stage])).value
            assert s.value == pytest.approx(ref, rel=1e-10, abs=1e-14)
            assert s.null.shape == (50,) and 0 <= s.percentile <= 100
            assert s.n_plots == int(np.sum(labels == stage))

    def test_single_plot_stage(self):
        A, labels, _ = synthetic_site(plots=(6, 1, 4))
        rep = run_beta_diversity(A, labels, None, n_null=20, rng_seed=1)
        assert rep.stages["mid"].value == 0
        assert np.all(rep.stages["mid"].null == 0) and rep.stages["mid"].percentile == 0

    def test_order_invariance(self):
        A, labels, rng = synthetic_site(seed=2)
        Z = rutor_similarity(rng.normal(size=(7, 6)))
        base = run_beta_diversity(A, labels, Z, n_null=200, rng_seed=5)
        perm = rng.permutation(len(labels))
        shuffled = run_beta_diversity(A[perm], labels[perm], Z, n_null=200, rng_seed=5)
        for st in base.stages:
            assert shuffled.stages[st].value == base.stages[st].value
            assert shuffled.stages[st].percentile == base.stages[st].percentile
            np.testing.assert_array_equal(shuffled.stages[st].null, base.stages[st].null)

    def test_null_without_replacement(self):
        # with all plots in the stage, every resample is the whole site
        A, _, _ = synthetic_site(seed=3)
        labels = np.repeat("early", A.shape[0])
        rep = run_beta_diversity(A, labels, None, n_null=10, rng_seed=0)
        np.testing.assert_allclose(rep.stages["early"].null, rep.stages["early"].value, rtol=1e-12)

    def test_ratio_and_dict(self):
        A, labels, _ = synthetic_site(seed=4)
        rep = run_beta_diversity(A, labels, None, n_null=30, rng_seed=0)
        assert rep.ratio("early") == 1.0
        d = rep.to_dict(include_null=True)
        assert len(d["stages"]["mid"]["null"]) == 30 and d["seed"] == 0

    def test_errors(self):
        A, labels, _ = synthetic_site()
        with pytest.raises(ValidationError):
            run_beta_diversity(A, labels[:-1], None)
        with pytest.raises(ValidationError):
            run_beta_diversity(A, labels, None, n_null=0)
        with pytest.raises(ValidationError):
            run_beta_diversity(A, labels, SimilarityMatrix.identity(3))
        ones = SimilarityMatrix(np.ones((7, 7)))
        with pytest.raises(NotPositiveDefiniteError):
            run_beta_diversity(A, labels, ones)


class TestRutorSimilarity:
    def test_identical_and_extreme(self):
        rng = np.random.default_rng(0)
        T = rng.normal(size=(6, 6))
        T[5] = T[2]
        T = np.vstack([T, rng.normal(size=(1, 6))])
        Zd = rutor_similarity(T, certify=False).dense()
        assert Zd[2, 5] == 1.0
        off = Zd[~np.eye(7, dtype=bool)]
        assert off.min() == pytest.approx(0.0, abs=1e-15)
        # duplicated rows make Z singular, so certification must refuse it
        with pytest.raises(NotPositiveDefiniteError):
            rutor_similarity(T)

    def test_pd_on_generic_traits(self):
        Z = rutor_similarity(np.random.default_rng(1).normal(size=(45, 6)))
        assert Z.certified and Z.pd_certificate > 0

    def test_scale_invariance(self):
        T = np.random.default_rng(2).normal(size=(10, 6))
        a = rutor_similarity(T).dense()
        b = rutor_similarity(T * [1, 10, 100, 0.1, 3, 7] + 5).dense()
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_constant_column(self):
        T = np.random.default_rng(3).normal(size=(5, 6))
        T[:, 3] = 2.0
        with pytest.raises(ValidationError, match="constant"):
            rutor_similarity(T)


def test_load_rutor_missing(tmp_path):
    with pytest.raises(FileNotFoundError, match="rutor"):
        load_rutor(tmp_path)
