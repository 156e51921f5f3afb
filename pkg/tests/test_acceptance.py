"""Acceptance checks for the reproduction targets.

Each test prints one ``PASS`` or ``FAIL`` line with the measured numbers,
then asserts the same condition. Run alone with::

    pytest tests/test_acceptance.py -v

The planted and runtime checks take a few minutes at full scale.
"""
import json
from pathlib import Path

import numpy as np
import pytest

from oracles import entropy_ref, grad_fd, hess_fd, interior, random_metric, random_points_similarity, tree_metric
from structdiv.clustering import information_decomposition, kmeans_restart
from structdiv.experiments.beta import analyze_rutor, load_rutor
from structdiv.experiments.planted import PlantedConfig, run_planted_experiment
from structdiv.experiments.runtime import RuntimeConfig, run_runtime_experiment
from structdiv.measures import bregman_information, divergence, entropy, entropy_gradient, entropy_hessian
from structdiv.similarity import (SimilarityMatrix, is_negative_type, is_positive_definite, nearest_pd_similarity,
                                  similarity_from_metric)
from structdiv.simplex import WeightedEnsemble
from structdiv.transport import wasserstein1

pytestmark = pytest.mark.acceptance

AMI_ONE_TOL = 1e-9
RUNTIME_SIZES = (10, 25, 50, 100, 200)
MIN_SPEEDUP = 5.0
EQUIV_TOL = 1e-10
PEARSON, KENDALL, CORR_TOL = 0.92, 0.77, 0.05
RUTOR_RATIOS = {("taxonomic", "mid"): 0.67, ("taxonomic", "late"): 0.86,
                ("functional", "mid"): 0.46, ("functional", "late"): 0.46}
RATIO_TOL = 0.02
RUTOR_PERCENTILES = {("taxonomic", "early"): (39.0, 5.0), ("functional", "early"): (24.0, 5.0),
                     ("functional", "late"): (1.0, 2.0)}


@pytest.fixture
def emit(capsys):
    def _emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} [{name}] {detail}")
        return ok
    return _emit


@pytest.fixture(scope="module")
def runtime_report():
    return run_runtime_experiment(RuntimeConfig(sizes=RUNTIME_SIZES, runs=3, alpha=2.0, seed=0))


def test_planted_partition_recovery(emit):
    rep = run_planted_experiment(PlantedConfig(runs=50, n_restarts=100, seed=0))
    fails = []
    for m in rep.config.m_values:
        for k in (2, 3):
            v = rep.median_ami("Z", m, k)
            if v < 1.0 - AMI_ONE_TOL:
                fails.append(f"Z m={m} k={k} median AMI {v:.4f} < 1")
    i_small, i_large = rep.median_ami("I", 2, 2), rep.median_ami("I", 16, 3)
    if i_small > 0.5:
        fails.append(f"I m=2 k=2 median AMI {i_small:.4f} > 0.5")
    if i_large < 0.9:
        fails.append(f"I m=16 k=3 median AMI {i_large:.4f} < 0.9")
    z_min = min(rep.median_ami("Z", m, k) for m in rep.config.m_values for k in (2, 3))
    detail = (f"Z min median AMI {z_min:.6f}; I m=2 k=2 {i_small:.4f} (<=0.5); "
              f"I m=16 k=3 {i_large:.4f} (>=0.9)") + (f"; {'; '.join(fails)}" if fails else "")
    assert emit("planted-partition recovery", not fails, detail), detail


def test_runtime_experiment(emit, runtime_report):
    rep = runtime_report
    fails, parts = [], []
    for s in RUNTIME_SIZES:
        ot, naive, fast = (rep.median(s, k) for k in ("ot", "jbd_naive", "jbd_fast"))
        diff = max(r.max_abs_diff for r in rep.runs if r.size == s)
        parts.append(f"n={s}: ot {ot:.4f}s naive {naive:.4f}s fast {fast:.4f}s x{ot / naive:.1f} diff {diff:.1e}")
        if not naive < ot:
            fails.append(f"n={s} naive not faster than OT")
        if not fast <= naive:
            fails.append(f"n={s} fast slower than naive")
        if not diff <= EQUIV_TOL:
            fails.append(f"n={s} fast/naive differ by {diff:.2e}")
    speedup = rep.median(RUNTIME_SIZES[-1], "ot") / rep.median(RUNTIME_SIZES[-1], "jbd_naive")
    if speedup < MIN_SPEEDUP:
        fails.append(f"speedup {speedup:.2f} < {MIN_SPEEDUP} at n={RUNTIME_SIZES[-1]}")
    detail = "; ".join(parts + fails)
    assert emit("runtime vs exact OT", not fails, detail), detail


def test_correlation_reproduction(emit, runtime_report):
    rep = runtime_report
    fails, parts = [], []
    for s in RUNTIME_SIZES:
        r, t = rep.median(s, "pearson"), rep.median(s, "kendall")
        parts.append(f"n={s}: r {r:.3f} tau {t:.3f}")
        if abs(r - PEARSON) > CORR_TOL:
            fails.append(f"n={s} r={r:.3f} outside {PEARSON}+-{CORR_TOL}")
        if abs(t - KENDALL) > CORR_TOL:
            fails.append(f"n={s} tau={t:.3f} outside {KENDALL}+-{CORR_TOL}")
    detail = "; ".join(parts + fails)
    assert emit("OT vs J-BD correlation", not fails, detail), detail


def test_rutor_reproduction(emit):
    try:
        data = load_rutor()
    except FileNotFoundError as exc:
        emit("Rutor beta diversity", False, f"data not available: {exc}")
        pytest.fail(f"Rutor data not available: {exc}")
    res = {a: analyze_rutor(data, alpha=a, n_null=1000, rng_seed=0) for a in (2.0, 3.0, 4.0)}
    base = res[2.0]
    fails, parts = [], []
    ratios = base.ratios()
    for (kind, stage), target in RUTOR_RATIOS.items():
        v = ratios[kind][stage]
        parts.append(f"{kind} {stage}/early {100 * v:.1f}%")
        if abs(v - target) > RATIO_TOL:
            fails.append(f"{kind} {stage}/early {100 * v:.1f}% vs {100 * target:.0f}+-{100 * RATIO_TOL:.0f}pp")
    for (kind, stage), (target, tol) in RUTOR_PERCENTILES.items():
        v = getattr(base, kind).stages[stage].percentile
        parts.append(f"{kind} {stage} pct {v:.1f}")
        if abs(v - target) > tol:
            fails.append(f"{kind} {stage} percentile {v:.1f} vs {target}+-{tol}")
    # qualitative ordering: later stages stay on the same side of early, and taxonomic mid < late
    for a in (3.0, 4.0):
        r = res[a].ratios()
        for kind in ("taxonomic", "functional"):
            for stage in ("mid", "late"):
                if (r[kind][stage] < 1) != (ratios[kind][stage] < 1):
                    fails.append(f"alpha={a:g} {kind} {stage}/early flips side of 1")
        if (r["taxonomic"]["mid"] < r["taxonomic"]["late"]) != (ratios["taxonomic"]["mid"] < ratios["taxonomic"]["late"]):
            fails.append(f"alpha={a:g} taxonomic mid/late order flips")
    detail = "; ".join(parts + fails)
    assert emit("Rutor beta diversity", not fails, detail), detail


def _property_checks():
    rng = np.random.default_rng(2024)
    out = {}

    worst_neg, worst_self, zero_off = 0.0, 0.0, 0
    for _ in range(10_000):
        n = int(rng.integers(2, 9))
        Z = SimilarityMatrix(random_points_similarity(rng, n, tau=float(rng.uniform(0.2, 5)))[0]).certify()
        alpha = float(rng.uniform(2, 6))
        p, q = interior(rng, n), interior(rng, n)
        d = divergence(Z, alpha, p, q)
        worst_neg = min(worst_neg, d)
        worst_self = max(worst_self, abs(divergence(Z, alpha, p, p)))
        zero_off += d <= 0
    out["divergence >=0, d(p,p)=0, d(p,q)>0 on 1e4 PD instances"] = (
        worst_neg >= 0 and worst_self == 0 and zero_off == 0,
        f"min {worst_neg:.1e}, max d(p,p) {worst_self:.1e}, zero off-diagonal {zero_off}")

    worst = 0.0
    for _ in range(500):
        n, m = int(rng.integers(2, 9)), int(rng.integers(2, 12))
        Z = SimilarityMatrix(random_points_similarity(rng, n)[0]).certify()
        w = rng.uniform(0.1, 1, m)
        ens = WeightedEnsemble(interior(rng, n, m), w / w.sum())
        alpha = float(rng.uniform(2, 6))
        a = bregman_information(Z, alpha, ens, "divergence").value
        b = bregman_information(Z, alpha, ens, "jensen").value
        worst = max(worst, abs(a - b))
    out["Bregman information dual forms within 1e-10"] = (worst <= 1e-10, f"max diff {worst:.1e}")

    worst = 0.0
    for _ in range(500):
        n, m = int(rng.integers(2, 8)), int(rng.integers(3, 15))
        k = int(rng.integers(1, m + 1))
        Z = SimilarityMatrix(random_points_similarity(rng, n)[0]).certify()
        ens = WeightedEnsemble(interior(rng, n, m))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, m - k)])
        dec = information_decomposition(Z, float(rng.uniform(2, 5)), ens, labels)
        worst = max(worst, abs(dec.between + dec.within - dec.total) / max(dec.total, 1e-300))
    out["decomposition additivity within 1e-9 relative"] = (worst <= 1e-9, f"max rel {worst:.1e}")

    worst_g = worst_h = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 7))
        Z = random_points_similarity(rng, n)[0]
        alpha = float(rng.uniform(2, 5))
        p = interior(rng, n)
        f = lambda x: entropy_ref(Z, alpha, x)  # noqa: E731
        gfd = grad_fd(f, p)
        worst_g = max(worst_g, np.linalg.norm(entropy_gradient(Z, alpha, p) - gfd) / np.linalg.norm(gfd))
        H, Hfd = entropy_hessian(Z, alpha, p), hess_fd(f, p)
        worst_h = max(worst_h, np.linalg.norm(H - Hfd) / np.linalg.norm(Hfd))
    out["gradient/Hessian vs finite differences within 1e-5 relative"] = (
        worst_g <= 1e-5 and worst_h <= 1e-5, f"grad {worst_g:.1e}, Hessian {worst_h:.1e}")

    top = -np.inf
    for _ in range(100):
        n = int(rng.integers(2, 9))
        Z = random_points_similarity(rng, n, tau=float(rng.uniform(0.2, 5)))[0]
        top = max(top, np.linalg.eigvalsh(entropy_hessian(Z, float(rng.uniform(2, 6)), interior(rng, n)))[-1])
    out["Hessian negative definite on 100 instances"] = (top < 0, f"largest eigenvalue {top:.2e}")

    bad_a = bad_z = 0
    for _ in range(200):
        n = int(rng.integers(2, 8))
        Z, D = random_points_similarity(rng, n)
        p = interior(rng, n)
        vals = [entropy(Z, a, p) for a in np.linspace(0, 8, 17)]
        bad_a += int(np.any(np.diff(vals) > 1e-12))
        for a in (0.5, 1.0, 2.0, 4.0):
            bad_z += int(entropy(np.exp(-0.5 * D), a, p) > entropy(Z, a, p) + 1e-12)
    out["entropy monotone in alpha and in Z"] = (bad_a == 0 and bad_z == 0,
                                                 f"alpha violations {bad_a}, Z violations {bad_z}")

    bad = []
    for label, D in ([("tree", tree_metric(rng, int(rng.integers(3, 15)))) for _ in range(20)]
                     + [("euclid", np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1)))
                        for X in (rng.uniform(size=(int(rng.integers(3, 15)), 3)) for _ in range(20))]
                     + [("4-point", random_metric(rng, 4)) for _ in range(50)]):
        if not is_negative_type(D).is_negative_type:
            bad.append(f"{label} not negative type")
        for tau in (0.1, 1.0, 10.0):
            if not is_positive_definite(similarity_from_metric(D, tau)).is_pd:
                bad.append(f"{label} tau={tau}")
    out["exp(-tau D) PD for negative-type metrics"] = (not bad, f"{len(bad)} failures over 90 metrics x 3 tau")

    corpus = json.loads((Path(__file__).parent / "data" / "w1_corpus.json").read_text())["cases"]
    worst = max(abs(wasserstein1(np.array(c["D"]), np.array(c["p"]), np.array(c["q"]))[0] - c["cost"])
                for c in corpus)
    out["W1 vs brute force on n<=5 corpus within 1e-8"] = (worst <= 1e-8, f"{len(corpus)} cases, max err {worst:.1e}")

    bad = 0
    for _ in range(100):
        n, m = int(rng.integers(2, 7)), int(rng.integers(4, 25))
        k = int(rng.integers(2, min(m, 6) + 1))
        Z = SimilarityMatrix(random_points_similarity(rng, n)[0]).certify()
        res = kmeans_restart(Z, float(rng.uniform(2, 4)), WeightedEnsemble(interior(rng, n, m)), k, 200,
                             int(rng.integers(2 ** 31)))
        h = np.asarray(res.history)
        bad += int(np.any(np.diff(h) > 1e-12 * max(1.0, abs(h[0]))))
    out["k-means objective monotone on 100 ensembles"] = (bad == 0, f"{bad} non-monotone histories")

    bad = []
    for _ in range(20):
        n = int(rng.integers(3, 8))
        A = rng.uniform(0, 1.2, size=(n, n))
        M = 0.5 * (A + A.T)
        np.fill_diagonal(M, 1.0)
        res = nearest_pd_similarity(M, 0.05, 0.99)
        Zn = res.similarity.entries
        if not (res.converged and np.all(np.diag(Zn) == 1) and Zn.min() >= 0
                and (Zn - np.eye(n)).max() <= 0.99 and np.linalg.eigvalsh(Zn)[0] >= 0.05 - 1e-7):
            bad.append("infeasible")
    for _ in range(20):
        Z = random_points_similarity(rng, int(rng.integers(3, 9)))[0]
        lam = np.linalg.eigvalsh(Z)[0]
        res = nearest_pd_similarity(Z, delta=lam / 2)
        if not (res.converged and np.allclose(res.similarity.entries, Z, atol=1e-9)):
            bad.append("moved a feasible input")
    out["nearest-PD feasibility and fixed point"] = (not bad, f"{len(bad)} failures over 40 inputs")
    return out


def test_property_suites(emit):
    checks = _property_checks()
    fails = [f"{k}: {d}" for k, (ok, d) in checks.items() if not ok]
    detail = "; ".join(f"{k}: {d}" for k, (_, d) in checks.items())
    assert emit("property suites", not fails, detail), "; ".join(fails)
