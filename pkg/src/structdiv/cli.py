"""Command-line entry point: ``structdiv <subcommand> [options]``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure. Failures
print a JSON object to standard error. Every report carries a ``manifest``
with input digests, seed, library version and wall-clock time.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from ._accel import backend, default_threads
from .clustering import bregman_kmeans
from .errors import NumericalError, StructDivError, ValidationError
from .io import (element_ids_of_matrix, hierarchy_element_ids, read_distributions, read_hierarchy,
                 read_matrix_csv, write_matrix_csv, write_rows_csv)
from .measures import all_pairs_jbd_fast, all_pairs_jbd_naive, divergence, entropy
from .similarity import (SimilarityMatrix, calibrate_tau, nearest_pd_similarity, similarity_from_hierarchy,
                         similarity_from_metric, similarity_linear_from_metric)
from .simplex import WeightedEnsemble, floor_rows
from .transport import all_pairs_wasserstein, wasserstein1

SCHEMA_VERSION = "1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    inputs: Dict[str, str] = field(default_factory=dict)
    seed: Optional[int] = None
    version: str = __version__
    backend: str = field(default_factory=backend)
    schema_version: str = SCHEMA_VERSION
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    wall_clock_seconds: float = 0.0
    outputs: List[str] = field(default_factory=list)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Context:
    def __init__(self, args):
        params = {k: v for k, v in vars(args).items() if k not in ("func",)}
        self.manifest = RunManifest(args.command if args.command != "exp" else f"exp {args.experiment}", params)
        self.args = args
        self._t0 = time.perf_counter()

    def track(self, path) -> Path:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"input file not found: {p}")
        self.manifest.inputs[str(p)] = sha256_file(p)
        return p

    def seed(self) -> int:
        s = self.args.seed
        if s is None:
            s = int(np.random.SeedSequence().entropy % (2 ** 63))
        self.manifest.seed = int(s)
        return int(s)

    def finish(self, payload: dict) -> dict:
        self.manifest.wall_clock_seconds = time.perf_counter() - self._t0
        payload["manifest"] = asdict(self.manifest)
        return payload


# --- shared loaders ----------------------------------------------------------

def _similarity(ctx: Context, spec: str, n: int) -> SimilarityMatrix:
    if spec == "identity":
        return SimilarityMatrix.identity(n)
    Z = read_matrix_csv(ctx.track(spec), "similarity")
    if Z.n != n:
        raise ValidationError(f"similarity covers {Z.n} elements, distributions have {n}")
    return Z


def _distributions(ctx: Context, path, floor: Optional[float] = None, weights_column=None):
    table = read_distributions(ctx.track(path), weights_column=weights_column)
    if floor is not None:
        table.probs = floor_rows(table.probs, floor)
    return table


def _emit(ctx: Context, payload: dict, matrix=None, ids=None):
    """Write a matrix (CSV unless ``--format json``) and print the JSON report."""
    args = ctx.args
    fmt = getattr(args, "format", "json")
    out = getattr(args, "out", None)
    if matrix is not None:
        if fmt == "csv" or (fmt == "auto" and out):
            if out is None:
                raise ValidationError("--out is required for CSV matrix output")
            write_matrix_csv(out, matrix, ids)
            ctx.manifest.outputs.append(str(out))
        else:
            payload["matrix"] = np.asarray(matrix).tolist()
            if ids is not None:
                payload["ids"] = list(ids)
    if out and matrix is None:
        ctx.manifest.outputs.append(str(out))
    text = json.dumps(ctx.finish(payload), indent=2, default=_json_default)
    if out and matrix is None:
        Path(out).write_text(text + "\n")
    print(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


# --- subcommands ---------------------------------------------------------------

def cmd_entropy(ctx, a):
    t = _distributions(ctx, a.dist, a.floor)
    Z = _similarity(ctx, a.sim, t.probs.shape[1])
    values = [entropy(Z, a.alpha, p) for p in t.probs]
    payload = {"alpha": a.alpha, "values": values}
    if len(values) == 1:
        payload["value"] = values[0]
    _emit(ctx, payload)


def cmd_divergence(ctx, a):
    tp = _distributions(ctx, a.p, a.floor)
    tq = _distributions(ctx, a.q, a.floor)
    if tp.probs.shape[1] != tq.probs.shape[1]:
        raise ValidationError("p and q have different supports")
    if tp.probs.shape[0] != tq.probs.shape[0] and tq.probs.shape[0] != 1:
        raise ValidationError("q must have one row or as many rows as p")
    Z = _similarity(ctx, a.sim, tp.probs.shape[1])
    Q = np.broadcast_to(tq.probs, tp.probs.shape)
    values = [divergence(Z, a.alpha, p, q) for p, q in zip(tp.probs, Q)]
    payload = {"alpha": a.alpha, "values": values}
    if len(values) == 1:
        payload["value"] = values[0]
    _emit(ctx, payload)


def cmd_jbd_matrix(ctx, a):
    t = _distributions(ctx, a.dist, a.floor)
    Z = _similarity(ctx, a.sim, t.probs.shape[1])
    if a.method == "naive":
        res = all_pairs_jbd_naive(Z, a.alpha, t.probs)
    else:
        res = all_pairs_jbd_fast(Z, a.alpha, t.probs, threads=a.threads)
    ids = t.labels or [str(i) for i in range(t.probs.shape[0])]
    _emit(ctx, {"alpha": a.alpha, "method": a.method, "m": len(ids)}, res.values, ids)


def cmd_cluster(ctx, a):
    t = _distributions(ctx, a.dist, a.floor, a.weights_column)
    Z = _similarity(ctx, a.sim, t.probs.shape[1])
    ens = WeightedEnsemble(t.probs, t.weights)
    rep = bregman_kmeans(Z, a.alpha, ens, a.k, a.restarts, a.max_iters, ctx.seed(), n_jobs=a.threads)
    payload = {"alpha": a.alpha, **rep.to_dict(), "labels": t.labels}
    _emit(ctx, payload)


def cmd_wasserstein(ctx, a):
    D = read_matrix_csv(ctx.track(a.metric), "distance")
    if a.dist is not None:
        t = _distributions(ctx, a.dist)
        res = all_pairs_wasserstein(D, t.probs)
        ids = t.labels or [str(i) for i in range(t.probs.shape[0])]
        _emit(ctx, {"m": len(ids)}, res.values, ids)
        return
    if a.p is None or a.q is None:
        raise ValidationError("give --p and --q, or --dist for all pairs")
    p = _distributions(ctx, a.p).probs
    q = _distributions(ctx, a.q).probs
    if p.shape[0] != 1 or q.shape[0] != 1:
        raise ValidationError("--p and --q must hold one distribution each")
    cost, plan = wasserstein1(D, p[0], q[0])
    payload = {"value": cost, "iterations": plan.iterations, "dual_objective": plan.dual_objective}
    if a.plan:
        payload["plan"] = plan.plan
    _emit(ctx, payload)


def cmd_sim_from_dist(ctx, a):
    path = ctx.track(a.input)
    D = read_matrix_csv(path, "distance")
    ids = element_ids_of_matrix(path)
    if a.linear:
        Z = similarity_linear_from_metric(D)
        tau = None
    else:
        tau = a.tau if a.target_median is None else calibrate_tau(D, a.target_median)
        Z = similarity_from_metric(D, tau)
    payload = {"tau": tau, "linear": a.linear, "positive_definite": Z.certified,
               "min_eigenvalue": Z.pd_certificate}
    _emit(ctx, payload, Z.dense(), ids)


def cmd_sim_from_hierarchy(ctx, a):
    path = ctx.track(a.input)
    h = read_hierarchy(path, ctx.track(a.levels))
    Z = similarity_from_hierarchy(h)
    _emit(ctx, {"depth": h.depth, "positive_definite": Z.certified, "min_eigenvalue": Z.pd_certificate},
          Z.dense(), hierarchy_element_ids(path))


def cmd_nearest_pd(ctx, a):
    path = ctx.track(a.input)
    M = read_matrix_csv(path, "square")
    ids = element_ids_of_matrix(path)
    res = nearest_pd_similarity(M, a.delta, a.cap, a.max_iters, a.tol)
    if not res.converged:
        raise NumericalError(f"nearest-PD projection did not converge in {res.iterations} iterations "
                             f"(step {res.step:.3e})")
    _emit(ctx, {"converged": res.converged, "iterations": res.iterations, "step": res.step,
                "min_eigenvalue": res.min_eigenvalue}, res.similarity.dense(), ids)


def _write_report(ctx, payload: dict, rows: List[dict], prefix: str):
    out = ctx.args.out
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        curves = d / f"{prefix}_curves.csv"
        write_rows_csv(curves, rows)
        ctx.manifest.outputs.extend([str(d / f"{prefix}_report.json"), str(curves)])
        report = ctx.finish(payload)
        (d / f"{prefix}_report.json").write_text(json.dumps(report, indent=2, default=_json_default) + "\n")
    else:
        report = ctx.finish(payload)
    print(json.dumps(report, indent=2, default=_json_default))


def cmd_exp_planted(ctx, a):
    from .experiments.planted import PlantedConfig, run_planted_experiment
    cfg = PlantedConfig(m_values=tuple(a.m_values), runs=a.runs, n_restarts=a.restarts,
                        alpha=a.alpha, seed=ctx.seed())
    structure = {"both": None, "Z": True, "I": False}[a.structure]
    rep = run_planted_experiment(cfg, structure)
    payload = rep.to_dict()
    payload.pop("runs")
    _write_report(ctx, payload, rep.curve_rows(), "planted")


def cmd_exp_runtime(ctx, a):
    from .experiments.runtime import RuntimeConfig, run_runtime_experiment
    if a.threads != 1:
        raise ValidationError("the runtime experiment is timed single-threaded; use --threads 1")
    cfg = RuntimeConfig(sizes=tuple(a.sizes), runs=a.runs, alpha=a.alpha, seed=ctx.seed(), sampler=a.sampler)
    rep = run_runtime_experiment(cfg)
    payload = rep.to_dict()
    payload.pop("runs")
    _write_report(ctx, payload, rep.curve_rows(), "runtime")


def cmd_exp_beta_div(ctx, a):
    from .experiments.beta import _data_dir, analyze_rutor, load_rutor
    data = load_rutor(a.data_dir)
    for name in ("rutor_abundance.csv", "rutor_traits.csv", "rutor_stages.csv"):
        ctx.track(_data_dir(a.data_dir) / name)
    res = analyze_rutor(data, a.alpha, a.n_null, ctx.seed())
    rows = []
    for kind, rep in (("taxonomic", res.taxonomic), ("functional", res.functional)):
        for s in rep.stages.values():
            rows.extend({"kind": kind, "stage": s.stage, "draw": i, "null_value": float(v), "observed": s.value}
                        for i, v in enumerate(s.null))
    _write_report(ctx, res.to_dict(), rows, "beta_div")


# --- parser --------------------------------------------------------------------

def _add_common(p, alpha=True, floor=True, sim=True):
    if alpha:
        p.add_argument("--alpha", type=float, default=2.0, help="order of the entropy (default 2)")
    if floor:
        p.add_argument("--floor", type=float, default=None,
                       help="raise zero entries to this value and renormalize")
    if sim:
        p.add_argument("--sim", default="identity", help="similarity CSV, or 'identity' (default)")
    p.add_argument("--out", default=None, help="output path")
    p.add_argument("--format", choices=("auto", "json", "csv"), default="auto",
                   help="matrix output format (auto: CSV when --out is set)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="structdiv", description="Structure-aware diversity, divergences and clustering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("entropy", help="entropy of each distribution")
    p.add_argument("--dist", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("divergence", help="divergence of p from q")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("jbd-matrix", help="all-pairs Jensen-Bregman divergences")
    p.add_argument("--dist", required=True)
    p.add_argument("--method", choices=("fast", "naive"), default="fast")
    p.add_argument("--threads", type=int, default=default_threads())
    _add_common(p)
    p.set_defaults(func=cmd_jbd_matrix)

    p = sub.add_parser("cluster", help="Bregman k-means")
    p.add_argument("--dist", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--weights-column", default=None)
    p.add_argument("--threads", type=int, default=default_threads())
    _add_common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("wasserstein", help="exact W1 under a ground metric")
    p.add_argument("--metric", required=True, help="distance matrix CSV")
    p.add_argument("--p")
    p.add_argument("--q")
    p.add_argument("--dist", help="all pairs of the rows of this file")
    p.add_argument("--plan", action="store_true", help="include the transport plan")
    _add_common(p, alpha=False, floor=False, sim=False)
    p.set_defaults(func=cmd_wasserstein)

    p = sub.add_parser("sim-from-dist", help="similarity matrix from a distance matrix")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--target-median", type=float, default=None,
                   help="choose tau so the median off-diagonal similarity hits this value")
    p.add_argument("--linear", action="store_true", help="use 1 - D / max(D)")
    _add_common(p, alpha=False, floor=False, sim=False)
    p.set_defaults(func=cmd_sim_from_dist)

    p = sub.add_parser("sim-from-hierarchy", help="similarity matrix from a hierarchy")
    p.add_argument("--in", dest="input", required=True, help="CSV: element,level1,...")
    p.add_argument("--levels", required=True, help="JSON {level: similarity}")
    _add_common(p, alpha=False, floor=False, sim=False)
    p.set_defaults(func=cmd_sim_from_hierarchy)

    p = sub.add_parser("nearest-pd", help="nearest positive definite similarity matrix")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--cap", type=float, default=1.0 - 1e-9)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=10_000)
    _add_common(p, alpha=False, floor=False, sim=False)
    p.set_defaults(func=cmd_nearest_pd)

    p = sub.add_parser("exp", help="reproduction experiments")
    exp = p.add_subparsers(dest="experiment", parser_class=_Parser)
    exp.required = True

    e = exp.add_parser("planted", help="planted-partition recovery")
    e.add_argument("--m-values", type=int, nargs="+", default=[2, 4, 8, 16])
    e.add_argument("--runs", type=int, default=50)
    e.add_argument("--restarts", type=int, default=100)
    e.add_argument("--alpha", type=float, default=2.0)
    e.add_argument("--structure", choices=("both", "Z", "I"), default="both")
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--out", default=None, help="output directory")
    e.set_defaults(func=cmd_exp_planted)

    e = exp.add_parser("runtime", help="runtime and agreement of W1 and J-BD")
    e.add_argument("--sizes", type=int, nargs="+", default=[10, 25, 50, 100, 200])
    e.add_argument("--runs", type=int, default=3)
    e.add_argument("--alpha", type=float, default=2.0)
    e.add_argument("--sampler", choices=("normalized_uniform", "dirichlet"), default="normalized_uniform")
    e.add_argument("--threads", type=int, default=1)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--out", default=None, help="output directory")
    e.set_defaults(func=cmd_exp_runtime)

    e = exp.add_parser("beta-div", help="Rutor beta diversity with a resampling null")
    e.add_argument("--data-dir", default=None)
    e.add_argument("--alpha", type=float, default=2.0)
    e.add_argument("--n-null", type=int, default=1000)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--out", default=None, help="output directory")
    e.set_defaults(func=cmd_exp_beta_div)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), 1)
    try:
        args.func(Context(args), args)
    except NumericalError as exc:
        return _fail(type(exc).__name__, str(exc), 2)
    except (ValidationError, FileNotFoundError, UsageError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    except StructDivError as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    except ValueError as exc:
        return _fail("ValidationError", str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
