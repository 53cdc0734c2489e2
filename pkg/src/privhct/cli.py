"""privhct command line: tree, eval, recommend, analyze.

Exit status is 0 on success, 1 when a run fails and 2 for usage, config
or missing-file errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import analysis, ldp, recommend
from .config import VERSION, ConfigError, ExperimentConfig, resolve
from .cost import PAIR_CONVENTION, cmn_log_cost, dasgupta_cost
from .graph import Graph, RatingsMatrix, align, all_pairs_hops, largest_component, load_graph
from .mcmc import McmcConfig
from .outputs import read_csv, write_csv, write_json, write_newick
from .pipeline import noisy_vectors_for, partition_for, privact, resolve_bins
from .tree import ClusterTree, parse_newick

_log = logging.getLogger("privhct")

TRACE_HEADER = ["step", "steps_per_n", "cost_noisy_S", "accepted", "log_cm"]
UTILITY_HEADER = ["epsilon", "seed", "n", "K", "cost_dp", "cost_nondp", "opt_est", "rho",
                 "empirical_loss", "relative_utility", "bound", "bound_gap", "bound_ok", "pair_convention"]
TRACES_HEADER = ["run", "epsilon", "seed", "step", "steps_per_n", "cost_noisy_S", "log_cm"]
PER_USER_HEADER = ["fold", "seed", "method", "user", "ndcg", "map", "ap", "fallback"]
PER_FOLD_HEADER = ["fold", "method", "ndcg", "map", "ap", "users"]
RECOMMEND_HEADER = ["epsilon", "seed", "k", "method", "ndcg", "map", "ap", "users"]
SIMILARITY_HEADER = ["mode", "similarity", "negative_pct", "min_r", "max_r", "users", "skipped", "undefined"]
PATH_HEADER = ["epsilon", "seed", "k", "r", "users"]
METHOD_LABELS = {"itemavg": "itemAvg", "friendscf": "friendsCF", "privact-cf": "PrivaCT-CF"}


class RunError(RuntimeError):
    pass


@dataclass
class Data:
    graph: Graph
    ratings: RatingsMatrix | None
    info: dict


def load_data(cfg: ExperimentConfig) -> Data:
    """Graph, optionally reduced to its largest component, aligned with the ratings."""
    if not cfg.graph:
        raise ConfigError("no graph file given (--graph or [data] graph)")
    g = load_graph(cfg.graph)
    info = {"loaded_n": g.n, "loaded_edges": g.num_edges}
    if cfg.largest_component:
        g = largest_component(g)
    ratings = None
    if cfg.ratings:
        al = align(g, cfg.ratings, cfg.normalization)
        g, ratings = al.graph, al.ratings
        info["dropped_vertices"] = al.dropped_vertices
        info["dropped_users"] = al.dropped_users
    info["n"] = g.n
    info["edges"] = g.num_edges
    if g.n < 2:
        raise RunError(f"graph has {g.n} vertices; need at least 2")
    return Data(g, ratings, info)


def eps_label(eps: float) -> str:
    return f"{eps:g}"


def cell_dir(cfg: ExperimentConfig, eps: float | None, seed: int) -> Path:
    name = f"nondp_seed{seed}" if eps is None else f"eps{eps_label(eps)}_seed{seed}"
    return cfg.out() / "trees" / name


def mcmc_config(cfg: ExperimentConfig, n: int) -> McmcConfig:
    every = cfg.trace_every or n
    return McmcConfig(window_factor=cfg.window_factor, cap_factor=cfg.cap_factor, tol=cfg.tol,
                      temperature=cfg.temperature, trace_every=every, checkpoint_every=every)


def _fmt(x: float) -> str:
    return repr(float(x))


def run_cell(cfg: ExperimentConfig, data: Data, eps: float | None, seed: int) -> Path:
    g = data.graph
    mc = mcmc_config(cfg, g.n)
    run = privact(g, eps, mc, seed=seed, K=cfg.K,
                  on_checkpoint=lambda step, tree, cost: (step, cost, cmn_log_cost(tree, g)))
    chain = run.chain
    rows = list(chain.checkpoints)
    if rows[-1][0] != chain.steps:
        rows.append((chain.steps, chain.cost, cmn_log_cost(chain.tree, g)))
    acc = dict(zip(chain.trace_steps.tolist(), chain.trace_accepted.tolist()))
    trace = [[step, _fmt(step / g.n), _fmt(cost), int(acc.get(step, False)), _fmt(lcm)]
             for step, cost, lcm in rows]
    out = cell_dir(cfg, eps, seed)
    write_newick(out / "tree.nwk", run.tree.to_newick(), cfg)
    write_csv(out / "trace.csv", TRACE_HEADER, trace, cfg)
    meta = run.metadata.to_dict()
    meta.update(dataset=data.info, log_cm=rows[-1][2], max_cache_drift=chain.max_drift)
    write_json(out / "meta.json", {"run": meta}, cfg)
    _log.info("%s: steps=%d converged=%s cost_true=%.6g", out.name, chain.steps,
              chain.converged, run.metadata.cost_true)
    return out


_WORKER: dict = {}


def _worker_cell(cfg: ExperimentConfig, eps, seed) -> str:
    if "data" not in _WORKER:
        _WORKER["data"] = load_data(cfg)
    return str(run_cell(cfg, _WORKER["data"], eps, seed))


def cmd_tree(cfg: ExperimentConfig, jobs: int = 1) -> int:
    data = load_data(cfg)
    cells = [(None, s) for s in cfg.seeds] + [(e, s) for e in cfg.epsilons for s in cfg.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            list(pool.map(_worker_cell, [cfg] * len(cells), *zip(*cells)))
    else:
        for eps, seed in cells:
            run_cell(cfg, data, eps, seed)
    write_json(cfg.out() / "config.json", {"dataset": data.info}, cfg)
    return 0


def load_tree(path: Path, n: int) -> ClusterTree:
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path} (run 'privhct tree' first)")
    t = parse_newick(path.read_text(encoding="utf-8"))
    if t.n != n:
        raise RunError(f"{path}: tree has {t.n} leaves but the graph has {n} vertices")
    return t


def cmd_eval(cfg: ExperimentConfig) -> int:
    data = load_data(cfg)
    g = data.graph
    K = resolve_bins(g.n, cfg.K)
    nondp = {s: load_tree(cell_dir(cfg, None, s) / "tree.nwk", g.n) for s in cfg.seeds}
    rows = []
    for seed in cfg.seeds:
        S_true = ldp.build_dissimilarity(ldp.degree_vectors(g, partition_for(g.n, K, seed)))
        # best non-private cost seen on this seed's true matrix
        opt_est = max(dasgupta_cost(t, S_true) for t in nondp.values())
        c_nd = dasgupta_cost(nondp[seed], S_true)
        for eps in cfg.epsilons:
            t = load_tree(cell_dir(cfg, eps, seed) / "tree.nwk", g.n)
            rep = analysis.utility_report((g.n, dasgupta_cost(t, S_true)), (g.n, c_nd), K, eps)
            gap = opt_est - rep.cost_dp
            rows.append({
                "epsilon": eps_label(eps), "seed": seed, "n": g.n, "K": K,
                "cost_dp": _fmt(rep.cost_dp), "cost_nondp": _fmt(rep.cost_nondp),
                "opt_est": _fmt(opt_est), "rho": _fmt(rep.rho),
                "empirical_loss": _fmt(rep.empirical_loss),
                "relative_utility": _fmt(rep.relative_utility),
                "bound": _fmt(rep.bound), "bound_gap": _fmt(gap), "bound_ok": int(gap <= rep.bound),
                "pair_convention": PAIR_CONVENTION,
            })
    write_csv(cfg.out() / "utility.csv", UTILITY_HEADER, rows, cfg)
    fig = []
    for eps in [None] + list(cfg.epsilons):
        for seed in cfg.seeds:
            for r in read_csv(cell_dir(cfg, eps, seed) / "trace.csv"):
                fig.append({"run": "nondp" if eps is None else "privact",
                            "epsilon": "" if eps is None else eps_label(eps), "seed": seed,
                            "step": r["step"], "steps_per_n": r["steps_per_n"],
                            "cost_noisy_S": r["cost_noisy_S"], "log_cm": r["log_cm"]})
    write_csv(cfg.out() / "traces.csv", TRACES_HEADER, fig, cfg)
    return 0


def _need_ratings(data: Data) -> RatingsMatrix:
    if data.ratings is None:
        raise ConfigError("no ratings file given (--ratings or [data] ratings)")
    return data.ratings


def hct_for(cfg: ExperimentConfig, data: Data, eps: float, seed: int) -> recommend.SocialFn:
    g = data.graph
    t = load_tree(cell_dir(cfg, eps, seed) / "tree.nwk", g.n)
    return recommend.hct_neighbor_sets(t, noisy_vectors_for(g, eps, seed, cfg.K))


def cmd_recommend(cfg: ExperimentConfig) -> int:
    data = load_data(cfg)
    ratings = _need_ratings(data)
    summary_rows = []
    for eps in cfg.epsilons:
        for seed in cfg.seeds:
            hct = hct_for(cfg, data, eps, seed) if "privact-cf" in cfg.methods else None
            for k in cfg.ks:
                res = recommend.cold_start(data.graph, ratings, k, cfg.folds, seed, cfg.methods, hct)
                out = cfg.out() / "recommend" / f"eps{eps_label(eps)}_seed{seed}" / f"k{k}"
                write_csv(out / "per_user.csv", PER_USER_HEADER,
                          ({**r, "seed": seed, "ndcg": _fmt(r["ndcg"]), "map": _fmt(r["map"]),
                            "ap": _fmt(r["ap"])} for r in res.rows), cfg)
                write_csv(out / "per_fold.csv", PER_FOLD_HEADER, res.per_fold(), cfg)
                summ = res.summary()
                table = {metric: {METHOD_LABELS[m]: summ[m][metric] for m in summ}
                         for metric in ("ndcg", "map", "ap")}
                write_json(out / "summary.json", {
                    "k": k, "epsilon": eps, "seed": seed, "folds": cfg.folds,
                    "columns": [METHOD_LABELS[m] for m in summ], "table": table,
                    "users": {METHOD_LABELS[m]: summ[m]["users"] for m in summ},
                    "skipped_no_ratings": res.skipped_no_ratings,
                    "fallbacks": {METHOD_LABELS[m]: v for m, v in res.fallbacks.items()},
                    "map_normalizer": recommend.MAP_NORMALIZER,
                }, cfg)
                for m, agg in summ.items():
                    summary_rows.append({"epsilon": eps_label(eps), "seed": seed, "k": k,
                                         "method": m, **{x: _fmt(agg[x]) for x in ("ndcg", "map", "ap")},
                                         "users": agg["users"]})
    write_csv(cfg.out() / "recommend" / "summary.csv", RECOMMEND_HEADER, summary_rows, cfg)
    return 0


def cmd_analyze(cfg: ExperimentConfig) -> int:
    data = load_data(cfg)
    ratings = _need_ratings(data)
    g = data.graph
    hops = all_pairs_hops(g)
    rows = []
    for mode in ("partial", "full"):
        s = analysis.distance_similarity_correlation(g, ratings, mode, hops=hops)
        rows.append({"mode": mode, "similarity": analysis.SIMILARITY,
                     "negative_pct": _fmt(100 * s.negative_fraction), "min_r": _fmt(s.min_r),
                     "max_r": _fmt(s.max_r), "users": len(s.per_user), "skipped": s.skipped,
                     "undefined": s.undefined})
    write_csv(cfg.out() / "similarity.csv", SIMILARITY_HEADER, rows, cfg)
    k = cfg.ks[0]
    path_rows = []
    for eps in cfg.epsilons:
        for seed in cfg.seeds:
            if not (cell_dir(cfg, eps, seed) / "tree.nwk").exists():
                _log.warning("no tree for eps=%s seed=%d; skipping path correlation", eps, seed)
                continue
            hct = hct_for(cfg, data, eps, seed)
            xs, ys = [], []

            def collect(fold, train, preds):
                csc = train.to_csr().tocsc()
                csr = ratings.to_csr()
                for p in preds["privact-cf"]:
                    prof = analysis.path_profile(p.user, p.items, hct.neighbors[p.user], csc, hops)
                    if len(prof):
                        rel = csr.indices[csr.indptr[p.user]:csr.indptr[p.user + 1]]
                        xs.append(recommend.ndcg_at_k(p.items, set(rel.tolist()), k))
                        ys.append(float(prof.mean()))

            recommend.cold_start(g, ratings, k, cfg.folds, seed, ("privact-cf",), hct, on_fold=collect)
            r = analysis.pearson(xs, ys)
            path_rows.append({"epsilon": eps_label(eps), "seed": seed, "k": k,
                              "r": "undefined" if math.isnan(r) else _fmt(r), "users": len(xs)})
    write_csv(cfg.out() / "ndcg_path.csv", PATH_HEADER, path_rows, cfg)
    return 0


def _list(s: str) -> list[str]:
    return [x for x in s.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="INI or JSON experiment file")
    common.add_argument("--graph", help="edge-list file")
    common.add_argument("--ratings", help="'user item weight' triple file")
    common.add_argument("--normalization", help="max-per-user | max-global(c)")
    common.add_argument("--largest-component", dest="largest_component", action="store_const",
                        const=True, default=None, help="keep only the largest connected component")
    common.add_argument("--epsilons", type=_list, help="comma-separated per-user budgets")
    common.add_argument("--bins", "-K", dest="K", type=int, help="bin count, 0 for floor(log2 n)")
    common.add_argument("--seeds", type=_list, help="comma-separated run seeds")
    common.add_argument("--window-factor", dest="window_factor", type=int)
    common.add_argument("--cap-factor", dest="cap_factor", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--temperature", type=float, help="acceptance divisor (experimental; 1 = plain rule)")
    common.add_argument("--trace-every", dest="trace_every", type=int, help="trace interval in steps, 0 for n")
    common.add_argument("--k", dest="ks", type=_list, help="comma-separated metric cutoffs")
    common.add_argument("--folds", type=int)
    common.add_argument("--methods", type=_list, help=f"subset of {','.join(recommend.METHODS)}")
    common.add_argument("--output", "-o", dest="output_dir", help="output directory")
    common.add_argument("--verbose", "-v", action="store_true")

    p = argparse.ArgumentParser(prog="privhct", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"privhct {VERSION}")
    sub = p.add_subparsers(dest="command", required=True)
    t = sub.add_parser("tree", parents=[common], help="learn private and non-private trees")
    t.add_argument("--jobs", "-j", type=int, default=1, help="cells to run in parallel")
    sub.add_parser("eval", parents=[common], help="utility-loss table and log C_M traces")
    sub.add_parser("recommend", parents=[common], help="cold-start recommendation metrics")
    sub.add_parser("analyze", parents=[common], help="distance/similarity correlations")
    return p


_OVERRIDES = ("graph", "ratings", "normalization", "largest_component", "epsilons", "K", "seeds",
              "window_factor", "cap_factor", "tol", "temperature", "trace_every", "ks", "folds",
              "methods", "output_dir")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args.config, {k: getattr(args, k) for k in _OVERRIDES})
        if args.command == "tree":
            return cmd_tree(cfg, args.jobs)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "recommend":
            return cmd_recommend(cfg)
        return cmd_analyze(cfg)
    except FileNotFoundError as exc:
        msg = str(exc) if "file not found" in str(exc) else f"file not found: {exc.filename or exc}"
        print(f"privhct: {msg}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"privhct: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any component failure maps to exit 1
        _log.debug("failure", exc_info=True)
        print(f"privhct: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
