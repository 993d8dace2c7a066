"""Command-line entry point: ``annofuse {fuse,cluster,profile,bench}``.

Every run writes ``config_echo.json`` with all effective parameters.
Passing it back through ``--config`` replays the run; flags given next to
``--config`` override the echoed values. The worker count comes from the
``ANNOFUSE_WORKERS`` environment variable (default 1).

Exit codes: 0 success, 2 input or schema error, 3 fusion failure,
4 every clustering proposal pruned, 5 internal error.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import math
import os
import sys
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import io as aio
from .cluster import Algo, ClassAssignment, fit, predict, prune_by_chance, Verdict
from .core import FusionMethod, SegmentTable, validate_annotation_set
from .errors import AnnofuseError, DegenerateClustering, SchemaError
from .features import FeatureSetName, build_segment_table, resolve_feature_names
from .fusion import FusionConfig, fuse
from .preprocess import (
    NormConfig,
    NormKind,
    SmoothConfig,
    SmoothKind,
    convolve_smooth,
    rater_statistics,
    smooth_set,
    standardize,
)
from .profiling import export_profile, profile
from .reduce import Standardizer, pca_fit, pca_transform, som_fit, som_transform
from .synthbench import SCENARIOS, run_bench, write_bench
from .validity import validity_report

log = logging.getLogger("annofuse")

EXIT_OK, EXIT_INPUT, EXIT_FUSION, EXIT_PRUNED, EXIT_INTERNAL = 0, 2, 3, 4, 5
WORKERS_ENV = "ANNOFUSE_WORKERS"
ECHO_NAME = "config_echo.json"
REDUCTIONS = ("none", "pca2", "pca5", "som")


class InputError(Exception):
    """Bad input files or flag values (exit 2)."""


class FusionFailure(Exception):
    """A sequence could not be fused (exit 3)."""


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def component_seed(seed: int, *keys) -> int:
    """Deterministic per-component seed derived from the top-level seed."""
    words = [int(seed) & 0xFFFFFFFF] + [zlib.crc32(str(k).encode()) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def _map(fn, items):
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


def _csv_list(text: str, cast=str) -> list:
    return [cast(t.strip()) for t in str(text).split(",") if t.strip()]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if hasattr(v, "to_dict"):
        return _jsonable(v.to_dict())
    if hasattr(v, "value"):
        return v.value
    return v


def _echo(args, subcommand: str) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "func", "subcommand", "verbose")}
    return {"subcommand": subcommand, "params": _jsonable(params)}


def _require(args, *names):
    for name in names:
        if getattr(args, name) in (None, ""):
            raise InputError(f"--{name.replace('_', '-')} is required")


# -------------------------------------------------------------------- fuse


def _fusion_config(args) -> tuple[SmoothConfig, NormConfig, FusionConfig, int]:
    try:
        smooth = SmoothConfig(args.smooth, args.smooth_window, args.polyorder)
        norm = NormConfig(args.norm)
        fcfg = FusionConfig(
            method=FusionMethod(args.method),
            drop_negative_weights=not args.keep_negative,
            similarity=args.similarity,
            n_basis=args.n_basis,
            align_max_iter=args.align_max_iter,
            dba_max_iter=args.dba_max_iter,
            dba_tol=args.dba_tol,
            band=args.band,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.post_kernel < 1 or args.post_kernel % 2 == 0:
        raise InputError(f"--post-kernel must be a positive odd integer, got {args.post_kernel}")
    return smooth, norm, fcfg, args.post_kernel


def annotation_files(directory: str) -> list[str]:
    files = sorted(p for p in glob.glob(os.path.join(directory, "*.csv")) if not p.endswith(".gold.csv"))
    if not files:
        raise InputError(f"{directory}: no annotation CSV files")
    return files


def cmd_fuse(args) -> int:
    _require(args, "input", "output")
    smooth, norm, fcfg, post_kernel = _fusion_config(args)
    raters = _csv_list(args.raters) if args.raters else None
    sets = []
    for path in annotation_files(args.input):
        aset = aio.read_annotations(path, raters=raters)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                validate_annotation_set(aset)
        except AnnofuseError as exc:
            raise InputError(f"{path}: {exc}") from exc
        sets.append(smooth_set(aset, smooth))
    stats = rater_statistics(sets) if norm.kind is NormKind.PER_RATER else None
    sets = [standardize(s, norm, stats) for s in sets]

    def run(aset):
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                gs = fuse(aset, fcfg)
        except AnnofuseError as exc:
            raise FusionFailure(f"{aset.sequence_id}: {exc}") from exc
        for w in caught:
            log.warning("%s", w.message)
        fused = gs.fused
        if post_kernel > 1:
            fused = convolve_smooth(fused, post_kernel)
        return aset, gs, fused

    results = _map(run, sets)
    os.makedirs(args.output, exist_ok=True)
    report = {"method": fcfg.method.value, "sequences": {}}
    for aset, gs, fused in results:
        aio.write_gold(os.path.join(args.output, f"{aset.sequence_id}.gold.csv"), fused)
        entry = {
            "raters": list(aset.rater_ids),
            "weights": list(gs.rater_weights),
            "dropped_raters": list(gs.dropped_raters),
            "flags": list(gs.flags),
            "n_samples": aset.n_samples,
            "period_ms": aset.period_ms,
            "info": gs.info,
        }
        if gs.alignment_paths is not None:
            entry["warps"] = [w.to_dict() for w in gs.alignment_paths]
        report["sequences"][aset.sequence_id] = entry
        log.info("fused %s (%d raters)", aset.sequence_id, aset.n_raters)
    echo = _echo(args, "fuse")
    report["config"] = {k: v for k, v in echo["params"].items() if k != "output"}
    aio.write_json(os.path.join(args.output, "fusion_report.json"), _jsonable(report))
    aio.write_json(os.path.join(args.output, ECHO_NAME), echo)
    return EXIT_OK


# ----------------------------------------------------------------- cluster


def load_table(args, need_signals=False) -> tuple[SegmentTable, bool]:
    """Feature table from ``--features`` or built from ``--gold-dir`` and
    ``--segments``. The flag tells whether it was built in-pipeline."""
    if args.features:
        table = aio.read_features(args.features)
        if args.feature_set != "large" or args.custom_features:
            names = resolve_feature_names(args.feature_set, _csv_list(args.custom_features) or None)
            missing = [n for n in names if n not in table.feature_names]
            if missing:
                raise InputError(f"{args.features}: missing feature columns {missing}")
            cols = [table.feature_names.index(n) for n in names]
            table = SegmentTable(table.segments, names, table.features[:, cols])
        return table, False
    if not (args.gold_dir and args.segments):
        raise InputError("give --features, or --gold-dir together with --segments")
    boundaries = aio.read_segments(args.segments)
    golds = {}
    for path in sorted(glob.glob(os.path.join(args.gold_dir, "*.gold.csv"))):
        golds[aio.sequence_id_from_path(path)] = aio.read_gold(path)
    custom = _csv_list(args.custom_features) or None
    table = build_segment_table(
        golds, boundaries, args.feature_set, custom,
        crossing_level=args.crossing_level, peak_support=args.peak_support,
    )
    return table, True


@dataclass
class Proposal:
    name: str
    algo: Algo
    k: int | None
    reduction: str
    params: dict


def build_grid(args) -> list[Proposal]:
    algos = [Algo(a) for a in _csv_list(args.algos)]
    ks = _csv_list(args.k, int)
    reductions = _csv_list(args.reductions)
    for r in reductions:
        if r not in REDUCTIONS:
            raise InputError(f"unknown reduction {r!r}; choose from {', '.join(REDUCTIONS)}")
    if not algos or not reductions:
        raise InputError("the clustering grid is empty")
    grid = []
    for algo in algos:
        if algo is Algo.DBSCAN:
            for red in reductions:
                for eps in _csv_list(args.eps, float):
                    for ms in _csv_list(args.min_samples, int):
                        name = f"dbscan_eps{eps:g}_ms{ms}_{red}"
                        grid.append(Proposal(name, algo, None, red, {"eps": eps, "min_samples": ms}))
            continue
        if not ks:
            raise InputError("--k needs at least one value")
        for k in ks:
            if k < 2:
                raise InputError(f"k must be at least 2, got {k}")
            for red in reductions:
                params = {}
                if algo is Algo.CMEANS:
                    params["m"] = args.fuzzifier
                elif algo is Algo.GMM:
                    params["cov"] = args.cov_type
                elif algo is Algo.AGGLOMERATIVE:
                    params["linkage"] = args.linkage
                grid.append(Proposal(f"{algo.value}_k{k}_{red}", algo, k, red, params))
    return grid


def _som_shape(text: str) -> tuple[int, int]:
    try:
        g1, g2 = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise InputError(f"--som-shape must look like 4x4, got {text!r}") from None
    return g1, g2


def fit_proposal(prop: Proposal, X: np.ndarray, fit_mask: np.ndarray, args) -> dict:
    """Standardise, reduce and cluster the fit rows; label every row.

    Only rows in ``fit_mask`` enter any fitted statistic, so rows outside
    it cannot change the model.
    """
    seed = component_seed(args.seed, prop.name)
    Xf = X[fit_mask]
    scaler = Standardizer.fit(Xf)
    Z = scaler.transform(X)
    Zf = Z[fit_mask]
    reducer = None
    if prop.reduction.startswith("pca"):
        r = min(int(prop.reduction[3:]), Zf.shape[0], Zf.shape[1])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            reducer = pca_fit(Zf, r)
        R = pca_transform(reducer, Z)
    elif prop.reduction == "som":
        g1, g2 = _som_shape(args.som_shape)
        reducer = som_fit(Zf, g1, g2, args.som_epochs, component_seed(seed, "som"))
        R = som_transform(reducer, Z)
    else:
        R = Z
    Rf = R[fit_mask]
    model = fit(prop.algo, Rf, prop.k, seed=component_seed(seed, "cluster"), **prop.params)
    model.fit_partition = args.fit_partition
    labels = np.empty(X.shape[0], dtype=np.int64)
    labels[fit_mask] = model.labels
    if (~fit_mask).any():
        labels[~fit_mask] = predict(model, R[~fit_mask]).labels
    return {"scaler": scaler, "reducer": reducer, "model": model, "reduced_fit": Rf, "labels": labels}


GRID_COLUMNS = (
    "proposal", "algo", "k", "reduction", "params", "n_fit", "n_clusters",
    "chi", "silhouette", "dbi", "s_dbw", "fpc", "class_sizes", "noise_fraction", "verdict",
)


def evaluate_proposal(prop: Proposal, X, fit_mask, args) -> dict:
    try:
        res = fit_proposal(prop, X, fit_mask, args)
    except AnnofuseError as exc:
        return {"prop": prop, "error": str(exc), "verdict": Verdict(False, f"fit failed: {exc}")}
    model = res["model"]
    fit_labels = model.labels
    k = model.k if prop.algo is not Algo.DBSCAN else int(fit_labels.max() + 1 if fit_labels.size else 0)
    assign = ClassAssignment.from_labels(fit_labels, k or None)
    report = None
    try:
        report = validity_report(res["reduced_fit"], fit_labels, model.memberships)
    except DegenerateClustering as exc:
        verdict = Verdict(False, f"degenerate: {exc}")
    else:
        if prop.algo is Algo.DBSCAN and not args.prune_dbscan:
            verdict = Verdict(True, "exempt")
        else:
            verdict = prune_by_chance(assign, k, args.prune_factor)
    return {"prop": prop, "res": res, "k": k, "assign": assign, "report": report, "verdict": verdict}


def _grid_row(out: dict) -> list:
    prop = out["prop"]
    rep = out.get("report")
    assign = out.get("assign")
    sizes = ""
    if assign is not None:
        sizes = ";".join(f"{c}:{aio.fmt(v)}" for c, v in assign.class_sizes.items())

    def num(v):
        return "" if v is None else aio.fmt(v)

    return [
        prop.name, prop.algo.value, "" if prop.k is None else prop.k, prop.reduction,
        json.dumps(prop.params, sort_keys=True),
        int(out["res"]["reduced_fit"].shape[0]) if "res" in out else "",
        out.get("k", ""),
        num(rep.chi if rep else None), num(rep.silhouette if rep else None),
        num(rep.dbi if rep else None), num(rep.s_dbw if rep else None),
        num(rep.fpc if rep else None), sizes,
        num(assign.noise_fraction if assign else None), str(out["verdict"]),
    ]


def select_best(outcomes: list[dict]) -> dict | None:
    """Accepted proposal with the highest silhouette; ties go to the lower
    Davies-Bouldin index, then to grid order."""
    best, best_key = None, None
    for i, out in enumerate(outcomes):
        rep = out.get("report")
        if not out["verdict"].accepted or rep is None or not math.isfinite(rep.silhouette):
            continue
        key = (-rep.silhouette, rep.dbi, i)
        if best_key is None or key < best_key:
            best, best_key = out, key
    return best


def cmd_cluster(args) -> int:
    _require(args, "output")
    if not 0 < args.prune_factor <= 1:
        raise InputError(f"--prune-factor must be in (0, 1], got {args.prune_factor}")
    grid = build_grid(args)
    table, built = load_table(args)
    X = np.asarray(table.features)
    fit_mask = table.mask("train") if args.fit_partition == "train_only" else np.ones(len(table), bool)
    if fit_mask.sum() < 2:
        raise InputError("fewer than 2 rows in the fit partition")
    os.makedirs(args.output, exist_ok=True)
    if built:
        aio.write_features(os.path.join(args.output, "features.csv"), table)
    outcomes = _map(lambda p: evaluate_proposal(p, X, fit_mask, args), grid)
    aio.write_csv(os.path.join(args.output, "grid_results.csv"), GRID_COLUMNS, [_grid_row(o) for o in outcomes])
    aio.write_json(os.path.join(args.output, ECHO_NAME), _echo(args, "cluster"))
    best = select_best(outcomes)
    if best is None:
        log.error("every clustering proposal was rejected; see grid_results.csv")
        return EXIT_PRUNED
    name = best["prop"].name
    res = best["res"]
    aio.write_labels(os.path.join(args.output, f"labels_{name}.csv"), table.segment_ids, res["labels"])
    model_doc = {
        "proposal": name,
        "standardizer": res["scaler"].to_dict(),
        "reduction": best["prop"].reduction,
        "reducer": None if res["reducer"] is None else res["reducer"].to_dict(),
        "model": res["model"].to_dict(),
    }
    aio.write_json(os.path.join(args.output, f"model_{name}.json"), _jsonable(model_doc))
    log.info("best proposal: %s", name)
    return EXIT_OK


# ----------------------------------------------------------------- profile


def cmd_profile(args) -> int:
    _require(args, "labels", "output")
    if not os.path.isfile(args.labels):
        raise InputError(f"{args.labels}: labels file not found")
    table, _ = load_table(args)
    mapping = aio.read_labels(args.labels)
    missing = [s for s in table.segment_ids if s not in mapping]
    if missing:
        raise InputError(f"{args.labels}: no class for segment(s) {missing[:5]}")
    labels = np.array([mapping[s] for s in table.segment_ids], dtype=np.int64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prof = profile(table, ClassAssignment.from_labels(labels), top_k=args.top_k)
    export_profile(prof, args.output)
    aio.write_json(os.path.join(args.output, ECHO_NAME), _echo(args, "profile"))
    return EXIT_OK


# ------------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    _require(args, "output")
    scenarios = _csv_list(args.scenarios)
    for s in scenarios:
        if s not in SCENARIOS:
            raise InputError(f"unknown scenario {s!r}")
    methods = [FusionMethod(m) for m in _csv_list(args.methods)]
    seeds = [component_seed(args.seed, "bench", i) for i in range(args.n_seeds)]
    rows = run_bench(scenarios, seeds, methods, n=args.length, workers=worker_count())
    os.makedirs(args.output, exist_ok=True)
    write_bench(rows, os.path.join(args.output, "bench_results.csv"))
    aio.write_json(os.path.join(args.output, ECHO_NAME), _echo(args, "bench"))
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _add_table_flags(p):
    p.add_argument("--features", help="feature table CSV (segment_id,sequence_id,partition,<features>)")
    p.add_argument("--gold-dir", help="directory of <sequence>.gold.csv files")
    p.add_argument("--segments", help="segment boundary CSV (segment_id,sequence_id,start_ms,end_ms,partition)")
    p.add_argument("--feature-set", default="large", choices=[f.value for f in FeatureSetName])
    p.add_argument("--custom-features", default="", help="comma-separated names for --feature-set custom")
    p.add_argument("--crossing-level", type=float, default=0.0, help="level m of the CrM feature")
    p.add_argument("--peak-support", type=int, default=1, help="neighbours each side a peak must exceed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annofuse", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="replay parameters from a config_echo.json")
        p.add_argument("--output", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="top-level seed")

    p = sub.add_parser("fuse", help="fuse rater annotations into gold standards")
    common(p)
    p.add_argument("--input", help="directory of annotation CSVs (timestamp_ms,<rater...>)")
    p.add_argument("--raters", default="", help="comma-separated rater columns every file must have")
    p.add_argument("--method", default="RAAW", choices=[m.value for m in FusionMethod])
    p.add_argument("--similarity", default="ccc", choices=["ccc", "pearson", "euclidean_neg"])
    p.add_argument("--keep-negative", action="store_true", help="clamp negative weights instead of dropping raters (EWE)")
    p.add_argument("--smooth", default="savgol", choices=[k.value for k in SmoothKind])
    p.add_argument("--smooth-window", type=int, default=5)
    p.add_argument("--polyorder", type=int, default=3)
    p.add_argument("--norm", default="none", choices=[k.value for k in NormKind])
    p.add_argument("--post-kernel", type=int, default=15, help="post-fusion convolution kernel; 1 disables")
    p.add_argument("--n-basis", type=int, default=5, help="number of ramp functions in the warp basis")
    p.add_argument("--align-max-iter", type=int, default=100)
    p.add_argument("--dba-max-iter", type=int, default=30)
    p.add_argument("--dba-tol", type=float, default=1e-5)
    p.add_argument("--band", type=int, default=None, help="DTW band half-width in samples")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("cluster", help="grid-search clusterings of segment features")
    common(p)
    _add_table_flags(p)
    p.add_argument("--algos", default="kmeans,gmm", help="comma list of kmeans,cmeans,gmm,agglomerative,dbscan")
    p.add_argument("--k", default="3,5", help="comma list of cluster counts")
    p.add_argument("--reductions", default="none", help="comma list of none,pca2,pca5,som")
    p.add_argument("--fit-partition", default="train_only", choices=["train_only", "all"])
    p.add_argument("--prune-factor", type=float, default=0.5)
    p.add_argument("--prune-dbscan", action="store_true", help="apply the class-size rule to DBSCAN too")
    p.add_argument("--eps", default="0.01,0.05,0.1,0.25")
    p.add_argument("--min-samples", default="3,5")
    p.add_argument("--fuzzifier", type=float, default=2.0)
    p.add_argument("--cov-type", default="full", choices=["full", "diag"])
    p.add_argument("--linkage", default="ward", choices=["ward", "average", "complete"])
    p.add_argument("--som-shape", default="4x4")
    p.add_argument("--som-epochs", type=int, default=100)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("profile", help="export cluster profiles as CSV")
    common(p)
    _add_table_flags(p)
    p.add_argument("--labels", help="labels CSV (segment_id,class)")
    p.add_argument("--top-k", type=int, default=8, help="number of features marked as top distinctive")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("bench", help="synthetic fusion benchmark")
    common(p)
    p.add_argument("--scenarios", default=",".join(SCENARIOS))
    p.add_argument("--methods", default=",".join(m.value for m in FusionMethod))
    p.add_argument("--n-seeds", type=int, default=5)
    p.add_argument("--length", type=int, default=2000)
    p.set_defaults(func=cmd_bench)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                echo = json.load(fh)
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read --config {args.config}: {exc}")
        if echo.get("subcommand") != args.subcommand:
            parser.error(f"{args.config} echoes '{echo.get('subcommand')}', not '{args.subcommand}'")
        subparser = parser._subparsers._group_actions[0].choices[args.subcommand]
        known = {a.dest for a in subparser._actions}
        unknown = [k for k in echo.get("params", {}) if k not in known]
        if unknown:
            parser.error(f"{args.config}: unknown parameters {unknown}")
        subparser.set_defaults(**echo["params"])
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="annofuse: %(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except (InputError, SchemaError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except FusionFailure as exc:
        log.error("fusion failed: %s", exc)
        return EXIT_FUSION
    except AnnofuseError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except Exception:  # pragma: no cover - last-resort guard
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
