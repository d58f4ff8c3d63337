"""Command-line entry point: generate, lift, detect, evaluate, sweep."""
from __future__ import annotations

import argparse
import csv
import itertools
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .complex import TemporalSequence, clique_lift
from .detector import score_stream
from .errors import HodgeWatchError
from .io import (
    aggregate_edge_stream,
    parse_simplex_stream,
    read_schedule,
    read_scores,
    read_truth,
    write_schedule,
    write_scores,
    write_simplex_stream,
    write_truth,
)
from .metrics import GroundTruth, hits_at_n, pr_delay_table, predictions_from_labels
from .pipeline import RunConfig, extract_features, label_records, run_detection
from .synth import builtin_schedules, run_schedule

logger = logging.getLogger("hodgewatch")

SNAPSHOTS = "snapshots.txt"
SCORES = "scores.csv"
TRUTH = "truth.csv"
SCHEDULE = "schedule.csv"

PART_CHOICES = {"full": "full", "up": "up", "down": "down", "both": "up_and_down"}


class UsageError(Exception):
    pass


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    # defaults stay None so a --config file can fill them in
    p.add_argument("--config", type=Path, help="key=value file; command-line flags take precedence")
    p.add_argument("--max-rank", type=int)
    budget = p.add_mutually_exclusive_group()
    budget.add_argument("--num-sv", type=int, help="singular values per Laplacian block")
    budget.add_argument("--total-sv", type=int, help="singular values shared by all blocks")
    p.add_argument("--part", choices=sorted(PART_CHOICES))
    p.add_argument("--typical", choices=["svd", "mean"])
    p.add_argument("--short-window", type=int)
    p.add_argument("--long-window", type=int)
    p.add_argument("--persistence-window", type=int)
    rule = p.add_mutually_exclusive_group()
    rule.add_argument("--threshold", type=float)
    rule.add_argument("--init-window", type=int)
    rule.add_argument("--top-k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--weighted", action="store_const", const=True)
    p.add_argument("--svd", choices=["auto", "dense", "lanczos", "randomized"])
    p.add_argument("--include-warmup", action="store_const", const=True)
    p.add_argument("--workers", type=int)


_INT_KEYS = {"max_rank", "num_sv", "total_sv", "short_window", "long_window", "persistence_window",
             "init_window", "top_k", "seed", "workers"}
_FLOAT_KEYS = {"threshold"}
_BOOL_KEYS = {"weighted", "include_warmup"}


def read_config_file(path: Path) -> dict:
    """Parse ``key=value`` lines (``#`` comments); keys may use dashes or underscores."""
    out = {}
    known = set(RunConfig.field_names())
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "part":
                if value not in PART_CHOICES:
                    raise UsageError(f"{path}:{lineno}: unknown part {value!r}")
            if key not in known:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                if key in _INT_KEYS:
                    out[key] = int(value)
                elif key in _FLOAT_KEYS:
                    out[key] = float(value)
                elif key in _BOOL_KEYS:
                    out[key] = {"true": True, "1": True, "yes": True,
                                "false": False, "0": False, "no": False}[value.lower()]
                else:
                    out[key] = value
            except (ValueError, KeyError):
                raise UsageError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
    return out


def run_config_from_args(args) -> RunConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    for name in RunConfig.field_names():
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    # a flag for one labelling rule overrides a different rule from the file
    for rule in ("threshold", "init_window", "top_k"):
        if getattr(args, rule, None) is not None:
            for other in {"threshold", "init_window", "top_k"} - {rule}:
                values.pop(other, None)
    if getattr(args, "num_sv", None) is not None:
        values.pop("total_sv", None)
    if getattr(args, "total_sv", None) is not None:
        values.pop("num_sv", None)
    if "part" in values:
        values["part"] = PART_CHOICES[values["part"]]
    try:
        return RunConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _resolve_in(path: Path) -> tuple[Path, Path]:
    """Snapshot file and output directory for ``--in``."""
    if path.is_dir():
        return path / SNAPSHOTS, path
    return path, path.parent


def cmd_generate(args) -> int:
    if args.builtin:
        sched = builtin_schedules(args.builtin, seed=args.seed, n_nodes=args.nodes, max_rank=args.max_rank)
    else:
        sched = read_schedule(args.schedule, seed=args.seed, max_rank=args.max_rank)
        if args.nodes is not None:
            sched = sched.with_nodes(args.nodes)
    seq, labels = run_schedule(sched)
    args.out.mkdir(parents=True, exist_ok=True)
    write_simplex_stream(seq, args.out / SNAPSHOTS)
    write_truth(GroundTruth.from_labels(labels), args.out / TRUTH)
    write_schedule(sched, args.out / SCHEDULE)
    print(f"wrote {len(seq)} snapshots to {args.out}")
    return 0


def cmd_lift(args) -> int:
    if args.format == "edges":
        if args.bucket is None:
            raise UsageError("--bucket is required for timestamped edge input")
        graphs = aggregate_edge_stream(args.input, args.bucket, args.weight_rule, origin=args.origin)
    else:
        graphs = parse_simplex_stream(args.input, max_rank=1)
    lifted = []
    for g in graphs:
        if g.rank_max < 1:
            lifted.append(g)
            continue
        edges = [tuple(r) for r in g.simplices[1].tolist()]
        ew = g.weights[1].tolist() if g.is_weighted else None
        lifted.append(clique_lift(edges, args.max_rank, vertices=g.vertices, edge_weights=ew))
    write_simplex_stream(TemporalSequence(tuple(lifted)), args.out)
    print(f"wrote {len(lifted)} snapshots to {args.out}")
    return 0


def cmd_detect(args) -> int:
    cfg = run_config_from_args(args)
    src, outdir = _resolve_in(args.input)
    seq = parse_simplex_stream(src, closure="reject" if args.strict_closure else "complete",
                               max_rank=cfg.max_rank)
    records, tau = run_detection(seq, cfg)
    out = args.out if args.out is not None else outdir / SCORES
    write_scores(records, out)
    n_lab = sum(r.label in ("event", "change") for r in records)
    print(f"wrote {len(records)} scores to {out} (tau={tau:.6g}, {n_lab} anomalies)")
    return 0


def _load_truth(args) -> GroundTruth:
    if args.truth is not None:
        return read_truth(args.truth)
    if args.input is not None and args.input.is_dir():
        return read_truth(args.input / TRUTH)
    raise UsageError("give --truth or a run directory via --in")


def cmd_evaluate(args) -> int:
    scores_path = args.scores
    if scores_path is None:
        if args.input is None:
            raise UsageError("give --scores or a run directory via --in")
        scores_path = args.input / SCORES if args.input.is_dir() else args.input
    records = read_scores(scores_path)
    truth = _load_truth(args)
    truth.check_range(len(records))
    metric = args.metric.lower()
    if metric.startswith("hits@"):
        try:
            n = int(metric[5:])
        except ValueError:
            raise UsageError(f"bad metric {args.metric!r}") from None
        print(f"{hits_at_n(records, truth, n, include_warmup=bool(args.include_warmup)):.12g}")
        return 0
    if metric == "pr-delay":
        if args.max_delay is None:
            raise UsageError("pr-delay needs --max-delay")
        rows = pr_delay_table(predictions_from_labels(records), truth, args.max_delay, args.delay_mode)
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["delay", "precision", "recall"])
        for r in rows:
            w.writerow([r["delay"], f"{r['precision']:.12g}", f"{r['recall']:.12g}"])
        if rows and rows[0]["empty_predictions"]:
            logger.warning("no predicted anomalies; precision reported as 1")
        if rows and rows[0]["empty_truth"]:
            logger.warning("truth set is empty; recall reported as 1")
        return 0
    raise UsageError(f"unknown metric {args.metric!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


SWEEP_HEADER = ["max_rank", "budget", "budget_mode", "short_window", "long_window",
                "t", "z_short", "z_long", "z", "warmup", "label", "truth"]


def cmd_sweep(args) -> int:
    base = run_config_from_args(args)
    src, outdir = _resolve_in(args.input)
    ranks = args.ranks or [base.max_rank]
    budgets = args.budgets or [base.budget[0]]
    mode = "per_block" if args.per_block else "total"
    shorts = args.short_windows or [base.short_window]
    longs = args.long_windows or [base.long_window]
    seq = parse_simplex_stream(src, closure="reject" if args.strict_closure else "complete",
                               max_rank=max(ranks))
    truth_path = outdir / TRUTH
    kinds = read_truth(truth_path).kinds if truth_path.exists() else {}

    feature_jobs = list(itertools.product(ranks, budgets))

    def features(job):
        K, b = job
        cfg = replace(base, max_rank=K, num_sv=b if mode == "per_block" else None,
                      total_sv=b if mode == "total" else None, workers=1)
        return extract_features(seq, cfg)

    with ThreadPoolExecutor(max(1, args.jobs)) as pool:
        feats = dict(zip(feature_jobs, pool.map(features, feature_jobs)))

    out = args.out if args.out is not None else outdir / "sweep.csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for (K, b), ws, wl in itertools.product(feature_jobs, shorts, longs):
            if ws > wl:
                continue
            try:
                cfg = replace(base, max_rank=K, short_window=ws, long_window=wl)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            records, _ = label_records(score_stream(feats[(K, b)], cfg.detector_config()), cfg)
            for r in records:
                w.writerow([K, b, mode, ws, wl, r.t, f"{r.z_short:.12g}", f"{r.z_long:.12g}",
                            f"{r.z:.12g}", int(r.warmup), r.label or "", kinds.get(r.t, "")])
    print(f"wrote sweep to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodgewatch", description="Spectral anomaly detection on temporal simplicial complexes.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a synthetic sequence from a schedule")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", help="hybrid, resampled, large, triangle_closing or teaser")
    src.add_argument("--schedule", type=Path, help="schedule CSV")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--nodes", type=int, help="override the node count")
    g.add_argument("--max-rank", type=int, default=2)
    g.add_argument("--out", type=Path, required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    li = sub.add_parser("lift", help="turn an edge stream or graph snapshots into a simplex stream")
    li.add_argument("--in", dest="input", type=Path, required=True)
    li.add_argument("--format", choices=["edges", "simplex"], default="edges",
                    help="'edges': timestamp,u,v[,weight] rows; 'simplex': per-step edge lists")
    li.add_argument("--bucket", help="bucket width, e.g. 86400, 1d or 7d")
    li.add_argument("--weight-rule", choices=["count", "sum"], default="count")
    li.add_argument("--origin", type=float, help="start of the first bucket in seconds (default: epoch-aligned)")
    li.add_argument("--max-rank", type=int, default=2)
    li.add_argument("--out", type=Path, required=True)
    li.set_defaults(func=cmd_lift)

    d = sub.add_parser("detect", help="score a simplex stream")
    d.add_argument("--in", dest="input", type=Path, required=True, help="simplex stream or run directory")
    d.add_argument("--out", type=Path, help="scores CSV (default: scores.csv next to the input)")
    d.add_argument("--strict-closure", action="store_true", help="reject files missing faces")
    _add_run_flags(d)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("evaluate", help="compare scores with ground truth")
    e.add_argument("--in", dest="input", type=Path, help="run directory holding scores.csv and truth.csv")
    e.add_argument("--scores", type=Path)
    e.add_argument("--truth", type=Path)
    e.add_argument("--metric", required=True, help="hits@N or pr-delay")
    e.add_argument("--max-delay", type=int)
    e.add_argument("--delay-mode", choices=["window", "literal"], default="window")
    e.add_argument("--include-warmup", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="detect over grids of ranks, budgets and windows")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--out", type=Path)
    s.add_argument("--ranks", type=_int_list)
    s.add_argument("--budgets", type=_int_list)
    s.add_argument("--per-block", action="store_true", help="budgets are per block instead of total")
    s.add_argument("--short-windows", type=_int_list)
    s.add_argument("--long-windows", type=_int_list)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--strict-closure", action="store_true")
    _add_run_flags(s)
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hodgewatch: error: {exc}", file=sys.stderr)
        return 2
    except (HodgeWatchError, OSError, ValueError) as exc:
        print(f"hodgewatch: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
