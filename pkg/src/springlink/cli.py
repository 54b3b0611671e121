"""Command-line experiment driver.

Subcommands: prepare (parse + largest connected component), embed (write a
layout file), evaluate (trials -> CSV row), sweep (dim or p series), and
split (export one split for external scorers). Options resolve in the order
defaults < config file (key=value lines) < SPRINGLINK_OUTDIR < explicit
flags, and every output row embeds a short digest of the resolved options
so results stay attributable to their exact configuration.

Exit codes: 0 success, 1 validation problem, 2 runtime failure.
"""

import argparse
import csv
import hashlib
import os
import sys

from . import evalharness as eh
from .baselines import load_external_scores
from .errors import SpringlinkError
from .graphs import (GraphKind, generate_icosphere_graph,
                     largest_connected_component, parse_edge_list,
                     serialize_edge_list)
from .sfdp import SfdpParams, layout_multilevel, save_layout
from .variants import bi_sfdp_layout, di_sfdp_layout

OUTDIR_ENV = "SPRINGLINK_OUTDIR"

_DEFAULTS = {
    "kind": "undirected",
    "scorer": "sfdp",
    "fraction": 0.3,
    "trials": 10,
    "regime": "uniform",
    "tie_policy": "strict",
    "seed": 0,
    "outdir": ".",
    "dim": 2,
    "C": 0.2,
    "K": 1.0,
    "p": 2.0,
    "theta": 1.2,
    "step_init": None,
    "cooling": 0.9,
    "tol": 0.01,
    "max_iters": 500,
    "coarsen_threshold": 50,
    "aa_log": False,
    "dataset": None,
    "scores": None,
}


class ValidationFailure(Exception):
    """Configuration or input problem; maps to exit code 1."""


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationFailure(f"not a boolean: {text!r}")


_COERCE = {
    "fraction": float, "trials": int, "seed": int, "dim": int,
    "C": float, "K": float, "p": float, "theta": float, "step_init": float,
    "cooling": float, "tol": float, "max_iters": int,
    "coarsen_threshold": int, "aa_log": _parse_bool,
}


def read_config_file(path):
    """key=value lines; '#' comments and blanks ignored."""
    if not os.path.exists(path):
        raise ValidationFailure(f"config file not found: {path}")
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationFailure(f"{path}:{ln}: expected key=value")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _DEFAULTS:
                raise ValidationFailure(f"{path}:{ln}: unknown option {key!r}")
            try:
                values[key] = _COERCE.get(key, str)(val)
            except ValidationFailure:
                raise
            except ValueError:
                raise ValidationFailure(f"{path}:{ln}: bad value for {key}: {val!r}")
    return values


def resolve_options(args):
    """Merge defaults, config file, environment and CLI flags."""
    resolved = dict(_DEFAULTS)
    if getattr(args, "config", None):
        resolved.update(read_config_file(args.config))
    if os.environ.get(OUTDIR_ENV):
        resolved["outdir"] = os.environ[OUTDIR_ENV]
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
    return resolved


def params_digest(resolved):
    """Short stable hash of the resolved options (output location excluded)."""
    parts = [f"{k}={resolved[k]}" for k in sorted(resolved) if k != "outdir"]
    return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()[:12]


def _graph_kind(name):
    try:
        return GraphKind(name)
    except ValueError:
        raise ValidationFailure(
            f"unknown graph kind {name!r}; choose undirected, directed or bipartite")


def _load_graph(resolved):
    path = resolved["dataset"]
    if not path:
        raise ValidationFailure("a dataset path is required (--dataset or config)")
    if not os.path.exists(path):
        raise ValidationFailure(f"dataset not found: {path}")
    kind = _graph_kind(resolved["kind"])
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return parse_edge_list(fh, kind)
        except SpringlinkError as exc:
            raise ValidationFailure(f"{path}: {exc}") from exc


def _sfdp_params(resolved):
    try:
        return SfdpParams(
            C=resolved["C"], K=resolved["K"], p=resolved["p"],
            dim=resolved["dim"], theta=resolved["theta"],
            step_init=resolved["step_init"], cooling=resolved["cooling"],
            tol=resolved["tol"], max_iters=resolved["max_iters"],
            coarsen_threshold=resolved["coarsen_threshold"],
            seed=resolved["seed"])
    except SpringlinkError as exc:
        raise ValidationFailure(str(exc)) from exc


def _build_scorer(resolved, graph):
    name = resolved["scorer"]
    if name not in eh.SCORER_NAMES:
        raise ValidationFailure(
            f"unknown scorer {name!r}; choose from {', '.join(eh.SCORER_NAMES)}")
    table = None
    if name == "external-file":
        path = resolved["scores"]
        if not path:
            raise ValidationFailure("external-file scorer needs --scores")
        if not os.path.exists(path):
            raise ValidationFailure(f"score file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            try:
                table = load_external_scores(fh, graph)
            except SpringlinkError as exc:
                raise ValidationFailure(f"{path}: {exc}") from exc
    return eh.make_scorer(name, params=_sfdp_params(resolved),
                          aa_log=resolved["aa_log"], score_table=table,
                          graph=graph)


# ---------------------------------------------------------------------------
# subcommands


def cmd_prepare(args):
    resolved = resolve_options(args)
    if args.icosphere is not None:
        graph = generate_icosphere_graph(args.icosphere)
    else:
        graph = _load_graph(resolved)
    graph = largest_connected_component(graph)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(serialize_edge_list(graph))
    print(f"{graph.node_count} nodes, {graph.edge_count} edges")
    return 0


def cmd_embed(args):
    resolved = resolve_options(args)
    graph = _load_graph(resolved)
    params = _sfdp_params(resolved)
    scorer = resolved["scorer"]
    if scorer == "sfdp":
        if graph.kind is GraphKind.DIRECTED:
            raise ValidationFailure(
                "sfdp embeds undirected graphs; for a directed graph use "
                "scorer di-sfdp (or prepare an undirected projection)")
        layout = layout_multilevel(graph, params)
    elif scorer == "bi-sfdp":
        if graph.kind is not GraphKind.BIPARTITE:
            raise ValidationFailure("bi-sfdp requires a bipartite dataset")
        layout = bi_sfdp_layout(graph, params)
    elif scorer == "di-sfdp":
        if graph.kind is GraphKind.BIPARTITE:
            raise ValidationFailure(
                "di-sfdp expects a directed (or undirected) dataset")
        layout, _ = di_sfdp_layout(graph, params)
    else:
        raise ValidationFailure(
            f"scorer {scorer!r} has no layout; choose sfdp, bi-sfdp or di-sfdp")
    out = args.output or os.path.join(resolved["outdir"], "layout.txt")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    save_layout(layout, out)
    print(f"wrote {out}: {layout.node_count} nodes, dim={layout.dim}, "
          f"energy={layout.energy:.6g}, iterations={layout.iterations}, "
          f"converged={layout.converged}")
    return 0


EVAL_COLUMNS = ("dataset", "scorer", "params_digest", "dim", "fraction",
                "regime", "trials", "seed", "mean_auc", "std", "ci95")


def _append_csv(path, columns, row):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(columns)
        writer.writerow(row)


def _evaluate_once(resolved, graph):
    scorer = _build_scorer(resolved, graph)
    stats = eh.run_trials(graph, scorer, resolved["fraction"], resolved["trials"],
                          regime=resolved["regime"], base_seed=resolved["seed"],
                          tie_policy=resolved["tie_policy"])
    return stats


def cmd_evaluate(args):
    resolved = resolve_options(args)
    if not 0.0 < resolved["fraction"] < 1.0:
        raise ValidationFailure("fraction must lie in (0, 1)")
    if resolved["trials"] < 1:
        raise ValidationFailure("trials must be >= 1")
    graph = _load_graph(resolved)
    stats = _evaluate_once(resolved, graph)
    digest = params_digest(resolved)
    out = args.out or os.path.join(resolved["outdir"], "results.csv")
    row = (os.path.basename(resolved["dataset"]), resolved["scorer"], digest,
           resolved["dim"], resolved["fraction"], resolved["regime"],
           resolved["trials"], resolved["seed"],
           f"{stats.mean:.6f}", f"{stats.std:.6f}", f"{stats.ci95_halfwidth:.6f}")
    _append_csv(out, EVAL_COLUMNS, row)
    print(f"{resolved['scorer']}: mean_auc={stats.mean:.4f} std={stats.std:.4f} "
          f"ci95={stats.ci95_halfwidth:.4f} -> {out}")
    return 0


SWEEP_COLUMNS = ("axis", "value", "dataset", "scorer", "params_digest",
                 "trials", "seed", "mean_auc", "std", "ci95", "status")


def cmd_sweep(args):
    resolved = resolve_options(args)
    if args.axis not in ("dim", "p"):
        raise ValidationFailure("sweep axis must be 'dim' or 'p'")
    raw_values = [v for v in (args.values or "").split(",") if v.strip()]
    if not raw_values:
        raise ValidationFailure("sweep needs a non-empty comma-separated --values list")
    try:
        values = [int(v) if args.axis == "dim" else float(v) for v in raw_values]
    except ValueError:
        raise ValidationFailure(f"bad {args.axis} values: {args.values!r}")
    graph = _load_graph(resolved)
    out = args.out or os.path.join(resolved["outdir"], "sweep.csv")
    failures = 0
    for value in values:
        point = dict(resolved)
        point[args.axis] = value
        digest = params_digest(point)
        try:
            stats = _evaluate_once(point, graph)
            row = (args.axis, value, os.path.basename(point["dataset"]),
                   point["scorer"], digest, point["trials"], point["seed"],
                   f"{stats.mean:.6f}", f"{stats.std:.6f}",
                   f"{stats.ci95_halfwidth:.6f}", "ok")
            print(f"{args.axis}={value}: mean_auc={stats.mean:.4f}")
        except (SpringlinkError, ValidationFailure) as exc:
            failures += 1
            row = (args.axis, value, os.path.basename(point["dataset"]),
                   point["scorer"], digest, point["trials"], point["seed"],
                   "", "", "", f"error: {exc}")
            print(f"{args.axis}={value}: failed: {exc}", file=sys.stderr)
        _append_csv(out, SWEEP_COLUMNS, row)
    return 2 if failures else 0


def cmd_split(args):
    resolved = resolve_options(args)
    if not 0.0 < resolved["fraction"] < 1.0:
        raise ValidationFailure("fraction must lie in (0, 1)")
    graph = _load_graph(resolved)
    split = eh.run_single_trial_split(graph, resolved["fraction"],
                                      resolved["regime"], resolved["seed"])
    manifest = eh.save_split(split, graph, resolved["outdir"],
                             prefix=args.prefix)
    print(f"wrote split manifest {manifest}: {len(split.train_edges)} train, "
          f"{len(split.positives)} positive, {len(split.negatives)} negative")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(parser):
    parser.add_argument("--config", help="key=value options file")
    parser.add_argument("--dataset", help="edge-list file")
    parser.add_argument("--kind", help="undirected | directed | bipartite")
    parser.add_argument("--scorer", help="sfdp | bi-sfdp | di-sfdp | cn | aa | pa | external-file")
    parser.add_argument("--scores", help="external score file (label_u label_v score)")
    parser.add_argument("--fraction", type=float, help="hidden edge fraction")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--regime", help="uniform | bipartite_weighted | directed_difficult")
    parser.add_argument("--tie-policy", dest="tie_policy", help="strict | half")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--outdir", help=f"output directory (or ${OUTDIR_ENV})")
    parser.add_argument("--dim", type=int)
    parser.add_argument("--C", type=float)
    parser.add_argument("--K", type=float)
    parser.add_argument("--p", type=float)
    parser.add_argument("--theta", type=float)
    parser.add_argument("--step-init", dest="step_init", type=float)
    parser.add_argument("--cooling", type=float)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--max-iters", dest="max_iters", type=int)
    parser.add_argument("--coarsen-threshold", dest="coarsen_threshold", type=int)
    parser.add_argument("--aa-log", dest="aa_log", action="store_const", const=True,
                        help="use 1/log(deg) weighting for aa")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="springlink",
        description="Spring-electrical graph embedding and link-prediction experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="parse a dataset and keep its largest component")
    _add_common(p)
    p.add_argument("--icosphere", type=int,
                   help="generate an icosphere graph with this subdivision depth")
    p.add_argument("--output", help="write the canonical edge list here")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("embed", help="embed a prepared graph and write the layout")
    _add_common(p)
    p.add_argument("--output", help="layout file path")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("evaluate", help="run link-prediction trials, append a CSV row")
    _add_common(p)
    p.add_argument("--out", help="results CSV path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="evaluate across dim or p values")
    _add_common(p)
    p.add_argument("--axis", required=True, help="dim | p")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", help="sweep CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("split", help="export one train/test split for external scorers")
    _add_common(p)
    p.add_argument("--prefix", default="split", help="output file prefix")
    p.set_defaults(func=cmd_split)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SpringlinkError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
