"""Command-line front door: synth, build-graph, run, sweep.

All randomness flows from --seed, so reruns with identical flags produce
byte-identical outputs. Exit codes: 0 success, 2 usage error, 3 data error,
4 training error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import evaluation, gcn, synthetic
from .dataset import load_dataset, speaker_table
from .errors import GraphPdError
from .graph import build_graph_from_features, write_edge_list


def _load_toml(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"error: malformed-config: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _load_records(data_dir):
    d = Path(data_dir)
    return load_dataset(d / "embeddings.bin", d / "manifest.tsv")


def _train_cfg(cfg: dict, seed: int) -> gcn.TrainConfig:
    return gcn.TrainConfig(
        learning_rate=cfg.get("lr", 1e-3),
        max_epochs=cfg.get("max_epochs", 300),
        patience=cfg.get("patience", 30),
        hidden_width=cfg.get("hidden_width", 64),
        seed=seed,
        weight_decay=cfg.get("weight_decay", 5e-4),
    )


def cmd_synth(args) -> int:
    cfg_dict = _load_toml(args.config)
    cfg = synthetic.SynthConfig(**cfg_dict)
    synthetic.generate_to_dir(cfg, args.out)
    return 0


def cmd_build_graph(args) -> int:
    records = _load_records(args.data)
    from .dataset import feature_matrix

    adj = build_graph_from_features(feature_matrix(records), args.distance, args.k)
    write_edge_list(adj, args.out)
    return 0


def _grid_from_config(model: str, cfg: dict) -> evaluation.GridSpec:
    grid_cfg = cfg.get("grid", {})
    default = evaluation.GridSpec.default_for(model)
    distances = tuple(grid_cfg.get("distances", default.distances))
    return evaluation.GridSpec(
        model=model,
        learning_rates=tuple(grid_cfg.get("learning_rates", default.learning_rates)),
        k_values=tuple(grid_cfg.get("k_values", default.k_values)),
        depths=tuple(grid_cfg.get("depths", default.depths)),
        distances=distances,
    )


def cmd_run(args) -> int:
    cfg = _load_toml(args.grid)
    records = _load_records(args.data)
    table = speaker_table(records)
    plans = evaluation.make_cv_plans(table, replicates=args.replicates, seed=args.seed)
    grid = _grid_from_config(args.model, cfg)
    base_cfg = _train_cfg(cfg.get("training", {}), seed=args.seed)
    report = evaluation.run_experiment(records, args.model, grid, plans, base_cfg, jobs=args.jobs)
    out = Path(args.out)
    evaluation.write_report_json(report, out)
    evaluation.write_report_tsv(report, out.with_suffix(".tsv"))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_toml(args.fixed)
    records = _load_records(args.data)
    table = speaker_table(records)
    plans = evaluation.make_cv_plans(table, replicates=args.replicates, seed=args.seed)
    base_cfg = _train_cfg(cfg.get("training", {}), seed=args.seed)
    if args.axis == "k":
        values = tuple(cfg.get("k_values", evaluation.K_GRID))
    else:
        values = tuple(cfg.get("L_values", evaluation.L_GRID))
    fixed = cfg.get("fixed", {})
    if not fixed:
        print("error: malformed-config: sweep config needs a [fixed.<distance>] table", file=sys.stderr)
        return 2
    rows = evaluation.sweep(records, plans, args.axis, values, fixed, base_cfg=base_cfg, jobs=args.jobs)
    evaluation.write_sweep_tsv(rows, args.axis, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphpd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", help="TOML with SynthConfig fields")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build-graph", help="export the mutual top-k adjacency as an edge list")
    p.add_argument("--data", required=True, help="dataset directory (embeddings.bin + manifest.tsv)")
    p.add_argument("--distance", required=True, choices=["euclidean", "cosine", "manhattan"])
    p.add_argument("--k", required=True, type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("run", help="full cross-validated grid-search experiment")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, choices=["fc", "knn", "gcn"])
    p.add_argument("--grid", help="TOML with [grid] and [training] tables (defaults: paper grids)")
    p.add_argument("--replicates", type=int, default=evaluation.N_REPLICATES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="report JSON path (TSV summary written alongside)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="accuracy curve over k or L with the rest fixed")
    p.add_argument("--data", required=True)
    p.add_argument("--axis", required=True, choices=["k", "L"])
    p.add_argument("--fixed", required=True, help="TOML with [fixed.<distance>] tables and optional values")
    p.add_argument("--replicates", type=int, default=evaluation.N_REPLICATES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="curve TSV path")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GraphPdError as exc:
        print(f"error: {exc.code}: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except TypeError as exc:
        # e.g. unknown SynthConfig keys from a config file
        print(f"error: malformed-config: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
