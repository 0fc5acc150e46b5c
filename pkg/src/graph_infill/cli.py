"""``graph-infill`` command line.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical
failure (including a failed self-check).
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench, pipeline
from .config import ConfigError, RunConfig, dump_config, load_config, resolve
from .engine import NumericalError
from .gacls import save_checkpoint
from .graph import GraphError
from .ingest import DataError, Dataset, load_dataset, make_split, write_id_map
from .precoder import PrecoderError
from .selfcheck import format_results, run_selfcheck

log = logging.getLogger("graph_infill")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

# flag name -> config key
_FLAG_KEYS = {
    "dataset": "dataset_dir", "out": "output_dir", "missing_rate": "mask.missing_rate",
    "seed": "seed", "lam": "train.lam", "ema_decay": "train.ema_decay",
    "epochs": "train.epochs", "variant": "train.variant", "rec_target": "train.rec_target",
    "ks": "eval.ks", "iterations": "precoder.iterations", "probe_inputs": "eval.probe_inputs",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_run_flags(p: argparse.ArgumentParser, training: bool = True):
    p.add_argument("--config", help="key = value config file, applied before flags")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="any config key, e.g. --set aug1.edge_drop_prob=0.3 (repeatable)")
    p.add_argument("--dataset", help="dataset directory")
    p.add_argument("--out", help="output directory")
    p.add_argument("--missing-rate", dest="missing_rate")
    p.add_argument("--seed")
    p.add_argument("--ks", help="comma-separated cutoffs, e.g. 10,20,50")
    p.add_argument("--iterations", help="precoder rounds")
    if training:
        p.add_argument("--lambda", dest="lam")
        p.add_argument("--ema-decay", dest="ema_decay")
        p.add_argument("--epochs")
        p.add_argument("--variant", choices=["full", "star"])
        p.add_argument("--rec-target", dest="rec_target", choices=["all", "observed"])
    p.add_argument("--probe-inputs", dest="probe_inputs",
                   help="classifier inputs: embedding, imputed, or both comma-separated")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graph-infill", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("precode", help="impute missing rows by feature propagation")
    _add_run_flags(p, training=False)
    p.add_argument("--probe", action="store_true", help="also run the classification probe")

    p = sub.add_parser("train", help="precode, train the contrastive model, evaluate")
    _add_run_flags(p)

    p = sub.add_parser("eval", help="recompute metrics from stored features/embedding")
    _add_run_flags(p)
    p.add_argument("--features", help="imputed features TSV")
    p.add_argument("--embedding", help="embedding TSV")
    p.add_argument("--label", default="eval")

    p = sub.add_parser("bench", help="per-epoch time on synthetic graphs")
    p.add_argument("--sizes", default="1000:200000:16,1000:400000:16,1000:400000:32",
                   help="comma-separated num_nodes:num_edges:feature_dim triples")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for bench.tsv")

    sub.add_parser("selfcheck", help="gradient, metric, precoder and EMA checks")
    return parser


def _resolve(args) -> RunConfig:
    overrides = []
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides.append((k.strip(), v.strip()))
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides.append((key, str(value)))
    cfg = load_config(args.config, overrides) if args.config else resolve(overrides)
    if not cfg.dataset_dir:
        raise ConfigError("no dataset directory (use --dataset or dataset_dir in the config)")
    return cfg


def _prepare(args) -> tuple[RunConfig, Dataset, Path]:
    cfg = _resolve(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(cfg.dataset_dir)
    write_id_map(dataset, out / "id_map.tsv")
    (out / "config.txt").write_text(dump_config(cfg))
    return cfg, dataset, out


def write_matrix(path, ids, values: np.ndarray) -> None:
    """``external_id<TAB>v1<TAB>...`` rows; ``repr`` precision so values round-trip."""
    with open(path, "w") as fh:
        for ext, row in zip(ids, values):
            fh.write(ext + "\t" + "\t".join(map(repr, row.tolist())) + "\n")


def read_matrix(path, dataset: Dataset) -> np.ndarray:
    index = {ext: i for i, ext in enumerate(dataset.external_ids)}
    rows = {}
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if not parts[0]:
                continue
            if parts[0] not in index:
                raise DataError(path, lineno, f"unknown node id {parts[0]!r}")
            try:
                vals = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise DataError(path, lineno, str(exc)) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise DataError(path, lineno, f"expected {width} values, got {len(vals)}")
            if not np.all(np.isfinite(vals)):
                raise DataError(path, lineno, "non-finite value")
            rows[index[parts[0]]] = vals
    if len(rows) != dataset.num_nodes:
        raise DataError(path, None, f"{len(rows)} rows for {dataset.num_nodes} nodes")
    return np.array([rows[i] for i in range(dataset.num_nodes)])


def cmd_precode(args) -> int:
    cfg, dataset, out = _prepare(args)
    res = pipeline.run_precode(dataset, cfg)
    write_matrix(out / "precoded.tsv", dataset.external_ids, res.precoded.values)
    with open(out / "energy.csv", "w") as fh:
        fh.write("iteration,dirichlet_energy,normalized_energy\n")
        for it, (e, ne) in enumerate(zip(res.energy, res.normalized_energy)):
            fh.write(f"{it},{e!r},{ne!r}\n")
    probe_cfg = cfg if args.probe else _without_probe(cfg)
    report = pipeline.evaluate(dataset, res.split, probe_cfg, imputed=res.precoded,
                               label="FP", extra={"iterations_run": len(res.energy) - 1})
    report.config_echo = cfg.to_dict()
    report.save(out / "report.json")
    _summarize(report)
    return EXIT_OK


def _without_probe(cfg: RunConfig) -> RunConfig:
    return replace(cfg, probe_inputs=())


def cmd_train(args) -> int:
    cfg, dataset, out = _prepare(args)
    run = pipeline.run_train(dataset, cfg)
    save_checkpoint(out / "checkpoint.npz", run.result.model, cfg.train)
    write_matrix(out / "imputed.tsv", dataset.external_ids, run.result.imputed.values)
    write_matrix(out / "embedding.tsv", dataset.external_ids, run.result.embedding)
    with open(out / "history.csv", "w") as fh:
        fh.write("epoch,loss,rec,fcl,val\n")
        for h in run.result.history:
            fh.write(f"{h['epoch']},{h['loss']!r},{h['rec']!r},{h['fcl']!r},{h.get('val', '')!r}\n")
    run.report.save(out / "report.json")
    _summarize(run.report)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg, dataset, out = _prepare(args)
    if not args.features and not args.embedding:
        raise ConfigError("eval needs --features and/or --embedding")
    split = make_split(dataset, cfg.mask)
    imputed = read_matrix(args.features, dataset) if args.features else None
    if imputed is not None and imputed.shape[1] != dataset.feature_dim:
        raise DataError(args.features, None,
                        f"{imputed.shape[1]} columns, dataset has {dataset.feature_dim}")
    embedding = read_matrix(args.embedding, dataset) if args.embedding else None
    report = pipeline.evaluate(dataset, split, cfg, imputed, embedding, label=args.label)
    report.save(out / "eval_report.json")
    _summarize(report)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        sizes = [tuple(int(v) for v in s.split(":")) for s in args.sizes.split(",")]
    except ValueError:
        raise ConfigError(f"bad --sizes {args.sizes!r}") from None
    if any(len(s) != 3 for s in sizes):
        raise ConfigError("--sizes entries must be num_nodes:num_edges:feature_dim")
    rows = bench.benchmark_scaling(sizes, epochs=args.epochs, seed=args.seed)
    table = bench.format_table(rows)
    print(table)
    for along in ("num_edges", "feature_dim", "num_nodes"):
        group = _vary_only(rows, along)
        if len(group) >= 2:
            print(f"exponent in {along}: {bench.scaling_exponent(group, along):.3f}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "bench.tsv").write_text(table + "\n")
    return EXIT_OK


def _vary_only(rows, along):
    fixed = [f for f in ("num_nodes", "num_edges", "feature_dim") if f != along]
    if not rows:
        return []
    groups: dict = {}
    for r in rows:
        groups.setdefault(tuple(getattr(r, f) for f in fixed), []).append(r)
    return max(groups.values(), key=len)


def cmd_selfcheck(args) -> int:
    results = run_selfcheck()
    print(format_results(results))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_NUMERICAL if failed else EXIT_OK


def _summarize(report) -> None:
    for k in sorted(report.recall_at):
        print(f"Recall@{k} {report.recall_at[k]:.4f}  NDCG@{k} {report.ndcg_at[k]:.4f}")
    if report.accuracy_mean is not None:
        print(f"accuracy {report.accuracy_mean:.4f} over {len(report.accuracy_folds)} folds")


COMMANDS = {"precode": cmd_precode, "train": cmd_train, "eval": cmd_eval,
            "bench": cmd_bench, "selfcheck": cmd_selfcheck}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"graph-infill: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"graph-infill: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, GraphError, PrecoderError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"graph-infill: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"graph-infill: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
