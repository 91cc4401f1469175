"""Command-line interface: split, train, eval, export-hybrid, selftest.

Exit codes: 0 success, 1 selftest failure, 2 usage or configuration error,
3 training aborted (non-finite loss).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from molssl import __version__
from molssl.data import (
    MolDataset,
    TaskSpec,
    import_hybrid,
    export_hybrid,
    load_labeled_csv,
    load_unlabeled_pool,
    make_synthetic_task,
    random_split,
    scaffold_split,
    split_report,
    subsample_pool,
)
from molssl.errors import ConfigError, MolsslError, NonFiniteLoss
from molssl.metrics import evaluate
from molssl.train import (
    TrainConfig,
    TrainData,
    load_config,
    new_instructor,
    new_target_model,
    run_baseline_knn_fingerprint,
    run_baseline_naive_pl,
    run_baseline_pi_model,
    run_baseline_ups,
    run_instructbio,
    run_supervised,
    train_from_hybrid,
)
from molssl.train.engine import predict_raw
from molssl.train.rundir import HYBRID, RunManifest, dataset_hash, finish_run, load_run_model, start_run

log = logging.getLogger("molssl")

MODES = ("supervised", "instructbio", "naive-pl", "pi", "ups", "knn")
POOL_MODES = ("instructbio", "naive-pl", "pi", "ups")

EXIT_OK, EXIT_SELFTEST, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    if value in (None, ""):
        return default
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {value!r}") from None


# --------------------------------------------------------------------------- data loading


def load_csv(path, task: str = "auto", smiles_column: str = "smiles", label_columns=None) -> MolDataset:
    """Load a labeled CSV; ``task="auto"`` picks classification when every label is 0 or 1."""
    cols = label_columns.split(",") if isinstance(label_columns, str) else label_columns
    if task == "classification":
        n = len(cols) if cols else None
        if n is None:
            ds = load_labeled_csv(path, smiles_column, cols)
            n = len(ds.task_names)
        return load_labeled_csv(path, smiles_column, cols, TaskSpec("classification", n))
    ds = load_labeled_csv(path, smiles_column, cols)
    if task == "auto":
        seen = ds.labels[~np.isnan(ds.labels)]
        if seen.size and np.isin(seen, (0.0, 1.0)).all():
            return load_labeled_csv(path, smiles_column, cols,
                                    TaskSpec("classification", len(ds.task_names)))
    return ds


def load_splits(data: str, task: str, seed: int):
    """(TrainData splits, pool or None) from a split directory or ``synthetic``."""
    if data == "synthetic":
        fx = make_synthetic_task(seed)
        return fx.labeled, fx.val, fx.test, fx.pool
    root = Path(data)
    if not root.is_dir():
        raise UsageError(f"--data must be a split directory or 'synthetic', got {data!r}")
    parts = []
    for name in ("train", "val", "test"):
        path = root / f"{name}.csv"
        if not path.exists():
            if name == "test":
                parts.append(None)
                continue
            raise UsageError(f"{path} is missing")
        parts.append(load_csv(path, task))
    return parts[0], parts[1], parts[2], None


def resolve_config(args, seed: int) -> TrainConfig:
    cfg = load_config(args.config) if args.config else TrainConfig()
    changes = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        changes[key.strip()] = value.strip()
    merged = {**cfg.to_dict(), **changes, "seed": seed}
    return TrainConfig.from_dict(merged)


# --------------------------------------------------------------------------- commands


def cmd_split(args) -> int:
    try:
        ratios = tuple(float(r) for r in args.ratios.split(","))
    except ValueError:
        raise ConfigError(f"--ratios must be comma-separated numbers, got {args.ratios!r}") from None
    seed = args.seed if args.seed is not None else _env_int("MOLSSL_SEED", 0)
    ds = load_csv(args.input, args.task, args.smiles_column, args.label_columns)
    splitter = scaffold_split if args.method == "scaffold" else random_split
    parts = splitter(ds, ratios, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for part in parts:
        part.write_csv(out / f"{part.tag}.csv")
    report = split_report(args.method, parts).to_dict()
    report.update(ratios=list(ratios), seed=seed, input=str(args.input), skipped=ds.skipped)
    with open(out / "split_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(report["sizes"]))
    return EXIT_OK


def _train_one(args, seed: int, run_dir: Path) -> dict:
    cfg = resolve_config(args, seed)
    train, val, test, pool = load_splits(args.data, args.task, seed)
    if args.unlabeled:
        if args.mode not in POOL_MODES and not args.from_hybrid:
            warnings.warn(f"--unlabeled is ignored in {args.mode} mode", stacklevel=2)
        else:
            pool = load_unlabeled_pool(args.unlabeled)
    if pool is not None and args.pool_size:
        pool = subsample_pool(pool, args.pool_size, seed)
    data = TrainData(train, val, test)
    manifest = RunManifest(
        command=list(sys.argv), mode="from-hybrid" if args.from_hybrid else args.mode, seed=seed,
        config=cfg.to_dict(), config_path=args.config, version=__version__,
        datasets={"train": dataset_hash(train), "val": dataset_hash(val), "test": dataset_hash(test),
                  "pool": dataset_hash(pool) if args.mode in POOL_MODES else None,
                  "source": args.data, "unlabeled": args.unlabeled, "from_hybrid": args.from_hybrid},
    )
    start_run(run_dir, manifest)
    if args.mode == "knn" and not args.from_hybrid:
        report = run_baseline_knn_fingerprint(train, test if test is not None else val, args.k_neighbors, seed=seed)
        report.to_json(run_dir / "metrics.json")
        return {"mode": "knn", "metric": report.metric, "test": report.aggregate, "seed": seed}
    f = new_target_model(data, cfg)
    if args.from_hybrid:
        art = train_from_hybrid(f, import_hybrid(args.from_hybrid), data, cfg, args.hybrid_weighting)
        data = art.data
    elif args.mode == "supervised":
        art = run_supervised(f, data, cfg)
    elif args.mode == "instructbio":
        art = run_instructbio(f, new_instructor(data, cfg), data, pool, cfg)
    elif args.mode == "naive-pl":
        art = run_baseline_naive_pl(f, data, pool, cfg)
    elif args.mode == "pi":
        art = run_baseline_pi_model(f, data, pool, cfg)
    else:
        art = run_baseline_ups(f, data, pool, cfg)
    return finish_run(run_dir, art, data)


def _sweep_worker(payload):
    args, seed, run_dir = payload
    logging.basicConfig(level=logging.WARNING)
    return _train_one(args, seed, Path(run_dir))


def cmd_train(args) -> int:
    if args.mode == "ups" and args.data == "synthetic":
        raise ConfigError("ups needs a classification dataset; the synthetic task is regression")
    seed = args.seed if args.seed is not None else _env_int("MOLSSL_SEED", 0)
    out = Path(args.out)
    if not args.seed_sweep:
        record = _train_one(args, seed, out)
        print(json.dumps({k: record[k] for k in ("mode", "metric", "test") if k in record}))
        return EXIT_OK
    seeds = list(range(seed, seed + args.seed_sweep))
    workers = args.workers if args.workers is not None else _env_int("MOLSSL_WORKERS", 1)
    jobs = [(args, s, str(out / f"seed_{s}")) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_sweep_worker, jobs))
    else:
        records = [_train_one(args, s, Path(d)) for _, s, d in jobs]
    tests = [r["test"] for r in records]
    summary = {"mode": records[0]["mode"], "metric": records[0]["metric"], "seeds": seeds,
               "test": tests, "mean": float(np.mean(tests)), "std": float(np.std(tests))}
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps({k: summary[k] for k in ("mode", "metric", "mean", "std")}))
    return EXIT_OK


def cmd_eval(args) -> int:
    if not Path(args.checkpoint).exists():
        raise UsageError(f"checkpoint {args.checkpoint} not found")
    model, norm, meta = load_run_model(args.checkpoint)
    names = meta.get("task_names")
    task = TaskSpec(meta.get("task", "regression"), len(names) if names else model.config.n_tasks)
    ds = load_labeled_csv(args.data, args.smiles_column, names, task)
    raw = predict_raw(model, ds.store)
    if task.is_classification:
        from molssl.tensorkit import ops

        preds = ops._sigmoid(raw)
    else:
        preds = norm.invert(raw) if norm is not None else raw
    report = evaluate(preds, ds.labels, meta.get("metric", "roc_auc" if task.is_classification else "rmse"))
    text = report.to_json(args.out)
    if args.dump_preds:
        with open(args.dump_preds, "w") as fh:
            fh.write("smiles," + ",".join(f"pred_{n}" for n in ds.task_names) + "\n")
            for s, row in zip(ds.smiles, preds):
                fh.write(s + "," + ",".join(repr(float(v)) for v in row) + "\n")
    if args.out is None:
        print(text)
    return EXIT_OK


def cmd_export_hybrid(args) -> int:
    src = Path(args.run) / HYBRID
    if not src.exists():
        raise UsageError(f"{src} not found; the run has no hybrid database")
    db = import_hybrid(src, min_confidence=args.min_confidence)
    export_hybrid(db, args.out)  # raises DegenerateHybrid when the filter removed every row
    print(json.dumps({"rows": len(db), "labeled": db.n_labeled, "pseudo": db.n_pseudo}))
    return EXIT_OK


def cmd_selftest(args) -> int:
    from molssl.selftest import run_selftest

    return EXIT_OK if run_selftest() else EXIT_SELFTEST


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="molssl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"molssl {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="scaffold or random train/val/test split of a labeled CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("scaffold", "random"), default="scaffold")
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=None, help="default: $MOLSSL_SEED or 0")
    p.add_argument("--out", required=True)
    p.add_argument("--smiles-column", default="smiles")
    p.add_argument("--label-columns", default=None, help="comma-separated; default: every other column")
    p.add_argument("--task", choices=("auto", "regression", "classification"), default="auto")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model in one of the supported modes")
    p.add_argument("--mode", choices=MODES, default="instructbio")
    p.add_argument("--config", default=None, help="flat YAML/JSON of TrainConfig fields")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
    p.add_argument("--data", required=True, help="directory with train/val/test.csv, or 'synthetic'")
    p.add_argument("--task", choices=("auto", "regression", "classification"), default="auto")
    p.add_argument("--unlabeled", default=None, help=".smi or CSV pool of unlabeled molecules")
    p.add_argument("--pool-size", type=int, default=0, help="subsample the pool to this size")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="default: $MOLSSL_SEED or 0")
    p.add_argument("--seed-sweep", type=int, default=0, metavar="N", help="run N consecutive seeds")
    p.add_argument("--workers", type=int, default=None, help="default: $MOLSSL_WORKERS or 1")
    p.add_argument("--from-hybrid", default=None, metavar="JSONL", help="train from a hybrid database")
    p.add_argument("--hybrid-weighting", choices=("confidence", "alpha"), default="confidence")
    p.add_argument("--k-neighbors", type=int, default=5, help="knn mode only")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a labeled CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--dump-preds", default=None, metavar="CSV")
    p.add_argument("--smiles-column", default="smiles")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-hybrid", help="filter a run's hybrid database by confidence")
    p.add_argument("--run", required=True)
    p.add_argument("--min-confidence", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_hybrid)

    p = sub.add_parser("selftest", help="gradient, loss and metric checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NonFiniteLoss as exc:
        print(f"molssl: training aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (UsageError, MolsslError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"molssl: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
