"""Self-describing run directories.

Layout::

    manifest.json      command, resolved config, dataset hashes, seed, version
    config.json        resolved TrainConfig
    epoch_log.jsonl    one EpochReport per line
    best.ckpt          target model at its best validation epoch (+ normalizer)
    instructor.ckpt    instructor (instructbio runs)
    hybrid.jsonl       final hybrid database (modes with pseudo-labels)
    metrics.json       validation/test MetricReports and selection info
    curves.csv         epoch, split, metric, value
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from molssl.data import MolDataset, MolPool, Normalizer, export_hybrid
from molssl.metrics import evaluate, write_curves_csv
from molssl.models import InstructorModel, load_model, save_model
from molssl.train.engine import RunArtifacts, TrainData, predict_raw, to_label_units

MANIFEST = "manifest.json"
CONFIG = "config.json"
EPOCH_LOG = "epoch_log.jsonl"
BEST = "best.ckpt"
INSTRUCTOR = "instructor.ckpt"
HYBRID = "hybrid.jsonl"
METRICS = "metrics.json"
CURVES = "curves.csv"


def dataset_hash(ds: MolDataset | MolPool | None) -> str | None:
    """SHA-256 over SMILES and (for labeled sets) the exact label values."""
    if ds is None:
        return None
    h = hashlib.sha256()
    for s in ds.smiles:
        h.update(s.encode())
        h.update(b"\n")
    labels = getattr(ds, "labels", None)
    if labels is not None:
        h.update(np.ascontiguousarray(labels, dtype="<f8").tobytes())
    return h.hexdigest()


@dataclass
class RunManifest:
    command: list[str]
    mode: str
    seed: int
    config: dict
    config_path: str | None = None
    datasets: dict = field(default_factory=dict)
    version: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, run_dir) -> None:
        _write_json(Path(run_dir) / MANIFEST, self.to_dict())


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def start_run(run_dir, manifest: RunManifest) -> Path:
    """Create the directory and write the manifest and config before training."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest.write(run_dir)
    _write_json(run_dir / CONFIG, manifest.config)
    return run_dir


def checkpoint_meta(art: RunArtifacts, data: TrainData) -> dict:
    return {
        "mode": art.mode,
        "metric": data.metric,
        "task": data.train.task.kind,
        "task_names": list(data.train.task_names),
        "normalizer": data.normalizer.to_dict(),
        "best_val": art.best_val,
        "best_epoch": art.best_epoch,
    }


def finish_run(run_dir, art: RunArtifacts, data: TrainData) -> dict:
    """Write every artifact of a finished run; returns the metrics record."""
    run_dir = Path(run_dir)
    with open(run_dir / EPOCH_LOG, "w") as fh:
        for rep in art.epoch_log:
            fh.write(json.dumps(rep.to_dict(), sort_keys=True) + "\n")
    save_model(art.model, run_dir / BEST, checkpoint_meta(art, data))
    if isinstance(art.instructor, InstructorModel):
        save_model(art.instructor, run_dir / INSTRUCTOR, {"mode": art.mode})
    if art.hybrid is not None and len(art.hybrid):
        export_hybrid(art.hybrid, run_dir / HYBRID)
    record = {
        "mode": art.mode,
        "metric": data.metric,
        "best_val": art.best_val,
        "best_epoch": art.best_epoch,
        "stopped_epoch": art.stopped_epoch,
        "pretrain_best_val": art.pretrain_best_val,
        "test": art.test_metric,
        "seed": art.config.seed,
    }
    for name, ds in (("val", data.val), ("test", data.test)):
        if ds is not None:
            pred = to_label_units(predict_raw(art.model, ds.store, art.config.eval_batch_size), data)
            record[f"{name}_report"] = evaluate(pred, ds.labels, data.metric, seed=art.config.seed).to_dict()
    _write_json(run_dir / METRICS, record)
    rows = []
    for k, rep in enumerate(art.epoch_log):
        rows.append((k, f"{rep.phase}/val", data.metric, repr(rep.val_metric)))
        rows.append((k, f"{rep.phase}/train", "loss_f", repr(rep.loss_f)))
        if rep.loss_g is not None:
            rows.append((k, f"{rep.phase}/train", "loss_g", repr(rep.loss_g)))
    write_curves_csv(rows, run_dir / CURVES)
    return record


def load_run_model(checkpoint):
    """Target model plus what is needed to evaluate it: (model, normalizer, meta)."""
    model, meta = load_model(checkpoint)
    norm = Normalizer.from_dict(meta["normalizer"]) if "normalizer" in meta else None
    return model, norm, meta
