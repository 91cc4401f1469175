"""Datasets, pools, splits, label normalization and the hybrid database."""

from molssl.data.dataset import (
    MISSING,
    MolDataset,
    MolPool,
    TaskSpec,
    load_labeled_csv,
    load_unlabeled_pool,
    parse_many,
    subsample_pool,
)
from molssl.data.hybrid import (
    HybridDatabase,
    PseudoLabels,
    build_hybrid,
    export_hybrid,
    import_hybrid,
)
from molssl.data.normalize import Normalizer, fit_normalizer
from molssl.data.split import (
    SplitReport,
    random_split,
    random_split_indices,
    scaffold_overlap,
    scaffold_split,
    scaffold_split_indices,
    split_report,
)
from molssl.data.synthetic import SyntheticTask, graph_statistics, make_synthetic_task, oracle

__all__ = [
    "MISSING",
    "HybridDatabase",
    "MolDataset",
    "MolPool",
    "Normalizer",
    "PseudoLabels",
    "SplitReport",
    "SyntheticTask",
    "TaskSpec",
    "build_hybrid",
    "export_hybrid",
    "fit_normalizer",
    "graph_statistics",
    "import_hybrid",
    "load_labeled_csv",
    "load_unlabeled_pool",
    "make_synthetic_task",
    "oracle",
    "parse_many",
    "random_split",
    "random_split_indices",
    "scaffold_overlap",
    "scaffold_split",
    "scaffold_split_indices",
    "split_report",
    "subsample_pool",
]
