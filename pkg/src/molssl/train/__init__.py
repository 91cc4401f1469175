"""Training engine and baselines."""

from molssl.train.baselines import (
    PiModelObjective,
    UpsObjective,
    consistency_loss,
    knn_predict,
    rampup,
    run_baseline_knn_fingerprint,
    run_baseline_pi_model,
    run_baseline_ups,
    train_from_hybrid,
    ups_select,
)
from molssl.train.config import GRIDS, LOSS_KINDS, TrainConfig, load_config
from molssl.train.engine import (
    ConfidenceWeightedObjective,
    EpochReport,
    FixedPseudoObjective,
    RunArtifacts,
    TrainData,
    assign_pseudo_labels,
    constant_instructor,
    evaluate_model,
    fit_instructor,
    new_instructor,
    new_target_model,
    predict_raw,
    prepare_pool,
    pretrain_instructor,
    pretrain_target,
    run_baseline_naive_pl,
    run_instructbio,
    run_supervised,
    train_loop,
)
from molssl.train.losses import (
    instructor_loss,
    labeled_weights,
    per_sample_loss,
    pseudo_weights,
    target_loss,
)
