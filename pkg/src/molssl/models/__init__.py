"""Target model f (GIN) and instructor model g."""

from molssl.models.batch import GraphBatch, GraphStore, collate
from molssl.models.gin import READOUTS, TargetModel, TargetModelConfig, target_forward
from molssl.models.instructor import (
    ConstantInstructor,
    InstructorConfig,
    InstructorModel,
    instructor_features,
    instructor_forward,
)
from molssl.models.io import EmbeddingTable, import_external_embeddings, load_model, save_model

__all__ = [
    "READOUTS",
    "ConstantInstructor",
    "EmbeddingTable",
    "GraphBatch",
    "GraphStore",
    "InstructorConfig",
    "InstructorModel",
    "TargetModel",
    "TargetModelConfig",
    "collate",
    "import_external_embeddings",
    "instructor_features",
    "instructor_forward",
    "load_model",
    "save_model",
    "target_forward",
]
