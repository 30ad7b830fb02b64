"""Configuration, training loop, evaluation driver, ablation runners, CLI."""

from .ablations import ablate_note_types, ablate_reduced_labels, ablate_window
from .assessment import MODES, evaluate_checkpoint
from .config import (
    EncoderSettings,
    EvaluationSettings,
    ObjectiveSettings,
    RunConfig,
    SamplingSettings,
    TASKS,
    TrainingSettings,
    load_config,
    save_config,
)
from .pretraining import PretrainResult, load_prepared_splits, pretrain

__all__ = [
    "EncoderSettings",
    "EvaluationSettings",
    "MODES",
    "ObjectiveSettings",
    "PretrainResult",
    "RunConfig",
    "SamplingSettings",
    "TASKS",
    "TrainingSettings",
    "ablate_note_types",
    "ablate_reduced_labels",
    "ablate_window",
    "evaluate_checkpoint",
    "load_config",
    "load_prepared_splits",
    "pretrain",
    "save_config",
]
