"""Task labeling, zero-shot scoring, linear probes, and ranking metrics."""

from .metrics import auprc, auroc
from .probe import ProbeModel, extract_series_features, fit_linear_probe
from .prompts import (
    DECOMPENSATION_PROMPTS,
    DEFAULT_PROMPTS,
    MORTALITY_PROMPTS,
    PromptEnsemble,
    load_prompt_file,
    save_prompt_file,
)
from .tasks import (
    TaskInstance,
    build_decompensation_dataset,
    build_mortality_dataset,
    label_decompensation,
    label_mortality,
)
from .zeroshot import class_prototypes, score_windows, zero_shot_scores

__all__ = [
    "DECOMPENSATION_PROMPTS",
    "DEFAULT_PROMPTS",
    "MORTALITY_PROMPTS",
    "ProbeModel",
    "PromptEnsemble",
    "TaskInstance",
    "auprc",
    "auroc",
    "build_decompensation_dataset",
    "build_mortality_dataset",
    "class_prototypes",
    "extract_series_features",
    "fit_linear_probe",
    "label_decompensation",
    "label_mortality",
    "load_prompt_file",
    "save_prompt_file",
    "score_windows",
    "zero_shot_scores",
]
