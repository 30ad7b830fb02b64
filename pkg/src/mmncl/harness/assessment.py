"""Checkpoint evaluation: linear probes and zero-shot metrics on the test split.

Inference consumes time-series only; notes never enter the evaluation
inputs. Probes are trained on train-split features of the frozen encoder
and scored on the test split.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Sequence

from .. import corpus
from ..encoders import load_checkpoint
from ..errors import ValidationError
from ..evaluation import (
    DEFAULT_PROMPTS,
    PromptEnsemble,
    auprc,
    auroc,
    build_decompensation_dataset,
    build_mortality_dataset,
    extract_series_features,
    fit_linear_probe,
    score_windows,
)
from .config import RunConfig, TASKS
from .pretraining import load_prepared_splits
from .records import file_sha256, metric_records, write_json

log = logging.getLogger(__name__)

MODES = ("probe", "zeroshot")


def _task_datasets(stays, config: RunConfig, tasks: Sequence[str]) -> dict:
    ev = config.evaluation
    datasets = {}
    for task in tasks:
        if task == "mortality":
            datasets[task] = build_mortality_dataset(stays, ev.mortality_input_hours)
        elif task == "decompensation":
            datasets[task] = build_decompensation_dataset(
                stays,
                config.sampling.window_hours,
                ev.first_eval_hour,
                ev.decompensation_horizon_hours,
            )
        else:
            raise ValidationError(f"unknown task {task!r}; expected one of {TASKS}")
    return datasets


def evaluate_checkpoint(
    checkpoint_path,
    data_dir,
    out_dir=None,
    tasks: Sequence[str] = TASKS,
    modes: Sequence[str] = MODES,
    seed: int = 0,
    prompts: Optional[dict[str, PromptEnsemble]] = None,
) -> dict:
    """Compute AuPRC/AuROC per (task, mode) on the test split.

    Returns {"values": {(task, mode, metric): value}, "records": [...]} and,
    when ``out_dir`` is given, writes the records to metrics.json.
    """
    for mode in modes:
        if mode not in MODES:
            raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")
    model, config_dict, stored_hash = load_checkpoint(checkpoint_path)
    config = RunConfig.from_dict(config_dict)
    prompts = prompts or DEFAULT_PROMPTS

    data_dir = Path(data_dir)
    if stored_hash is not None:
        try:
            current = corpus.manifest_hash(data_dir)
            if current != stored_hash:
                log.warning(
                    "dataset manifest hash %s does not match the checkpoint's %s",
                    current[:12],
                    stored_hash[:12],
                )
        except Exception:
            log.warning("could not hash dataset manifest under %s", data_dir)

    _, prepared = load_prepared_splits(data_dir, ("train", "test"))
    train_sets = _task_datasets(prepared["train"], config, tasks)
    test_sets = _task_datasets(prepared["test"], config, tasks)

    values: dict[tuple[str, str, str], float] = {}
    for task in tasks:
        test_windows, test_labels, _ = test_sets[task]
        if "zeroshot" in modes:
            scores = score_windows(
                model,
                test_windows,
                prompts[task],
                use_learned_temperature=config.evaluation.zero_shot_use_temperature,
            )
            values[(task, "zeroshot", "auprc")] = auprc(scores, test_labels)
            values[(task, "zeroshot", "auroc")] = auroc(scores, test_labels)
        if "probe" in modes:
            train_windows, train_labels, _ = train_sets[task]
            probe = fit_linear_probe(
                extract_series_features(model, train_windows),
                train_labels,
                l2=config.evaluation.probe_l2,
                tol=config.evaluation.probe_tol,
                max_iter=config.evaluation.probe_max_iter,
                seed=seed,
            )
            scores = probe.scores(extract_series_features(model, test_windows))
            values[(task, "probe", "auprc")] = auprc(scores, test_labels)
            values[(task, "probe", "auroc")] = auroc(scores, test_labels)

    records = metric_records(values, "test", seed, file_sha256(checkpoint_path))
    if out_dir is not None:
        write_json(Path(out_dir) / "metrics.json", records)
    return {"values": values, "records": records}
