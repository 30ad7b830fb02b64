"""Ablation runners: window size, reduced labels, greedy note-type removal.

Each runner trains the required models, aggregates metrics across seeds,
and emits both a machine-readable table (JSON, re-loadable through the
results reader) and a human-readable CSV; the label runner also writes a
vector plot. Plots are artifacts, never inputs.
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import logging
import math
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import torch
from torch import nn

from ..encoders import TimeSeriesEncoder, load_checkpoint
from ..errors import BatchAssemblyError, ValidationError
from ..evaluation import (
    DEFAULT_PROMPTS,
    auprc,
    auroc,
    extract_series_features,
    fit_linear_probe,
    score_windows,
)
from .assessment import _task_datasets
from .config import RunConfig, TASKS
from .pretraining import load_prepared_splits, pretrain
from .records import write_json

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# window-size ablation


def ablate_window(
    config: RunConfig,
    data_dir,
    out_dir=None,
    sizes: Sequence[int] = (8, 16, 24, 48),
    n_seeds: int = 1,
) -> dict:
    """Train one model per (window size, seed), all else fixed; tabulate test zero-shot."""
    runs = []
    for size in sizes:
        for offset in range(n_seeds):
            cfg = dataclasses.replace(
                config,
                seed=config.seed + offset,
                sampling=dataclasses.replace(config.sampling, window_hours=int(size)),
            )
            result = pretrain(cfg, data_dir=data_dir)
            values = _zero_shot_test_values(result.model, cfg, data_dir)
            runs.append({"window_hours": int(size), "seed": cfg.seed, **values})

    rows = []
    for size in sizes:
        row: dict = {"window_hours": int(size)}
        group = [r for r in runs if r["window_hours"] == int(size)]
        for task in TASKS:
            for metric in ("auprc", "auroc"):
                samples = [r[f"{task}_{metric}"] for r in group]
                row[f"{task}_{metric}_mean"] = float(np.mean(samples))
                row[f"{task}_{metric}_std"] = float(np.std(samples))
        rows.append(row)

    table = {"kind": "ablate_window", "runs": runs, "rows": rows}
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_json(out_dir / "window_table.json", table)
        _write_csv(out_dir / "window_table.csv", rows)
    return table


def _zero_shot_test_values(model, config: RunConfig, data_dir) -> dict[str, float]:
    _, prepared = load_prepared_splits(data_dir, ("train", "test"))
    test_sets = _task_datasets(prepared["test"], config, TASKS)
    values = {}
    for task in TASKS:
        windows, labels, _ = test_sets[task]
        scores = score_windows(model, windows, DEFAULT_PROMPTS[task])
        values[f"{task}_auprc"] = auprc(scores, labels)
        values[f"{task}_auroc"] = _safe_auroc(scores, labels)
    return values


def _safe_auroc(scores, labels) -> float:
    try:
        return auroc(scores, labels)
    except ValidationError:
        return math.nan


# ---------------------------------------------------------------------------
# reduced-label ablation


class SupervisedSequenceClassifier(nn.Module):
    """The contrastive model's time-series tower plus a linear head, trained end to end."""

    def __init__(self, input_dim: int, config: RunConfig):
        super().__init__()
        enc = config.encoders
        from ..encoders import SeriesEncoderConfig

        self.encoder = TimeSeriesEncoder(
            SeriesEncoderConfig(
                input_dim=input_dim,
                hidden_dim=enc.hidden_dim,
                depth=enc.depth,
                dropout=enc.dropout,
            )
        )
        self.head = nn.Linear(enc.hidden_dim, 1)

    def forward(self, windows: torch.Tensor) -> torch.Tensor:
        return self.head(self.encoder(windows))[:, 0]


def train_supervised(
    windows: np.ndarray,
    labels: np.ndarray,
    config: RunConfig,
    seed: int,
    batch_size: int = 64,
    val_windows: Optional[np.ndarray] = None,
    val_labels: Optional[np.ndarray] = None,
) -> SupervisedSequenceClassifier:
    """Binary cross-entropy training with the run's optimizer settings.

    When a validation set is given, the returned model is the epoch with the
    best validation AuPRC; otherwise the final epoch.
    """
    if len(windows) < 2 or labels.min() == labels.max():
        raise ValidationError("supervised training needs both classes present")
    torch.manual_seed(seed)
    model = SupervisedSequenceClassifier(windows.shape[-1], config)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.training.learning_rate)
    criterion = nn.BCEWithLogitsLoss()
    x = torch.as_tensor(windows, dtype=torch.float32)
    y = torch.as_tensor(labels, dtype=torch.float32)
    order_rng = np.random.default_rng((seed, 7))
    select = val_windows is not None and val_labels is not None and val_labels.min() != val_labels.max()
    best_state = None
    best_score = -math.inf
    for _ in range(config.training.supervised_epochs):
        model.train()
        order = order_rng.permutation(len(x))
        for start in range(0, len(x), batch_size):
            chunk = order[start : start + batch_size]
            optimizer.zero_grad()
            loss = criterion(model(x[chunk]), y[chunk])
            loss.backward()
            optimizer.step()
        if select:
            score = auprc(supervised_scores(model, val_windows), val_labels)
            if score > best_score:
                best_score = score
                best_state = copy.deepcopy(model.state_dict())
    if select and best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return model


def supervised_scores(model: SupervisedSequenceClassifier, windows: np.ndarray) -> np.ndarray:
    model.eval()
    outputs = []
    with torch.no_grad():
        for start in range(0, len(windows), 1024):
            chunk = torch.as_tensor(windows[start : start + 1024], dtype=torch.float32)
            outputs.append(torch.sigmoid(model(chunk)).numpy())
    return np.concatenate(outputs) if outputs else np.zeros(0)


def _stratified_subsample(labels: np.ndarray, fraction: float, rng) -> Optional[np.ndarray]:
    """Class-stratified index subset; None when a class would vanish."""
    selected = []
    for value in (0, 1):
        pool = np.flatnonzero(labels == value)
        count = int(round(fraction * len(pool)))
        if count == 0:
            return None
        chosen = pool if count >= len(pool) else rng.choice(pool, size=count, replace=False)
        selected.append(np.sort(chosen))
    return np.sort(np.concatenate(selected))


def ablate_reduced_labels(
    checkpoint_path,
    data_dir,
    out_dir=None,
    fractions: Sequence[float] = (0.01, 0.03, 0.1, 0.3, 1.0),
    n_seeds: int = 1,
    task: str = "mortality",
) -> dict:
    """Probe vs supervised-from-scratch vs (constant) zero-shot across label budgets."""
    if task not in TASKS:
        raise ValidationError(f"unknown task {task!r}")
    model, config_dict, _ = load_checkpoint(checkpoint_path)
    config = RunConfig.from_dict(config_dict)
    _, prepared = load_prepared_splits(data_dir, ("train", "val", "test"))
    train_windows, train_labels, _ = _task_datasets(prepared["train"], config, (task,))[task]
    val_windows, val_labels, _ = _task_datasets(prepared["val"], config, (task,))[task]
    test_windows, test_labels, _ = _task_datasets(prepared["test"], config, (task,))[task]

    zero_shot = auprc(
        score_windows(model, test_windows, DEFAULT_PROMPTS[task]), test_labels
    )
    train_features = extract_series_features(model, train_windows)
    test_features = extract_series_features(model, test_windows)

    runs = []
    for f_index, fraction in enumerate(fractions):
        for offset in range(n_seeds):
            rng = np.random.default_rng((config.seed, f_index, offset))
            subset = _stratified_subsample(train_labels, fraction, rng)
            if subset is None:
                log.warning(
                    "fraction %.4f leaves a class empty for task %s; skipping", fraction, task
                )
                continue
            probe = fit_linear_probe(
                train_features[subset],
                train_labels[subset],
                l2=config.evaluation.probe_l2,
                tol=config.evaluation.probe_tol,
                max_iter=config.evaluation.probe_max_iter,
            )
            probe_auprc = auprc(probe.scores(test_features), test_labels)
            supervised = train_supervised(
                train_windows[subset],
                train_labels[subset],
                config,
                seed=config.seed + 1000 * f_index + offset,
                val_windows=val_windows,
                val_labels=val_labels,
            )
            supervised_auprc = auprc(supervised_scores(supervised, test_windows), test_labels)
            runs.append(
                {
                    "fraction": float(fraction),
                    "seed": offset,
                    "probe_auprc": probe_auprc,
                    "supervised_auprc": supervised_auprc,
                    "zeroshot_auprc": zero_shot,
                }
            )

    rows = []
    for fraction in fractions:
        group = [r for r in runs if r["fraction"] == float(fraction)]
        if not group:
            continue
        rows.append(
            {
                "fraction": float(fraction),
                "probe_auprc_mean": float(np.mean([r["probe_auprc"] for r in group])),
                "probe_auprc_std": float(np.std([r["probe_auprc"] for r in group])),
                "supervised_auprc_mean": float(
                    np.mean([r["supervised_auprc"] for r in group])
                ),
                "supervised_auprc_std": float(np.std([r["supervised_auprc"] for r in group])),
                "zeroshot_auprc": zero_shot,
            }
        )

    crossover = None
    for row in sorted(rows, key=lambda r: r["fraction"]):
        if row["supervised_auprc_mean"] >= row["zeroshot_auprc"]:
            crossover = row["fraction"]
            break

    table = {
        "kind": "ablate_reduced_labels",
        "task": task,
        "runs": runs,
        "rows": rows,
        "zeroshot_auprc": zero_shot,
        "crossover_fraction": crossover,
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_json(out_dir / "reduced_labels.json", table)
        _write_csv(out_dir / "reduced_labels.csv", rows)
        _plot_reduced_labels(out_dir / "reduced_labels.svg", rows, task, crossover)
    return table


def _plot_reduced_labels(path, rows, task: str, crossover):
    fractions = [row["fraction"] for row in rows]
    figure, axes = plt.subplots(figsize=(6, 4))
    axes.errorbar(
        fractions,
        [row["probe_auprc_mean"] for row in rows],
        yerr=[row["probe_auprc_std"] for row in rows],
        marker="o",
        label="linear probe",
    )
    axes.errorbar(
        fractions,
        [row["supervised_auprc_mean"] for row in rows],
        yerr=[row["supervised_auprc_std"] for row in rows],
        marker="s",
        label="supervised",
    )
    axes.plot(
        fractions,
        [row["zeroshot_auprc"] for row in rows],
        linestyle="--",
        label="zero-shot",
    )
    if crossover is not None:
        axes.axvline(crossover, color="gray", linestyle=":", label=f"crossover {crossover:g}")
    axes.set_xscale("log")
    axes.set_xlabel("fraction of training labels")
    axes.set_ylabel("test AuPRC")
    axes.set_title(f"{task}: label efficiency")
    axes.legend()
    figure.tight_layout()
    figure.savefig(path)
    plt.close(figure)


# ---------------------------------------------------------------------------
# greedy note-type removal


def _categories_in_training_data(config: RunConfig, data_dir) -> list[str]:
    _, prepared = load_prepared_splits(data_dir, ("train",))
    present = set()
    for stay in prepared["train"]:
        for note in stay.notes:
            present.add(note.category)
    if config.training.allowed_categories is not None:
        present &= set(config.training.allowed_categories)
    return sorted(present)


def _train_candidate(
    config: RunConfig, data_dir, categories: Sequence[str], task: str
) -> Optional[dict]:
    """Pretrain restricted to ``categories`` with validation early stopping."""
    cfg = dataclasses.replace(
        config,
        training=dataclasses.replace(
            config.training,
            allowed_categories=tuple(sorted(categories)),
            early_stopping=True,
            early_stopping_task=task,
        ),
    )
    try:
        result = pretrain(cfg, data_dir=data_dir)
    except BatchAssemblyError:
        log.warning("categories %s leave no usable pretraining notes", list(categories))
        return None
    best_epoch = result.record["best_epoch"]
    logs = {entry["epoch"]: entry for entry in result.epoch_logs}
    val_auprc = logs[best_epoch]["val_auprc"][task] if best_epoch else math.nan
    test_values = _zero_shot_test_values(result.model, cfg, data_dir)
    return {
        "categories": sorted(categories),
        "val_auprc": val_auprc,
        "test_auprc": test_values[f"{task}_auprc"],
        "test_auroc": test_values[f"{task}_auroc"],
    }


def ablate_note_types(config: RunConfig, data_dir, target_task: str, out_dir=None) -> dict:
    """Greedily remove the note category whose removal best preserves validation AuPRC."""
    if target_task not in TASKS:
        raise ValidationError(f"unknown task {target_task!r}")
    current = _categories_in_training_data(config, data_dir)
    if len(current) < 2:
        raise ValidationError(
            f"need at least 2 note categories in training data, found {current}"
        )

    steps = []
    removed_order = []
    baseline = _train_candidate(config, data_dir, current, target_task)
    if baseline is None:
        raise BatchAssemblyError("initial category set has no usable pretraining notes")
    steps.append({"step": 0, "removed": None, **baseline})

    step = 1
    while len(current) > 1:
        candidates = []
        for category in sorted(current):
            remaining = [c for c in current if c != category]
            outcome = _train_candidate(config, data_dir, remaining, target_task)
            if outcome is not None:
                candidates.append((category, outcome))
        if not candidates:
            log.warning("no candidate removal leaves usable training data; stopping")
            break
        best_category, best_outcome = max(candidates, key=lambda item: item[1]["val_auprc"])
        removed_order.append(best_category)
        current = [c for c in current if c != best_category]
        steps.append({"step": step, "removed": best_category, **best_outcome})
        step += 1

    table = {
        "kind": "ablate_note_types",
        "task": target_task,
        "steps": steps,
        "removed_order": removed_order,
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_json(out_dir / "note_types.json", table)
        _write_csv(
            out_dir / "note_types.csv",
            [
                {
                    "step": s["step"],
                    "removed": s["removed"] or "",
                    "categories": "|".join(s["categories"]),
                    "val_auprc": s["val_auprc"],
                    "test_auprc": s["test_auprc"],
                }
                for s in steps
            ],
        )
        _plot_note_types(out_dir / "note_types.svg", steps, target_task)
    return table


def _plot_note_types(path, steps, task: str):
    labels = ["full set"] + [f"- {s['removed']}" for s in steps[1:]]
    values = [s["test_auprc"] for s in steps]
    figure, axes = plt.subplots(figsize=(max(6, len(steps) * 1.2), 4))
    axes.bar(range(len(steps)), values)
    axes.set_xticks(range(len(steps)), labels, rotation=30, ha="right")
    axes.set_ylabel("test zero-shot AuPRC")
    axes.set_title(f"{task}: greedy note-type removal")
    figure.tight_layout()
    figure.savefig(path)
    plt.close(figure)


def _write_csv(path, rows: list[dict]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
