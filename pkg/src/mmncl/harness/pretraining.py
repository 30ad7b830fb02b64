"""Contrastive pretraining loop with per-epoch validation logging.

A run is reproducible from (config, seed) in single-threaded mode: model
initialization, batch assembly, and dropout all derive from the run seed.
Validation zero-shot AuPRC is logged per task each epoch; with early
stopping enabled the checkpoint keeps the best-scoring epoch, otherwise
the final one.
"""

from __future__ import annotations

import copy
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from .. import corpus
from ..corpus.types import PatientStay, Scaler
from ..encoders import MultiModalEncoder, build_encoder, save_checkpoint
from ..errors import NonFiniteLossError, ValidationError
from ..evaluation import (
    DEFAULT_PROMPTS,
    auprc,
    build_decompensation_dataset,
    build_mortality_dataset,
    score_windows,
)
from ..objective import loss_mm_infonce, loss_mm_ncl
from ..sampling import iter_epoch_batches
from .config import RunConfig, TASKS
from .records import append_registry, write_json

log = logging.getLogger(__name__)


@dataclass
class PretrainResult:
    record: dict
    model: MultiModalEncoder
    scaler: Scaler
    checkpoint_path: Optional[str] = None
    epoch_logs: list[dict] = field(default_factory=list)


def load_prepared_splits(
    data_dir, splits: Sequence[str]
) -> tuple[Scaler, dict[str, list[PatientStay]]]:
    """Ingest the requested splits and preprocess with a train-split scaler."""
    raw = {split: corpus.io.ingest_stays(data_dir, split) for split in splits}
    if "train" not in raw:
        raise ValidationError("the train split is required to fit the scaler")
    scaler = corpus.fit_scaler(raw["train"])
    prepared = {
        split: [corpus.preprocess(stay, scaler) for stay in stays]
        for split, stays in raw.items()
    }
    return scaler, prepared


def validation_zero_shot_auprc(
    model: MultiModalEncoder, stays: Sequence[PatientStay], config: RunConfig
) -> dict[str, float]:
    """Per-task validation AuPRC; NaN when a task has no two-class instances."""
    ev = config.evaluation
    out: dict[str, float] = {}
    datasets = {
        "mortality": build_mortality_dataset(stays, ev.mortality_input_hours),
        "decompensation": build_decompensation_dataset(
            stays,
            config.sampling.window_hours,
            ev.first_eval_hour,
            ev.decompensation_horizon_hours,
        ),
    }
    for task in TASKS:
        windows, labels, _ = datasets[task]
        try:
            scores = score_windows(
                model,
                windows,
                DEFAULT_PROMPTS[task],
                use_learned_temperature=ev.zero_shot_use_temperature,
            )
            out[task] = auprc(scores, labels)
        except ValidationError:
            out[task] = math.nan
    return out


def _selection_score(val_auprc: dict[str, float], task: str) -> float:
    if task == "aggregate":
        values = [v for v in val_auprc.values() if not math.isnan(v)]
        return float(np.mean(values)) if values else -math.inf
    value = val_auprc.get(task, math.nan)
    return -math.inf if math.isnan(value) else value


def compute_batch_loss(model: MultiModalEncoder, batch, config: RunConfig) -> torch.Tensor:
    windows = torch.as_tensor(batch.windows, dtype=model.dtype, device=model.device)
    pair = model.embed_pair(windows, batch.note_texts)
    temperature = model.temperature.value()
    if config.training.loss_variant == "mm_infonce":
        return loss_mm_infonce(pair.series, pair.text, temperature)
    return loss_mm_ncl(
        pair.series, pair.text, batch.indices, config.objective.loss_config(), temperature
    )


def pretrain(
    config: RunConfig,
    data_dir=None,
    out_dir=None,
    run_id: str = "pretrain",
) -> PretrainResult:
    started = time.time()
    torch.set_num_threads(config.training.num_threads)
    torch.manual_seed(config.seed)
    data_dir = Path(data_dir if data_dir is not None else config.data_dir)

    scaler, prepared = load_prepared_splits(data_dir, ("train", "val"))
    train_stays = prepared["train"]
    val_stays = prepared["val"]

    enc = config.encoders
    model = build_encoder(
        input_dim=train_stays[0].vitals.num_variables,
        hidden_dim=enc.hidden_dim,
        depth=enc.depth,
        dropout=enc.dropout,
        provider_dim=enc.provider_dim,
        mlp_hidden_dim=enc.mlp_hidden_dim,
        mlp_output_dim=enc.mlp_output_dim,
        shared_dim=enc.shared_dim,
        loss_cfg=config.objective.loss_config(),
        seed=config.seed,
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=config.training.learning_rate)
    sampling_rng = np.random.default_rng((config.seed, 101))
    allowed = (
        None
        if config.training.allowed_categories is None
        else frozenset(config.training.allowed_categories)
    )

    epoch_logs: list[dict] = []
    best_state = None
    best_epoch = None
    best_score = -math.inf
    for epoch in range(1, config.training.epochs + 1):
        model.train()
        losses = []
        for step, batch in enumerate(
            iter_epoch_batches(
                train_stays,
                config.batch_notes,
                config.sampling.window_hours,
                config.sampling.target_time_config(),
                allowed,
                sampling_rng,
                notes_per_stay=config.sampling.notes_per_stay,
            )
        ):
            loss = compute_batch_loss(model, batch, config)
            if not bool(torch.isfinite(loss)):
                raise NonFiniteLossError(
                    f"non-finite training loss at epoch {epoch}, step {step}",
                    batch_indices=batch.indices,
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            losses.append(loss.item())
        train_loss = float(np.mean(losses)) if losses else math.nan

        model.eval()
        val_auprc = validation_zero_shot_auprc(model, val_stays, config)
        epoch_logs.append({"epoch": epoch, "train_loss": train_loss, "val_auprc": val_auprc})
        log.info("epoch %d: train_loss=%.6f val_auprc=%s", epoch, train_loss, val_auprc)

        if config.training.early_stopping:
            score = _selection_score(val_auprc, config.training.early_stopping_task)
            if score > best_score:
                best_score = score
                best_epoch = epoch
                best_state = copy.deepcopy(model.state_dict())

    if config.training.early_stopping and best_state is not None:
        model.load_state_dict(best_state)
    model.eval()

    record = {
        "run_id": run_id,
        "kind": "pretrain",
        "config": config.to_dict(),
        "data_dir": str(data_dir),
        "epochs": epoch_logs,
        "best_epoch": best_epoch,
        "checkpoint_path": None,
        "wall_clock_seconds": time.time() - started,
    }
    result = PretrainResult(
        record=record, model=model, scaler=scaler, epoch_logs=epoch_logs
    )

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_path = out_dir / "checkpoint.pt"
        digest = None
        try:
            digest = corpus.manifest_hash(data_dir)
        except Exception:  # manifest is metadata; its absence should not block training
            log.warning("dataset at %s has no manifest; checkpoint stores no data hash", data_dir)
        save_checkpoint(checkpoint_path, model, config.to_dict(), digest)
        record["checkpoint_path"] = str(checkpoint_path)
        record["wall_clock_seconds"] = time.time() - started
        write_json(out_dir / "record.json", record)
        append_registry(out_dir / "runs.jsonl", record)
        result.checkpoint_path = str(checkpoint_path)
    return result
