"""Contrastive objectives over paired series/text embeddings.

Implements the soft temporal neighborhood between same-stay samples, its
row-normalized weights and binary indicator, the neighborhood-aware and
neighborhood-discriminative losses, their alpha-mix (the MM-NCL loss), and
the symmetric CLIP-style MM-InfoNCE baseline.

All losses are numerically stabilized through log-sum-exp and are pure
functions of their tensor inputs; gradients flow to the embeddings and to
the trainable temperature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .errors import ConfigError, ValidationError

AWARE_DENOMINATORS = ("exclude_l", "exclude_m")


@dataclass(frozen=True)
class LossConfig:
    """Hyperparameters of the contrastive objective.

    The temperature is stored as log(1/temperature) so it can be trained
    without sign constraints; the inverse temperature is clamped at
    ``max_inverse_temperature`` before use.
    """

    alpha: float = 0.3
    beta: float = 2.0
    aware_denominator: str = "exclude_l"
    init_temperature: float = 0.07
    max_inverse_temperature: float = 100.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.beta < 1.0:
            raise ConfigError(f"beta must be >= 1, got {self.beta}")
        if self.aware_denominator not in AWARE_DENOMINATORS:
            raise ConfigError(
                f"aware_denominator must be one of {AWARE_DENOMINATORS}, "
                f"got {self.aware_denominator!r}"
            )
        if self.init_temperature <= 0:
            raise ConfigError("init_temperature must be > 0")
        if self.max_inverse_temperature <= 0:
            raise ConfigError("max_inverse_temperature must be > 0")


@dataclass(frozen=True)
class NeighborhoodMatrix:
    """Soft neighborhood over a batch: raw decays, row-stochastic weights, indicator."""

    raw: np.ndarray
    weights: np.ndarray
    indicator: np.ndarray


def soft_neighborhood(indices: Sequence, beta: float) -> NeighborhoodMatrix:
    """Temporal soft neighborhood over batch index tuples.

    Two samples are neighbors when they come from the same stay and their
    note ordinals differ by at most one; the raw weight decays as
    beta / (beta + |dt|) with the gap between their target times. Weights
    are normalized per row; the diagonal is always a neighbor, so rows are
    never empty.
    """
    if beta < 1.0:
        raise ConfigError(f"beta must be >= 1, got {beta}")
    stay = np.asarray([index.stay_index for index in indices])
    note = np.asarray([index.note_index for index in indices])
    tau = np.asarray([index.target_time for index in indices], dtype=np.float64)
    if stay.size < 1:
        raise ValidationError("soft_neighborhood needs at least one index")
    neighbor = (stay[:, None] == stay[None, :]) & (np.abs(note[:, None] - note[None, :]) <= 1)
    gap = np.abs(tau[:, None] - tau[None, :])
    raw = np.where(neighbor, beta / (beta + gap), 0.0)
    weights = raw / raw.sum(axis=1, keepdims=True)
    return NeighborhoodMatrix(raw=raw, weights=weights, indicator=raw != 0.0)


class TrainableTemperature(nn.Module):
    """Positive temperature parameterized as log(1/temperature)."""

    def __init__(self, initial: float = 0.07, max_inverse: float = 100.0):
        super().__init__()
        if initial <= 0:
            raise ConfigError("initial temperature must be > 0")
        self.max_inverse = float(max_inverse)
        self.log_inverse = nn.Parameter(torch.tensor(math.log(1.0 / initial)))

    @classmethod
    def from_config(cls, cfg: LossConfig) -> "TrainableTemperature":
        return cls(initial=cfg.init_temperature, max_inverse=cfg.max_inverse_temperature)

    def inverse(self) -> torch.Tensor:
        return self.log_inverse.exp().clamp(max=self.max_inverse)

    def value(self) -> torch.Tensor:
        return 1.0 / self.inverse()

    def forward(self) -> torch.Tensor:
        return self.value()


def _similarity_logits(h_series, h_text, temperature):
    if h_series.ndim != 2 or h_series.shape != h_text.shape:
        raise ValidationError(
            f"embedding matrices must both be K x c, got {tuple(h_series.shape)} "
            f"and {tuple(h_text.shape)}"
        )
    temperature = torch.as_tensor(temperature, dtype=h_series.dtype, device=h_series.device)
    return (h_series @ h_text.T) / temperature


def loss_aware(
    h_series: torch.Tensor,
    h_text: torch.Tensor,
    neighborhood: NeighborhoodMatrix,
    temperature,
    denominator: str = "exclude_l",
) -> torch.Tensor:
    """Neighborhood-aware loss: neighbor-weighted symmetric log ratios.

    Each ordered pair (l, m) contributes its normalized neighbor weight
    times the log of exp(sim(l, m)) over a sum of exponentiated
    similarities of l to the rest of the batch. With ``exclude_l`` the
    denominator sum skips index l (the verbatim formulation); with
    ``exclude_m`` it skips the numerator's own index instead.
    """
    if denominator not in AWARE_DENOMINATORS:
        raise ConfigError(f"unknown aware denominator {denominator!r}")
    k = h_series.shape[0]
    if k < 2:
        raise ValidationError("loss_aware needs a batch of at least 2 samples")
    logits_st = _similarity_logits(h_series, h_text, temperature)
    logits_ts = logits_st.T
    eye = torch.eye(k, dtype=torch.bool, device=logits_st.device)
    neg_inf = torch.finfo(logits_st.dtype).min

    if denominator == "exclude_l":
        log_den_st = torch.logsumexp(logits_st.masked_fill(eye, neg_inf), dim=1)[:, None]
        log_den_ts = torch.logsumexp(logits_ts.masked_fill(eye, neg_inf), dim=1)[:, None]
    else:
        # denominator excludes the numerator's column m; one masked pass per column
        cols_st = []
        cols_ts = []
        for m in range(k):
            mask = torch.zeros(k, dtype=torch.bool, device=logits_st.device)
            mask[m] = True
            cols_st.append(torch.logsumexp(logits_st.masked_fill(mask, neg_inf), dim=1))
            cols_ts.append(torch.logsumexp(logits_ts.masked_fill(mask, neg_inf), dim=1))
        log_den_st = torch.stack(cols_st, dim=1)
        log_den_ts = torch.stack(cols_ts, dim=1)

    weights = torch.as_tensor(
        neighborhood.weights, dtype=h_series.dtype, device=h_series.device
    )
    ratios = (logits_st - log_den_st) + (logits_ts - log_den_ts)
    return -(weights * ratios).sum() / (2 * k)


def loss_discriminative(
    h_series: torch.Tensor,
    h_text: torch.Tensor,
    indicator: np.ndarray,
    temperature,
) -> torch.Tensor:
    """Neighborhood-discriminative loss: softmax over neighbors only.

    Per sample, the positive similarity is compared against the
    similarities to its indicated neighbors (which always include itself),
    in both directions. Exactly zero when the indicator is the identity.
    """
    k = h_series.shape[0]
    logits_st = _similarity_logits(h_series, h_text, temperature)
    logits_ts = logits_st.T
    mask = torch.as_tensor(np.asarray(indicator), device=logits_st.device, dtype=torch.bool)
    if mask.shape != logits_st.shape:
        raise ValidationError("indicator shape must match the batch")
    if not bool(mask.diagonal().all()):
        raise ValidationError("indicator diagonal must be all true")
    neg_inf = torch.finfo(logits_st.dtype).min
    log_den_st = torch.logsumexp(logits_st.masked_fill(~mask, neg_inf), dim=1)
    log_den_ts = torch.logsumexp(logits_ts.masked_fill(~mask, neg_inf), dim=1)
    diagonal = logits_st.diagonal()
    return -((diagonal - log_den_st) + (diagonal - log_den_ts)).sum() / (2 * k)


def loss_mm_infonce(h_series: torch.Tensor, h_text: torch.Tensor, temperature) -> torch.Tensor:
    """Symmetric CLIP-style contrastive loss with in-batch negatives.

    Cross entropy of the similarity matrix against the diagonal pairing,
    averaged over the series-to-text and text-to-series directions; the
    positive is included in each denominator.
    """
    k = h_series.shape[0]
    if k < 1:
        raise ValidationError("loss_mm_infonce needs a nonempty batch")
    logits = _similarity_logits(h_series, h_text, temperature)
    diagonal = logits.diagonal()
    row_lse = torch.logsumexp(logits, dim=1)
    col_lse = torch.logsumexp(logits, dim=0)
    return ((row_lse - diagonal) + (col_lse - diagonal)).sum() / (2 * k)


def loss_mm_ncl(
    h_series: torch.Tensor,
    h_text: torch.Tensor,
    indices: Sequence,
    cfg: LossConfig,
    temperature,
) -> torch.Tensor:
    """Alpha-weighted combination of the aware and discriminative losses."""
    neighborhood = soft_neighborhood(indices, cfg.beta)
    aware = loss_aware(
        h_series, h_text, neighborhood, temperature, denominator=cfg.aware_denominator
    )
    if cfg.alpha == 1.0:
        return aware
    discriminative = loss_discriminative(h_series, h_text, neighborhood.indicator, temperature)
    return cfg.alpha * aware + (1.0 - cfg.alpha) * discriminative
