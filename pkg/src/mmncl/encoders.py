"""Encoders and projections into the shared embedding space.

The time-series side is a GRU whose last top-layer hidden state is the
sequence representation. The text side is a frozen, deterministic
feature-hashing bag-of-words provider followed by a trainable MLP whose
output is concatenated with the provider output. Both sides are projected
by bias-free linear maps into a shared space and L2-normalized.

The provider is pluggable: anything with a ``dim`` attribute and an
``embed_batch(texts) -> (B, dim) float array`` method can replace the
hashing featurizer without touching the rest of the model.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn

from .errors import ConfigError, DegenerateEmbeddingError, ShapeError
from .objective import LossConfig, TrainableTemperature

CHECKPOINT_FORMAT = "mmncl-checkpoint/1"
_TOKEN_PATTERN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class SeriesEncoderConfig:
    input_dim: int
    hidden_dim: int = 256
    depth: int = 2
    dropout: float = 0.1

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_dim < 1 or self.depth < 1:
            raise ConfigError("series encoder dims and depth must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")


@dataclass(frozen=True)
class TextEncoderConfig:
    provider_dim: int = 128
    mlp_hidden_dim: int = 4096
    mlp_output_dim: Optional[int] = None  # defaults to provider_dim

    def __post_init__(self):
        if self.provider_dim < 1 or self.mlp_hidden_dim < 1:
            raise ConfigError("text encoder dims must be >= 1")
        if self.mlp_output_dim is not None and self.mlp_output_dim < 1:
            raise ConfigError("mlp_output_dim must be >= 1")

    @property
    def mlp_out(self) -> int:
        return self.mlp_output_dim if self.mlp_output_dim is not None else self.provider_dim

    @property
    def output_dim(self) -> int:
        return self.mlp_out + self.provider_dim


def tokenize(text: str) -> list[str]:
    return _TOKEN_PATTERN.findall(text.lower())


class HashingTextEmbedder:
    """Frozen signed feature-hashing bag of words.

    Tokens are lowercased alphanumeric runs; each token is hashed (stable
    across runs and platforms) to a bucket and a sign, accumulated, and the
    result is L2-normalized. The empty text maps to the zero vector.
    """

    def __init__(self, dim: int = 128):
        if dim < 1:
            raise ConfigError("provider dim must be >= 1")
        self.dim = dim

    def _token_slot(self, token: str) -> tuple[int, float]:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "little")
        sign = 1.0 if value & (1 << 63) else -1.0
        return value % self.dim, sign

    def embed(self, text: str) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        for token in tokenize(text):
            slot, sign = self._token_slot(token)
            out[slot] += sign
        norm = np.linalg.norm(out)
        if norm > 0:
            out /= norm
        return out

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.embed(text) for text in texts]) if texts else np.zeros(
            (0, self.dim)
        )


class TimeSeriesEncoder(nn.Module):
    """GRU over hourly windows; returns the final hidden state of the top layer."""

    def __init__(self, cfg: SeriesEncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.gru = nn.GRU(
            input_size=cfg.input_dim,
            hidden_size=cfg.hidden_dim,
            num_layers=cfg.depth,
            batch_first=True,
            dropout=cfg.dropout if cfg.depth > 1 else 0.0,
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        squeeze = x.ndim == 2
        if squeeze:
            x = x[None]
        if x.ndim != 3 or x.shape[-1] != self.cfg.input_dim:
            raise ShapeError(
                f"expected input (B, T, {self.cfg.input_dim}), got {tuple(x.shape)}"
            )
        if x.shape[1] < 1:
            raise ShapeError("sequence length must be >= 1")
        _, hidden = self.gru(x)
        out = hidden[-1]
        return out[0] if squeeze else out


class TextEncoder(nn.Module):
    """Trainable MLP over provider features, concatenated with the features."""

    def __init__(self, cfg: TextEncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.mlp = nn.Sequential(
            nn.Linear(cfg.provider_dim, cfg.mlp_hidden_dim),
            nn.ReLU(),
            nn.Linear(cfg.mlp_hidden_dim, cfg.mlp_out),
        )

    def forward(self, provider_features: torch.Tensor) -> torch.Tensor:
        squeeze = provider_features.ndim == 1
        if squeeze:
            provider_features = provider_features[None]
        if provider_features.shape[-1] != self.cfg.provider_dim:
            raise ShapeError(
                f"expected provider features of dim {self.cfg.provider_dim}, "
                f"got {tuple(provider_features.shape)}"
            )
        out = torch.cat([self.mlp(provider_features), provider_features], dim=-1)
        return out[0] if squeeze else out


def normalize_rows(x: torch.Tensor, min_norm: float = 1e-12) -> torch.Tensor:
    """L2-normalize rows, raising on (near-)zero vectors instead of dividing by ~0."""
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None]
    norms = torch.linalg.vector_norm(x, dim=-1, keepdim=True)
    if bool((norms < min_norm).any()):
        raise DegenerateEmbeddingError(
            f"projection produced a vector with norm < {min_norm}; dead parameters?"
        )
    out = x / norms
    return out[0] if squeeze else out


@dataclass(frozen=True)
class EmbeddingPair:
    """Unit-norm series/text embeddings in the shared space."""

    series: torch.Tensor
    text: torch.Tensor


def project_and_normalize(
    series_repr: torch.Tensor,
    text_repr: torch.Tensor,
    series_projection: nn.Linear,
    text_projection: nn.Linear,
) -> EmbeddingPair:
    return EmbeddingPair(
        series=normalize_rows(series_projection(series_repr)),
        text=normalize_rows(text_projection(text_repr)),
    )


class MultiModalEncoder(nn.Module):
    """Both encoder towers, their projections, and the trainable temperature."""

    def __init__(
        self,
        series_cfg: SeriesEncoderConfig,
        text_cfg: TextEncoderConfig,
        shared_dim: int = 128,
        loss_cfg: LossConfig | None = None,
        provider=None,
    ):
        super().__init__()
        if shared_dim < 1:
            raise ConfigError("shared_dim must be >= 1")
        loss_cfg = loss_cfg or LossConfig()
        self.series_cfg = series_cfg
        self.text_cfg = text_cfg
        self.shared_dim = shared_dim
        self.provider = provider if provider is not None else HashingTextEmbedder(
            text_cfg.provider_dim
        )
        if self.provider.dim != text_cfg.provider_dim:
            raise ConfigError(
                f"provider dim {self.provider.dim} != configured {text_cfg.provider_dim}"
            )
        self.series_encoder = TimeSeriesEncoder(series_cfg)
        self.text_encoder = TextEncoder(text_cfg)
        self.series_projection = nn.Linear(series_cfg.hidden_dim, shared_dim, bias=False)
        self.text_projection = nn.Linear(text_cfg.output_dim, shared_dim, bias=False)
        self.temperature = TrainableTemperature.from_config(loss_cfg)

    @property
    def dtype(self) -> torch.dtype:
        return self.series_projection.weight.dtype

    @property
    def device(self) -> torch.device:
        return self.series_projection.weight.device

    def series_features(self, windows: torch.Tensor) -> torch.Tensor:
        """Pre-projection sequence representations (linear-probe features)."""
        return self.series_encoder(windows)

    def provider_features(self, texts: Sequence[str]) -> torch.Tensor:
        return torch.as_tensor(
            self.provider.embed_batch(list(texts)), dtype=self.dtype, device=self.device
        )

    def text_features(self, texts: Sequence[str]) -> torch.Tensor:
        return self.text_encoder(self.provider_features(texts))

    def embed_series(self, windows: torch.Tensor) -> torch.Tensor:
        return normalize_rows(self.series_projection(self.series_features(windows)))

    def embed_texts(self, texts: Sequence[str]) -> torch.Tensor:
        return normalize_rows(self.text_projection(self.text_features(texts)))

    def embed_pair(self, windows: torch.Tensor, texts: Sequence[str]) -> EmbeddingPair:
        return project_and_normalize(
            self.series_features(windows),
            self.text_features(texts),
            self.series_projection,
            self.text_projection,
        )


def build_encoder(
    input_dim: int,
    hidden_dim: int = 256,
    depth: int = 2,
    dropout: float = 0.1,
    provider_dim: int = 128,
    mlp_hidden_dim: int = 4096,
    mlp_output_dim: Optional[int] = None,
    shared_dim: int = 128,
    loss_cfg: LossConfig | None = None,
    seed: Optional[int] = None,
) -> MultiModalEncoder:
    """Construct a seeded MultiModalEncoder from flat settings."""
    if seed is not None:
        torch.manual_seed(seed)
    return MultiModalEncoder(
        SeriesEncoderConfig(
            input_dim=input_dim, hidden_dim=hidden_dim, depth=depth, dropout=dropout
        ),
        TextEncoderConfig(
            provider_dim=provider_dim,
            mlp_hidden_dim=mlp_hidden_dim,
            mlp_output_dim=mlp_output_dim,
        ),
        shared_dim=shared_dim,
        loss_cfg=loss_cfg,
    )


def save_checkpoint(path, model: MultiModalEncoder, config: dict, manifest_digest: str | None):
    """Single-archive checkpoint: parameters, builder args, run config, data hash."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "model_args": {
            "input_dim": model.series_cfg.input_dim,
            "hidden_dim": model.series_cfg.hidden_dim,
            "depth": model.series_cfg.depth,
            "dropout": model.series_cfg.dropout,
            "provider_dim": model.text_cfg.provider_dim,
            "mlp_hidden_dim": model.text_cfg.mlp_hidden_dim,
            "mlp_output_dim": model.text_cfg.mlp_output_dim,
            "shared_dim": model.shared_dim,
            "max_inverse_temperature": model.temperature.max_inverse,
        },
        "state_dict": model.state_dict(),
        "config": config,
        "manifest_hash": manifest_digest,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path) -> tuple[MultiModalEncoder, dict, str | None]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(
            f"unsupported checkpoint format {payload.get('format')!r} in {path}"
        )
    args = payload["model_args"]
    model = MultiModalEncoder(
        SeriesEncoderConfig(
            input_dim=args["input_dim"],
            hidden_dim=args["hidden_dim"],
            depth=args["depth"],
            dropout=args["dropout"],
        ),
        TextEncoderConfig(
            provider_dim=args["provider_dim"],
            mlp_hidden_dim=args["mlp_hidden_dim"],
            mlp_output_dim=args["mlp_output_dim"],
        ),
        shared_dim=args["shared_dim"],
        loss_cfg=LossConfig(max_inverse_temperature=args["max_inverse_temperature"]),
    )
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload.get("config", {}), payload.get("manifest_hash")
