"""Zero-shot classification against prompt-ensemble prototypes.

Each prompt is embedded through the full text pathway and normalized; the
class prototype is the plain mean of those unit vectors (not re-normalized).
A window's positive-class probability is the softmax over its similarities
to the two prototypes, at temperature 1 unless the model's learned
temperature is explicitly requested.
"""

from __future__ import annotations

import numpy as np
import torch

from ..encoders import MultiModalEncoder
from ..errors import ValidationError
from .prompts import PromptEnsemble


def class_prototypes(
    model: MultiModalEncoder, ensemble: PromptEnsemble
) -> tuple[torch.Tensor, torch.Tensor]:
    if not ensemble.positive or not ensemble.negative:
        raise ValidationError("prompt ensemble lists must be nonempty")
    with torch.no_grad():
        positive = model.embed_texts(list(ensemble.positive)).mean(dim=0)
        negative = model.embed_texts(list(ensemble.negative)).mean(dim=0)
    return positive, negative


def zero_shot_scores(
    h_series: torch.Tensor,
    positive_prototype: torch.Tensor,
    negative_prototype: torch.Tensor,
    temperature: float = 1.0,
) -> torch.Tensor:
    """Positive-class probabilities for unit-norm series embeddings (N, c) or (c,)."""
    squeeze = h_series.ndim == 1
    if squeeze:
        h_series = h_series[None]
    logits = torch.stack(
        [h_series @ positive_prototype, h_series @ negative_prototype], dim=1
    )
    probabilities = torch.softmax(logits / temperature, dim=1)[:, 0]
    return probabilities[0] if squeeze else probabilities


def score_windows(
    model: MultiModalEncoder,
    windows: np.ndarray,
    ensemble: PromptEnsemble,
    batch_size: int = 1024,
    use_learned_temperature: bool = False,
) -> np.ndarray:
    """Zero-shot positive probabilities for raw window arrays (N, T, d_v)."""
    model.eval()
    positive, negative = class_prototypes(model, ensemble)
    temperature = float(model.temperature.value()) if use_learned_temperature else 1.0
    scores = []
    with torch.no_grad():
        for start in range(0, len(windows), batch_size):
            chunk = torch.as_tensor(
                windows[start : start + batch_size], dtype=model.dtype, device=model.device
            )
            h_series = model.embed_series(chunk)
            scores.append(
                zero_shot_scores(h_series, positive, negative, temperature).cpu().numpy()
            )
    return np.concatenate(scores) if scores else np.zeros(0)
