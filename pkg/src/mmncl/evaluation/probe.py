"""Linear probing of frozen sequence representations.

The probe is an L2-regularized logistic regression on pre-projection
encoder outputs, fitted with L-BFGS on the analytic objective:

    mean logistic loss + 0.5 * l2 * ||w||^2   (bias unpenalized)

The mean convention makes the fit invariant to duplicating the dataset.
Optimization starts from zero weights, so the result is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from scipy.optimize import minimize
from scipy.special import expit

from ..encoders import MultiModalEncoder
from ..errors import ValidationError


@dataclass(frozen=True)
class ProbeModel:
    weights: np.ndarray
    bias: float

    def decision(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights + self.bias

    def scores(self, features: np.ndarray) -> np.ndarray:
        return expit(self.decision(features))


def _objective(packed, features, targets, l2):
    weights, bias = packed[:-1], packed[-1]
    logits = features @ weights + bias
    # log(1 + exp(-y * z)) via the stable softplus form
    margins = targets * logits
    losses = np.logaddexp(0.0, -margins)
    value = losses.mean() + 0.5 * l2 * weights @ weights
    grad_logits = -targets * expit(-margins) / features.shape[0]
    grad_w = features.T @ grad_logits + l2 * weights
    grad_b = grad_logits.sum()
    return value, np.concatenate([grad_w, [grad_b]])


def fit_linear_probe(
    features: np.ndarray,
    labels: np.ndarray,
    l2: float = 1e-4,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    seed: int = 0,
) -> ProbeModel:
    """Fit the probe to convergence (gradient norm <= tol or max_iter)."""
    del seed  # the zero-initialized convex fit is already deterministic
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels).reshape(-1).astype(int)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ValidationError("features must be (n, d) aligned with labels")
    if features.shape[0] < 2:
        raise ValidationError("probe fitting needs at least 2 samples")
    if labels.min() == labels.max():
        raise ValidationError("probe fitting needs both classes present")
    targets = 2.0 * labels - 1.0  # {0,1} -> {-1,+1}
    start = np.zeros(features.shape[1] + 1)
    result = minimize(
        _objective,
        start,
        args=(features, targets, l2),
        jac=True,
        method="L-BFGS-B",
        options={"gtol": tol, "maxiter": max_iter, "ftol": 0.0},
    )
    packed = result.x
    return ProbeModel(weights=packed[:-1], bias=float(packed[-1]))


def extract_series_features(
    model: MultiModalEncoder, windows: np.ndarray, batch_size: int = 1024
) -> np.ndarray:
    """Frozen pre-projection encoder outputs for raw window arrays."""
    model.eval()
    outputs = []
    with torch.no_grad():
        for start in range(0, len(windows), batch_size):
            chunk = torch.as_tensor(
                windows[start : start + batch_size], dtype=model.dtype, device=model.device
            )
            outputs.append(model.series_features(chunk).cpu().numpy())
    if not outputs:
        return np.zeros((0, model.series_cfg.hidden_dim))
    return np.concatenate(outputs).astype(np.float64)
