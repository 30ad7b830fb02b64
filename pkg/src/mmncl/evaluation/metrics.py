"""Ranking metrics computed from first principles.

auroc is the exact Mann-Whitney U statistic with the tie-counts-half
convention; auprc is the area under the precision-recall step curve,
summing precision at each recall change with no interpolation.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from ..errors import ValidationError


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1).astype(int)
    if scores.shape != labels.shape:
        raise ValidationError("scores and labels must have equal length")
    if scores.size == 0:
        raise ValidationError("metrics need at least one sample")
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores contain NaN or Inf")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValidationError("labels must be binary")
    if labels.min() == labels.max():
        raise ValidationError("both classes must be present")
    return scores, labels


def auroc(scores, labels) -> float:
    """P(score of a random positive > random negative), ties counting 1/2."""
    scores, labels = _check(scores, labels)
    positives = labels == 1
    n_pos = int(positives.sum())
    n_neg = labels.size - n_pos
    ranks = rankdata(scores)  # average ranks on ties
    u_statistic = ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))


def auprc(scores, labels) -> float:
    """Area under the precision-recall step curve over distinct-score thresholds."""
    scores, labels = _check(scores, labels)
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    cum_tp = np.cumsum(sorted_labels)
    n_pos = cum_tp[-1]
    predicted = np.arange(1, scores.size + 1)
    # thresholds sit at the last element of each group of equal scores
    boundary = np.ones(scores.size, dtype=bool)
    boundary[:-1] = sorted_scores[:-1] != sorted_scores[1:]
    recall = cum_tp[boundary] / n_pos
    precision = cum_tp[boundary] / predicted[boundary]
    previous_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - previous_recall) * precision))
