"""Standard scaling and imputation of vital-sign matrices.

The pipeline per variable is: forward-fill each missing hour from the last
observed value, standard-scale, then set hours with no prior observation to
exactly 0 (the population mean in scaled space).
"""

from __future__ import annotations

import warnings

import numpy as np

from .types import PatientStay, Scaler, VitalsSeries


def fit_scaler(stays, floor: float = Scaler.STD_FLOOR) -> Scaler:
    """Fit per-variable mean/std over observed (masked) entries only.

    Uses the population std convention. Variables with zero observed entries
    fall back to mean 0 / std 1 with a warning; constant variables get the
    std floor.
    """
    if not stays:
        raise ValueError("cannot fit a scaler on an empty list of stays")
    num_variables = stays[0].vitals.num_variables
    count = np.zeros(num_variables)
    total = np.zeros(num_variables)
    total_sq = np.zeros(num_variables)
    for stay in stays:
        values = stay.vitals.values
        mask = stay.vitals.present_mask
        observed = np.where(mask, values, 0.0)
        count += mask.sum(axis=0)
        total += observed.sum(axis=0)
        total_sq += (observed * observed).sum(axis=0)

    mean = np.zeros(num_variables)
    std = np.ones(num_variables)
    seen = count > 0
    if not np.all(seen):
        missing = np.flatnonzero(~seen)
        warnings.warn(
            f"variables {missing.tolist()} have no observed entries; "
            "falling back to mean=0, std=1",
            stacklevel=2,
        )
    mean[seen] = total[seen] / count[seen]
    variance = np.zeros(num_variables)
    variance[seen] = total_sq[seen] / count[seen] - mean[seen] ** 2
    std[seen] = np.sqrt(np.maximum(variance[seen], 0.0))
    std = np.maximum(std, floor)
    return Scaler(mean=mean, std=std)


def _forward_fill_indices(mask: np.ndarray) -> np.ndarray:
    """Per column, the row index of the last observed entry at or before t (-1 if none)."""
    num_hours = mask.shape[0]
    row_numbers = np.arange(num_hours)[:, None]
    observed_at = np.where(mask, row_numbers, -1)
    return np.maximum.accumulate(observed_at, axis=0)


def preprocess(stay: PatientStay, scaler: Scaler) -> PatientStay:
    """Return a copy of ``stay`` with imputed, standard-scaled vitals.

    Total on valid inputs: output values are finite everywhere, and entries
    with no prior observation are exactly 0.0.
    """
    values = stay.vitals.values
    mask = stay.vitals.present_mask
    last_observed = _forward_fill_indices(mask)
    columns = np.arange(values.shape[1])[None, :]
    filled = values[np.maximum(last_observed, 0), columns]
    scaled = (filled - scaler.mean[None, :]) / scaler.std[None, :]
    out = np.where(last_observed >= 0, scaled, 0.0)
    return PatientStay(
        stay_id=stay.stay_id,
        vitals=VitalsSeries(values=out, present_mask=mask),
        notes=stay.notes,
        died_in_hospital=stay.died_in_hospital,
        death_time=stay.death_time,
        stay_length=stay.stay_length,
    )
