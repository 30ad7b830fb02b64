"""Task labeling and evaluation-window extraction.

In-hospital mortality: one instance per stay of at least 48 hours (stays
where death occurred before hour 48 are excluded), labeled by in-hospital
death, with the full first 48 hours as input.

Decompensation: one instance per hour of the stay from ``first_eval_hour``
until discharge or death, labeled 1 when death occurs within the horizon.
Inputs are fixed-width windows ending at the instance hour, so features
never see anything after it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..corpus.types import PatientStay
from ..sampling import cut_window

MORTALITY_INPUT_HOURS = 48
DECOMPENSATION_HORIZON_HOURS = 24
FIRST_EVAL_HOUR = 4


@dataclass(frozen=True)
class TaskInstance:
    """One labeled prediction point: window ends at end_hour (exclusive)."""

    stay_id: str
    end_hour: int
    window_hours: Optional[int]  # None: the window spans from admission
    label: int


def label_mortality(
    stay: PatientStay, input_hours: int = MORTALITY_INPUT_HOURS
) -> Optional[TaskInstance]:
    if stay.stay_length < input_hours:
        return None
    if stay.death_time is not None and stay.death_time < input_hours:
        return None
    return TaskInstance(
        stay_id=stay.stay_id,
        end_hour=input_hours,
        window_hours=None,
        label=int(stay.died_in_hospital),
    )


def label_decompensation(
    stay: PatientStay,
    window_hours: int,
    first_eval_hour: int = FIRST_EVAL_HOUR,
    horizon_hours: int = DECOMPENSATION_HORIZON_HOURS,
) -> list[TaskInstance]:
    end_limit = stay.stay_length
    if stay.death_time is not None:
        end_limit = min(end_limit, int(math.floor(stay.death_time)))
    instances = []
    for hour in range(first_eval_hour, end_limit):
        label = int(
            stay.death_time is not None and stay.death_time - hour <= horizon_hours
        )
        instances.append(
            TaskInstance(
                stay_id=stay.stay_id,
                end_hour=hour,
                window_hours=window_hours,
                label=label,
            )
        )
    return instances


def build_mortality_dataset(
    stays: Sequence[PatientStay], input_hours: int = MORTALITY_INPUT_HOURS
) -> tuple[np.ndarray, np.ndarray, list[TaskInstance]]:
    """Windows (N, input_hours, d_v), labels, and instances for eligible stays."""
    windows = []
    labels = []
    instances = []
    for stay in stays:
        instance = label_mortality(stay, input_hours)
        if instance is None:
            continue
        windows.append(stay.vitals.values[:input_hours])
        labels.append(instance.label)
        instances.append(instance)
    if not windows:
        d_v = stays[0].vitals.num_variables if stays else 0
        return np.zeros((0, input_hours, d_v), np.float32), np.zeros(0, int), []
    return (
        np.stack(windows).astype(np.float32),
        np.asarray(labels, dtype=int),
        instances,
    )


def build_decompensation_dataset(
    stays: Sequence[PatientStay],
    window_hours: int,
    first_eval_hour: int = FIRST_EVAL_HOUR,
    horizon_hours: int = DECOMPENSATION_HORIZON_HOURS,
) -> tuple[np.ndarray, np.ndarray, list[TaskInstance]]:
    """Hourly windows (N, window_hours, d_v), labels, and instances."""
    windows = []
    labels = []
    instances = []
    for stay in stays:
        for instance in label_decompensation(
            stay, window_hours, first_eval_hour, horizon_hours
        ):
            windows.append(cut_window(stay.vitals, float(instance.end_hour), window_hours))
            labels.append(instance.label)
            instances.append(instance)
    if not windows:
        d_v = stays[0].vitals.num_variables if stays else 0
        return np.zeros((0, window_hours, d_v), np.float32), np.zeros(0, int), []
    return (
        np.stack(windows).astype(np.float32),
        np.asarray(labels, dtype=int),
        instances,
    )
