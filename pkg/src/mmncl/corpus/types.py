"""Core data model: vitals series, clinical notes, patient stays, scaler.

All types are immutable after construction. Instances validate their own
invariants in ``__post_init__`` so that every construction path (ingestion,
synthesis, preprocessing) produces consistent objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ValidationError

#: The ten admissible clinical note categories.
NOTE_CATEGORIES: tuple[str, ...] = (
    "Discharge summary",
    "ECG",
    "Echo",
    "General",
    "Nursing",
    "Nursing/other",
    "Nutrition",
    "Physician",
    "Radiology",
    "Respiratory",
)

_NOTE_CATEGORY_SET = frozenset(NOTE_CATEGORIES)


@dataclass(frozen=True, eq=False)
class VitalsSeries:
    """Hourly vital-sign matrix with an observation mask.

    ``values`` is T x d_v; missing raw measurements are NaN until
    preprocessing fills them. ``present_mask`` is True exactly where a raw
    measurement exists and keeps that meaning through preprocessing.
    """

    values: np.ndarray
    present_mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.present_mask, dtype=bool)
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValidationError(
                f"vitals values must be a T x d_v matrix with T >= 1, got shape {values.shape}"
            )
        if mask.shape != values.shape:
            raise ValidationError(
                f"present_mask shape {mask.shape} does not match values shape {values.shape}"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "present_mask", mask)

    @property
    def num_hours(self) -> int:
        return self.values.shape[0]

    @property
    def num_variables(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, VitalsSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values, equal_nan=True) and np.array_equal(
            self.present_mask, other.present_mask
        )


@dataclass(frozen=True)
class ClinicalNote:
    """One clinical note, ordered within its stay by ``note_index``."""

    stay_id: str
    note_index: int
    chart_time: float
    category: str
    text: str

    def __post_init__(self):
        if self.category not in _NOTE_CATEGORY_SET:
            raise ValidationError(
                f"unknown note category {self.category!r} for stay {self.stay_id!r}; "
                f"expected one of {sorted(_NOTE_CATEGORY_SET)}"
            )
        if not math.isfinite(self.chart_time) or self.chart_time < 0:
            raise ValidationError(
                f"note chart_time must be a finite value >= 0, got {self.chart_time!r} "
                f"(stay {self.stay_id!r})"
            )
        if self.note_index < 0:
            raise ValidationError(f"note_index must be >= 0, got {self.note_index}")


@dataclass(frozen=True)
class PatientStay:
    """One ICU stay: hourly vitals, ordered sparse notes, outcome metadata."""

    stay_id: str
    vitals: VitalsSeries
    notes: tuple[ClinicalNote, ...] = field(default=())
    died_in_hospital: bool = False
    death_time: Optional[float] = None
    stay_length: int = 0

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(self.notes))
        if self.died_in_hospital != (self.death_time is not None):
            raise ValidationError(
                f"stay {self.stay_id!r}: death_time must be present iff died_in_hospital"
            )
        if self.death_time is not None and self.death_time > self.stay_length:
            raise ValidationError(
                f"stay {self.stay_id!r}: death_time {self.death_time} exceeds "
                f"stay_length {self.stay_length}"
            )
        prev_time = -math.inf
        for position, note in enumerate(self.notes):
            if note.stay_id != self.stay_id:
                raise ValidationError(
                    f"stay {self.stay_id!r} holds a note for stay {note.stay_id!r}"
                )
            if note.note_index != position:
                raise ValidationError(
                    f"stay {self.stay_id!r}: note_index values must be consecutive from 0, "
                    f"found {note.note_index} at position {position}"
                )
            if note.chart_time < prev_time:
                raise ValidationError(
                    f"stay {self.stay_id!r}: note chart_times must be nondecreasing"
                )
            if note.chart_time > self.stay_length:
                raise ValidationError(
                    f"stay {self.stay_id!r}: note at {note.chart_time}h is after "
                    f"stay_length {self.stay_length}h"
                )
            prev_time = note.chart_time

    @property
    def num_hours(self) -> int:
        return self.vitals.num_hours


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-variable standardization statistics fitted on observed entries."""

    mean: np.ndarray
    std: np.ndarray

    #: lower bound applied to every std entry
    STD_FLOOR = 1e-6

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if mean.shape != std.shape:
            raise ValidationError("scaler mean and std must have matching length")
        if np.any(std < self.STD_FLOOR):
            raise ValidationError(f"scaler std entries must be >= {self.STD_FLOOR}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def identity(cls, num_variables: int) -> "Scaler":
        return cls(mean=np.zeros(num_variables), std=np.ones(num_variables))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scaler):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.std, other.std)


def sort_notes(notes, stay_id: str) -> tuple[ClinicalNote, ...]:
    """Order notes by chart_time (stable: ties keep input order) and reindex."""
    ordered = sorted(notes, key=lambda n: n.chart_time)
    return tuple(
        ClinicalNote(
            stay_id=stay_id,
            note_index=position,
            chart_time=note.chart_time,
            category=note.category,
            text=note.text,
        )
        for position, note in enumerate(ordered)
    )
