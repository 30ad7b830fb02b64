"""Contrastive batch construction.

A training sample is an index tuple (stay index, note ordinal, target time):
a target time is drawn uniformly in a category-dependent interval around the
note's chart time, and the time-series window paired with the note is the
slice of hourly vitals ending at that target time.

Batches group stays and take short runs of consecutive notes per stay so
that same-stay adjacent pairs (the nontrivial neighborhoods) actually occur
at desk-scale batch sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .corpus.types import ClinicalNote, PatientStay, VitalsSeries
from .errors import BatchAssemblyError, ConfigError


@dataclass(frozen=True)
class TargetTimeConfig:
    """Uniform sampling interval around a note: [t - before(category), t + after]."""

    hours_after: float = 3.0
    hours_before_default: float = 3.0
    hours_before_overrides: Mapping[str, float] = field(
        default_factory=lambda: {"Discharge summary": 10.0, "Radiology": 30.0}
    )

    def __post_init__(self):
        if self.hours_after < 0 or self.hours_before_default < 0:
            raise ConfigError("target-time offsets must be >= 0")
        for category, hours in self.hours_before_overrides.items():
            if hours < 0:
                raise ConfigError(f"hours before {category!r} notes must be >= 0")

    def hours_before(self, category: str) -> float:
        return self.hours_before_overrides.get(category, self.hours_before_default)


@dataclass(frozen=True)
class BatchIndex:
    """Identifies one contrastive sample: (stay, note ordinal, target time)."""

    stay_index: int
    note_index: int
    target_time: float


@dataclass(frozen=True)
class WindowBatch:
    windows: np.ndarray  # (K, w, d_v)
    note_texts: tuple[str, ...]
    indices: tuple[BatchIndex, ...]

    def __post_init__(self):
        if not (len(self.windows) == len(self.note_texts) == len(self.indices)):
            raise ConfigError("batch fields must have matching length")

    def __len__(self) -> int:
        return len(self.indices)


def draw_target_time(
    note: ClinicalNote, stay_length: float, cfg: TargetTimeConfig, rng: np.random.Generator
) -> float:
    """Uniform draw in the note's interval, clamped to the stay bounds [0, L]."""
    low = note.chart_time - cfg.hours_before(note.category)
    high = note.chart_time + cfg.hours_after
    tau = rng.uniform(low, high) if high > low else low
    return min(max(tau, 0.0), float(stay_length))


def cut_window(vitals: VitalsSeries, target_time: float, width: int) -> np.ndarray:
    """Slice of hourly rows ending at ceil(target_time); earlier-than-admission rows are zero.

    The ceiling keeps the window causal: no row strictly after the target
    time is included.
    """
    if width < 1:
        raise ConfigError(f"window width must be >= 1, got {width}")
    values = vitals.values
    end = min(int(math.ceil(target_time)), values.shape[0])
    start = end - width
    window = np.zeros((width, values.shape[1]), dtype=values.dtype)
    lo = max(start, 0)
    if lo < end:
        window[lo - start : lo - start + (end - lo)] = values[lo:end]
    return window


def eligible_notes(
    stay: PatientStay, allowed_categories: frozenset[str] | None
) -> tuple[ClinicalNote, ...]:
    """The stay's notes restricted to allowed categories, in chart-time order.

    Note ordinals used for neighborhood adjacency are positions in this
    filtered sequence; with no category filter they equal the stored
    note_index values.
    """
    if allowed_categories is None:
        return stay.notes
    return tuple(note for note in stay.notes if note.category in allowed_categories)


def _materialize(
    stays: Sequence[PatientStay],
    picks: Sequence[tuple[int, int, ClinicalNote]],
    width: int,
    cfg: TargetTimeConfig,
    rng: np.random.Generator,
) -> WindowBatch:
    windows = []
    texts = []
    indices = []
    for stay_index, ordinal, note in picks:
        stay = stays[stay_index]
        tau = draw_target_time(note, stay.stay_length, cfg, rng)
        windows.append(cut_window(stay.vitals, tau, width))
        texts.append(note.text)
        indices.append(BatchIndex(stay_index=stay_index, note_index=ordinal, target_time=tau))
    return WindowBatch(
        windows=np.stack(windows).astype(np.float32),
        note_texts=tuple(texts),
        indices=tuple(indices),
    )


def assemble_batch(
    stays: Sequence[PatientStay],
    batch_size: int,
    width: int,
    cfg: TargetTimeConfig,
    allowed_categories: frozenset[str] | None,
    rng: np.random.Generator,
    notes_per_stay: int = 4,
) -> WindowBatch:
    """Sample up to ``batch_size`` distinct notes as (stay, run-of-consecutive-notes) draws.

    Repeatedly picks a stay with unused eligible notes, then a run of up to
    ``notes_per_stay`` consecutive unused notes from it. Returns a partial
    batch when fewer than ``batch_size`` eligible notes exist; raises if
    fewer than 2 exist.
    """
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    if notes_per_stay < 1:
        raise ConfigError("notes_per_stay must be >= 1")
    per_stay = [eligible_notes(stay, allowed_categories) for stay in stays]
    available = sum(len(notes) for notes in per_stay)
    if available < 2:
        raise BatchAssemblyError(
            f"need at least 2 eligible notes to form a batch, found {available}"
        )
    target = min(batch_size, available)

    unused: dict[int, set[int]] = {
        i: set(range(len(notes))) for i, notes in enumerate(per_stay) if notes
    }
    picks: list[tuple[int, int, ClinicalNote]] = []
    while len(picks) < target:
        candidates = sorted(unused)
        stay_index = candidates[rng.integers(len(candidates))]
        ordinals = sorted(unused[stay_index])
        start = ordinals[rng.integers(len(ordinals))]
        run = [start]
        while (
            len(run) < notes_per_stay
            and len(picks) + len(run) < target
            and run[-1] + 1 in unused[stay_index]
        ):
            run.append(run[-1] + 1)
        for ordinal in run:
            picks.append((stay_index, ordinal, per_stay[stay_index][ordinal]))
            unused[stay_index].discard(ordinal)
        if not unused[stay_index]:
            del unused[stay_index]
    return _materialize(stays, picks, width, cfg, rng)


def iter_epoch_batches(
    stays: Sequence[PatientStay],
    batch_size: int,
    width: int,
    cfg: TargetTimeConfig,
    allowed_categories: frozenset[str] | None,
    rng: np.random.Generator,
    notes_per_stay: int = 4,
) -> Iterator[WindowBatch]:
    """One epoch: every eligible note exactly once, in shuffled runs.

    Each stay's eligible notes are chunked into consecutive runs of
    ``notes_per_stay`` (random phase per epoch), runs are shuffled across
    stays, and packed into batches of about ``batch_size`` notes. A final
    single-note remainder is dropped (a contrastive batch needs >= 2).
    """
    if batch_size < 2:
        raise ConfigError("batch_size must be >= 2")
    per_stay = [eligible_notes(stay, allowed_categories) for stay in stays]
    if sum(len(notes) for notes in per_stay) < 2:
        raise BatchAssemblyError("fewer than 2 eligible notes in the dataset")

    runs: list[list[tuple[int, int, ClinicalNote]]] = []
    for stay_index, notes in enumerate(per_stay):
        if not notes:
            continue
        phase = int(rng.integers(notes_per_stay))
        edges = [0] + list(range(phase, len(notes), notes_per_stay)) + [len(notes)]
        edges = sorted(set(edge for edge in edges if 0 <= edge <= len(notes)))
        for lo, hi in zip(edges[:-1], edges[1:]):
            runs.append([(stay_index, k, notes[k]) for k in range(lo, hi)])
    order = rng.permutation(len(runs))

    pending: list[tuple[int, int, ClinicalNote]] = []
    for run_index in order:
        pending.extend(runs[run_index])
        if len(pending) >= batch_size:
            yield _materialize(stays, pending[:batch_size], width, cfg, rng)
            pending = pending[batch_size:]
    while len(pending) >= 2:
        yield _materialize(stays, pending[:batch_size], width, cfg, rng)
        pending = pending[batch_size:]
