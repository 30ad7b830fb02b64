"""Dataset directory layout, writers, and validating ingestion.

Layout under a dataset root::

    manifest.json                 dataset-level metadata
    <split>/labels.csv            stay_id, died_in_hospital, death_time, stay_length
    <split>/notes.jsonl           one JSON record per note
    <split>/vitals/<stay_id>.csv  Hours column + one column per variable; empty cell = missing

Vitals tables must cover hours 0..stay_length-1 consecutively. Floats are
written with ``repr`` so that ingest(write(dataset)) reproduces the dataset
exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..errors import IngestionError, ParseError, ValidationError
from .types import ClinicalNote, PatientStay, VitalsSeries, sort_notes

MANIFEST_NAME = "manifest.json"
DATASET_FORMAT = "mmncl-dataset/1"


def _format_cell(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def write_split(root: Path, split: str, stays: Sequence[PatientStay], names: Sequence[str]):
    split_dir = Path(root) / split
    vitals_dir = split_dir / "vitals"
    vitals_dir.mkdir(parents=True, exist_ok=True)

    with open(split_dir / "labels.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["stay_id", "died_in_hospital", "death_time", "stay_length"])
        for stay in stays:
            writer.writerow(
                [
                    stay.stay_id,
                    int(stay.died_in_hospital),
                    "" if stay.death_time is None else repr(float(stay.death_time)),
                    stay.stay_length,
                ]
            )

    with open(split_dir / "notes.jsonl", "w") as handle:
        for stay in stays:
            for note in stay.notes:
                record = {
                    "stay_id": note.stay_id,
                    "chart_time": note.chart_time,
                    "category": note.category,
                    "text": note.text,
                }
                handle.write(json.dumps(record) + "\n")

    for stay in stays:
        values = stay.vitals.values
        mask = stay.vitals.present_mask
        with open(vitals_dir / f"{stay.stay_id}.csv", "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["Hours", *names])
            for hour in range(values.shape[0]):
                row = [str(hour)]
                for column in range(values.shape[1]):
                    cell = values[hour, column] if mask[hour, column] else math.nan
                    row.append(_format_cell(cell))
                writer.writerow(row)


def write_dataset(
    root,
    splits: Mapping[str, Sequence[PatientStay]],
    names: Sequence[str],
    generator_config: dict | None = None,
    seed: int | None = None,
):
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for split, stays in splits.items():
        write_split(root, split, stays, names)
    manifest = {
        "format": DATASET_FORMAT,
        "seed": seed,
        "num_variables": len(names),
        "variable_names": list(names),
        "splits": {split: len(stays) for split, stays in splits.items()},
        "generator": generator_config,
    }
    with open(root / MANIFEST_NAME, "w") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")


def read_manifest(root) -> dict:
    path = Path(root) / MANIFEST_NAME
    if not path.exists():
        raise IngestionError(f"no {MANIFEST_NAME} found under {root}")
    with open(path) as handle:
        return json.load(handle)


def manifest_hash(root) -> str:
    path = Path(root) / MANIFEST_NAME
    if not path.exists():
        raise IngestionError(f"no {MANIFEST_NAME} found under {root}")
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_labels(split_dir: Path) -> list[dict]:
    path = split_dir / "labels.csv"
    if not path.exists():
        raise IngestionError(f"missing labels file {path}")
    rows = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["stay_id", "died_in_hospital", "death_time", "stay_length"]:
            raise ParseError(f"{path} row 1: unexpected header {header}")
        for number, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ParseError(f"{path} row {number}: expected 4 fields, got {len(row)}")
            stay_id, died, death_time, stay_length = row
            try:
                rows.append(
                    {
                        "stay_id": stay_id,
                        "died_in_hospital": bool(int(died)),
                        "death_time": float(death_time) if death_time else None,
                        "stay_length": int(stay_length),
                    }
                )
            except ValueError as exc:
                raise ParseError(f"{path} row {number}: {exc}") from exc
    return rows


def _read_notes(split_dir: Path, known_stays: set[str]) -> dict[str, list[ClinicalNote]]:
    path = split_dir / "notes.jsonl"
    if not path.exists():
        raise IngestionError(f"missing notes file {path}")
    grouped: dict[str, list[ClinicalNote]] = {stay_id: [] for stay_id in known_stays}
    with open(path) as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                stay_id = record["stay_id"]
                note = ClinicalNote(
                    stay_id=stay_id,
                    note_index=0,
                    chart_time=float(record["chart_time"]),
                    category=record["category"],
                    text=record["text"],
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path} line {number}: {exc}") from exc
            except ValidationError as exc:
                raise ValidationError(f"{path} line {number}: {exc}") from exc
            if stay_id not in grouped:
                raise ValidationError(
                    f"{path} line {number}: note references unknown stay {stay_id!r}"
                )
            grouped[stay_id].append(note)
    return grouped


def _read_vitals(path: Path, names: Sequence[str] | None) -> tuple[VitalsSeries, list[str]]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header or header[0] != "Hours":
            raise ParseError(f"{path} row 1: first column must be 'Hours'")
        file_names = header[1:]
        if names is not None and list(file_names) != list(names):
            raise IngestionError(
                f"{path}: variable columns {file_names} do not match expected {list(names)}"
            )
        values_rows: list[list[float]] = []
        mask_rows: list[list[bool]] = []
        for number, row in enumerate(reader, start=2):
            if len(row) != len(file_names) + 1:
                raise ParseError(
                    f"{path} row {number}: expected {len(file_names) + 1} fields, got {len(row)}"
                )
            try:
                hour = int(row[0])
            except ValueError as exc:
                raise ParseError(f"{path} row {number}: bad hour index {row[0]!r}") from exc
            if hour != number - 2:
                raise ParseError(
                    f"{path} row {number}: hour indices must be consecutive from 0, got {hour}"
                )
            value_row: list[float] = []
            mask_row: list[bool] = []
            for cell in row[1:]:
                if cell == "":
                    value_row.append(math.nan)
                    mask_row.append(False)
                    continue
                try:
                    value = float(cell)
                except ValueError as exc:
                    raise ParseError(f"{path} row {number}: bad value {cell!r}") from exc
                if not math.isfinite(value):
                    raise ParseError(f"{path} row {number}: non-finite value {cell!r}")
                value_row.append(value)
                mask_row.append(True)
            values_rows.append(value_row)
            mask_rows.append(mask_row)
    if not values_rows:
        raise ParseError(f"{path}: vitals table has no rows")
    series = VitalsSeries(
        values=np.asarray(values_rows, dtype=np.float64),
        present_mask=np.asarray(mask_rows, dtype=bool),
    )
    return series, list(file_names)


def ingest_stays(root, split: str) -> list[PatientStay]:
    """Load one split, validating files, rows, and referential integrity."""
    root = Path(root)
    split_dir = root / split
    if not split_dir.is_dir():
        raise IngestionError(f"split directory {split_dir} does not exist")

    expected_names: Sequence[str] | None = None
    manifest_path = root / MANIFEST_NAME
    if manifest_path.exists():
        expected_names = read_manifest(root).get("variable_names")

    labels = _read_labels(split_dir)
    stay_ids = [row["stay_id"] for row in labels]
    if len(set(stay_ids)) != len(stay_ids):
        raise ValidationError(f"{split_dir / 'labels.csv'}: duplicate stay ids")
    notes_by_stay = _read_notes(split_dir, set(stay_ids))

    vitals_dir = split_dir / "vitals"
    on_disk = {path.stem for path in vitals_dir.glob("*.csv")} if vitals_dir.is_dir() else set()
    extra = on_disk - set(stay_ids)
    if extra:
        raise IngestionError(
            f"{vitals_dir}: vitals files for unlabeled stays {sorted(extra)[:5]}"
        )

    stays = []
    for row in labels:
        stay_id = row["stay_id"]
        vitals_path = vitals_dir / f"{stay_id}.csv"
        if not vitals_path.exists():
            raise IngestionError(f"stay {stay_id!r}: missing vitals file {vitals_path}")
        vitals, file_names = _read_vitals(vitals_path, expected_names)
        if expected_names is None:
            expected_names = file_names
        if vitals.num_hours != row["stay_length"]:
            raise IngestionError(
                f"stay {stay_id!r}: vitals table has {vitals.num_hours} rows but "
                f"stay_length is {row['stay_length']}"
            )
        stays.append(
            PatientStay(
                stay_id=stay_id,
                vitals=vitals,
                notes=sort_notes(notes_by_stay[stay_id], stay_id),
                died_in_hospital=row["died_in_hospital"],
                death_time=row["death_time"],
                stay_length=row["stay_length"],
            )
        )
    return stays
