"""Data model, ingestion, preprocessing, and the synthetic paired-EHR generator."""

from .io import ingest_stays, manifest_hash, read_manifest, write_dataset, write_split
from .preprocess import fit_scaler, preprocess
from .synthetic import SPLITS, SynthConfig, generate_synthetic, variable_names
from .types import (
    NOTE_CATEGORIES,
    ClinicalNote,
    PatientStay,
    Scaler,
    VitalsSeries,
    sort_notes,
)

__all__ = [
    "NOTE_CATEGORIES",
    "SPLITS",
    "ClinicalNote",
    "PatientStay",
    "Scaler",
    "SynthConfig",
    "VitalsSeries",
    "fit_scaler",
    "generate_synthetic",
    "ingest_stays",
    "manifest_hash",
    "preprocess",
    "read_manifest",
    "sort_notes",
    "variable_names",
    "write_dataset",
    "write_split",
]
