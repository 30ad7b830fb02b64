"""Result files, run registry, and hashing helpers."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path


def write_json(path, payload) -> Path:
    """Atomic JSON write (temp file + rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")
    os.replace(tmp, path)
    return path


def read_json(path):
    with open(path) as handle:
        return json.load(handle)


def append_registry(path, record: dict):
    """Append one run record to the newline-delimited registry."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as handle:
        handle.write(json.dumps(record) + "\n")


def read_registry(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path) as handle:
        return [json.loads(line) for line in handle if line.strip()]


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def metric_records(
    values: dict[tuple[str, str, str], float],
    split: str,
    seed: int,
    checkpoint_hash: str | None,
) -> list[dict]:
    """Flatten {(task, mode, metric): value} into result-file records."""
    records = []
    for (task, mode, metric), value in sorted(values.items()):
        records.append(
            {
                "task": task,
                "split": split,
                "mode": mode,
                "metric": metric,
                "value": value,
                "seed": seed,
                "checkpoint_hash": checkpoint_hash,
            }
        )
    return records
