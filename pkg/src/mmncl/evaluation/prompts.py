"""Zero-shot prompt ensembles and their file format.

A prompt file is YAML with ``task``, ``positive`` and ``negative`` string
lists. The defaults below ship with the repository under ``prompts/``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from ..errors import ValidationError


@dataclass(frozen=True)
class PromptEnsemble:
    task: str
    positive: tuple[str, ...]
    negative: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "positive", tuple(self.positive))
        object.__setattr__(self, "negative", tuple(self.negative))
        if not self.positive or not self.negative:
            raise ValidationError(
                f"prompt ensemble {self.task!r} needs nonempty positive and negative lists"
            )


MORTALITY_PROMPTS = PromptEnsemble(
    task="mortality",
    positive=(
        "patient deceased",
        "passed away",
        "patient died",
        "died",
        "deceased",
        "expired",
        "condition: expired",
        "care withdrawn",
    ),
    negative=(
        "survived",
        "stable",
        "discharged",
    ),
)

DECOMPENSATION_PROMPTS = PromptEnsemble(
    task="decompensation",
    positive=(
        "Discharge Condition: Expired",
        "Expired",
        "died",
        "dnr",
    ),
    negative=(
        "stable",
        "stable condition",
        "discharged today",
    ),
)

DEFAULT_PROMPTS = {
    "mortality": MORTALITY_PROMPTS,
    "decompensation": DECOMPENSATION_PROMPTS,
}


def load_prompt_file(path) -> PromptEnsemble:
    with open(path) as handle:
        raw = yaml.safe_load(handle)
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: prompt file must be a mapping")
    unknown = set(raw) - {"task", "positive", "negative"}
    if unknown:
        raise ValidationError(f"{path}: unknown prompt-file keys {sorted(unknown)}")
    try:
        return PromptEnsemble(
            task=str(raw["task"]),
            positive=tuple(str(p) for p in raw["positive"]),
            negative=tuple(str(p) for p in raw["negative"]),
        )
    except KeyError as exc:
        raise ValidationError(f"{path}: missing prompt-file key {exc}") from exc


def save_prompt_file(path, ensemble: PromptEnsemble):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "task": ensemble.task,
        "positive": list(ensemble.positive),
        "negative": list(ensemble.negative),
    }
    with open(path, "w") as handle:
        yaml.safe_dump(payload, handle, sort_keys=False, allow_unicode=True)
