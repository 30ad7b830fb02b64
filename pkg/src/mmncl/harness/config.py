"""Run configuration: defaults, strict parsing, YAML round-trip.

Unknown keys anywhere in a config document are errors, so typos fail fast
instead of silently using defaults. Desk-scale defaults keep the full
pipeline comfortably inside laptop-CPU budgets; ``RunConfig.paper_scale()``
switches to the published training scale.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from ..corpus.synthetic import SynthConfig
from ..corpus.types import NOTE_CATEGORIES
from ..errors import ConfigError
from ..objective import LossConfig
from ..sampling import TargetTimeConfig

LOSS_VARIANTS = ("mm_ncl", "mm_infonce")
TASKS = ("mortality", "decompensation")


def _replace_flat(instance, raw: dict, section: str):
    """Apply a mapping onto a flat settings dataclass, rejecting unknown keys."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config section {section!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(instance)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys in {section!r}: {sorted(unknown)}")
    return dataclasses.replace(instance, **raw)


@dataclass(frozen=True)
class SamplingSettings:
    window_hours: int = 16
    notes_per_stay: int = 4
    hours_after_note: float = 3.0
    hours_before_note_default: float = 3.0
    hours_before_note_overrides: dict[str, float] = field(
        default_factory=lambda: {"Discharge summary": 10.0, "Radiology": 30.0}
    )

    def __post_init__(self):
        if self.window_hours < 1:
            raise ConfigError("window_hours must be >= 1")
        if self.notes_per_stay < 1:
            raise ConfigError("notes_per_stay must be >= 1")

    def target_time_config(self) -> TargetTimeConfig:
        return TargetTimeConfig(
            hours_after=self.hours_after_note,
            hours_before_default=self.hours_before_note_default,
            hours_before_overrides=dict(self.hours_before_note_overrides),
        )


@dataclass(frozen=True)
class EncoderSettings:
    hidden_dim: int = 64
    depth: int = 2
    dropout: float = 0.1
    provider_dim: int = 64
    mlp_hidden_dim: int = 4096
    mlp_output_dim: Optional[int] = None
    shared_dim: int = 128


@dataclass(frozen=True)
class ObjectiveSettings:
    alpha: float = 0.3
    beta: float = 2.0
    aware_denominator: str = "exclude_l"
    init_temperature: float = 0.07
    max_inverse_temperature: float = 100.0

    def loss_config(self) -> LossConfig:
        return LossConfig(
            alpha=self.alpha,
            beta=self.beta,
            aware_denominator=self.aware_denominator,
            init_temperature=self.init_temperature,
            max_inverse_temperature=self.max_inverse_temperature,
        )


@dataclass(frozen=True)
class EvaluationSettings:
    first_eval_hour: int = 4
    decompensation_horizon_hours: int = 24
    mortality_input_hours: int = 48
    probe_l2: float = 1e-4
    probe_tol: float = 1e-6
    probe_max_iter: int = 10_000
    zero_shot_use_temperature: bool = False
    #: how per-task validation AuPRCs are aggregated into one model-selection score
    task_aggregate: str = "mean"

    def __post_init__(self):
        if self.task_aggregate != "mean":
            raise ConfigError("task_aggregate currently supports only 'mean'")


@dataclass(frozen=True)
class TrainingSettings:
    epochs: int = 10
    batch_stays: int = 32
    learning_rate: float = 5e-4
    loss_variant: str = "mm_ncl"
    allowed_categories: Optional[tuple[str, ...]] = None
    num_threads: int = 1
    early_stopping: bool = False
    #: task whose validation AuPRC drives early stopping; "aggregate" = task mean
    early_stopping_task: str = "aggregate"
    supervised_epochs: int = 20

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_stays < 1:
            raise ConfigError("batch_stays must be >= 1")
        if self.loss_variant not in LOSS_VARIANTS:
            raise ConfigError(
                f"loss_variant must be one of {LOSS_VARIANTS}, got {self.loss_variant!r}"
            )
        if self.allowed_categories is not None:
            categories = tuple(self.allowed_categories)
            for category in categories:
                if category not in NOTE_CATEGORIES:
                    raise ConfigError(f"unknown note category {category!r}")
            object.__setattr__(self, "allowed_categories", categories)
        if self.early_stopping_task not in TASKS + ("aggregate",):
            raise ConfigError(
                f"early_stopping_task must be one of {TASKS + ('aggregate',)}"
            )


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    data_dir: str = "data/default"
    synth: SynthConfig = field(default_factory=SynthConfig)
    sampling: SamplingSettings = field(default_factory=SamplingSettings)
    encoders: EncoderSettings = field(default_factory=EncoderSettings)
    objective: ObjectiveSettings = field(default_factory=ObjectiveSettings)
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)
    training: TrainingSettings = field(default_factory=TrainingSettings)

    SECTIONS = ("synth", "sampling", "encoders", "objective", "evaluation", "training")

    @property
    def batch_notes(self) -> int:
        return self.training.batch_stays * self.sampling.notes_per_stay

    @classmethod
    def paper_scale(cls) -> "RunConfig":
        """Published-scale hyperparameters (slow on a laptop; provided for completeness)."""
        base = cls()
        return dataclasses.replace(
            base,
            encoders=dataclasses.replace(
                base.encoders, hidden_dim=256, provider_dim=128, shared_dim=128
            ),
            training=dataclasses.replace(base.training, epochs=30, batch_stays=512),
        )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "data_dir": self.data_dir,
            "synth": self.synth.to_dict(),
            "sampling": dataclasses.asdict(self.sampling),
            "encoders": dataclasses.asdict(self.encoders),
            "objective": dataclasses.asdict(self.objective),
            "evaluation": dataclasses.asdict(self.evaluation),
            "training": {
                **dataclasses.asdict(self.training),
                "allowed_categories": (
                    None
                    if self.training.allowed_categories is None
                    else list(self.training.allowed_categories)
                ),
            },
        }

    @classmethod
    def from_dict(cls, raw: dict | None, base: "RunConfig | None" = None) -> "RunConfig":
        """Build from a mapping, applying entries on top of ``base`` (or defaults)."""
        base = base if base is not None else cls()
        if raw is None:
            return base
        if not isinstance(raw, dict):
            raise ConfigError("config document must be a mapping")
        unknown = set(raw) - {"seed", "data_dir", *cls.SECTIONS}
        if unknown:
            raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")

        training_raw = dict(raw.get("training") or {})
        if "allowed_categories" in training_raw and training_raw["allowed_categories"] is not None:
            training_raw["allowed_categories"] = tuple(training_raw["allowed_categories"])

        synth_raw = raw.get("synth")
        if synth_raw is not None:
            merged = {**base.synth.to_dict(), **synth_raw}
            synth = SynthConfig.from_dict(merged)
        else:
            synth = base.synth

        return cls(
            seed=raw.get("seed", base.seed),
            data_dir=raw.get("data_dir", base.data_dir),
            synth=synth,
            sampling=_replace_flat(base.sampling, raw.get("sampling"), "sampling"),
            encoders=_replace_flat(base.encoders, raw.get("encoders"), "encoders"),
            objective=_replace_flat(base.objective, raw.get("objective"), "objective"),
            evaluation=_replace_flat(base.evaluation, raw.get("evaluation"), "evaluation"),
            training=_replace_flat(base.training, training_raw, "training"),
        )


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    with open(path) as handle:
        raw = yaml.safe_load(handle)
    return RunConfig.from_dict(raw, base=base)


def save_config(path, config: RunConfig):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as handle:
        yaml.safe_dump(config.to_dict(), handle, sort_keys=False)
