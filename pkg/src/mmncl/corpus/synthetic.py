"""Synthetic paired-EHR generator.

Each stay is driven by a latent severity walk s_t in [0, 1]. Vitals are
per-variable affine responses to s_t plus noise, masked at a configurable
missingness rate. Notes are sparse timed events whose template text draws
from a "deteriorating" vocabulary when severity is high and a "stable"
vocabulary when it is low, so text and time series share a latent signal.
Death occurs when severity stays above a threshold for a sustained run,
truncating the stay at that hour.

Generation is deterministic given (config, seed): every stay uses its own
rng derived from (seed, split, ordinal), so stays can be generated in any
order or in parallel with identical results.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .types import NOTE_CATEGORIES, ClinicalNote, PatientStay, VitalsSeries, sort_notes

SPLITS = ("train", "val", "test")

# Vocabulary pools. The deteriorating/stable pools intentionally share words
# with the default zero-shot prompt ensembles so that prompt matching has
# signal to find; the neutral pool is class-independent filler.
DETERIORATING_TOKENS = (
    "unstable",
    "dnr",
    "expired",
    "critical",
    "deteriorating",
    "failing",
    "arrest",
    "unresponsive",
    "worsening",
    "obtunded",
    "hypotensive",
    "pressors",
)
STABLE_TOKENS = (
    "stable",
    "discharged",
    "survived",
    "improving",
    "comfortable",
    "alert",
    "ambulating",
    "tolerating",
    "baseline",
    "wean",
    "recovering",
    "extubated",
)
NEUTRAL_TOKENS = (
    "patient",
    "exam",
    "plan",
    "monitor",
    "overnight",
    "continue",
    "team",
    "reviewed",
    "unit",
    "assessment",
    "course",
    "followup",
)
CATEGORY_TOKENS = {
    "Discharge summary": ("discharge", "summary"),
    "ECG": ("ecg", "rhythm"),
    "Echo": ("echo", "ventricular"),
    "General": ("general", "service"),
    "Nursing": ("nursing", "shift"),
    "Nursing/other": ("nursing", "flowsheet"),
    "Nutrition": ("nutrition", "intake"),
    "Physician": ("physician", "attending"),
    "Radiology": ("radiology", "chest"),
    "Respiratory": ("respiratory", "ventilation"),
}

DEFAULT_NOTE_RATES = {
    "Nursing": 0.05,
    "Nursing/other": 0.04,
    "Physician": 0.03,
    "Radiology": 0.02,
    "ECG": 0.01,
    "Respiratory": 0.01,
}


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic paired-EHR generator."""

    train_stays: int = 500
    val_stays: int = 100
    test_stays: int = 100
    num_variables: int = 17
    min_stay_hours: int = 96
    max_stay_hours: int = 192
    missing_rate: float = 0.4
    note_rate_per_hour: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_NOTE_RATES)
    )
    discharge_summary_at_end: bool = True
    severity_threshold: float = 0.82
    sustain_hours: int = 2
    deteriorating_fraction: float = 0.35
    walk_noise: float = 0.02
    vitals_noise: float = 0.35
    #: per-stay frailty widens the threshold gap multiplicatively: frail
    #: patients die at lower severity. Frailty shows up in the vitals but is
    #: never mentioned in notes, so labels carry information text does not.
    frailty_effect: float = 1.0
    #: per-stay latent walks unrelated to outcome; they dominate raw vitals
    #: variance so severity is not recoverable by an arbitrary projection
    nuisance_dims: int = 12
    nuisance_gain: float = 1.25
    tokens_per_note: int = 8
    #: categories whose note text ignores severity (pure nuisance text)
    uninformative_categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.num_variables < 1:
            raise ConfigError(f"num_variables must be >= 1, got {self.num_variables}")
        for name in ("train_stays", "val_stays", "test_stays"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not 1 <= self.min_stay_hours <= self.max_stay_hours:
            raise ConfigError(
                f"stay-length range [{self.min_stay_hours}, {self.max_stay_hours}] is invalid"
            )
        if not 0.0 <= self.missing_rate <= 1.0:
            raise ConfigError(f"missing_rate must be in [0, 1], got {self.missing_rate}")
        for category, rate in self.note_rate_per_hour.items():
            if category not in NOTE_CATEGORIES:
                raise ConfigError(f"note rate given for unknown category {category!r}")
            if rate < 0:
                raise ConfigError(f"note rate for {category!r} must be >= 0, got {rate}")
        if not 0.0 <= self.deteriorating_fraction <= 1.0:
            raise ConfigError("deteriorating_fraction must be in [0, 1]")
        if self.sustain_hours < 1:
            raise ConfigError("sustain_hours must be >= 1")
        if self.nuisance_dims < 0 or self.nuisance_gain < 0:
            raise ConfigError("nuisance_dims and nuisance_gain must be >= 0")
        if self.frailty_effect < 0:
            raise ConfigError("frailty_effect must be >= 0")
        if self.tokens_per_note < 1:
            raise ConfigError("tokens_per_note must be >= 1")
        for category in self.uninformative_categories:
            if category not in NOTE_CATEGORIES:
                raise ConfigError(f"uninformative category {category!r} is unknown")
        object.__setattr__(
            self, "uninformative_categories", tuple(self.uninformative_categories)
        )

    def stays_for(self, split: str) -> int:
        return {"train": self.train_stays, "val": self.val_stays, "test": self.test_stays}[
            split
        ]

    def target_notes_per_stay(self) -> float:
        """Nominal expected note count used by calibration checks."""
        nominal_hours = 0.5 * (self.min_stay_hours + self.max_stay_hours)
        total = nominal_hours * sum(self.note_rate_per_hour.values())
        if self.discharge_summary_at_end:
            total += 1.0
        return total

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["uninformative_categories"] = list(self.uninformative_categories)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown synthetic-generator keys: {sorted(unknown)}")
        data = dict(raw)
        if "uninformative_categories" in data:
            data["uninformative_categories"] = tuple(data["uninformative_categories"])
        return cls(**data)


def variable_names(config: SynthConfig) -> list[str]:
    return [f"var_{i:02d}" for i in range(config.num_variables)]


def _variable_responses(config: SynthConfig, seed: int):
    """Dataset-level affine response of each variable to the latent drivers."""
    rng = np.random.default_rng((seed, 3117))
    intercepts = rng.uniform(-5.0, 5.0, size=config.num_variables)
    signs = rng.choice((-1.0, 1.0), size=config.num_variables)
    gains = signs * rng.uniform(1.0, 3.0, size=config.num_variables)
    noise_sd = config.vitals_noise * np.abs(gains)
    nuisance_signs = rng.choice((-1.0, 1.0), size=(config.num_variables, config.nuisance_dims))
    nuisance_weights = (
        config.nuisance_gain
        * nuisance_signs
        * rng.uniform(1.0, 3.0, size=(config.num_variables, config.nuisance_dims))
    )
    frailty_signs = rng.choice((-1.0, 1.0), size=config.num_variables)
    frailty_weights = frailty_signs * rng.uniform(1.0, 3.0, size=config.num_variables)
    return intercepts, gains, noise_sd, nuisance_weights, frailty_weights


def _severity_walk(config: SynthConfig, rng, planned_hours: int) -> np.ndarray:
    """Severity path: stable stays hover low; deteriorating stays sit on an
    elevated plateau, then ramp toward a per-stay apex."""
    deteriorating = rng.random() < config.deteriorating_fraction
    if deteriorating:
        start = rng.uniform(0.38, 0.60)
        apex = rng.uniform(0.66, 0.99)
        # steep late ramp: when a crossing happens is set by the ramp position,
        # while whether it happens at all is set by apex vs. the frailty-adjusted
        # threshold, so outcome and timing stay decoupled
        ramp_start = rng.uniform(0.35, 0.80) * planned_hours
        ramp_hours = max(rng.uniform(0.08, 0.18) * planned_hours, 1.0)
        per_hour = (apex - start) / ramp_hours
        hours = np.arange(planned_hours)
        drift = np.where((hours >= ramp_start) & (hours < ramp_start + ramp_hours), per_hour, 0.0)
        ceiling = apex
    else:
        start = rng.uniform(0.05, 0.32)
        drift = np.full(planned_hours, rng.uniform(-0.0015, 0.0005))
        ceiling = 1.0
    steps = drift + rng.normal(0.0, config.walk_noise, size=planned_hours)
    walk = np.empty(planned_hours)
    level = start
    for t in range(planned_hours):
        level = min(max(level + steps[t], 0.0), ceiling)
        walk[t] = level
    return walk


def _effective_threshold(config: SynthConfig, frailty: float) -> float:
    """Death threshold with the gap to 1 widened by frailty.

    A nominal threshold >= 1 stays >= 1 for every frailty, so it is
    unreachable for the clipped severity walk.
    """
    gap = 1.0 - config.severity_threshold
    return 1.0 - gap * (1.0 + config.frailty_effect * frailty)


def _nuisance_walks(config: SynthConfig, rng, planned_hours: int) -> np.ndarray:
    """Outcome-independent latent walks, same scale as the severity walk."""
    if config.nuisance_dims == 0:
        return np.zeros((planned_hours, 0))
    starts = rng.uniform(0.1, 0.9, size=config.nuisance_dims)
    drifts = rng.uniform(-0.004, 0.004, size=config.nuisance_dims)
    steps = drifts[None, :] + rng.normal(
        0.0, config.walk_noise, size=(planned_hours, config.nuisance_dims)
    )
    walks = np.empty((planned_hours, config.nuisance_dims))
    level = starts
    for t in range(planned_hours):
        level = np.clip(level + steps[t], 0.0, 1.0)
        walks[t] = level
    return walks


def _detect_death(walk: np.ndarray, threshold: float, sustain: int) -> int | None:
    """Hour at which severity has exceeded ``threshold`` for ``sustain`` hours."""
    above = walk > threshold
    run = 0
    for t, flag in enumerate(above):
        run = run + 1 if flag else 0
        if run >= sustain:
            return max(t, 1)
    return None


def _severity_token_probability(severity: float) -> float:
    return 1.0 / (1.0 + np.exp(-(severity - 0.5) / 0.10))


def _note_text(
    config: SynthConfig,
    rng,
    category: str,
    severity: float,
    outcome_prefix: tuple[str, ...] = (),
) -> str:
    if category in config.uninformative_categories:
        p_deteriorating = 0.5
        outcome_prefix = ()
    else:
        p_deteriorating = _severity_token_probability(severity)
    tokens = list(CATEGORY_TOKENS[category])
    tokens.extend(outcome_prefix)
    for _ in range(config.tokens_per_note):
        pool = DETERIORATING_TOKENS if rng.random() < p_deteriorating else STABLE_TOKENS
        tokens.append(pool[rng.integers(len(pool))])
    for _ in range(3):
        tokens.append(NEUTRAL_TOKENS[rng.integers(len(NEUTRAL_TOKENS))])
    return " ".join(tokens)


def _generate_stay(config: SynthConfig, seed: int, split: str, ordinal: int) -> PatientStay:
    split_index = SPLITS.index(split)
    rng = np.random.default_rng((seed, split_index, ordinal))
    stay_id = f"{split}_{ordinal:05d}"

    planned_hours = int(rng.integers(config.min_stay_hours, config.max_stay_hours + 1))
    frailty = float(rng.uniform(0.0, 1.0))
    walk = _severity_walk(config, rng, planned_hours)
    nuisance = _nuisance_walks(config, rng, planned_hours)
    death_hour = _detect_death(
        walk, _effective_threshold(config, frailty), config.sustain_hours
    )
    if death_hour is not None:
        stay_length = death_hour
        died = True
        death_time: float | None = float(death_hour)
    else:
        stay_length = planned_hours
        died = False
        death_time = None
    severity = walk[:stay_length]

    intercepts, gains, noise_sd, nuisance_weights, frailty_weights = _variable_responses(
        config, seed
    )
    clean = (
        intercepts[None, :]
        + gains[None, :] * severity[:, None]
        + nuisance[:stay_length] @ nuisance_weights.T
        + frailty_weights[None, :] * frailty
    )
    noisy = clean + rng.normal(0.0, 1.0, size=clean.shape) * noise_sd[None, :]
    present = rng.random(size=clean.shape) >= config.missing_rate
    values = np.where(present, noisy, np.nan)

    notes = []
    for category in sorted(config.note_rate_per_hour):
        rate = config.note_rate_per_hour[category]
        if rate <= 0:
            continue
        emitted = rng.random(stay_length) < rate
        for hour in np.flatnonzero(emitted):
            chart_time = float(hour) + float(rng.uniform(0.0, 1.0))
            chart_time = min(chart_time, float(stay_length))
            text = _note_text(config, rng, category, severity[hour])
            notes.append(
                ClinicalNote(
                    stay_id=stay_id,
                    note_index=0,
                    chart_time=chart_time,
                    category=category,
                    text=text,
                )
            )
    if config.discharge_summary_at_end:
        outcome = ("condition", "expired") if died else ("condition", "stable", "discharged")
        notes.append(
            ClinicalNote(
                stay_id=stay_id,
                note_index=0,
                chart_time=max(float(stay_length) - 0.25, 0.0),
                category="Discharge summary",
                text=_note_text(
                    config, rng, "Discharge summary", severity[-1], outcome_prefix=outcome
                ),
            )
        )

    return PatientStay(
        stay_id=stay_id,
        vitals=VitalsSeries(values=values, present_mask=present),
        notes=sort_notes(notes, stay_id),
        died_in_hospital=died,
        death_time=death_time,
        stay_length=stay_length,
    )


def generate_synthetic(config: SynthConfig, seed: int) -> dict[str, list[PatientStay]]:
    """Generate all three splits. Deterministic given (config, seed)."""
    return {
        split: [
            _generate_stay(config, seed, split, ordinal)
            for ordinal in range(config.stays_for(split))
        ]
        for split in SPLITS
    }
