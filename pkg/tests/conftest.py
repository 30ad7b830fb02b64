import numpy as np
import pytest

from mmncl.corpus import (
    ClinicalNote,
    PatientStay,
    SynthConfig,
    VitalsSeries,
    generate_synthetic,
    variable_names,
    write_dataset,
)


def make_stay(
    stay_id="s0",
    hours=6,
    num_variables=2,
    note_times=(1.5, 3.0),
    note_category="Nursing",
    died=False,
    death_time=None,
    values=None,
    mask=None,
):
    if values is None:
        values = np.arange(hours * num_variables, dtype=float).reshape(hours, num_variables)
    if mask is None:
        mask = np.ones_like(values, dtype=bool)
    notes = tuple(
        ClinicalNote(
            stay_id=stay_id,
            note_index=i,
            chart_time=t,
            category=note_category,
            text=f"note {i} for {stay_id}",
        )
        for i, t in enumerate(sorted(note_times))
    )
    return PatientStay(
        stay_id=stay_id,
        vitals=VitalsSeries(values=values, present_mask=mask),
        notes=notes,
        died_in_hospital=died,
        death_time=death_time,
        stay_length=hours,
    )


@pytest.fixture(scope="session")
def small_synth_config():
    return SynthConfig(train_stays=30, val_stays=12, test_stays=12)


@pytest.fixture(scope="session")
def small_synth(small_synth_config):
    return generate_synthetic(small_synth_config, seed=7)


@pytest.fixture()
def dataset_dir(tmp_path, small_synth_config, small_synth):
    root = tmp_path / "data"
    write_dataset(
        root,
        small_synth,
        variable_names(small_synth_config),
        generator_config=small_synth_config.to_dict(),
        seed=7,
    )
    return root
