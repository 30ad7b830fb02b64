"""Data model, preprocessing, and dataset file-format round trips."""

import numpy as np
import pytest

from mmncl.corpus import (
    ClinicalNote,
    PatientStay,
    Scaler,
    VitalsSeries,
    fit_scaler,
    ingest_stays,
    preprocess,
    read_manifest,
    sort_notes,
    write_dataset,
)
from mmncl.errors import IngestionError, ParseError, ValidationError

from conftest import make_stay


class TestTypes:
    def test_mask_shape_must_match(self):
        with pytest.raises(ValidationError):
            VitalsSeries(values=np.zeros((3, 2)), present_mask=np.ones((3, 3), bool))

    def test_unknown_category_rejected(self):
        with pytest.raises(ValidationError, match="category"):
            ClinicalNote(stay_id="s", note_index=0, chart_time=1.0, category="Surgery", text="")

    def test_death_time_iff_died(self):
        with pytest.raises(ValidationError):
            make_stay(died=True, death_time=None)
        with pytest.raises(ValidationError):
            make_stay(died=False, death_time=3.0)

    def test_death_after_stay_end_rejected(self):
        with pytest.raises(ValidationError):
            make_stay(hours=6, died=True, death_time=7.0)

    def test_note_after_stay_end_rejected(self):
        with pytest.raises(ValidationError):
            make_stay(hours=4, note_times=(5.0,))

    def test_sort_notes_orders_and_reindexes(self):
        notes = [
            ClinicalNote(stay_id="s", note_index=0, chart_time=5.0, category="ECG", text="a"),
            ClinicalNote(stay_id="s", note_index=0, chart_time=3.0, category="ECG", text="b"),
        ]
        ordered = sort_notes(notes, "s")
        assert [n.chart_time for n in ordered] == [3.0, 5.0]
        assert [n.note_index for n in ordered] == [0, 1]

    def test_sort_notes_ties_keep_input_order(self):
        notes = [
            ClinicalNote(stay_id="s", note_index=0, chart_time=2.0, category="ECG", text="first"),
            ClinicalNote(stay_id="s", note_index=0, chart_time=2.0, category="ECG", text="second"),
        ]
        ordered = sort_notes(notes, "s")
        assert [n.text for n in ordered] == ["first", "second"]


class TestScaler:
    def test_population_convention(self):
        values = np.array([[1.0], [3.0]])
        stay = make_stay(hours=2, num_variables=1, values=values, note_times=())
        scaler = fit_scaler([stay])
        assert scaler.mean[0] == pytest.approx(2.0)
        assert scaler.std[0] == pytest.approx(1.0)  # population, not sample

    def test_constant_variable_floored(self):
        values = np.full((3, 1), 5.0)
        stay = make_stay(hours=3, num_variables=1, values=values, note_times=())
        scaler = fit_scaler([stay])
        assert scaler.std[0] == pytest.approx(Scaler.STD_FLOOR)

    def test_unobserved_variable_falls_back_with_warning(self):
        values = np.array([[1.0, np.nan], [2.0, np.nan]])
        mask = np.array([[True, False], [True, False]])
        stay = make_stay(hours=2, num_variables=2, values=values, mask=mask, note_times=())
        with pytest.warns(UserWarning, match="no observed entries"):
            scaler = fit_scaler([stay])
        assert scaler.mean[1] == 0.0
        assert scaler.std[1] == 1.0

    def test_masked_entries_ignored(self):
        values = np.array([[1.0], [3.0], [999.0]])
        mask = np.array([[True], [True], [False]])
        stay = make_stay(hours=3, num_variables=1, values=values, mask=mask, note_times=())
        scaler = fit_scaler([stay])
        assert scaler.mean[0] == pytest.approx(2.0)


class TestPreprocess:
    def test_forward_fill_then_scale(self):
        # raw column [4, missing, 6], mean 4, std 2 -> [0, 0, 1]
        values = np.array([[4.0], [np.nan], [6.0]])
        mask = np.array([[True], [False], [True]])
        stay = make_stay(hours=3, num_variables=1, values=values, mask=mask, note_times=())
        scaler = Scaler(mean=np.array([4.0]), std=np.array([2.0]))
        out = preprocess(stay, scaler)
        np.testing.assert_allclose(out.vitals.values[:, 0], [0.0, 0.0, 1.0])

    def test_leading_missing_is_exactly_zero(self):
        values = np.array([[np.nan], [10.0]])
        mask = np.array([[False], [True]])
        stay = make_stay(hours=2, num_variables=1, values=values, mask=mask, note_times=())
        scaler = Scaler(mean=np.array([3.0]), std=np.array([2.0]))
        out = preprocess(stay, scaler)
        assert out.vitals.values[0, 0] == 0.0

    def test_fully_observed_equals_affine(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=(5, 3))
        stay = make_stay(hours=5, num_variables=3, values=values, note_times=())
        scaler = Scaler(mean=np.array([1.0, 2.0, 3.0]), std=np.array([2.0, 1.0, 0.5]))
        out = preprocess(stay, scaler)
        np.testing.assert_allclose(out.vitals.values, (values - scaler.mean) / scaler.std)

    def test_idempotent_under_identity_scaler(self, small_synth):
        stays = small_synth["train"][:5]
        scaler = fit_scaler(stays)
        once = [preprocess(s, scaler) for s in stays]
        identity = Scaler.identity(stays[0].vitals.num_variables)
        twice = [preprocess(s, identity) for s in once]
        for a, b in zip(once, twice):
            np.testing.assert_array_equal(a.vitals.values, b.vitals.values)

    def test_output_finite_and_zero_columns(self, small_synth):
        stays = small_synth["train"]
        scaler = fit_scaler(stays)
        for stay in stays:
            out = preprocess(stay, scaler)
            assert np.isfinite(out.vitals.values).all()
            unobserved = ~stay.vitals.present_mask.any(axis=0)
            assert (out.vitals.values[:, unobserved] == 0.0).all()


class TestRoundTrip:
    def test_ingest_write_round_trip(self, dataset_dir, small_synth):
        for split, stays in small_synth.items():
            loaded = ingest_stays(dataset_dir, split)
            assert len(loaded) == len(stays)
            for a, b in zip(stays, loaded):
                assert a == b

    def test_manifest_contents(self, dataset_dir, small_synth_config):
        manifest = read_manifest(dataset_dir)
        assert manifest["seed"] == 7
        assert manifest["num_variables"] == small_synth_config.num_variables
        assert manifest["splits"]["train"] == small_synth_config.train_stays
        assert manifest["generator"]["missing_rate"] == small_synth_config.missing_rate


class TestIngestErrors:
    def test_count_preserved(self, tmp_path):
        stays = [make_stay(stay_id="a"), make_stay(stay_id="b")]
        write_dataset(tmp_path / "d", {"train": stays}, ["var_00", "var_01"])
        assert len(ingest_stays(tmp_path / "d", "train")) == 2

    def test_notes_sorted_on_ingest(self, tmp_path):
        stay = make_stay(stay_id="a", note_times=(5.0, 3.0))
        write_dataset(tmp_path / "d", {"train": [stay]}, ["var_00", "var_01"])
        loaded = ingest_stays(tmp_path / "d", "train")[0]
        assert loaded.notes[0].chart_time == 3.0
        assert loaded.notes[0].note_index == 0

    def test_unknown_stay_in_notes(self, tmp_path):
        stay = make_stay(stay_id="a")
        root = tmp_path / "d"
        write_dataset(root, {"train": [stay]}, ["var_00", "var_01"])
        with open(root / "train" / "notes.jsonl", "a") as handle:
            handle.write(
                '{"stay_id": "ghost", "chart_time": 1.0, "category": "ECG", "text": "x"}\n'
            )
        with pytest.raises(ValidationError, match="ghost"):
            ingest_stays(root, "train")

    def test_missing_vitals_file_names_stay(self, tmp_path):
        stay = make_stay(stay_id="a")
        root = tmp_path / "d"
        write_dataset(root, {"train": [stay]}, ["var_00", "var_01"])
        (root / "train" / "vitals" / "a.csv").unlink()
        with pytest.raises(IngestionError, match="'a'"):
            ingest_stays(root, "train")

    def test_malformed_row_reports_number(self, tmp_path):
        stay = make_stay(stay_id="a")
        root = tmp_path / "d"
        write_dataset(root, {"train": [stay]}, ["var_00", "var_01"])
        path = root / "train" / "vitals" / "a.csv"
        lines = path.read_text().splitlines()
        lines[2] = "1,bogus,2.0"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError, match="row 3"):
            ingest_stays(root, "train")

    def test_unknown_category_in_notes(self, tmp_path):
        stay = make_stay(stay_id="a")
        root = tmp_path / "d"
        write_dataset(root, {"train": [stay]}, ["var_00", "var_01"])
        with open(root / "train" / "notes.jsonl", "a") as handle:
            handle.write(
                '{"stay_id": "a", "chart_time": 1.0, "category": "Bogus", "text": "x"}\n'
            )
        with pytest.raises(ValidationError, match="category"):
            ingest_stays(root, "train")

    def test_extra_vitals_file_rejected(self, tmp_path):
        stay = make_stay(stay_id="a")
        root = tmp_path / "d"
        write_dataset(root, {"train": [stay]}, ["var_00", "var_01"])
        (root / "train" / "vitals" / "zz.csv").write_text("Hours,var_00,var_01\n0,1,2\n")
        with pytest.raises(IngestionError, match="zz"):
            ingest_stays(root, "train")

    def test_missing_split_directory(self, tmp_path):
        with pytest.raises(IngestionError):
            ingest_stays(tmp_path, "train")
