"""Task labels, zero-shot scoring, linear probes, and ranking metrics."""

import math

import numpy as np
import pytest
import torch

import oracles
from mmncl.errors import ValidationError
from mmncl.evaluation import (
    DECOMPENSATION_PROMPTS,
    MORTALITY_PROMPTS,
    PromptEnsemble,
    auprc,
    auroc,
    build_decompensation_dataset,
    build_mortality_dataset,
    class_prototypes,
    fit_linear_probe,
    label_decompensation,
    label_mortality,
    load_prompt_file,
    save_prompt_file,
    score_windows,
    zero_shot_scores,
)
from mmncl.evaluation.probe import extract_series_features

from conftest import make_stay
from test_encoders import tiny_model


class TestMortalityLabels:
    def test_late_death_is_positive(self):
        stay = make_stay(hours=100, died=True, death_time=90.0, note_times=())
        instance = label_mortality(stay)
        assert instance is not None and instance.label == 1
        assert instance.end_hour == 48 and instance.window_hours is None

    def test_short_stay_excluded(self):
        assert label_mortality(make_stay(hours=30, note_times=())) is None

    def test_early_death_excluded(self):
        stay = make_stay(hours=100, died=True, death_time=40.0, note_times=())
        assert label_mortality(stay) is None

    def test_survivor_is_negative(self):
        instance = label_mortality(make_stay(hours=100, note_times=()))
        assert instance.label == 0


class TestDecompensationLabels:
    def test_twenty_four_hour_rule(self):
        stay = make_stay(hours=30, died=True, death_time=30.0, note_times=())
        instances = {i.end_hour: i.label for i in label_decompensation(stay, window_hours=8)}
        assert instances[5] == 0  # 25 hours away
        assert all(instances[t] == 1 for t in range(6, 30))

    def test_survivor_all_negative(self):
        stay = make_stay(hours=48, note_times=())
        instances = label_decompensation(stay, window_hours=8)
        assert [i.end_hour for i in instances] == list(range(4, 48))
        assert all(i.label == 0 for i in instances)

    def test_death_before_first_eval_hour(self):
        stay = make_stay(hours=3, died=True, death_time=3.0, note_times=())
        assert label_decompensation(stay, window_hours=8) == []

    def test_positives_capped_at_horizon(self, small_synth):
        for stay in small_synth["train"]:
            instances = label_decompensation(stay, window_hours=8)
            assert sum(i.label for i in instances) <= 24

    def test_windows_respect_causality(self):
        stay = make_stay(hours=40, note_times=())
        windows, _, instances = build_decompensation_dataset([stay], window_hours=8)
        # corrupt the future: windows must not change
        tampered_values = stay.vitals.values.copy()
        tampered_values[20:] = 1e9
        tampered = make_stay(hours=40, values=tampered_values, note_times=())
        windows2, _, _ = build_decompensation_dataset([tampered], window_hours=8)
        for w1, w2, instance in zip(windows, windows2, instances):
            if instance.end_hour <= 20:
                np.testing.assert_array_equal(w1, w2)


class TestZeroShot:
    def test_equal_prototypes_give_half(self):
        h = torch.tensor([0.6, 0.8])
        p = torch.tensor([0.1, 0.2])
        assert float(zero_shot_scores(h, p, p)) == pytest.approx(0.5)

    def test_hand_value(self):
        # h.p+ = 1, h.p- = -1 -> e / (e + e^-1)
        h = torch.tensor([1.0, 0.0])
        pos = torch.tensor([1.0, 0.0])
        neg = torch.tensor([-1.0, 0.0])
        expected = math.e / (math.e + math.exp(-1))
        assert float(zero_shot_scores(h, pos, neg)) == pytest.approx(expected, rel=1e-6)

    def test_swapping_ensembles_flips_probability(self):
        rng = np.random.default_rng(0)
        h = torch.as_tensor(rng.normal(size=(5, 4)), dtype=torch.float32)
        pos = torch.as_tensor(rng.normal(size=4), dtype=torch.float32)
        neg = torch.as_tensor(rng.normal(size=4), dtype=torch.float32)
        forward = zero_shot_scores(h, pos, neg)
        backward = zero_shot_scores(h, neg, pos)
        torch.testing.assert_close(forward + backward, torch.ones(5))

    def test_scores_strictly_inside_unit_interval(self):
        model = tiny_model()
        model.eval()
        windows = np.random.default_rng(1).normal(size=(6, 5, 3)).astype(np.float32)
        scores = score_windows(model, windows, MORTALITY_PROMPTS)
        assert np.all((scores > 0) & (scores < 1))

    def test_prototypes_are_means_of_normalized_embeddings(self):
        model = tiny_model()
        model.eval()
        pos, neg = class_prototypes(model, DECOMPENSATION_PROMPTS)
        embedded = model.embed_texts(list(DECOMPENSATION_PROMPTS.positive))
        torch.testing.assert_close(pos, embedded.mean(dim=0))
        # the mean of unit vectors is generally NOT unit norm; it must not be re-normalized
        assert float(torch.linalg.vector_norm(pos)) < 0.999

    def test_duplicate_prompt_changes_prototype(self):
        model = tiny_model()
        model.eval()
        base = PromptEnsemble("t", ("stable", "discharged"), ("expired",))
        dup = PromptEnsemble("t", ("stable", "stable", "discharged"), ("expired",))
        p1, _ = class_prototypes(model, base)
        p2, _ = class_prototypes(model, dup)
        assert not torch.allclose(p1, p2)

    def test_empty_ensemble_rejected(self):
        with pytest.raises(ValidationError):
            PromptEnsemble("t", (), ("x",))


class TestPromptFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "mortality.yaml"
        save_prompt_file(path, MORTALITY_PROMPTS)
        assert load_prompt_file(path) == MORTALITY_PROMPTS

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("task: t\npositive: [a]\nnegative: [b]\nbogus: 1\n")
        with pytest.raises(ValidationError, match="bogus"):
            load_prompt_file(path)

    def test_default_ensembles_content(self):
        assert "patient died" in MORTALITY_PROMPTS.positive
        assert "condition: expired" in MORTALITY_PROMPTS.positive
        assert MORTALITY_PROMPTS.negative == ("survived", "stable", "discharged")
        assert "Discharge Condition: Expired" in DECOMPENSATION_PROMPTS.positive
        assert "dnr" in DECOMPENSATION_PROMPTS.positive
        assert DECOMPENSATION_PROMPTS.negative == (
            "stable",
            "stable condition",
            "discharged today",
        )


class TestLinearProbe:
    def test_separable_two_points(self):
        features = np.array([[0.0, 1.0], [0.0, -1.0]])
        labels = np.array([1, 0])
        probe = fit_linear_probe(features, labels)
        scores = probe.scores(features)
        assert scores[0] > 0.5 > scores[1]

    def test_duplication_invariance(self):
        rng = np.random.default_rng(0)
        features = rng.normal(size=(40, 5))
        labels = (rng.random(40) < 0.5).astype(int)
        labels[0], labels[1] = 0, 1
        probe_once = fit_linear_probe(features, labels)
        probe_twice = fit_linear_probe(
            np.concatenate([features, features]), np.concatenate([labels, labels])
        )
        np.testing.assert_allclose(probe_once.weights, probe_twice.weights, atol=1e-5)
        assert probe_once.bias == pytest.approx(probe_twice.bias, abs=1e-5)

    def test_random_labels_near_chance(self):
        rng = np.random.default_rng(42)
        train = rng.normal(size=(1000, 8))
        test = rng.normal(size=(1000, 8))
        train_labels = (rng.random(1000) < 0.5).astype(int)
        test_labels = (rng.random(1000) < 0.5).astype(int)
        probe = fit_linear_probe(train, train_labels)
        assert 0.45 <= auroc(probe.scores(test), test_labels) <= 0.55

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            fit_linear_probe(np.zeros((4, 2)), np.zeros(4, int))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        features = rng.normal(size=(60, 4))
        labels = (features[:, 0] > 0).astype(int)
        a = fit_linear_probe(features, labels)
        b = fit_linear_probe(features, labels)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_feature_extraction_matches_series_encoder(self):
        model = tiny_model()
        model.eval()
        windows = np.random.default_rng(2).normal(size=(4, 6, 3)).astype(np.float32)
        features = extract_series_features(model, windows)
        direct = model.series_features(torch.as_tensor(windows, dtype=model.dtype))
        np.testing.assert_allclose(features, direct.detach().numpy(), rtol=1e-6)


class TestMetrics:
    def test_perfect_ranking(self):
        assert auroc([0.1, 0.9], [0, 1]) == 1.0
        assert auprc([0.1, 0.9], [0, 1]) == 1.0

    def test_constant_scores(self):
        labels = [0, 1, 0, 1]
        assert auroc([0.5] * 4, labels) == 0.5
        assert auprc([0.5] * 4, labels) == 0.5  # equals the base rate

    def test_constant_scorer_auprc_equals_base_rate(self):
        labels = [1, 0, 0, 0, 1]
        assert auprc([0.3] * 5, labels) == pytest.approx(2 / 5)

    def test_worked_example(self):
        scores = [0.6, 0.8, 0.4]
        labels = [1, 0, 0]
        assert auroc(scores, labels) == 0.5  # pairs: (0.6 > 0.4), (0.6 < 0.8)
        # PR walk: t=0.8 -> R=0; t=0.6 -> R=1, P=1/2; t=0.4 -> R=1
        assert auprc(scores, labels) == pytest.approx(0.5)

    def test_oracle_equivalence_random_instances(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(2, 21))
            labels = rng.integers(0, 2, size=n)
            labels[0], labels[1] = 0, 1
            # draw from few distinct values so ties actually occur
            scores = rng.choice([0.1, 0.25, 0.5, 0.75, 0.9], size=n)
            assert auroc(scores, labels) == pytest.approx(
                oracles.pairwise_auroc(scores.tolist(), labels.tolist()), abs=1e-12
            )
            assert auprc(scores, labels) == pytest.approx(
                oracles.step_curve_auprc(scores.tolist(), labels.tolist()), abs=1e-12
            )

    def test_auroc_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(4)
        scores = rng.normal(size=50)
        labels = rng.integers(0, 2, size=50)
        labels[:2] = [0, 1]
        base = auroc(scores, labels)
        assert auroc(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
        assert auroc(3 * scores + 7, labels) == pytest.approx(base, abs=1e-12)

    def test_error_cases(self):
        with pytest.raises(ValidationError):
            auroc([0.1, 0.2], [1, 1])
        with pytest.raises(ValidationError):
            auroc([np.nan, 0.2], [0, 1])
        with pytest.raises(ValidationError):
            auprc([0.1], [1])


class TestDatasetBuilders:
    def test_mortality_windows_are_first_48_hours(self):
        stay = make_stay(hours=60, note_times=())
        windows, labels, instances = build_mortality_dataset([stay])
        assert windows.shape == (1, 48, 2)
        np.testing.assert_allclose(windows[0], stay.vitals.values[:48])

    def test_short_stays_skipped(self):
        stays = [make_stay(stay_id="a", hours=60, note_times=()), make_stay(stay_id="b", hours=30, note_times=())]
        windows, labels, instances = build_mortality_dataset(stays)
        assert len(instances) == 1 and instances[0].stay_id == "a"

    def test_decompensation_window_shape(self):
        stay = make_stay(hours=20, note_times=())
        windows, labels, instances = build_decompensation_dataset([stay], window_hours=8)
        assert windows.shape == (16, 8, 2)
        assert [i.end_hour for i in instances] == list(range(4, 20))
