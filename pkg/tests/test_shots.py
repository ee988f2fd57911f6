import math

import numpy as np
import pytest

from hardyions.meter import GaussianPointer
from hardyions.protocol import RunConfig, closed_form_mean, run_weak_gaussian
from hardyions.shots import (
    BatchTotals,
    batch_plan,
    merge_shot_totals,
    prepare_experiment,
    run_experiment_mc,
    run_shot_batch,
    sample_pointer,
    shots_required,
)


def ground_pointer(sigma=1.0):
    return GaussianPointer(sigma, ((1.0, 0.0),))


class TestSamplePointer:
    def test_deterministic_per_seed(self):
        pointer = run_weak_gaussian(0.1).conditional_pointer
        first = sample_pointer(pointer, 1000, seed=42)
        second = sample_pointer(pointer, 1000, seed=42)
        np.testing.assert_array_equal(first, second)
        assert not np.array_equal(first, sample_pointer(pointer, 1000, seed=43))

    def test_ground_state_mean(self):
        n = 100_000
        samples = sample_pointer(ground_pointer(), n, seed=5)
        assert abs(samples.mean()) <= 4.0 / math.sqrt(n)
        assert samples.std(ddof=1) == pytest.approx(1.0, rel=0.02)

    def test_conditional_state_mean_matches_closed_form(self):
        a = 0.1
        n = 1_000_000
        pointer = run_weak_gaussian(a).conditional_pointer
        samples = sample_pointer(pointer, n, seed=9)
        std_error = samples.std(ddof=1) / math.sqrt(n)
        assert abs(samples.mean() - closed_form_mean(a)) <= 5.0 * std_error

    def test_invalid_count_rejected(self):
        with pytest.raises(ValueError):
            sample_pointer(ground_pointer(), 0, seed=1)

    def test_degenerate_state_rejected(self):
        degenerate = GaussianPointer(1.0, ((1e-9, 0.0),))
        with pytest.raises(ValueError, match="degenerate"):
            sample_pointer(degenerate, 10, seed=1)

    def test_standard_error_scaling(self):
        # the estimator converges at the 1/sqrt(n) rate
        pointer = run_weak_gaussian(0.1).conditional_pointer
        ns = [1_000, 10_000, 100_000, 1_000_000]
        errors = []
        for i, n in enumerate(ns):
            samples = sample_pointer(pointer, n, seed=100 + i)
            errors.append(samples.std(ddof=1) / math.sqrt(n))
        slope = np.polyfit(np.log(ns), np.log(errors), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.05)


class TestRunExperiment:
    def test_acceptance_fraction(self):
        config = RunConfig(a=0.05, shots=100_000, seed=3)
        result = run_experiment_mc(config)
        p = run_weak_gaussian(config.a).postselection_probability
        binomial_sigma = math.sqrt(p * (1.0 - p) / config.shots)
        assert abs(result.accepted / result.total - p) <= 5.0 * binomial_sigma

    def test_deterministic(self):
        config = RunConfig(a=0.05, shots=20_000, seed=7)
        assert run_experiment_mc(config) == run_experiment_mc(config)

    def test_mean_consistent_with_closed_form(self):
        config = RunConfig(a=0.05, shots=200_000, seed=1)
        result = run_experiment_mc(config)
        assert result.std_error_reliable
        assert abs(result.sample_mean - closed_form_mean(config.a)) <= 5.0 * result.std_error

    def test_zero_shots_rejected(self):
        with pytest.raises(ValueError):
            run_experiment_mc(RunConfig(shots=0))

    def test_wrong_variant_rejected(self):
        with pytest.raises(ValueError, match="variant"):
            run_experiment_mc(RunConfig(variant="ideal", shots=10))

    def test_zero_accepted_is_flagged(self):
        # with one shot and ~94% rejection, some small seed must reject
        result = None
        for seed in range(20):
            candidate = run_experiment_mc(RunConfig(a=0.05, shots=1, seed=seed))
            if candidate.accepted == 0:
                result = candidate
                break
        assert result is not None
        assert result.sample_mean is None
        assert result.std_error is None
        assert not result.std_error_reliable

    def test_keep_samples_aligns_with_result(self):
        config = RunConfig(a=0.1, shots=5_000, seed=11)
        result, outcomes, samples = run_experiment_mc(config, keep_samples=True)
        assert len(outcomes) == config.shots
        assert len(samples) == result.accepted == int(np.count_nonzero(outcomes == 0))
        assert result.sample_mean == pytest.approx(samples.mean(), rel=1e-12)
        assert result == run_experiment_mc(config)


class TestBatching:
    def test_batch_plan_covers_shots(self):
        assert batch_plan(5) == [5]
        assert sum(batch_plan(1_000_000)) == 1_000_000
        assert batch_plan(1 << 17) == [1 << 17]

    def test_merged_batches_equal_full_run(self):
        config = RunConfig(a=0.05, shots=300_000, seed=2)
        prepared = prepare_experiment(config)
        totals = [
            run_shot_batch(prepared, index, size)
            for index, size in enumerate(batch_plan(config.shots))
        ]
        merged = merge_shot_totals(totals, config.seed)
        assert merged == run_experiment_mc(config)

    def test_merged_variance_matches_direct_estimate(self):
        config = RunConfig(a=0.1, shots=50_000, seed=6)
        result, _, samples = run_experiment_mc(config, keep_samples=True)
        direct = samples.std(ddof=1) / math.sqrt(len(samples))
        assert result.std_error == pytest.approx(direct, rel=1e-12)

    def test_merge_empty_batch(self):
        merged = merge_shot_totals([BatchTotals(0, 50, 0.0, 0.0)], seed=0)
        assert merged.accepted == 0
        assert merged.sample_mean is None


class TestShotsRequired:
    def test_pinned_value(self):
        # frozen from the first evaluation of the defining formula
        assert shots_required(0.1, 1.0, 3.0) == 14409

    def test_monotone_in_displacement(self):
        values = [shots_required(aos, 1.0, 3.0) for aos in (0.05, 0.1, 0.2, 0.4, 0.8)]
        assert values == sorted(values, reverse=True)

    def test_scale_invariance(self):
        assert shots_required(0.1, 1.0, 3.0) == shots_required(0.05, 0.5, 3.0)

    def test_threshold_is_unresolvable(self):
        with pytest.raises(ValueError, match="unresolvable"):
            shots_required(math.sqrt(8.0 * math.log(2.0)), 1.0, 3.0)

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValueError):
            shots_required(0.0, 1.0, 3.0)
        with pytest.raises(ValueError):
            shots_required(0.1, 1.0, 0.0)

    def test_json_round_trip(self):
        result = run_experiment_mc(RunConfig(a=0.05, shots=1_000, seed=4))
        data = result.to_json_dict()
        assert data["accepted"] == result.accepted
        assert data["seed"] == 4
        assert set(data) == {
            "accepted",
            "total",
            "sample_mean",
            "std_error",
            "seed",
            "std_error_reliable",
        }
