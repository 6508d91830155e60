import math

import numpy as np
import pytest

from stpnrca.errors import DataError
from stpnrca.persist import load_rbm, save_rbm
from stpnrca.rbm import (
    DetectorConfig,
    RbmConfig,
    RbmParams,
    calibrate_threshold,
    detect,
    detect_windows,
    free_energy,
    select_hidden_units,
    switched_free_energy,
    train_rbm,
)


def zero_params(n_v=4, n_h=3):
    return RbmParams(np.zeros(n_v), np.zeros(n_h), np.zeros((n_v, n_h)))


class TestFreeEnergy:
    def test_all_zero_params(self):
        params = zero_params(n_v=5, n_h=3)
        v = np.array([1, 0, 1, 1, 0], dtype=float)
        assert free_energy(params, v) == pytest.approx(-3 * math.log(2))

    def test_zero_vector_any_weights(self):
        rng = np.random.default_rng(0)
        params = RbmParams(rng.normal(size=4), np.zeros(2), rng.normal(size=(4, 2)))
        assert free_energy(params, np.zeros(4)) == pytest.approx(-2 * math.log(2))

    def test_hand_computed_example(self):
        params = RbmParams(
            np.array([0.5, -0.5]), np.array([0.1]), np.array([[1.0], [-1.0]])
        )
        expected = -0.5 - math.log(1 + math.exp(1.1))
        assert free_energy(params, np.array([1.0, 0.0])) == pytest.approx(
            expected, abs=1e-10
        )
        assert expected == pytest.approx(-1.8874, abs=1e-4)

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            free_energy(zero_params(4, 2), np.ones(5))

    def test_overflow_safe(self):
        params = RbmParams(np.array([700.0]), np.array([700.0]), np.array([[700.0]]))
        assert np.isfinite(free_energy(params, np.ones(1)))
        params = RbmParams(np.array([-700.0]), np.array([-700.0]), np.array([[-700.0]]))
        assert np.isfinite(free_energy(params, np.ones(1)))

    def test_batch_matches_single(self):
        rng = np.random.default_rng(4)
        params = RbmParams(rng.normal(size=6), rng.normal(size=3), rng.normal(size=(6, 3)))
        batch = (rng.random((5, 6)) < 0.5).astype(float)
        fb = free_energy(params, batch)
        for i in range(5):
            assert fb[i] == pytest.approx(free_energy(params, batch[i]))


class TestSwitchedFreeEnergy:
    @pytest.fixture
    def params(self):
        rng = np.random.default_rng(11)
        return RbmParams(rng.normal(size=5), rng.normal(size=3), rng.normal(size=(5, 3)))

    def test_empty_flip_is_identity(self, params):
        v = np.array([1, 0, 1, 0, 1], dtype=float)
        assert switched_free_energy(params, v, []) == free_energy(params, v)

    def test_double_flip_involution(self, params):
        v = np.array([1, 1, 0, 0, 1], dtype=float)
        flipped = v.copy()
        flipped[[0, 3]] = 1 - flipped[[0, 3]]
        once = switched_free_energy(params, v, [0, 3])
        assert once == pytest.approx(free_energy(params, flipped))
        back = switched_free_energy(params, flipped, [0, 3])
        assert back == pytest.approx(free_energy(params, v))

    def test_single_flip_equals_hand_flip(self, params):
        v = np.zeros(5)
        by_hand = v.copy()
        by_hand[2] = 1.0
        assert switched_free_energy(params, v, [2]) == pytest.approx(
            free_energy(params, by_hand)
        )

    def test_index_out_of_range(self, params):
        with pytest.raises(DataError):
            switched_free_energy(params, np.zeros(5), [7])


class TestTraining:
    def test_seed_determinism(self):
        rng = np.random.default_rng(1)
        vectors = (rng.random((40, 8)) < 0.8).astype(float)
        cfg = RbmConfig(n_hidden=6, epochs=30, seed=42)
        p1 = train_rbm(vectors, cfg)
        p2 = train_rbm(vectors, cfg)
        assert np.array_equal(p1.weights, p2.weights)
        assert np.array_equal(p1.visible_bias, p2.visible_bias)

    def test_nominal_below_random(self):
        rng = np.random.default_rng(2)
        nominal = (rng.random((60, 10)) < 0.9).astype(float)
        params = train_rbm(nominal, RbmConfig(n_hidden=8, epochs=100, seed=0))
        random_vectors = (rng.random((60, 10)) < 0.5).astype(float)
        gap = np.mean(free_energy(params, random_vectors)) - np.mean(
            free_energy(params, nominal)
        )
        assert gap > 0

    def test_empty_training_set(self):
        with pytest.raises(DataError):
            train_rbm(np.zeros((0, 4)))

    def test_hidden_unit_selection_runs(self):
        rng = np.random.default_rng(3)
        vectors = (rng.random((40, 6)) < 0.85).astype(float)
        best = select_hidden_units(
            vectors, candidates=(2, 4), config=RbmConfig(epochs=20, seed=0)
        )
        assert best in (2, 4)

    def test_hidden_unit_sweep_default_range(self):
        import inspect

        sig = inspect.signature(select_hidden_units)
        assert tuple(sig.parameters["candidates"].default) == (16, 32, 64, 128, 256)


class TestDetector:
    def test_training_vectors_nominal_by_construction(self):
        rng = np.random.default_rng(5)
        vectors = (rng.random((50, 8)) < 0.9).astype(float)
        params = train_rbm(vectors, RbmConfig(n_hidden=6, epochs=80, seed=1))
        threshold = calibrate_threshold(params, vectors, kappa=1.0)
        cfg = DetectorConfig(energy_threshold=threshold)
        assert not any(detect(params, v, cfg) for v in vectors)

    def test_flipped_high_weight_bits_anomalous(self):
        rng = np.random.default_rng(6)
        vectors = np.ones((50, 8))
        vectors[rng.random((50, 8)) < 0.05] = 0.0
        params = train_rbm(vectors, RbmConfig(n_hidden=6, epochs=150, seed=1))
        threshold = calibrate_threshold(params, vectors, kappa=1.0)
        broken = np.zeros(8)
        assert detect(params, broken, DetectorConfig(energy_threshold=threshold))

    def test_kappa_infinite_everything_nominal(self):
        rng = np.random.default_rng(7)
        vectors = (rng.random((30, 6)) < 0.9).astype(float)
        params = train_rbm(vectors, RbmConfig(n_hidden=4, epochs=40, seed=2))
        threshold = calibrate_threshold(params, vectors, kappa=1e9)
        cfg = DetectorConfig(energy_threshold=threshold)
        assert not detect(params, np.zeros(6), cfg)

    def test_mean_aggregation_suppresses_isolated_spike(self):
        # positive visible biases: all-ones is low energy, all-zeros a spike
        params = RbmParams(np.ones(2), np.zeros(1), np.zeros((2, 1)))
        vectors = np.array([[1, 1], [0, 0], [1, 1], [1, 1]], dtype=float)
        f_low = free_energy(params, np.ones(2))
        f_high = free_energy(params, np.zeros(2))
        threshold = (f_low + f_high) / 2
        single = DetectorConfig(energy_threshold=threshold)
        flags = detect_windows(params, vectors, single)
        assert flags.tolist() == [False, True, False, False]
        smoothed = DetectorConfig(
            energy_threshold=threshold, aggregation="mean", mean_window=4
        )
        assert not detect_windows(params, vectors, smoothed).any()


class TestThresholdConstruction:
    def test_no_training_vector_exceeds_threshold(self, toy_bundle):
        vectors = toy_bundle.training_vectors
        f = free_energy(toy_bundle.rbm, vectors)
        assert f.max() <= toy_bundle.energy_threshold
        assert f.mean() < toy_bundle.energy_threshold


class TestRbmPersistence:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(9)
        params = RbmParams(rng.normal(size=5), rng.normal(size=3), rng.normal(size=(5, 3)))
        path = tmp_path / "rbm.json"
        save_rbm(params, path, threshold=-12.5)
        loaded, threshold = load_rbm(path)
        assert threshold == -12.5
        assert np.array_equal(loaded.weights, params.weights)
        v = (rng.random(5) < 0.5).astype(float)
        assert free_energy(loaded, v) == free_energy(params, v)
