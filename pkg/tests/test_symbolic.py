import math

import numpy as np
import pytest

from stpnrca.bench import exact_log_metric, two_state_counts
from stpnrca.errors import DataError, DegeneratePartitionError
from stpnrca.symbolic import (
    count_matrix,
    decode_state,
    learn_partition,
    log_inference_metric,
    metric_delta,
    states_from_symbols,
    symbolize,
)
from stpnrca.timeseries import TimeSeries


def series(*columns):
    cols = [np.asarray(c, dtype=float) for c in columns]
    names = tuple(f"c{i}" for i in range(len(cols)))
    return TimeSeries(names, np.column_stack(cols))


class TestLearnPartition:
    def test_mep_median_midpoint(self):
        scheme = learn_partition(series([1, 2, 3, 4]), 2, "mep")
        assert scheme.edges[0] == pytest.approx([2.5])

    def test_mep_nine_bins_equal_frequency(self):
        ts = series(np.arange(0, 9.9, 0.1))
        scheme = learn_partition(ts, 9, "mep")
        symbols = symbolize(ts, scheme)
        counts = np.bincount(symbols[:, 0], minlength=9)
        assert counts.max() - counts.min() <= 1

    def test_up_midpoint(self):
        scheme = learn_partition(series([0, 10]), 2, "up")
        assert scheme.edges[0] == pytest.approx([5.0])

    def test_occupancy_within_one_random_data(self):
        rng = np.random.default_rng(5)
        ts = series(rng.normal(size=1000))
        for bins in (2, 5, 9):
            scheme = learn_partition(ts, bins, "mep")
            counts = np.bincount(symbolize(ts, scheme)[:, 0], minlength=bins)
            assert counts.max() - counts.min() <= 1

    def test_alphabet_too_small(self):
        with pytest.raises(DataError):
            learn_partition(series([1, 2, 3]), 1)

    def test_constant_channel_named_in_error(self):
        ts = TimeSeries(("flat", "ok"), np.column_stack([np.ones(10), np.arange(10.0)]))
        with pytest.raises(DegeneratePartitionError, match="flat"):
            learn_partition(ts, 3)

    def test_duplicated_edges_rejected(self):
        ts = series([0.0] * 50 + [1.0, 2.0])
        with pytest.raises(DegeneratePartitionError):
            learn_partition(ts, 4, "mep")


class TestSymbolize:
    def test_below_lowest_edge(self):
        scheme = learn_partition(series([1, 3, 2, 4]), 2)
        assert symbolize(series([-100.0, 0.0]), scheme)[0, 0] == 0

    def test_edge_value_goes_to_higher_bin(self):
        scheme = learn_partition(series([1, 2, 3, 4]), 2)  # edge 2.5
        assert symbolize(series([2.5, 0.0]), scheme)[0, 0] == 1

    def test_direct_binning(self):
        scheme = learn_partition(series([1, 2, 3, 4]), 2)
        out = symbolize(series([1, 3, 2, 4]), scheme)
        assert out[:, 0].tolist() == [0, 1, 0, 1]

    def test_channel_count_mismatch(self):
        scheme = learn_partition(series([1, 2, 3, 4]), 2)
        two = series([1, 2], [3, 4])
        with pytest.raises(DataError):
            symbolize(two, scheme)


class TestStates:
    def test_depth_one_identity(self):
        symbols = np.array([[0], [1], [0]])
        assert states_from_symbols(symbols, 2, 1)[:, 0].tolist() == [0, 1, 0]

    def test_depth_two_encoding(self):
        symbols = np.array([[0], [1], [1]])
        assert states_from_symbols(symbols, 2, 2)[:, 0].tolist() == [1, 3]

    def test_too_short(self):
        with pytest.raises(DataError):
            states_from_symbols(np.array([[0]]), 2, 2)

    @pytest.mark.parametrize("depth", [1, 2, 3])
    def test_encode_decode_roundtrip(self, depth):
        rng = np.random.default_rng(depth)
        symbols = rng.integers(0, 4, size=(50, 1))
        states = states_from_symbols(symbols, 4, depth)
        for k, state in enumerate(states[:, 0]):
            expected = tuple(symbols[k : k + depth, 0].tolist())
            assert decode_state(int(state), 4, depth) == expected


class TestCountMatrix:
    def test_hand_enumeration(self):
        states = np.array([0, 1, 0, 1])
        symbols = np.array([1, 1, 0, 0])
        n = count_matrix(states, 2, symbols, 2, lag=1)
        assert n.tolist() == [[1, 1], [1, 0]]

    def test_constant_sequences(self):
        T = 37
        n = count_matrix(np.zeros(T, dtype=int), 2, np.zeros(T, dtype=int), 2, lag=1)
        assert n[0, 0] == T - 1
        assert n.sum() == T - 1

    def test_self_pattern(self):
        rng = np.random.default_rng(0)
        symbols = rng.integers(0, 3, size=100)
        n = count_matrix(symbols, 3, symbols, 3, lag=1)
        assert n.sum() == 99

    @pytest.mark.parametrize("lag,depth", [(1, 1), (2, 1), (1, 2), (3, 2)])
    def test_count_conservation(self, lag, depth):
        rng = np.random.default_rng(lag * 10 + depth)
        symbols = rng.integers(0, 3, size=60)
        states = states_from_symbols(symbols[:, None], 3, depth)[:, 0]
        n = count_matrix(states, 3**depth, symbols, 3, lag=lag, depth=depth)
        assert n.sum() == 60 - depth + 1 - lag

    def test_empty_overlap(self):
        with pytest.raises(DataError):
            count_matrix(np.array([0, 1]), 2, np.array([0, 1]), 2, lag=5)


class TestLogInferenceMetric:
    def test_empty_window_is_exactly_zero(self):
        model = np.array([[4, 2], [1, 3]])
        assert log_inference_metric(model, np.zeros_like(model)) == 0.0

    def test_frozen_exact_value(self):
        # exact-arithmetic evaluation of the 2x2 example gives ln(1/4)
        model = np.array([[4, 2], [1, 3]])
        window = np.array([[2, 1], [0, 1]])
        assert log_inference_metric(model, window) == pytest.approx(
            -math.log(4.0), rel=1e-12
        )

    def test_matches_exact_oracle_spot(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            model = rng.integers(0, 60, size=(3, 4))
            window = rng.integers(0, 60, size=(3, 4))
            got = log_inference_metric(model, window)
            want = exact_log_metric(model, window)
            assert got == pytest.approx(want, rel=1e-10, abs=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            log_inference_metric(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_negative_counts(self):
        with pytest.raises(DataError):
            log_inference_metric(np.array([[-1, 0]]), np.array([[0, 0]]))


class TestMetricDelta:
    def test_self_difference_zero(self):
        assert metric_delta(-3.5, -3.5) == 0.0

    def test_positive_for_unit_change(self):
        model, nominal, anomalous = two_state_counts(24, 12, k=10, eta=1)
        delta = metric_delta(
            log_inference_metric(model, nominal),
            log_inference_metric(model, anomalous),
        )
        assert delta > 0

    def test_monotone_in_change_count(self):
        model, nominal, _ = two_state_counts(24, 12, k=10, eta=1)
        lnl_nom = log_inference_metric(model, nominal)
        deltas = []
        for eta in (1, 2):
            _, _, anomalous = two_state_counts(24, 12, k=10, eta=eta)
            deltas.append(metric_delta(lnl_nom, log_inference_metric(model, anomalous)))
        assert deltas[1] > deltas[0]

    @pytest.mark.parametrize("k", [10, 100])
    @pytest.mark.parametrize("ratio", [1, 2, 3])
    def test_two_state_property_full_grid(self, k, ratio):
        n21 = 12
        model, nominal, _ = two_state_counts(ratio * n21, n21, k=k, eta=1)
        lnl_nom = log_inference_metric(model, nominal)
        previous = 0.0
        for eta in range(1, 6):
            _, _, anomalous = two_state_counts(ratio * n21, n21, k=k, eta=eta)
            delta = metric_delta(lnl_nom, log_inference_metric(model, anomalous))
            assert delta > previous
            previous = delta
