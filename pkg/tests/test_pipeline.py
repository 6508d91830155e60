import os

import numpy as np
import pytest

from stpnrca.errors import DataError, UsageError
from stpnrca.pipeline import (
    CONFIG_ENV_VAR,
    RunConfig,
    evaluate_case,
    load_bundle,
    run_detect,
    run_rca,
    run_var_rca,
    save_bundle,
)
from stpnrca.stpn import pattern_index, window_metrics
from stpnrca.synth import case_labels, FaultSpec, simulate_var


class TestRunConfig:
    def test_defaults_follow_reference_experiment(self):
        cfg = RunConfig()
        assert cfg.alphabet_size == 9
        assert cfg.window_length == 1200
        assert cfg.threshold_quantile == 0.05
        assert cfg.var_eta == 0.4
        assert cfg.a3_flip_orders == (1, 2, 3, 4)

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("alphabet_size = 7\nwindow_length= 300  # inline comment\n")
        cfg = RunConfig.from_sources(str(path), {"depth": "2"})
        assert cfg.alphabet_size == 7
        assert cfg.window_length == 300
        assert cfg.depth == 2

    def test_tuple_keys(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("a3_hidden = 64, 32\na3_flip_orders = 1 2\n")
        cfg = RunConfig.from_sources(str(path))
        assert cfg.a3_hidden == (64, 32)
        assert cfg.a3_flip_orders == (1, 2)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("alphabeta = 7\n")
        with pytest.raises(UsageError, match="alphabeta"):
            RunConfig.from_sources(str(path))

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("alphabet_size = many\n")
        with pytest.raises(UsageError):
            RunConfig.from_sources(str(path))

    def test_env_var_default(self, tmp_path, monkeypatch):
        path = tmp_path / "env.cfg"
        path.write_text("seed = 123\n")
        monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
        assert RunConfig.from_sources().seed == 123

    def test_fingerprint_stable_and_sensitive(self):
        a = RunConfig()
        b = RunConfig()
        c = RunConfig(seed=1)
        assert a.fingerprint() == b.fingerprint()
        assert a.fingerprint() != c.fingerprint()


class TestBundleRoundtrip:
    def test_save_load_preserves_behavior(self, toy_bundle, toy_nominal, tmp_path):
        directory = tmp_path / "bundle"
        save_bundle(toy_bundle, directory)
        loaded = load_bundle(directory)
        window = toy_nominal.window(0, toy_bundle.stpn.window_length)
        assert np.array_equal(
            window_metrics(toy_bundle.stpn, window),
            window_metrics(loaded.stpn, window),
        )
        assert loaded.energy_threshold == toy_bundle.energy_threshold
        assert loaded.mlp is not None
        assert loaded.config == toy_bundle.config

    def test_bundle_files_byte_identical_across_saves(self, toy_bundle, tmp_path):
        d1, d2 = tmp_path / "b1", tmp_path / "b2"
        save_bundle(toy_bundle, d1)
        save_bundle(toy_bundle, d2)
        for name in os.listdir(d1):
            with open(d1 / name, "rb") as fh1, open(d2 / name, "rb") as fh2:
                assert fh1.read() == fh2.read()

    def test_missing_bundle(self, tmp_path):
        with pytest.raises(DataError):
            load_bundle(tmp_path / "nope")


class TestDetectAndRca:
    def test_fresh_nominal_all_clear(self, toy_bundle, toy_fresh_nominal):
        _, energies, flags = run_detect(toy_bundle, toy_fresh_nominal)
        assert not flags.any()
        assert np.all(energies < toy_bundle.energy_threshold)

    def test_fault_detected(self, toy_bundle, toy_fault_ts):
        _, _, flags = run_detect(toy_bundle, toy_fault_ts)
        assert flags.sum() >= 1

    def test_rca_gate_skips_undetected(self, toy_bundle, toy_fresh_nominal):
        report = run_rca(toy_bundle, toy_fresh_nominal, method="s3")
        assert report["n_analyzed"] == 0
        assert report["aggregate"]["failed_patterns"] == []

    @pytest.mark.parametrize("method", ["s3", "a3"])
    def test_rca_localizes_delayed_driver(self, toy_bundle, toy_fault_ts, method):
        report = run_rca(toy_bundle, toy_fault_ts, method=method, force=True)
        failed = {p["index"] for p in report["aggregate"]["failed_patterns"]}
        assert failed == {
            pattern_index(0, 1, 4), pattern_index(0, 2, 4), pattern_index(0, 3, 4)
        }
        assert [n["node"] for n in report["aggregate"]["nodes"]] == [0]
        ranking = [n["node"] for n in report["aggregate"]["ranking"]]
        assert sorted(ranking) == [0, 1, 2, 3]
        assert ranking[0] == 0

    def test_depth_two_pipeline_localizes(self):
        # depth-2 states (16 states over a 4-symbol alphabet) end to end
        from stpnrca.synth import builtin_modes, inject_fault, simulate_var
        from stpnrca.pipeline import train_bundle

        cfg = RunConfig(
            alphabet_size=4, depth=2, window_length=600,
            threshold_quantile=0.02, rbm_hidden=32, seed=0,
        )
        mode = builtin_modes()[0]
        nominal = simulate_var(mode, 40 * 600, seed=5)
        with pytest.warns(UserWarning):  # few calibration windows, on purpose
            bundle = train_bundle([nominal], cfg, with_a3=False)
        assert bundle.stpn.counts.shape[2:] == (16, 4)
        fault = inject_fault(
            mode, simulate_var(mode, 8 * 600, seed=6),
            FaultSpec(kind="pattern_break", edges=((1, 4),)), seed=6,
        )
        report = run_rca(bundle, fault, method="s3", force=True)
        failed = {p["index"] for p in report["aggregate"]["failed_patterns"]}
        assert pattern_index(1, 4, 5) in failed

    def test_var_rca_report(self, toy_graph, toy_fault_ts):
        cfg = RunConfig(window_length=400)
        nominal = simulate_var(toy_graph, 4000, seed=77)
        report = run_var_rca(nominal, toy_fault_ts, cfg)
        assert report["method"] == "var"
        assert len(report["aggregate"]["ranking"]) == 4
        for p in report["aggregate"]["failed_patterns"]:
            assert p["weight"] == 1.0


class TestEvaluateCase:
    def test_pattern_break_case(self, toy_bundle):
        report = {
            "method": "s3",
            "n_analyzed": 2,
            "aggregate": {"failed_patterns": [{"index": 1}], "nodes": [], "ranking": []},
            "windows": [
                {"analyzed": True, "patterns": [{"index": 1}]},
                {"analyzed": True, "patterns": [{"index": 1}, {"index": 5}]},
            ],
        }
        labels = case_labels(
            "case", 0, FaultSpec(kind="pattern_break", edges=((0, 1),)),
            ("a", "b", "c", "d"), seed=0,
        )
        out = evaluate_case(report, labels)
        # window 1 perfect (16/16), window 2 has one extra (15/16)
        assert out["alpha1"] == pytest.approx((16 + 15) / 32)
        assert out["recall"] == 1.0
        assert out["precision"] == pytest.approx(2 / 3)
        assert out["error_ratio"] == 0.0  # aggregate {1} is fully correct

    def test_node_fault_case(self):
        report = {
            "method": "s3",
            "n_analyzed": 3,
            "aggregate": {
                "failed_patterns": [{"index": 1}, {"index": 4}, {"index": 11}],
                "nodes": [{"node": 0, "name": "a", "score": 2.0}],
                "ranking": [
                    {"node": 0}, {"node": 1}, {"node": 2}, {"node": 3}
                ],
            },
            "windows": [],
        }
        labels = case_labels(
            "case", 0, FaultSpec(kind="node_delay", node=0, delay=5),
            ("a", "b", "c", "d"), seed=0,
        )
        out = evaluate_case(report, labels)
        # patterns 1=(0,1) and 4=(1,0) touch node 0; 11=(2,3) does not
        assert out["n_incorrect"] == 1
        assert out["error_ratio"] == pytest.approx(1 / 3)
        assert out["predicted_nodes"] == [0]
        assert out["diagnosis_cost"] == 3  # rank 1 x 3 analyzed windows

    def test_false_alarm_case(self):
        report = {
            "method": "a3",
            "n_analyzed": 2,
            "aggregate": {"failed_patterns": [], "nodes": [], "ranking": []},
            "windows": [
                {"analyzed": True, "patterns": []},
                {"analyzed": True, "patterns": [{"index": 3}]},
            ],
        }
        labels = case_labels("nom", 1, None, ("a", "b", "c"), seed=0)
        out = evaluate_case(report, labels)
        assert out["false_alarm_fraction"] == pytest.approx((0 + 1 / 9) / 2)
