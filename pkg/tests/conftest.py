import numpy as np
import pytest

from stpnrca.pipeline import RunConfig, train_bundle
from stpnrca.synth import CausalGraph, FaultSpec, inject_fault, simulate_var

# Small 4-channel system: channel 0 drives the other three. Big enough for
# real detection margins, small enough to train in a couple of seconds.


@pytest.fixture(scope="session")
def toy_graph():
    coeffs = np.zeros((1, 4, 4))
    coeffs[0, np.arange(4), np.arange(4)] = 0.45
    for dst in (1, 2, 3):
        coeffs[0, dst, 0] = 0.35
    return CausalGraph(coeffs, np.full(4, 0.1))


@pytest.fixture(scope="session")
def toy_config():
    return RunConfig(
        alphabet_size=6,
        window_length=400,
        threshold_quantile=0.02,
        rbm_hidden=24,
        rbm_epochs=150,
        a3_samples_per_order=8,
        a3_hidden=(64,),
        a3_epochs=120,
        a3_patience=12,
        seed=0,
    )


@pytest.fixture(scope="session")
def toy_nominal(toy_graph, toy_config):
    return simulate_var(toy_graph, 80 * toy_config.window_length, seed=1)


@pytest.fixture(scope="session")
def toy_bundle(toy_nominal, toy_config):
    return train_bundle([toy_nominal], toy_config, with_a3=True)


@pytest.fixture(scope="session")
def toy_fault_ts(toy_graph, toy_config):
    base = simulate_var(toy_graph, 6 * toy_config.window_length, seed=3)
    spec = FaultSpec(kind="node_delay", node=0, delay=5)
    return inject_fault(toy_graph, base, spec, seed=3)


@pytest.fixture(scope="session")
def toy_fresh_nominal(toy_graph, toy_config):
    return simulate_var(toy_graph, 6 * toy_config.window_length, seed=2)
