import numpy as np
import pytest

from spikeconn import BenchmarkSpec, sample_network, synthesize_recording
from spikeconn.methods import NetworkData


def small_spec(seed, **overrides):
    params = dict(neuron_count=10, duration_s=120.0, seed=seed)
    params.update(overrides)
    return BenchmarkSpec(**params)


def make_bundle(seed, **overrides):
    spec = small_spec(seed, **overrides)
    truth, model, layout = sample_network(spec)
    panel, raster = synthesize_recording(truth, model, layout, spec)
    return NetworkData(network_id=f"net-{seed:02d}", panel=panel, layout=layout,
                       ground_truth=truth)


@pytest.fixture(scope="session")
def bundles():
    """Three small synthetic networks shared across test modules."""
    return [make_bundle(seed) for seed in (11, 12, 13)]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
