import numpy as np
import pytest

from spikeconn.dataset import FluorescencePanel, NeuronLayout
from spikeconn.preprocess import (
    SpikeRaster,
    build_scatter_matrix,
    correct_scatter,
    discretize,
    forward_scatter,
    remove_high_activity_frames,
    summation_filter,
)


def test_scatter_identical_positions():
    layout = NeuronLayout([[0.3, 0.3], [0.3, 0.3]])
    scatter = build_scatter_matrix(layout)
    assert scatter.matrix[0, 1] == pytest.approx(0.15)
    assert scatter.matrix[0, 0] == 1.0


def test_scatter_kernel_decay_with_distance():
    layout = NeuronLayout([[0.0, 0.0], [100.0, 0.0]])
    scatter = build_scatter_matrix(layout)
    assert scatter.matrix[0, 1] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(scatter.matrix, np.eye(2), atol=1e-12)


def test_scatter_unit_distance_value():
    # amplitude * exp(-1/2) evaluated directly
    layout = NeuronLayout([[0.0, 0.0], [1.0, 0.0]])
    scatter = build_scatter_matrix(layout)
    assert scatter.matrix[0, 1] == pytest.approx(0.15 * np.exp(-0.5), rel=1e-12)
    assert scatter.matrix[0, 1] == pytest.approx(0.0910, abs=5e-5)


def test_scatter_growing_variant_selectable():
    layout = NeuronLayout([[0.0, 0.0], [1.0, 0.0]])
    scatter = build_scatter_matrix(layout, decaying=False)
    assert scatter.matrix[0, 1] == pytest.approx(0.15 * np.exp(0.5), rel=1e-12)


def test_correct_scatter_identity():
    layout = NeuronLayout([[0.0, 0.0], [50.0, 0.0]])
    scatter = build_scatter_matrix(layout)
    panel = FluorescencePanel([[1.0, 2.0], [3.0, 4.0]])
    out = correct_scatter(panel, scatter)
    assert np.allclose(out.values, panel.values, atol=1e-12)


def test_correct_scatter_analytic_2x2():
    layout = NeuronLayout([[0.0, 0.0], [0.0, 0.0]])
    scatter = build_scatter_matrix(layout)  # off-diagonal exactly 0.15
    panel = FluorescencePanel([[1.0, 1.0], [1.0, 1.0]])
    out = correct_scatter(panel, scatter)
    expected = 0.85 / 0.9775
    assert np.allclose(out.values, expected, rtol=1e-12)


def test_forward_then_correct_round_trip(rng):
    for _ in range(20):
        n = int(rng.integers(2, 30))
        frames = int(rng.integers(2, 40))
        layout = NeuronLayout(rng.random((n, 2)))
        scatter = build_scatter_matrix(layout)
        panel = FluorescencePanel(rng.normal(0.0, 1.0, (frames, n)))
        mixed = forward_scatter(panel, scatter)
        recovered = correct_scatter(mixed, scatter)
        rel = np.abs(recovered.values - panel.values).max() / max(
            np.abs(panel.values).max(), 1e-30
        )
        assert rel <= 1e-8


def test_discretize_constant_trace_is_silent():
    panel = FluorescencePanel(np.full((50, 2), 3.7))
    raster = discretize(panel)
    assert raster.events.sum() == 0


def test_discretize_threshold_rule():
    panel = FluorescencePanel([[0.0, 0.0], [0.2, 0.0], [0.25, 0.0]])
    raster = discretize(panel, threshold=0.12)
    assert raster.events[:, 0].tolist() == [0, 1, 0]


def test_discretize_ramp_spike_times():
    ramp = np.arange(5) * 0.13
    panel = FluorescencePanel(np.column_stack([ramp, np.zeros(5)]), sample_rate_hz=50.0)
    raster = discretize(panel)
    assert raster.events[:, 0].tolist() == [0, 1, 1, 1, 1]
    assert np.allclose(raster.spike_times[0], [0.02, 0.04, 0.06, 0.08])


def test_discretize_binary_and_monotone_in_threshold(rng):
    panel = FluorescencePanel(rng.normal(0, 0.2, (200, 5)))
    low = discretize(panel, threshold=0.1)
    high = discretize(panel, threshold=0.3)
    assert set(np.unique(low.events)) <= {0, 1}
    assert (high.spike_counts() <= low.spike_counts()).all()


def test_high_activity_filter_rules():
    events = np.zeros((4, 10), dtype=np.uint8)
    events[0] = 1            # all 10 active -> zeroed
    events[1, :7] = 1        # exactly 70% -> kept
    events[2, :8] = 1        # 80% -> zeroed
    filtered = remove_high_activity_frames(SpikeRaster.from_events(events, 50.0))
    assert filtered.events[0].sum() == 0
    assert filtered.events[1].sum() == 7
    assert filtered.events[2].sum() == 0
    assert filtered.frame_count == 4


def test_high_activity_filter_never_adds_spikes(rng):
    for _ in range(10):
        events = (rng.random((60, 8)) < 0.4).astype(np.uint8)
        raster = SpikeRaster.from_events(events, 50.0)
        filtered = remove_high_activity_frames(raster, fraction=0.5)
        assert (filtered.spike_counts() <= raster.spike_counts()).all()


def test_high_activity_filter_validates_fraction():
    raster = SpikeRaster.from_events(np.zeros((3, 3), dtype=np.uint8), 50.0)
    with pytest.raises(ValueError):
        remove_high_activity_frames(raster, fraction=1.0)


def test_summation_filter_trailing_window():
    x = np.array([[1.0], [0.0], [0.0], [1.0]])
    out = summation_filter(x, 3)
    assert out[:, 0].tolist() == [1.0, 1.0, 1.0, 1.0]
    single = summation_filter(x, 1)
    assert np.array_equal(single, x)


def test_near_singular_scatter_suggests_ridge():
    # growing kernel over spread positions is wildly ill conditioned
    pos = np.column_stack([np.linspace(0, 10, 12), np.zeros(12)])
    with pytest.raises(ValueError, match="ridge"):
        build_scatter_matrix(NeuronLayout(pos), decaying=False)


def test_ridge_recovers_singular_build():
    layout = NeuronLayout(np.zeros((4, 2)))  # identical positions
    with pytest.raises(ValueError, match="ridge"):
        build_scatter_matrix(layout, amplitude=1.0)
    scatter = build_scatter_matrix(layout, amplitude=1.0, ridge=1e-8)
    assert np.isfinite(np.linalg.cond(scatter.matrix))
