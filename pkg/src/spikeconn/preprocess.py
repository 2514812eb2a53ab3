"""Recording preprocessing: scatter correction, spike discretization, filtering.

Fluorescence traces are contaminated by light scattered from nearby
neurons. The mixing is modeled by a radial kernel matrix built from the
neuron layout; unmixing solves one linear system per time step. The
cleaned traces are then discretized into a binary spike raster by
thresholding first differences, and optionally stripped of frames where
most of the network is active at once.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .dataset import FluorescencePanel, NeuronLayout

log = logging.getLogger(__name__)

SPIKE_THRESHOLD = 0.12
SCATTER_AMPLITUDE = 0.15

_COND_LIMIT = 1e12


@dataclass
class ScatterMatrix:
    """Symmetric mixing matrix with unit diagonal.

    Off-diagonal entries follow amplitude * exp(-|p_i - p_j|^2 / length_scale)
    when built with the default decaying kernel, so they lie in
    (0, amplitude].
    """

    matrix: np.ndarray
    amplitude: float = SCATTER_AMPLITUDE
    length_scale: float = 2.0

    @property
    def neuron_count(self):
        return self.matrix.shape[0]


@dataclass
class SpikeRaster:
    """Binary T x N event matrix plus per-neuron spike times in seconds."""

    events: np.ndarray
    spike_times: list
    sample_rate_hz: float

    def __post_init__(self):
        self.events = np.asarray(self.events)
        if self.events.ndim != 2:
            raise ValueError("events must be a 2-D matrix")
        if not np.isin(self.events, (0, 1)).all():
            raise ValueError("events must be binary")
        self.events = self.events.astype(np.uint8)
        if len(self.spike_times) != self.events.shape[1]:
            raise ValueError("spike_times must have one entry per neuron")
        counts = self.events.sum(axis=0)
        for k, times in enumerate(self.spike_times):
            times = np.asarray(times, dtype=np.float64)
            if len(times) != counts[k]:
                raise ValueError(f"spike_times[{k}] disagrees with the event matrix")
            if len(times) > 1 and not (np.diff(times) > 0).all():
                raise ValueError(f"spike_times[{k}] must be strictly increasing")
            self.spike_times[k] = times
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")

    @classmethod
    def from_events(cls, events, sample_rate_hz):
        events = np.asarray(events)
        times = [np.flatnonzero(events[:, k]) / sample_rate_hz
                 for k in range(events.shape[1])]
        return cls(events, times, sample_rate_hz)

    @property
    def neuron_count(self):
        return self.events.shape[1]

    @property
    def frame_count(self):
        return self.events.shape[0]

    @property
    def duration_s(self):
        return self.events.shape[0] / self.sample_rate_hz

    def spike_counts(self):
        return self.events.sum(axis=0).astype(np.int64)


def build_scatter_matrix(layout, amplitude=SCATTER_AMPLITUDE, length_scale=2.0,
                         decaying=True, ridge=None):
    """Build the radial scatter matrix from neuron positions.

    Parameters
    ----------
    layout : NeuronLayout
    amplitude : float
        Off-diagonal scale; the zero-distance mixing strength.
    length_scale : float
        Denominator of the squared distance in the exponent.
    decaying : bool
        With True (default) the kernel decays with distance, which keeps the
        matrix diagonally dominant for amplitudes below 1. The growing
        variant exp(+d^2/length_scale) is selectable for comparison but is
        generally ill-conditioned for realistic layouts.
    ridge : float or None
        Optional diagonal ridge (for example 1e-8) applied when the built
        matrix is near singular instead of raising.
    """
    pos = layout.positions if isinstance(layout, NeuronLayout) else np.asarray(layout, float)
    n = pos.shape[0]
    if n < 2:
        raise ValueError("need at least two neurons")
    if not np.isfinite(pos).all():
        raise ValueError("positions must be finite")
    d2 = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=-1)
    sign = -1.0 if decaying else 1.0
    mat = amplitude * np.exp(sign * d2 / length_scale)
    np.fill_diagonal(mat, 1.0)
    if np.linalg.cond(mat) > _COND_LIMIT:
        if ridge is None:
            raise ValueError(
                "scatter matrix is near singular; retry with ridge=1e-8"
            )
        mat = mat + ridge * np.eye(n)
        if np.linalg.cond(mat) > _COND_LIMIT:
            raise ValueError("scatter matrix stays near singular after ridge")
    return ScatterMatrix(mat, amplitude, length_scale)


def correct_scatter(panel, scatter):
    """Unmix scattered fluorescence by solving D x = y for every time step."""
    if scatter.neuron_count != panel.neuron_count:
        raise ValueError("scatter matrix size does not match the panel")
    if np.linalg.cond(scatter.matrix) > _COND_LIMIT:
        raise ValueError("scatter matrix is too ill conditioned to invert")
    corrected = np.linalg.solve(scatter.matrix, panel.values.T).T
    return FluorescencePanel(corrected, panel.sample_rate_hz)


def forward_scatter(panel, scatter):
    """Apply the mixing D to a clean panel; inverse of correct_scatter."""
    mixed = panel.values @ scatter.matrix.T
    return FluorescencePanel(mixed, panel.sample_rate_hz)


def discretize(panel, threshold=SPIKE_THRESHOLD):
    """Threshold first differences into a binary spike raster.

    Frame t fires for neuron i iff values[t, i] - values[t-1, i] > threshold;
    the first frame is always silent. This first-difference rule is the
    pluggable default discretizer; an activity-inference alternative can be
    swapped in behind the same SpikeRaster interface.
    """
    diffs = np.diff(panel.values, axis=0)
    events = np.zeros(panel.values.shape, dtype=np.uint8)
    events[1:] = diffs > threshold
    return SpikeRaster.from_events(events, panel.sample_rate_hz)


def remove_high_activity_frames(raster, fraction=0.7):
    """Zero out frames where over `fraction` of the network spikes.

    Frames are zeroed rather than deleted so every downstream method sees
    the same time axis. A frame with exactly `fraction` active stays.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    active = raster.events.sum(axis=1) / raster.neuron_count
    events = raster.events.copy()
    events[active > fraction] = 0
    return SpikeRaster.from_events(events, raster.sample_rate_hz)


def summation_filter(values, length=3):
    """Trailing moving sum along the time axis (partial sums at the start)."""
    if length < 1:
        raise ValueError("length must be at least 1")
    vals = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(vals)
    frames = len(vals)
    for k in range(length):
        out[k:] += vals[:frames - k]
    return out
