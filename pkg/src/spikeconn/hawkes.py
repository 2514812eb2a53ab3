"""Mutually exciting point-process model over spike rasters.

Each neuron fires from a constant background rate mu_k, and every spike of
neuron k' transiently raises neuron k's intensity by W[k', k] * g(dt) with
the unit-integral exponential kernel g(dt) = theta * exp(-theta * dt):

    intensity_k(t) = mu_k + sum over earlier spikes n' of
                     W[c_n', k] * theta * exp(-theta * (t - t_n'))

W[k', k] is the expected number of spikes in k triggered per spike of k',
so its rows double as directed connectivity evidence. Fitting runs
expectation-maximization over latent parent assignments: the E-step splits
each spike's probability mass between the background process and every
admissible earlier spike, the M-step re-estimates (mu, W, theta) in closed
form from those responsibilities. The log-likelihood is nondecreasing
across iterations when the parent window is unbounded; a finite window
(default ten kernel time constants) is a documented approximation that
keeps the E-step near linear in the number of spikes.

Spikes sharing a frame are never parents of each other: with no time
precedence there is no direction to assign.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .dataset import ScoreMatrix
from .preprocess import SpikeRaster

log = logging.getLogger(__name__)

MU_FLOOR = 1e-8


@dataclass
class HawkesModel:
    """Background rates, excitation weights, optional adjacency, kernel decay.

    The binary adjacency is folded into the weights by default (None means
    every pair admissible, A implicitly 1 wherever W > 0).
    """

    mu: np.ndarray
    weights: np.ndarray
    theta: float
    adjacency: np.ndarray | None = None

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        k = len(self.mu)
        if self.weights.shape != (k, k):
            raise ValueError("weights must be K x K for K background rates")
        if (self.mu < 0).any():
            raise ValueError("background rates must be nonnegative")
        if (self.weights < 0).any():
            raise ValueError("weights must be nonnegative")
        if not self.theta > 0:
            raise ValueError("kernel decay theta must be positive")
        if self.adjacency is not None:
            self.adjacency = np.asarray(self.adjacency)
            if self.adjacency.shape != (k, k):
                raise ValueError("adjacency must be K x K")
            if not np.isin(self.adjacency, (0, 1)).all():
                raise ValueError("adjacency must be binary")

    @property
    def neuron_count(self):
        return len(self.mu)

    def effective_weights(self):
        if self.adjacency is None:
            return self.weights
        return self.weights * self.adjacency

    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.effective_weights()))))


@dataclass
class ParentResponsibilities:
    """E-step output: per spike, background mass and per-parent masses.

    `background[n]` plus the sum of `parent_mass` over entries with
    `child_index == n` equals 1 for every spike n.
    """

    spike_times: np.ndarray
    spike_channels: np.ndarray
    background: np.ndarray
    child_index: np.ndarray
    parent_index: np.ndarray
    parent_mass: np.ndarray


def _event_sequence(raster):
    """Flatten a raster into time-ordered (times, channels); frame ties keep
    neuron order, which makes every downstream reduction deterministic."""
    frames, channels = np.nonzero(raster.events)
    times = frames / raster.sample_rate_hz
    return times, channels


def _parent_pairs(times, window):
    """Index pairs (child, parent) with 0 < t_child - t_parent <= window."""
    n = len(times)
    child, parent = [], []
    for i in range(n):
        hi = np.searchsorted(times, times[i], side="left")
        lo = 0 if window is None else np.searchsorted(times, times[i] - window, side="left")
        if hi > lo:
            child.append(np.full(hi - lo, i))
            parent.append(np.arange(lo, hi))
    if child:
        return np.concatenate(child), np.concatenate(parent)
    return np.zeros(0, dtype=int), np.zeros(0, dtype=int)


def log_likelihood(raster, model, boundary_correction=False):
    """Log-likelihood of a raster under the model.

    The compensator charges mu_k * T per neuron plus, for every spike of a
    parent neuron k', the full kernel mass W[k', k] (complete variant) or
    the mass truncated at the recording end (boundary_correction=True).
    A spike observed where the model intensity is zero yields -inf.
    """
    weights = model.effective_weights()
    duration = raster.duration_s
    counts = raster.spike_counts()
    times, channels = _event_sequence(raster)

    compensator = float(model.mu.sum()) * duration
    if boundary_correction:
        out_rate = weights.sum(axis=1)
        compensator += float(
            (out_rate[channels] * (1.0 - np.exp(-model.theta * (duration - times)))).sum()
        )
    else:
        compensator += float(weights.sum(axis=1) @ counts)

    if len(times) == 0:
        return -compensator

    child, parent = _parent_pairs(times, None)
    intensity = model.mu[channels].astype(np.float64)
    if len(child):
        kernel = model.theta * np.exp(-model.theta * (times[child] - times[parent]))
        np.add.at(intensity, child, weights[channels[parent], channels[child]] * kernel)
    if (intensity <= 0).any():
        log.warning("zero intensity at an observed spike; log-likelihood is -inf")
        return float("-inf")
    return float(np.log(intensity).sum()) - compensator


def estep_responsibilities(raster, model, window=None):
    """Distribute each spike between background and admissible parents."""
    weights = model.effective_weights()
    times, channels = _event_sequence(raster)
    child, parent = _parent_pairs(times, window)
    excitation = np.zeros(len(child))
    if len(child):
        kernel = model.theta * np.exp(-model.theta * (times[child] - times[parent]))
        excitation = weights[channels[parent], channels[child]] * kernel
    total = model.mu[channels].astype(np.float64)
    np.add.at(total, child, excitation)
    if (total <= 0).any():
        raise ValueError("zero total intensity at an observed spike")
    background = model.mu[channels] / total
    mass = excitation / total[child]
    return ParentResponsibilities(times, channels, background, child, parent, mass)


def em_fit(raster, iterations=100, theta_init=10.0, window="auto",
           adjacency=None, ll_trace=None):
    """Fit (mu, W, theta) by expectation-maximization.

    Parameters
    ----------
    raster : SpikeRaster
    iterations : int
        Number of E/M rounds; the run is deterministic given the raster.
    theta_init : float
        Initial kernel decay in 1/seconds (default 10, a 100 ms transient).
    window : "auto", None, or float seconds
        Parent truncation. "auto" uses 10/theta_init, whose neglected
        kernel mass is exp(-10); None disables truncation, which makes the
        reported log-likelihood exactly nondecreasing over iterations.
    adjacency : binary K x K or None
        Restricts admissible parent pairs; None allows all, including
        self-excitation.
    ll_trace : list or None
        When a list is passed, the log-likelihood after 0, 1, ...,
        `iterations` updates is appended to it.

    Returns (HawkesModel, final log-likelihood). Neurons with no spikes get
    the background floor of 1e-8/s and zero incident weights.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    n_neurons = raster.neuron_count
    duration = raster.duration_s
    counts = raster.spike_counts().astype(np.float64)
    times, channels = _event_sequence(raster)
    if window == "auto":
        window = 10.0 / theta_init

    if adjacency is not None:
        adjacency = np.asarray(adjacency)

    mu = np.maximum(counts / duration, MU_FLOOR)
    weights = np.full((n_neurons, n_neurons), 0.1 / n_neurons)
    if adjacency is not None:
        weights *= adjacency
    theta = float(theta_init)

    if len(times) == 0:
        model = HawkesModel(np.full(n_neurons, MU_FLOOR),
                            np.zeros((n_neurons, n_neurons)), theta, adjacency)
        final = -float(model.mu.sum()) * duration
        if ll_trace is not None:
            ll_trace.extend([final] * (iterations + 1))
        return model, final

    child, parent = _parent_pairs(times, window)
    if adjacency is not None and len(child):
        admissible = adjacency[channels[parent], channels[child]] > 0
        child, parent = child[admissible], parent[admissible]
    gaps = times[child] - times[parent]
    parent_ch = channels[parent]
    child_ch = channels[child]

    def current_ll(mu_, weights_, theta_):
        kernel = theta_ * np.exp(-theta_ * gaps)
        excitation = weights_[parent_ch, child_ch] * kernel
        total = mu_[channels].astype(np.float64)
        np.add.at(total, child, excitation)
        if (total <= 0).any():
            return float("-inf"), None, None
        ll = (float(np.log(total).sum())
              - float(mu_.sum()) * duration
              - float(weights_.sum(axis=1) @ counts))
        return ll, excitation, total

    ll = float("-inf")
    for _ in range(iterations):
        ll, excitation, total = current_ll(mu, weights, theta)
        if ll_trace is not None:
            ll_trace.append(ll)
        if excitation is None:  # unreachable with floored mu; defensive
            break
        # E-step masses
        background = mu[channels] / total
        mass = excitation / total[child]
        # M-step
        mu = np.zeros(n_neurons)
        np.add.at(mu, channels, background)
        mu = np.maximum(mu / duration, MU_FLOOR)
        numer = np.zeros((n_neurons, n_neurons))
        np.add.at(numer, (parent_ch, child_ch), mass)
        with np.errstate(invalid="ignore", divide="ignore"):
            weights = np.where(counts[:, None] > 0, numer / counts[:, None], 0.0)
        triggered = mass.sum()
        weighted_gap = float(mass @ gaps)
        if triggered > 0 and weighted_gap > 0:
            theta = triggered / weighted_gap

    ll, _, _ = current_ll(mu, weights, theta)
    if ll_trace is not None:
        ll_trace.append(ll)
    model = HawkesModel(mu, weights, theta, adjacency)
    return model, ll


def hawkes_scores(model, method_tag="hawkes"):
    """Fitted excitation weights as a ScoreMatrix (diagonal zeroed,
    min-max normalized like every other method)."""
    return ScoreMatrix.from_raw(model.effective_weights(), method_tag)


def simulate(model, duration_s, sample_rate_hz, seed):
    """Draw a raster from the model on a discrete time grid.

    Per frame, neuron k spikes with probability 1 - exp(-intensity_k * dt)
    where the intensity accumulates kernel-decayed contributions of all
    spikes in strictly earlier frames. Requires a subcritical model
    (spectral radius of the weights below 1); reproducible from the seed.
    """
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    weights = model.effective_weights()
    if model.spectral_radius() >= 1.0:
        raise ValueError("supercritical process: spectral radius must be < 1")
    frames = int(round(duration_s * sample_rate_hz))
    dt = 1.0 / sample_rate_hz
    decay = np.exp(-model.theta * dt)
    rng = np.random.default_rng(seed)
    events = np.zeros((frames, model.neuron_count), dtype=np.uint8)
    trace = np.zeros(model.neuron_count)  # decayed count of past spikes per source
    for t in range(frames):
        intensity = model.mu + model.theta * (trace @ weights)
        p_spike = -np.expm1(-intensity * dt)
        events[t] = rng.random(model.neuron_count) < p_spike
        trace = (trace + events[t]) * decay
    return SpikeRaster.from_events(events, sample_rate_hz)
